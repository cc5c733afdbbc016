#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mespp/common.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/similarity.hpp"

namespace mespp {

// Discrete distribution over danger levels 1..5; index l-1 holds level l.
using DangerDistribution = std::array<double, 5>;

inline constexpr DangerDistribution kUniformDanger = {0.2, 0.2, 0.2, 0.2, 0.2};

// Thresholds a raw similarity vector into per-level votes.
inline std::array<int, 5> binarize(const std::array<double, 5>& xi, double theta) {
    std::array<int, 5> y{};
    for (std::size_t i = 0; i < 5; ++i) y[i] = xi[i] >= theta ? 1 : 0;
    return y;
}

// Frequentist estimate from binarized votes: eta_l = (count of ones at l) /
// (total ones). All-zero evidence falls back to the supplied distribution.
inline DangerDistribution estimate_distribution(const std::vector<std::array<int, 5>>& ys,
                                                const DangerDistribution& fallback = kUniformDanger) {
    if (ys.empty()) throw ValidationError("estimate_distribution: no binarized vectors");
    std::array<double, 5> counts{};
    double total = 0.0;
    for (const auto& y : ys) {
        for (std::size_t i = 0; i < 5; ++i) {
            counts[i] += static_cast<double>(y[i]);
            total += static_cast<double>(y[i]);
        }
    }
    if (total == 0.0) return fallback;
    DangerDistribution eta{};
    for (std::size_t i = 0; i < 5; ++i) eta[i] = counts[i] / total;
    return eta;
}

// Most probable level; ties resolve to the highest level (conservative).
// Accepts unnormalized weights.
inline int point_estimate(const DangerDistribution& eta) {
    int best = 1;
    for (int l = 2; l <= 5; ++l) {
        if (eta[static_cast<std::size_t>(l - 1)] >= eta[static_cast<std::size_t>(best - 1)])
            best = l;
    }
    return best;
}

// Probability mass at or below the threshold level kappa.
inline double cumulative_confidence(const DangerDistribution& eta, int kappa) {
    if (kappa < 1 || kappa > 5)
        throw ValidationError("cumulative_confidence: kappa out of range [1,5]");
    double h = 0.0;
    for (int l = 1; l <= kappa; ++l) h += eta[static_cast<std::size_t>(l - 1)];
    return h;
}

struct EstimationParams {
    double theta = 0.5;           // binarization threshold
    double image_fraction = 0.05; // fraction of a vertex's scene used offline
    DangerDistribution fallback = kUniformDanger;
};

// Offline estimate for one vertex: the first ceil(fraction * r) scene images
// (at least one), each scored against every descriptor set.
inline DangerDistribution estimate_vertex(const EnvironmentGraph& graph, int v,
                                          const ScoreMatrix& scores, const DescriptorCorpus& corpus,
                                          const EstimationParams& params) {
    graph.require_vertex(v);
    if (params.image_fraction <= 0.0 || params.image_fraction > 1.0)
        throw ValidationError("image_fraction must be in (0,1]");
    const auto& scene = graph.scenes[static_cast<std::size_t>(v)];
    if (scene.empty()) throw ValidationError("vertex " + std::to_string(v) + " has an empty scene");
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::ceil(params.image_fraction * static_cast<double>(scene.size()))));
    std::vector<std::array<int, 5>> ys;
    ys.reserve(take * corpus.sets.size());
    for (std::size_t i = 0; i < std::min(take, scene.size()); ++i) {
        for (const auto& set : corpus.sets) {
            std::array<double, 5> xi{};
            for (int l = 1; l <= 5; ++l)
                xi[static_cast<std::size_t>(l - 1)] =
                    scores.score(scene[i], set.descriptor_ids[static_cast<std::size_t>(l - 1)]);
            ys.push_back(binarize(xi, params.theta));
        }
    }
    return estimate_distribution(ys, params.fallback);
}

// Per-vertex danger knowledge carried through a mission.
struct DangerEstimateMap {
    std::vector<DangerDistribution> eta;  // 1-indexed; [0] unused
    std::vector<bool> visited;
    std::vector<int> last_update_step;    // -1 when never updated

    explicit DangerEstimateMap(int n = 0)
        : eta(static_cast<std::size_t>(n) + 1, kUniformDanger),
          visited(static_cast<std::size_t>(n) + 1, false),
          last_update_step(static_cast<std::size_t>(n) + 1, -1) {}

    int size() const { return static_cast<int>(eta.size()) - 1; }

    const DangerDistribution& at(int v) const { return eta[static_cast<std::size_t>(v)]; }
    int point(int v) const { return point_estimate(at(v)); }
    double confidence(int v, int kappa) const { return cumulative_confidence(at(v), kappa); }
};

enum class PriorKind { Uniform, Perfect };

// Uniform prior: nothing visited. Perfect prior: indicator on the true level
// everywhere, all vertices marked visited (online updates become no-ops).
inline DangerEstimateMap make_prior(PriorKind kind, const EnvironmentGraph& graph) {
    DangerEstimateMap map(graph.n);
    if (kind == PriorKind::Perfect) {
        for (int v = 1; v <= graph.n; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            map.eta[vi] = {};
            map.eta[vi][static_cast<std::size_t>(graph.truth_level[vi] - 1)] = 1.0;
            map.visited[vi] = true;
            map.last_update_step[vi] = 0;
        }
    }
    return map;
}

// On first arrival at a vertex: re-estimate it from the partial scene, mark
// it visited, and copy the fresh estimate to unvisited vertices of the same
// neighborhood (they stay unvisited and refreshable). Visited vertices never
// change.
inline void update_on_visit(DangerEstimateMap& map, const EnvironmentGraph& graph, int v,
                            const ScoreMatrix& scores, const DescriptorCorpus& corpus,
                            const EstimationParams& params, int step) {
    graph.require_vertex(v);
    const auto vi = static_cast<std::size_t>(v);
    if (map.visited[vi]) return;
    const DangerDistribution fresh = estimate_vertex(graph, v, scores, corpus, params);
    map.eta[vi] = fresh;
    map.visited[vi] = true;
    map.last_update_step[vi] = step;
    for (int w : neighborhood_of(graph, v)) {
        const auto wi = static_cast<std::size_t>(w);
        if (w == v || map.visited[wi]) continue;
        map.eta[wi] = fresh;
        map.last_update_step[wi] = step;
    }
}

// Mean Bhattacharyya coefficient between per-vertex estimates and the true
// level indicators: (1/n) * sum_v sqrt(eta at the true level).
inline double bhattacharyya(const DangerEstimateMap& map, const EnvironmentGraph& graph) {
    if (map.size() != graph.n)
        throw ValidationError("bhattacharyya: estimate map size mismatch");
    double acc = 0.0;
    for (int v = 1; v <= graph.n; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        acc += std::sqrt(
            std::max(0.0, map.eta[vi][static_cast<std::size_t>(graph.truth_level[vi] - 1)]));
    }
    return acc / static_cast<double>(graph.n);
}

}  // namespace mespp
