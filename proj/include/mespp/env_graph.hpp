#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mespp/common.hpp"
#include "mespp/rng.hpp"

namespace mespp {

enum class HazardType { None = 0, Collapse = 1, Fire = 2 };

inline const char* to_string(HazardType t) {
    switch (t) {
        case HazardType::None: return "none";
        case HazardType::Collapse: return "collapse";
        case HazardType::Fire: return "fire";
    }
    return "none";
}

inline HazardType hazard_type_from_string(const std::string& s) {
    if (s == "none") return HazardType::None;
    if (s == "collapse") return HazardType::Collapse;
    if (s == "fire") return HazardType::Fire;
    throw ValidationError("unknown hazard type '" + s + "'");
}

// Graph-abstracted search environment. Vertices are 1-indexed; index 0 of
// the per-vertex vectors is unused. Immutable after construction/validation;
// safe to share across concurrent missions.
struct EnvironmentGraph {
    int n = 0;
    std::vector<std::vector<int>> neighbors;       // sorted adjacency lists, [0] unused
    std::vector<std::string> neighborhood_name;    // group label per vertex
    std::vector<int> truth_level;                  // ground-truth danger level, 1..5
    std::vector<HazardType> hazard_type;
    std::vector<std::vector<std::string>> scenes;  // image ids per vertex

    bool has_vertex(int v) const { return v >= 1 && v <= n; }

    const std::vector<int>& adjacent(int v) const {
        require_vertex(v);
        return neighbors[static_cast<std::size_t>(v)];
    }

    bool has_edge(int u, int v) const {
        if (!has_vertex(u) || !has_vertex(v)) return false;
        const auto& a = neighbors[static_cast<std::size_t>(u)];
        return std::binary_search(a.begin(), a.end(), v);
    }

    void require_vertex(int v) const {
        if (!has_vertex(v))
            throw ValidationError("vertex " + std::to_string(v) + " out of range 1.." + std::to_string(n));
    }

    // Candidate moves from v: v itself plus its neighbors, ascending.
    std::vector<int> moves_from(int v) const {
        require_vertex(v);
        std::vector<int> out;
        const auto& adj = neighbors[static_cast<std::size_t>(v)];
        out.reserve(adj.size() + 1);
        bool inserted = false;
        for (int u : adj) {
            if (!inserted && v < u) {
                out.push_back(v);
                inserted = true;
            }
            out.push_back(u);
        }
        if (!inserted) out.push_back(v);
        return out;
    }
};

// Validates all structural invariants; messages carry the offending element.
inline void validate_environment(const EnvironmentGraph& g) {
    if (g.n < 1) throw ValidationError("environment must have at least one vertex");
    const auto sz = static_cast<std::size_t>(g.n) + 1;
    if (g.neighbors.size() != sz || g.neighborhood_name.size() != sz || g.truth_level.size() != sz ||
        g.hazard_type.size() != sz || g.scenes.size() != sz)
        throw ValidationError("environment vertex arrays must all have size n+1");

    for (int v = 1; v <= g.n; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        if (g.truth_level[vi] < 1 || g.truth_level[vi] > 5)
            throw ValidationError("vertex " + std::to_string(v) + ": truth_level " +
                                  std::to_string(g.truth_level[vi]) + " outside 1..5");
        if (g.neighborhood_name[vi].empty())
            throw ValidationError("vertex " + std::to_string(v) + ": empty neighborhood name");
        const auto& adj = g.neighbors[vi];
        if (!std::is_sorted(adj.begin(), adj.end()))
            throw ValidationError("vertex " + std::to_string(v) + ": adjacency list not sorted");
        if (std::adjacent_find(adj.begin(), adj.end()) != adj.end())
            throw ValidationError("vertex " + std::to_string(v) + ": duplicate edge");
        for (int u : adj) {
            if (u == v)
                throw ValidationError("self-loop at vertex " + std::to_string(v));
            if (u < 1 || u > g.n)
                throw ValidationError("edge (" + std::to_string(v) + "," + std::to_string(u) +
                                      ") references unknown vertex " + std::to_string(u));
            if (!g.has_edge(u, v))
                throw ValidationError("edge (" + std::to_string(v) + "," + std::to_string(u) +
                                      ") is not symmetric");
        }
    }

    // Connectivity via BFS from vertex 1.
    std::vector<char> seen(sz, 0);
    std::vector<int> queue = {1};
    seen[1] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        for (int u : g.neighbors[static_cast<std::size_t>(queue[head])]) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                queue.push_back(u);
            }
        }
    }
    for (int v = 1; v <= g.n; ++v)
        if (!seen[static_cast<std::size_t>(v)])
            throw ValidationError("graph is disconnected: vertex " + std::to_string(v) +
                                  " is unreachable from vertex 1");
}

// The unique neighborhood group containing v (always includes v itself).
inline std::vector<int> neighborhood_of(const EnvironmentGraph& g, int v) {
    g.require_vertex(v);
    const std::string& name = g.neighborhood_name[static_cast<std::size_t>(v)];
    std::vector<int> group;
    for (int u = 1; u <= g.n; ++u)
        if (g.neighborhood_name[static_cast<std::size_t>(u)] == name) group.push_back(u);
    return group;
}

inline std::vector<std::string> neighborhood_names(const EnvironmentGraph& g) {
    std::set<std::string> names;
    for (int v = 1; v <= g.n; ++v) names.insert(g.neighborhood_name[static_cast<std::size_t>(v)]);
    return {names.begin(), names.end()};
}

// Hazard scenario request: target fraction of vertices per hazard type,
// indexed by HazardType (none, collapse, fire).
struct HazardScenarioSpec {
    std::array<double, 3> proportions{1.0, 0.0, 0.0};
    std::uint64_t seed = 0;

    // Per-type distribution over levels 1..5 used when re-drawing ground
    // truth. Defaults: hazard-free vertices are level 1; collapse/fire
    // uniform over 2..5.
    std::array<std::array<double, 5>, 3> level_probs{{
        {1.0, 0.0, 0.0, 0.0, 0.0},
        {0.0, 0.25, 0.25, 0.25, 0.25},
        {0.0, 0.25, 0.25, 0.25, 0.25},
    }};

    static HazardScenarioSpec preset(const std::string& code, std::uint64_t seed) {
        HazardScenarioSpec spec;
        spec.seed = seed;
        if (code == "NFF")
            spec.proportions = {1.0 / 3.0, 0.0, 2.0 / 3.0};
        else if (code == "NCC")
            spec.proportions = {1.0 / 3.0, 2.0 / 3.0, 0.0};
        else if (code == "NCF")
            spec.proportions = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        else
            throw ValidationError("unknown scenario type '" + code + "' (expected NFF, NCC or NCF)");
        return spec;
    }

    void validate() const {
        double sum = 0.0;
        for (double p : proportions) {
            if (p < 0.0) throw ValidationError("scenario proportions must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("scenario proportions must sum to 1 (got " + std::to_string(sum) + ")");
        for (const auto& dist : level_probs) {
            double s = 0.0;
            for (double p : dist) {
                if (p < 0.0) throw ValidationError("level distribution entries must be non-negative");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw ValidationError("per-type level distribution must sum to 1");
        }
    }
};

namespace detail {

// Largest-remainder apportionment: counts sum to n and each differs from
// proportion*n by strictly less than 1.
inline std::array<int, 3> apportion_counts(const std::array<double, 3>& props, int n) {
    std::array<int, 3> counts{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double ideal = props[i] * n;
        counts[i] = static_cast<int>(ideal);
        frac[i] = ideal - counts[i];
        assigned += counts[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a < b;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i % 3]] += 1;
    return counts;
}

inline int sample_level(const std::array<double, 5>& probs, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (int l = 1; l <= 5; ++l) {
        acc += probs[static_cast<std::size_t>(l - 1)];
        if (u < acc) return l;
    }
    return 5;
}

}  // namespace detail

// Reassigns hazard types and ground-truth levels. Scene/image data and the
// graph structure are untouched. Deterministic given spec.seed.
inline EnvironmentGraph generate_scenario(const EnvironmentGraph& graph, const HazardScenarioSpec& spec) {
    spec.validate();
    EnvironmentGraph out = graph;
    Rng rng(spec.seed);

    const std::array<int, 3> counts = detail::apportion_counts(spec.proportions, graph.n);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(graph.n));
    for (int v = 1; v <= graph.n; ++v) order.push_back(v);
    rng.shuffle(order);

    std::size_t cursor = 0;
    for (std::size_t type = 0; type < 3; ++type) {
        for (int k = 0; k < counts[type]; ++k, ++cursor) {
            const auto vi = static_cast<std::size_t>(order[cursor]);
            out.hazard_type[vi] = static_cast<HazardType>(type);
            out.truth_level[vi] = detail::sample_level(spec.level_probs[type], rng);
        }
    }
    return out;
}

}  // namespace mespp
