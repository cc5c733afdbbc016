#pragma once

// Independent reference implementations the tests compare the library
// against. These deliberately avoid the planner's internals: plans are
// valued by stepping the belief engine, and optima are found by exhaustive
// walk enumeration.

#include <algorithm>
#include <string>
#include <vector>

#include "mespp/belief.hpp"
#include "mespp/danger.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/planner.hpp"
#include "mespp/rng.hpp"

namespace oracle {

// Value of a joint plan: run the belief update per step with every agent's
// position and accumulate the discounted capture-mass increments.
inline double plan_value_via_belief(const mespp::EnvironmentGraph& g,
                                    const mespp::BeliefState& b0, const mespp::MotionModel& M,
                                    const std::vector<std::vector<int>>& paths, double gamma) {
    if (paths.empty()) return 0.0;
    mespp::BeliefState b = b0;
    const mespp::CaptureModel capture;  // same-vertex perfect
    double value = 0.0;
    double gpow = 1.0;
    const std::size_t steps = paths.front().size();
    for (std::size_t t = 1; t < steps; ++t) {
        gpow *= gamma;
        std::vector<int> positions;
        for (const auto& path : paths) positions.push_back(path[t]);
        const double before = b.capture();
        b = mespp::update(b, M, positions, capture);
        value += gpow * (b.capture() - before);
    }
    return value;
}

// All horizon-h walks from start restricted to a feasibility mask.
inline void enumerate_walks(const mespp::EnvironmentGraph& g, const std::vector<char>& feasible,
                            int start, int h, std::vector<int>& cur,
                            std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == h + 1) {
        out.push_back(cur);
        return;
    }
    for (int w : g.moves_from(cur.back())) {
        if (!feasible[static_cast<std::size_t>(w)]) continue;
        cur.push_back(w);
        enumerate_walks(g, feasible, start, h, cur, out);
        cur.pop_back();
    }
}

inline std::vector<std::vector<int>> all_walks(const mespp::EnvironmentGraph& g,
                                               const std::vector<char>& feasible, int start,
                                               int h) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur{start};
    if (feasible[static_cast<std::size_t>(start)]) enumerate_walks(g, feasible, start, h, cur, out);
    return out;
}

struct BestWalk {
    std::vector<int> path;
    double value = -1.0;
};

// Exhaustive optimum for one agent with teammates' paths fixed; first walk
// in lexicographic order wins ties, matching the planner's contract.
inline BestWalk best_walk_exhaustive(const mespp::EnvironmentGraph& g,
                                     const mespp::BeliefState& b0, const mespp::MotionModel& M,
                                     const std::vector<char>& feasible, int start, int h,
                                     double gamma,
                                     const std::vector<std::vector<int>>& fixed_paths) {
    BestWalk best;
    for (const auto& walk : all_walks(g, feasible, start, h)) {
        std::vector<std::vector<int>> joint = fixed_paths;
        joint.push_back(walk);
        const double value = plan_value_via_belief(g, b0, M, joint, gamma);
        if (value > best.value + 1e-12) {
            best.value = value;
            best.path = walk;
        }
    }
    return best;
}

// Random connected graph on n vertices: a random spanning tree plus extra
// edges. Returned structure passes validate_environment.
inline mespp::EnvironmentGraph random_graph(mespp::Rng& rng, int n, double extra_edge_prob = 0.3,
                                            int images_per_vertex = 1) {
    mespp::EnvironmentGraph g;
    g.n = n;
    const auto sz = static_cast<std::size_t>(n) + 1;
    g.neighbors.assign(sz, {});
    g.neighborhood_name.assign(sz, "area");
    g.truth_level.assign(sz, 1);
    g.hazard_type.assign(sz, mespp::HazardType::None);
    g.scenes.assign(sz, {});

    auto add_edge = [&](int u, int v) {
        auto& a = g.neighbors[static_cast<std::size_t>(u)];
        auto& b = g.neighbors[static_cast<std::size_t>(v)];
        if (std::find(a.begin(), a.end(), v) != a.end()) return;
        a.push_back(v);
        b.push_back(u);
    };
    for (int v = 2; v <= n; ++v) add_edge(v, 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v - 1))));
    for (int u = 1; u <= n; ++u)
        for (int v = u + 1; v <= n; ++v)
            if (rng.next_double() < extra_edge_prob) add_edge(u, v);
    for (int v = 1; v <= n; ++v) {
        auto& adj = g.neighbors[static_cast<std::size_t>(v)];
        std::sort(adj.begin(), adj.end());
        g.truth_level[static_cast<std::size_t>(v)] = 1 + static_cast<int>(rng.next_below(5));
        if (g.truth_level[static_cast<std::size_t>(v)] > 1)
            g.hazard_type[static_cast<std::size_t>(v)] = mespp::HazardType::Fire;
        for (int i = 0; i < images_per_vertex; ++i)
            g.scenes[static_cast<std::size_t>(v)].push_back(
                "g" + std::to_string(v) + "_" + std::to_string(i));
    }
    return g;
}

// Random point on the belief simplex with mass only on allowed vertices.
inline mespp::BeliefState random_belief(mespp::Rng& rng, int n, double capture_mass = 0.0) {
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    double total = 0.0;
    for (int v = 1; v <= n; ++v) {
        w[static_cast<std::size_t>(v)] = rng.next_double();
        total += w[static_cast<std::size_t>(v)];
    }
    mespp::BeliefState b;
    b.b.assign(static_cast<std::size_t>(n) + 1, 0.0);
    b.b[0] = capture_mass;
    for (int v = 1; v <= n; ++v)
        b.b[static_cast<std::size_t>(v)] = (1.0 - capture_mass) * w[static_cast<std::size_t>(v)] / total;
    return b;
}

// Random estimate map; sharp indicator distributions with probability
// `sharp_prob`, otherwise a random simplex point.
inline mespp::DangerEstimateMap random_estimates(mespp::Rng& rng, int n, double sharp_prob = 0.5) {
    mespp::DangerEstimateMap map(n);
    for (int v = 1; v <= n; ++v) {
        auto& eta = map.eta[static_cast<std::size_t>(v)];
        if (rng.next_double() < sharp_prob) {
            eta = {};
            eta[rng.next_below(5)] = 1.0;
        } else {
            double total = 0.0;
            for (auto& x : eta) {
                x = rng.next_double();
                total += x;
            }
            for (auto& x : eta) x /= total;
        }
    }
    return map;
}

}  // namespace oracle
