#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mespp/common.hpp"
#include "mespp/env_graph.hpp"

namespace mespp {

// Belief over target whereabouts: b[0] is the probability the target has
// been captured, b[v] the probability it sits at vertex v.
struct BeliefState {
    std::vector<double> b;  // size n+1

    int n() const { return static_cast<int>(b.size()) - 1; }
    double capture() const { return b[0]; }
    double at(int v) const { return b[static_cast<std::size_t>(v)]; }
    double sum() const {
        double s = 0.0;
        for (double x : b) s += x;
        return s;
    }

    void validate() const {
        if (b.empty()) throw ValidationError("belief vector is empty");
        for (double x : b)
            if (!(x >= 0.0 && x <= 1.0 + 1e-12))
                throw ValidationError("belief component outside [0,1]");
        if (std::abs(sum() - 1.0) > 1e-9)
            throw ValidationError("belief does not sum to 1");
    }
};

// Row-stochastic target motion over the n vertices. The identity flag lets
// hot paths skip the matrix product for the static-target default.
struct MotionModel {
    int n = 0;
    std::vector<std::vector<double>> rows;  // rows[u-1][v-1] = P(u -> v)
    bool is_identity = false;

    static MotionModel identity(int n) {
        MotionModel m;
        m.n = n;
        m.is_identity = true;
        m.rows.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int i = 0; i < n; ++i) m.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
        return m;
    }

    // Lazy random walk: stay with probability `stay`, otherwise split evenly
    // over the neighbors. Isolated vertices cannot occur (graphs are connected).
    static MotionModel lazy_walk(const EnvironmentGraph& g, double stay = 0.5) {
        if (stay < 0.0 || stay > 1.0) throw ValidationError("lazy_walk: stay outside [0,1]");
        MotionModel m;
        m.n = g.n;
        m.rows.assign(static_cast<std::size_t>(g.n),
                      std::vector<double>(static_cast<std::size_t>(g.n), 0.0));
        for (int u = 1; u <= g.n; ++u) {
            auto& row = m.rows[static_cast<std::size_t>(u - 1)];
            row[static_cast<std::size_t>(u - 1)] = stay;
            const auto& nb = g.neighbors[static_cast<std::size_t>(u)];
            const double share = nb.empty() ? 0.0 : (1.0 - stay) / static_cast<double>(nb.size());
            for (int v : nb) row[static_cast<std::size_t>(v - 1)] += share;
            if (nb.empty()) row[static_cast<std::size_t>(u - 1)] = 1.0;
        }
        return m;
    }

    double prob(int u, int v) const {
        return rows[static_cast<std::size_t>(u - 1)][static_cast<std::size_t>(v - 1)];
    }

    void validate(const EnvironmentGraph* graph = nullptr) const {
        if (n <= 0 || rows.size() != static_cast<std::size_t>(n))
            throw ValidationError("motion model has wrong shape");
        for (int u = 1; u <= n; ++u) {
            const auto& row = rows[static_cast<std::size_t>(u - 1)];
            if (row.size() != static_cast<std::size_t>(n))
                throw ValidationError("motion model has wrong shape");
            double s = 0.0;
            for (int v = 1; v <= n; ++v) {
                const double x = row[static_cast<std::size_t>(v - 1)];
                if (x < 0.0) throw ValidationError("motion model has a negative entry");
                s += x;
                if (x > 0.0 && graph != nullptr && u != v && !graph->has_edge(u, v))
                    throw ValidationError("motion model transition " + std::to_string(u) + "->" +
                                          std::to_string(v) + " is not a graph edge");
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw ValidationError("motion model row " + std::to_string(u) +
                                      " does not sum to 1");
        }
    }
};

// Detection semantics. The default transfers all mass at any occupied vertex
// into the capture state; explicit matrices generalize this per agent and
// vertex (row-stochastic over the n+1 belief states).
struct CaptureModel {
    enum class Mode { SameVertexPerfect, Explicit };
    Mode mode = Mode::SameVertexPerfect;
    // matrices[a][u] is the (n+1)x(n+1) matrix applied when agent a sits at
    // vertex u; indexed [agent][vertex-1][row][col], rows = incoming state.
    std::vector<std::vector<std::vector<std::vector<double>>>> matrices;

    static CaptureModel same_vertex_perfect() { return CaptureModel{}; }

    void validate(int n, int n_agents) const {
        if (mode == Mode::SameVertexPerfect) return;
        if (matrices.size() != static_cast<std::size_t>(n_agents))
            throw ValidationError("capture model: one matrix set per agent required");
        for (const auto& per_vertex : matrices) {
            if (per_vertex.size() != static_cast<std::size_t>(n))
                throw ValidationError("capture model: one matrix per vertex required");
            for (const auto& mat : per_vertex) {
                if (mat.size() != static_cast<std::size_t>(n) + 1)
                    throw ValidationError("capture matrix has wrong shape");
                for (const auto& row : mat) {
                    if (row.size() != static_cast<std::size_t>(n) + 1)
                        throw ValidationError("capture matrix has wrong shape");
                    double s = 0.0;
                    for (double x : row) {
                        if (x < 0.0) throw ValidationError("capture matrix has a negative entry");
                        s += x;
                    }
                    if (std::abs(s - 1.0) > 1e-9)
                        throw ValidationError("capture matrix row does not sum to 1");
                }
            }
        }
    }
};

// The (n+1)x(n+1) matrix realizing perfect same-vertex detection at vertex u:
// identity except row u, which routes all mass to the capture state.
inline std::vector<std::vector<double>> make_perfect_capture_matrix(int n, int u) {
    std::vector<std::vector<double>> mat(static_cast<std::size_t>(n) + 1,
                                         std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
    for (int i = 0; i <= n; ++i) mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    mat[static_cast<std::size_t>(u)][static_cast<std::size_t>(u)] = 0.0;
    mat[static_cast<std::size_t>(u)][0] = 1.0;
    return mat;
}

// Builds the initial belief from a capture probability plus per-vertex mass.
inline BeliefState init_belief(int n, double capture_prob,
                               const std::vector<std::pair<int, double>>& vertex_probs) {
    BeliefState s;
    s.b.assign(static_cast<std::size_t>(n) + 1, 0.0);
    s.b[0] = capture_prob;
    for (const auto& [v, p] : vertex_probs) {
        if (v < 1 || v > n)
            throw ValidationError("init_belief: vertex " + std::to_string(v) + " out of range");
        s.b[static_cast<std::size_t>(v)] += p;
    }
    s.validate();
    return s;
}

// One belief step: target motion (b_c untouched, vertex block multiplied by
// M) followed by detection for each agent position.
inline BeliefState update(const BeliefState& b, const MotionModel& M,
                          const std::vector<int>& positions, const CaptureModel& capture) {
    const int n = b.n();
    if (M.n != n) throw ValidationError("update: motion model dimension mismatch");
    BeliefState out = b;
    if (!M.is_identity) {
        std::vector<double> next(static_cast<std::size_t>(n) + 1, 0.0);
        next[0] = b.b[0];
        for (int u = 1; u <= n; ++u) {
            const double mass = b.b[static_cast<std::size_t>(u)];
            if (mass == 0.0) continue;
            const auto& row = M.rows[static_cast<std::size_t>(u - 1)];
            for (int v = 1; v <= n; ++v) next[static_cast<std::size_t>(v)] += mass * row[static_cast<std::size_t>(v - 1)];
        }
        out.b = std::move(next);
    }
    if (capture.mode == CaptureModel::Mode::SameVertexPerfect) {
        for (int pos : positions) {
            if (pos < 1 || pos > n)
                throw ValidationError("update: agent position out of range");
            out.b[0] += out.b[static_cast<std::size_t>(pos)];
            out.b[static_cast<std::size_t>(pos)] = 0.0;
        }
    } else {
        capture.validate(n, static_cast<int>(capture.matrices.size()));
        if (positions.size() > capture.matrices.size())
            throw ValidationError("update: more positions than capture matrix sets");
        for (std::size_t a = 0; a < positions.size(); ++a) {
            const int pos = positions[a];
            if (pos < 1 || pos > n)
                throw ValidationError("update: agent position out of range");
            const auto& mat = capture.matrices[a][static_cast<std::size_t>(pos - 1)];
            std::vector<double> next(static_cast<std::size_t>(n) + 1, 0.0);
            for (int i = 0; i <= n; ++i) {
                const double mass = out.b[static_cast<std::size_t>(i)];
                if (mass == 0.0) continue;
                for (int j = 0; j <= n; ++j)
                    next[static_cast<std::size_t>(j)] += mass * mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
            out.b = std::move(next);
        }
    }
    return out;
}

// Mission reward: sum of gamma^t * b_c(t) over the recorded horizon.
inline double discounted_capture_objective(const std::vector<double>& captures, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw ValidationError("discount factor must be in (0,1]");
    double total = 0.0;
    double g = 1.0;
    for (double bc : captures) {
        total += g * bc;
        g *= gamma;
    }
    return total;
}

}  // namespace mespp
