#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mespp/belief.hpp"
#include "mespp/common.hpp"
#include "mespp/danger.hpp"
#include "mespp/env_graph.hpp"

namespace mespp {

// NC: unconstrained. PT: exclude vertices whose point-estimated level exceeds
// the agent's threshold. PB: exclude vertices whose confidence of being at or
// below the threshold falls short of alpha.
enum class ConstraintMode { NC, PT, PB };

inline std::string to_string(ConstraintMode m) {
    switch (m) {
        case ConstraintMode::NC: return "NC";
        case ConstraintMode::PT: return "PT";
        case ConstraintMode::PB: return "PB";
    }
    throw ValidationError("unknown constraint mode");
}

inline ConstraintMode constraint_mode_from_string(const std::string& s) {
    if (s == "NC") return ConstraintMode::NC;
    if (s == "PT") return ConstraintMode::PT;
    if (s == "PB") return ConstraintMode::PB;
    throw ValidationError("unknown constraint mode '" + s + "'");
}

struct AgentProfile {
    int id = 0;
    int kappa = 5;       // highest danger level the agent tolerates
    double alpha = 0.5;  // required confidence that a vertex is tolerable
    int start = 1;
    bool mva = false;    // most valuable agent marker for reporting

    void validate() const {
        if (kappa < 1 || kappa > 5)
            throw ValidationError("agent " + std::to_string(id) + ": kappa outside {1..5}");
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ValidationError("agent " + std::to_string(id) + ": alpha outside (0,1]");
    }
};

struct PlannerConfig {
    int horizon = 14;
    double gamma = 0.99;
    ConstraintMode mode = ConstraintMode::NC;
    int replan_period = 1;

    void validate() const {
        if (horizon < 1) throw ValidationError("horizon must be >= 1");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma outside (0,1]");
        if (replan_period < 1) throw ValidationError("replan_period must be >= 1");
    }
};

struct AgentPlan {
    int agent_id = 0;
    std::vector<int> path;  // length horizon+1; path[0] is the current vertex
    bool stranded = false;  // stayed in place because its vertex is off-limits
};

struct JointPlan {
    std::vector<AgentPlan> agents;
    double objective = 0.0;

    const AgentPlan* find(int agent_id) const {
        for (const auto& a : agents)
            if (a.agent_id == agent_id) return &a;
        return nullptr;
    }
};

struct PlanProblem {
    const EnvironmentGraph* graph = nullptr;
    const DangerEstimateMap* estimates = nullptr;
    const MotionModel* motion = nullptr;
    BeliefState belief;
    std::vector<AgentProfile> agents;  // active agents, ascending id
    PlannerConfig config;

    void validate() const {
        if (graph == nullptr || estimates == nullptr || motion == nullptr)
            throw ValidationError("plan problem is missing graph, estimates, or motion model");
        config.validate();
        belief.validate();
        if (belief.n() != graph->n) throw ValidationError("belief dimension mismatch");
        if (motion->n != graph->n) throw ValidationError("motion model dimension mismatch");
        if (estimates->size() != graph->n) throw ValidationError("estimate map dimension mismatch");
        for (std::size_t i = 0; i < agents.size(); ++i) {
            agents[i].validate();
            graph->require_vertex(agents[i].start);
            if (i > 0 && agents[i].id <= agents[i - 1].id)
                throw ValidationError("agents must have strictly ascending ids");
        }
    }
};

// Mask over 1..n of vertices the agent may occupy under the given mode.
inline std::vector<char> feasible_mask(const DangerEstimateMap& map, const AgentProfile& agent,
                                       ConstraintMode mode) {
    std::vector<char> mask(static_cast<std::size_t>(map.size()) + 1, 1);
    mask[0] = 0;
    if (mode == ConstraintMode::NC) return mask;
    for (int v = 1; v <= map.size(); ++v) {
        if (mode == ConstraintMode::PT) {
            if (map.point(v) > agent.kappa) mask[static_cast<std::size_t>(v)] = 0;
        } else {
            if (map.confidence(v, agent.kappa) < agent.alpha) mask[static_cast<std::size_t>(v)] = 0;
        }
    }
    return mask;
}

inline std::vector<int> feasible_vertices(const DangerEstimateMap& map, const AgentProfile& agent,
                                          ConstraintMode mode) {
    const auto mask = feasible_mask(map, agent, mode);
    std::vector<int> out;
    for (int v = 1; v <= map.size(); ++v)
        if (mask[static_cast<std::size_t>(v)]) out.push_back(v);
    return out;
}

namespace detail {

// Shared state for the depth-first branch-and-bound over horizon-h walks.
struct WalkSearch {
    const EnvironmentGraph* g = nullptr;
    const MotionModel* M = nullptr;
    int h = 0;
    std::vector<double> gpow;                   // gamma^0 .. gamma^h
    std::vector<char> feasible;                 // mask over 1..n for this agent
    std::vector<std::vector<int>> occupied_at;  // fixed teammate vertices per time 0..h
    std::vector<std::vector<int>> visit_times;  // sorted teammate visit times per vertex
    std::vector<std::vector<int>> dist;         // feasible-subgraph BFS distances (identity M)
    double best = -1.0;
    std::vector<int> best_path;
    std::vector<int> cur;

    // Admissible bound on the total objective from a node at time t sitting
    // at vertex v with residual mass beta and accrued value j. Static
    // targets admit a distance-aware bound: each vertex's mass is discounted
    // at the earliest step this agent or a fixed teammate could reach it.
    // Moving targets fall back to capturing all residual mass next step.
    double bound(int t, int v, const std::vector<double>& beta, double j) const {
        if (t >= h) return j;
        double future = 0.0;
        if (M->is_identity) {
            const auto& dv = dist[static_cast<std::size_t>(v)];
            for (int w = 1; w <= g->n; ++w) {
                const double mass = beta[static_cast<std::size_t>(w)];
                if (mass <= 0.0) continue;
                int earliest = std::numeric_limits<int>::max();
                const int d = dv[static_cast<std::size_t>(w)];
                if (d >= 0) earliest = t + std::max(1, d);
                const auto& times = visit_times[static_cast<std::size_t>(w)];
                const auto it = std::upper_bound(times.begin(), times.end(), t);
                if (it != times.end()) earliest = std::min(earliest, *it);
                if (earliest <= h) future += mass * gpow[static_cast<std::size_t>(earliest)];
            }
        } else {
            double total = 0.0;
            for (int w = 1; w <= g->n; ++w) total += beta[static_cast<std::size_t>(w)];
            future = total * gpow[static_cast<std::size_t>(t + 1)];
        }
        return j + future;
    }

    void dfs(int t, int v, const std::vector<double>& beta, double j) {
        if (t == h) {
            if (j > best) {
                best = j;
                best_path = cur;
            }
            return;
        }
        for (int w : g->moves_from(v)) {
            if (!feasible[static_cast<std::size_t>(w)]) continue;
            std::vector<double> phi(static_cast<std::size_t>(g->n) + 1, 0.0);
            if (M->is_identity) {
                phi = beta;
            } else {
                for (int u = 1; u <= g->n; ++u) {
                    const double mass = beta[static_cast<std::size_t>(u)];
                    if (mass == 0.0) continue;
                    const auto& row = M->rows[static_cast<std::size_t>(u - 1)];
                    for (int x = 1; x <= g->n; ++x)
                        phi[static_cast<std::size_t>(x)] += mass * row[static_cast<std::size_t>(x - 1)];
                }
            }
            double gain = phi[static_cast<std::size_t>(w)];
            phi[static_cast<std::size_t>(w)] = 0.0;
            for (int u : occupied_at[static_cast<std::size_t>(t + 1)]) {
                gain += phi[static_cast<std::size_t>(u)];
                phi[static_cast<std::size_t>(u)] = 0.0;
            }
            const double j2 = j + gpow[static_cast<std::size_t>(t + 1)] * gain;
            if (bound(t + 1, w, phi, j2) <= best) continue;
            cur.push_back(w);
            dfs(t + 1, w, phi, j2);
            cur.pop_back();
        }
    }
};

inline std::vector<int> bfs_distances(const EnvironmentGraph& g, int src,
                                      const std::vector<char>& mask) {
    std::vector<int> dist(static_cast<std::size_t>(g.n) + 1, -1);
    if (src < 1 || src > g.n) return dist;
    std::vector<int> queue{src};
    dist[static_cast<std::size_t>(src)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int u = queue[head];
        for (int w : g.neighbors[static_cast<std::size_t>(u)]) {
            if (!mask[static_cast<std::size_t>(w)] || dist[static_cast<std::size_t>(w)] >= 0)
                continue;
            dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
            queue.push_back(w);
        }
    }
    return dist;
}

}  // namespace detail

struct SingleAgentResult {
    std::vector<int> path;
    double objective = 0.0;
};

// Optimal horizon-h walk for one agent, with teammates' already-fixed paths
// capturing belief mass alongside it. Depth-first branch-and-bound; children
// in ascending vertex order, so the first incumbent at each value is the
// lexicographically smallest optimum and is kept.
inline SingleAgentResult solve_single_agent(const PlanProblem& problem, const AgentProfile& agent,
                                            const std::vector<std::vector<int>>& fixed_plans) {
    problem.validate();
    agent.validate();
    problem.graph->require_vertex(agent.start);
    const auto& g = *problem.graph;
    const int h = problem.config.horizon;

    detail::WalkSearch search;
    search.g = &g;
    search.M = problem.motion;
    search.h = h;
    search.gpow.resize(static_cast<std::size_t>(h) + 1);
    search.gpow[0] = 1.0;
    for (int t = 1; t <= h; ++t)
        search.gpow[static_cast<std::size_t>(t)] =
            search.gpow[static_cast<std::size_t>(t - 1)] * problem.config.gamma;
    search.feasible = feasible_mask(*problem.estimates, agent, problem.config.mode);

    if (!search.feasible[static_cast<std::size_t>(agent.start)])
        throw StrandedAgentError("agent " + std::to_string(agent.id) + " stranded at vertex " +
                                 std::to_string(agent.start));

    search.occupied_at.assign(static_cast<std::size_t>(h) + 1, {});
    search.visit_times.assign(static_cast<std::size_t>(g.n) + 1, {});
    for (const auto& path : fixed_plans) {
        if (path.size() != static_cast<std::size_t>(h) + 1)
            throw ValidationError("fixed plan length does not match the horizon");
        for (int t = 0; t <= h; ++t) {
            const int u = path[static_cast<std::size_t>(t)];
            g.require_vertex(u);
            search.occupied_at[static_cast<std::size_t>(t)].push_back(u);
            if (t >= 1) search.visit_times[static_cast<std::size_t>(u)].push_back(t);
        }
    }
    for (auto& times : search.visit_times) std::sort(times.begin(), times.end());

    if (problem.motion->is_identity) {
        search.dist.assign(static_cast<std::size_t>(g.n) + 1, {});
        for (int v = 1; v <= g.n; ++v)
            if (search.feasible[static_cast<std::size_t>(v)])
                search.dist[static_cast<std::size_t>(v)] =
                    detail::bfs_distances(g, v, search.feasible);
    }

    search.cur.push_back(agent.start);
    search.dfs(0, agent.start, problem.belief.b, 0.0);

    SingleAgentResult result;
    result.path = search.best_path;
    result.objective = search.best;
    return result;
}

// Value of a full joint plan: run the capture flow with every agent's path
// occupying vertices simultaneously.
inline double evaluate_joint(const PlanProblem& problem,
                             const std::vector<std::vector<int>>& paths) {
    const auto& g = *problem.graph;
    const int h = problem.config.horizon;
    std::vector<double> beta = problem.belief.b;
    double total = 0.0;
    double gpow = 1.0;
    for (int t = 1; t <= h; ++t) {
        gpow *= problem.config.gamma;
        if (!problem.motion->is_identity) {
            std::vector<double> phi(static_cast<std::size_t>(g.n) + 1, 0.0);
            for (int u = 1; u <= g.n; ++u) {
                const double mass = beta[static_cast<std::size_t>(u)];
                if (mass == 0.0) continue;
                const auto& row = problem.motion->rows[static_cast<std::size_t>(u - 1)];
                for (int x = 1; x <= g.n; ++x)
                    phi[static_cast<std::size_t>(x)] += mass * row[static_cast<std::size_t>(x - 1)];
            }
            beta = std::move(phi);
        }
        for (const auto& path : paths) {
            const int u = path[static_cast<std::size_t>(t)];
            total += gpow * beta[static_cast<std::size_t>(u)];
            beta[static_cast<std::size_t>(u)] = 0.0;
        }
    }
    return total;
}

// Sequential distributed planning: agents in ascending id, each optimizing
// against the residual flow left by already-planned teammates. An agent whose
// current vertex violates its own constraints stays in place for the whole
// horizon (still blocking/capturing as an occupant for later planners).
inline JointPlan plan_team(const PlanProblem& problem) {
    problem.validate();
    JointPlan joint;
    if (problem.agents.empty()) return joint;
    const int h = problem.config.horizon;

    std::vector<std::vector<int>> fixed;
    for (const auto& agent : problem.agents) {
        AgentPlan plan;
        plan.agent_id = agent.id;
        try {
            auto single = solve_single_agent(problem, agent, fixed);
            plan.path = std::move(single.path);
        } catch (const StrandedAgentError&) {
            plan.path.assign(static_cast<std::size_t>(h) + 1, agent.start);
            plan.stranded = true;
        }
        fixed.push_back(plan.path);
        joint.agents.push_back(std::move(plan));
    }
    joint.objective = evaluate_joint(problem, fixed);
    return joint;
}

// Post-hoc checker, written against the plan contract rather than the
// planner internals: wrong length, a non-edge hop, or a danger violation all
// raise. Stranded stays are accepted only when the start vertex really is
// infeasible for that agent.
inline void validate_plan(const EnvironmentGraph& graph, const DangerEstimateMap& map,
                          const std::vector<AgentProfile>& agents, const JointPlan& plan,
                          const PlannerConfig& config) {
    if (plan.agents.size() != agents.size())
        throw ValidationError("plan does not cover the agent set");
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& agent = agents[i];
        const auto& ap = plan.agents[i];
        if (ap.agent_id != agent.id) throw ValidationError("plan agent order mismatch");
        if (ap.path.size() != static_cast<std::size_t>(config.horizon) + 1)
            throw ValidationError("plan length does not match the horizon");
        if (ap.path.front() != agent.start)
            throw ValidationError("plan does not start at the agent's vertex");
        for (std::size_t t = 0; t + 1 < ap.path.size(); ++t) {
            const int u = ap.path[t];
            const int v = ap.path[t + 1];
            if (u != v && !graph.has_edge(u, v))
                throw ValidationError("plan step " + std::to_string(t) + " of agent " +
                                      std::to_string(agent.id) + " is not an edge");
        }
        const auto mask = feasible_mask(map, agent, config.mode);
        if (ap.stranded) {
            if (mask[static_cast<std::size_t>(agent.start)])
                throw ValidationError("agent " + std::to_string(agent.id) +
                                      " marked stranded at a feasible vertex");
            for (int v : ap.path)
                if (v != agent.start)
                    throw ValidationError("stranded agent " + std::to_string(agent.id) +
                                          " does not stay in place");
            continue;
        }
        for (int v : ap.path)
            if (!mask[static_cast<std::size_t>(v)])
                throw ValidationError("agent " + std::to_string(agent.id) +
                                      " plan enters excluded vertex " + std::to_string(v));
    }
}

}  // namespace mespp
