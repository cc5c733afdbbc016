#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mespp/belief.hpp"
#include "mespp/common.hpp"
#include "mespp/danger.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/planner.hpp"
#include "mespp/rng.hpp"
#include "mespp/similarity.hpp"

namespace mespp {

// Per-level probability that an agent standing on a vertex of that true
// level is lost this step, plus an optional per-move navigation failure.
struct HazardModel {
    std::array<double, 5> p_loss{};
    double nav_failure = 0.0;

    void validate() const {
        for (std::size_t i = 0; i < 5; ++i) {
            if (!(p_loss[i] >= 0.0 && p_loss[i] <= 1.0))
                throw ValidationError("hazard probability outside [0,1]");
            if (i > 0 && p_loss[i] < p_loss[i - 1])
                throw ValidationError("hazard table must be non-decreasing in level");
        }
        if (!(nav_failure >= 0.0 && nav_failure <= 1.0))
            throw ValidationError("nav_failure outside [0,1]");
    }

    // "none" disables losses. "formula" evaluates 7.47e-8*(l-1)*e^l per
    // level. "paper-range" is log-spaced between 9e-5 and 49.5% with a safe
    // level 1, the regime where danger materially shapes outcomes.
    static HazardModel builtin(const std::string& name) {
        HazardModel m;
        if (name == "none") return m;
        if (name == "paper-formula" || name == "formula") {
            for (int l = 1; l <= 5; ++l)
                m.p_loss[static_cast<std::size_t>(l - 1)] =
                    7.47e-8 * static_cast<double>(l - 1) * std::exp(static_cast<double>(l));
            return m;
        }
        if (name == "paper-range") {
            m.p_loss = {0.0, 9e-5, 1.6e-3, 2.8e-2, 0.495};
            return m;
        }
        throw ValidationError("unknown builtin hazard table '" + name + "'");
    }
};

enum class Outcome { Success, Abort, Cutoff };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Abort: return "abort";
        case Outcome::Cutoff: return "cutoff";
    }
    throw ValidationError("unknown outcome");
}

enum class LossCause { Danger, Navigation };

inline std::string to_string(LossCause c) {
    return c == LossCause::Danger ? "danger" : "navigation";
}

struct AgentLoss {
    int agent_id = 0;
    int step = 0;
    LossCause cause = LossCause::Danger;
};

// One executed agent-step, exactly as decided: the vertex entered, whether
// the agent was stranded, and the danger estimate the planner saw for that
// vertex when the plan was made.
struct StepRecord {
    int step = 0;
    int agent_id = 0;
    int vertex = 0;
    bool stranded = false;
    bool moved = false;
    DangerDistribution eta_at_decision{};
    int truth_level = 0;
};

struct MissionResult {
    Outcome outcome = Outcome::Cutoff;
    int end_time = 0;
    std::optional<int> capture_time;
    std::vector<AgentLoss> losses;
    bool mva_lost = false;
    bool nmva_lost = false;
    std::vector<double> bc_trace;   // estimation quality after each step
    std::vector<StepRecord> trace;  // populated when record_trace is set
};

struct BeliefSpec {
    enum class Kind { RandomVertices, Explicit };
    Kind kind = Kind::RandomVertices;
    int k = 9;  // RandomVertices: distinct non-start vertices, uniform mass
    double capture_prob = 0.0;
    std::vector<std::pair<int, double>> entries;  // Explicit
};

struct TargetSpec {
    enum class Kind { FromBelief, Fixed };
    Kind kind = Kind::FromBelief;
    int vertex = 0;  // Fixed
};

struct MissionSpec {
    const EnvironmentGraph* env = nullptr;
    const ScoreMatrix* scores = nullptr;
    const DescriptorCorpus* corpus = nullptr;
    std::vector<AgentProfile> team;
    PlannerConfig planner;
    HazardModel hazard;
    PriorKind prior = PriorKind::Uniform;
    EstimationParams estimation;
    MotionModel motion;  // drives both the belief block and the live target
    CaptureModel capture;
    BeliefSpec belief_spec;
    TargetSpec target_spec;
    int tau = 100;
    bool record_trace = false;

    void validate() const {
        if (env == nullptr || scores == nullptr || corpus == nullptr)
            throw ValidationError("mission spec is missing environment, scores, or corpus");
        if (team.empty()) throw ValidationError("mission spec has no agents");
        if (tau < 1) throw ValidationError("tau must be >= 1");
        planner.validate();
        hazard.validate();
        motion.validate();
        for (std::size_t i = 0; i < team.size(); ++i) {
            team[i].validate();
            env->require_vertex(team[i].start);
            if (i > 0 && team[i].id <= team[i - 1].id)
                throw ValidationError("team must have strictly ascending agent ids");
        }
    }
};

inline Outcome classify_outcome(const std::optional<int>& capture_time, int active_agents,
                                int tau) {
    if (capture_time.has_value() && *capture_time <= tau) return Outcome::Success;
    if (active_agents == 0) return Outcome::Abort;
    return Outcome::Cutoff;
}

namespace detail {

inline BeliefState sample_initial_belief(const MissionSpec& spec, Rng& rng) {
    const auto& g = *spec.env;
    if (spec.belief_spec.kind == BeliefSpec::Kind::Explicit)
        return init_belief(g.n, spec.belief_spec.capture_prob, spec.belief_spec.entries);
    std::vector<char> is_start(static_cast<std::size_t>(g.n) + 1, 0);
    for (const auto& agent : spec.team) is_start[static_cast<std::size_t>(agent.start)] = 1;
    std::vector<int> pool;
    for (int v = 1; v <= g.n; ++v)
        if (!is_start[static_cast<std::size_t>(v)]) pool.push_back(v);
    const int k = std::min<int>(spec.belief_spec.k, static_cast<int>(pool.size()));
    if (k < 1) throw ValidationError("no vertices available for the initial belief");
    const auto chosen = rng.sample_without_replacement(pool, static_cast<std::size_t>(k));
    std::vector<std::pair<int, double>> entries;
    for (int v : chosen) entries.push_back({v, 1.0 / static_cast<double>(k)});
    return init_belief(g.n, 0.0, entries);
}

inline int sample_target(const MissionSpec& spec, const BeliefState& belief, Rng& rng) {
    if (spec.target_spec.kind == TargetSpec::Kind::Fixed) {
        spec.env->require_vertex(spec.target_spec.vertex);
        return spec.target_spec.vertex;
    }
    double total = 0.0;
    for (int v = 1; v <= belief.n(); ++v) total += belief.at(v);
    if (total <= 0.0) throw ValidationError("belief has no vertex mass to place the target");
    const double u = rng.next_double() * total;
    double acc = 0.0;
    for (int v = 1; v <= belief.n(); ++v) {
        acc += belief.at(v);
        if (u < acc) return v;
    }
    for (int v = belief.n(); v >= 1; --v)
        if (belief.at(v) > 0.0) return v;
    return belief.n();
}

inline int step_target(const MotionModel& M, int vertex, Rng& rng) {
    if (M.is_identity) return vertex;
    const auto& row = M.rows[static_cast<std::size_t>(vertex - 1)];
    const double u = rng.next_double();
    double acc = 0.0;
    for (int v = 1; v <= M.n; ++v) {
        acc += row[static_cast<std::size_t>(v - 1)];
        if (u < acc) return v;
    }
    return vertex;
}

}  // namespace detail

// One seeded mission. Each discrete step runs, in order: plan, move,
// retrieve danger data and update the estimates, apply losses against the
// true levels, update the team, update the belief with the survivors,
// advance the target, scan. Deterministic given the seed.
inline MissionResult run_mission(const MissionSpec& spec, std::uint64_t seed) {
    spec.validate();
    const auto& g = *spec.env;
    Rng rng(seed);

    DangerEstimateMap map = make_prior(spec.prior, g);
    std::vector<int> position(spec.team.size());
    std::vector<char> active(spec.team.size(), 1);
    for (std::size_t i = 0; i < spec.team.size(); ++i) position[i] = spec.team[i].start;
    for (std::size_t i = 0; i < spec.team.size(); ++i)
        update_on_visit(map, g, position[i], *spec.scores, *spec.corpus, spec.estimation, 0);

    BeliefState belief = detail::sample_initial_belief(spec, rng);
    int target = detail::sample_target(spec, belief, rng);

    MissionResult result;
    result.bc_trace.push_back(bhattacharyya(map, g));

    JointPlan plan;
    DangerEstimateMap plan_map = map;  // estimate snapshot the current plan was built on
    int plan_step = 0;
    bool have_plan = false;

    auto count_active = [&] {
        int c = 0;
        for (char a : active) c += a;
        return c;
    };

    for (int t = 1; t <= spec.tau; ++t) {
        const bool replan_due = !have_plan || ((t - 1) % spec.planner.replan_period == 0) ||
                                plan_step + 1 > spec.planner.horizon;
        if (replan_due) {
            PlanProblem problem;
            problem.graph = &g;
            problem.estimates = &map;
            problem.motion = &spec.motion;
            problem.belief = belief;
            problem.config = spec.planner;
            for (std::size_t i = 0; i < spec.team.size(); ++i) {
                if (!active[i]) continue;
                AgentProfile a = spec.team[i];
                a.start = position[i];
                problem.agents.push_back(a);
            }
            plan = plan_team(problem);
            plan_map = map;
            plan_step = 0;
            have_plan = true;
        }

        // move along the current plan
        std::vector<char> moved(spec.team.size(), 0);
        std::vector<char> stranded(spec.team.size(), 0);
        for (std::size_t i = 0; i < spec.team.size(); ++i) {
            if (!active[i]) continue;
            const AgentPlan* ap = plan.find(spec.team[i].id);
            if (ap == nullptr) continue;
            const int next = ap->path[static_cast<std::size_t>(plan_step + 1)];
            moved[i] = next != position[i];
            stranded[i] = ap->stranded;
            position[i] = next;
        }
        ++plan_step;

        // retrieve danger data at the new vertices
        for (std::size_t i = 0; i < spec.team.size(); ++i)
            if (active[i])
                update_on_visit(map, g, position[i], *spec.scores, *spec.corpus, spec.estimation,
                                t);
        result.bc_trace.push_back(bhattacharyya(map, g));

        if (spec.record_trace)
            for (std::size_t i = 0; i < spec.team.size(); ++i) {
                if (!active[i]) continue;
                StepRecord rec;
                rec.step = t;
                rec.agent_id = spec.team[i].id;
                rec.vertex = position[i];
                rec.stranded = stranded[i] != 0;
                rec.moved = moved[i] != 0;
                rec.eta_at_decision = plan_map.at(position[i]);
                rec.truth_level = g.truth_level[static_cast<std::size_t>(position[i])];
                result.trace.push_back(rec);
            }

        // losses against ground truth, then the stragglers come off the team
        for (std::size_t i = 0; i < spec.team.size(); ++i) {
            if (!active[i]) continue;
            const int level = g.truth_level[static_cast<std::size_t>(position[i])];
            if (rng.bernoulli(spec.hazard.p_loss[static_cast<std::size_t>(level - 1)])) {
                active[i] = 0;
                result.losses.push_back({spec.team[i].id, t, LossCause::Danger});
                (spec.team[i].mva ? result.mva_lost : result.nmva_lost) = true;
                continue;
            }
            if (spec.hazard.nav_failure > 0.0 && moved[i] &&
                rng.bernoulli(spec.hazard.nav_failure)) {
                active[i] = 0;
                result.losses.push_back({spec.team[i].id, t, LossCause::Navigation});
                (spec.team[i].mva ? result.mva_lost : result.nmva_lost) = true;
            }
        }

        if (count_active() == 0) {
            result.outcome = Outcome::Abort;
            result.end_time = t;
            return result;
        }

        // belief sees the survivors' positions
        std::vector<int> survivor_positions;
        for (std::size_t i = 0; i < spec.team.size(); ++i)
            if (active[i]) survivor_positions.push_back(position[i]);
        belief = update(belief, spec.motion, survivor_positions, spec.capture);

        target = detail::step_target(spec.motion, target, rng);

        for (int pos : survivor_positions)
            if (pos == target) {
                result.outcome = Outcome::Success;
                result.capture_time = t;
                result.end_time = t;
                return result;
            }
    }

    result.outcome = classify_outcome(result.capture_time, count_active(), spec.tau);
    result.end_time = spec.tau;
    return result;
}

}  // namespace mespp
