#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "mespp/common.hpp"
#include "mespp/planner.hpp"
#include "mespp/simulator.hpp"

namespace mespp {

// Kappa/alpha pairs per agent; index order is agent order (ids 1..m).
struct TeamMakeup {
    std::string name;
    std::vector<int> kappa;
    std::vector<double> alpha;

    static TeamMakeup preset(const std::string& name) {
        TeamMakeup m;
        m.name = name;
        if (name == "345") {
            m.kappa = {3, 4, 5};
            m.alpha = {0.6, 0.4, 0.4};
        } else if (name == "335") {
            m.kappa = {3, 3, 5};
            m.alpha = {0.6, 0.6, 0.4};
        } else if (name == "333") {
            m.kappa = {3, 3, 3};
            m.alpha = {0.6, 0.6, 0.6};
        } else {
            throw ValidationError("unknown team makeup '" + name + "'");
        }
        return m;
    }

    void validate() const {
        if (kappa.empty() || kappa.size() != alpha.size())
            throw ValidationError("team makeup needs matching kappa/alpha vectors");
    }

    // Agents with the strictest threshold are the most valuable ones.
    std::vector<AgentProfile> team(int start_vertex) const {
        validate();
        const int min_kappa = *std::min_element(kappa.begin(), kappa.end());
        std::vector<AgentProfile> team;
        for (std::size_t i = 0; i < kappa.size(); ++i) {
            AgentProfile a;
            a.id = static_cast<int>(i) + 1;
            a.kappa = kappa[i];
            a.alpha = alpha[i];
            a.start = start_vertex;
            a.mva = kappa[i] == min_kappa;
            team.push_back(a);
        }
        return team;
    }
};

struct ExperimentConfig {
    std::string label;
    ConstraintMode mode = ConstraintMode::NC;
    PriorKind prior = PriorKind::Uniform;
    TeamMakeup makeup;
    std::string hazard_id = "paper-range";
    HazardModel hazard;
    int instances = 1000;
    std::uint64_t base_seed = 0;

    // Labels follow {mode}-{prior}-{makeup}, e.g. "PB-PU-345". Two specials:
    // "ND" (no danger: unconstrained planning, zero hazard) and "NC"
    // (unconstrained planning with the default hazard).
    static ExperimentConfig from_label(const std::string& label, int instances,
                                       std::uint64_t base_seed,
                                       const std::string& hazard_id = "paper-range") {
        ExperimentConfig cfg;
        cfg.label = label;
        cfg.instances = instances;
        cfg.base_seed = base_seed;
        cfg.hazard_id = hazard_id;
        cfg.makeup = TeamMakeup::preset("345");
        if (label == "ND") {
            cfg.hazard_id = "none";
        } else if (label != "NC") {
            const auto first = label.find('-');
            const auto second = label.find('-', first + 1);
            if (first == std::string::npos || second == std::string::npos)
                throw ValidationError("config label '" + label +
                                      "' does not parse as mode-prior-makeup");
            cfg.mode = constraint_mode_from_string(label.substr(0, first));
            const std::string prior = label.substr(first + 1, second - first - 1);
            if (prior == "PK")
                cfg.prior = PriorKind::Perfect;
            else if (prior == "PU")
                cfg.prior = PriorKind::Uniform;
            else
                throw ValidationError("unknown prior '" + prior + "' in label '" + label + "'");
            cfg.makeup = TeamMakeup::preset(label.substr(second + 1));
        }
        cfg.hazard = HazardModel::builtin(cfg.hazard_id);
        return cfg;
    }

    void validate() const {
        makeup.validate();
        hazard.validate();
        if (instances < 0) throw ValidationError("instances must be >= 0");
    }
};

// The ten-configuration grid the experiments revolve around.
inline std::vector<ExperimentConfig> builtin_grid(int instances = 1000,
                                                  std::uint64_t base_seed = 0) {
    const char* labels[] = {"ND",        "NC",        "PT-PK-345", "PB-PK-345", "PT-PU-345",
                            "PB-PU-345", "PT-PU-335", "PB-PU-335", "PT-PU-333", "PB-PU-333"};
    std::vector<ExperimentConfig> grid;
    for (const char* label : labels)
        grid.push_back(ExperimentConfig::from_label(label, instances, base_seed));
    return grid;
}

// Sample mean and 95% half-width under the normal approximation; a single
// sample has zero width by convention.
inline std::pair<double, double> confidence_interval(const std::vector<double>& samples) {
    if (samples.empty()) throw ValidationError("confidence_interval: no samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    if (samples.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double stddev = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    const double half = 1.96 * stddev / std::sqrt(static_cast<double>(samples.size()));
    return {mean, half};
}

struct ConfigStats {
    std::string label;
    int n_instances = 0;
    double success = 0.0;
    double abort = 0.0;
    double cutoff = 0.0;
    double mean_time = 0.0;
    double time_ci = 0.0;
    double mean_capture_time = 0.0;  // over successful missions only
    double capture_ci = 0.0;
    double mva_loss_pct = 0.0;
    double nmva_loss_pct = 0.0;
    bool warning = false;  // zero instances, or no successes to average
};

struct AggregateReport {
    std::vector<ConfigStats> rows;
};

struct HarnessOptions {
    int tau = 100;
    int horizon = 14;
    double gamma = 0.99;
    int replan_period = 1;
    EstimationParams estimation;
    int start_vertex = 1;
    int belief_k = 9;
    int threads = 0;  // 0 picks the machine's parallelism
};

namespace detail {

inline MissionSpec make_mission_spec(const ExperimentConfig& cfg, const EnvironmentGraph& env,
                                     const ScoreMatrix& scores, const DescriptorCorpus& corpus,
                                     const HarnessOptions& opt, const MotionModel& motion) {
    MissionSpec spec;
    spec.env = &env;
    spec.scores = &scores;
    spec.corpus = &corpus;
    spec.team = cfg.makeup.team(opt.start_vertex);
    spec.planner.horizon = opt.horizon;
    spec.planner.gamma = opt.gamma;
    spec.planner.mode = cfg.mode;
    spec.planner.replan_period = opt.replan_period;
    spec.hazard = cfg.hazard;
    spec.prior = cfg.prior;
    spec.estimation = opt.estimation;
    spec.motion = motion;
    spec.belief_spec.k = opt.belief_k;
    spec.tau = opt.tau;
    return spec;
}

inline ConfigStats aggregate(const ExperimentConfig& cfg,
                             const std::vector<MissionResult>& results) {
    ConfigStats row;
    row.label = cfg.label;
    row.n_instances = static_cast<int>(results.size());
    if (results.empty()) {
        row.warning = true;
        return row;
    }
    const double n = static_cast<double>(results.size());
    std::vector<double> times;
    std::vector<double> capture_times;
    int mva = 0;
    int nmva = 0;
    for (const auto& r : results) {
        times.push_back(static_cast<double>(r.end_time));
        switch (r.outcome) {
            case Outcome::Success:
                row.success += 1.0;
                capture_times.push_back(static_cast<double>(*r.capture_time));
                break;
            case Outcome::Abort: row.abort += 1.0; break;
            case Outcome::Cutoff: row.cutoff += 1.0; break;
        }
        mva += r.mva_lost ? 1 : 0;
        nmva += r.nmva_lost ? 1 : 0;
    }
    row.success /= n;
    row.abort /= n;
    row.cutoff /= n;
    std::tie(row.mean_time, row.time_ci) = confidence_interval(times);
    if (capture_times.empty())
        row.warning = true;
    else
        std::tie(row.mean_capture_time, row.capture_ci) = confidence_interval(capture_times);
    row.mva_loss_pct = 100.0 * static_cast<double>(mva) / n;
    row.nmva_loss_pct = 100.0 * static_cast<double>(nmva) / n;
    return row;
}

}  // namespace detail

// Runs every config's missions (seeds base..base+instances-1) and merges
// per-seed results in seed order, so the report does not depend on thread
// scheduling.
inline AggregateReport run_experiments(const std::vector<ExperimentConfig>& configs,
                                       const EnvironmentGraph& env, const ScoreMatrix& scores,
                                       const DescriptorCorpus& corpus,
                                       const HarnessOptions& opt = {}) {
    validate_environment(env);
    const MotionModel motion = MotionModel::identity(env.n);
    int threads = opt.threads > 0 ? opt.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    AggregateReport report;
    for (const auto& cfg : configs) {
        cfg.validate();
        const MissionSpec spec = detail::make_mission_spec(cfg, env, scores, corpus, opt, motion);
        std::vector<MissionResult> results(static_cast<std::size_t>(cfg.instances));
        if (cfg.instances > 0) {
            std::atomic<int> next{0};
            auto worker = [&] {
                for (;;) {
                    const int i = next.fetch_add(1);
                    if (i >= cfg.instances) break;
                    results[static_cast<std::size_t>(i)] =
                        run_mission(spec, cfg.base_seed + static_cast<std::uint64_t>(i));
                }
            };
            if (threads == 1 || cfg.instances == 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                const int spawn = std::min(threads, cfg.instances);
                pool.reserve(static_cast<std::size_t>(spawn));
                for (int i = 0; i < spawn; ++i) pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }
        }
        report.rows.push_back(detail::aggregate(cfg, results));
    }
    return report;
}

}  // namespace mespp
