#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mespp/danger.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/experiment.hpp"
#include "mespp/io.hpp"
#include "mespp/milp.hpp"
#include "mespp/planner.hpp"
#include "mespp/similarity.hpp"
#include "mespp/simulator.hpp"

namespace {

void emit(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        mespp::detail::write_file(out_path, j.dump(2) + "\n");
}

struct GenScenarioOpts {
    std::string env, type, out;
    std::uint64_t seed = 0;
};

void run_gen_scenario(const GenScenarioOpts& o) {
    const auto env = mespp::load_environment(o.env);
    const auto spec = mespp::HazardScenarioSpec::preset(o.type, o.seed);
    mespp::save_environment(mespp::generate_scenario(env, spec), o.out);
}

struct SynthScoresOpts {
    std::string env, corpus, out;
    double sigma = 0.0, mu_hi = 0.8, mu_lo = 0.3, mu_leak = 0.55;
    bool leak = false, leak_up = false, no_safe_match = false;
    std::uint64_t seed = 0;
};

void run_synth_scores(const SynthScoresOpts& o) {
    const auto env = mespp::load_environment(o.env);
    const auto corpus = mespp::load_corpus(o.corpus);
    mespp::SynthesisParams params;
    params.sigma = o.sigma;
    params.mu_hi = o.mu_hi;
    params.mu_lo = o.mu_lo;
    params.adjacent_leak = o.leak || o.leak_up;
    params.mu_leak = o.mu_leak;
    params.leak_up_only = o.leak_up;
    params.safe_match = !o.no_safe_match;
    mespp::save_scores(mespp::synthesize_scores(env, corpus, params, o.seed), o.out);
}

struct EstimateOpts {
    std::string env, scores, corpus, out;
    double theta = 0.5, image_fraction = 0.05;
};

void run_estimate(const EstimateOpts& o) {
    const auto env = mespp::load_environment(o.env);
    const auto scores = mespp::load_scores(o.scores);
    const auto corpus = mespp::load_corpus(o.corpus);
    mespp::EstimationParams params;
    params.theta = o.theta;
    params.image_fraction = o.image_fraction;
    mespp::DangerEstimateMap map(env.n);
    for (int v = 1; v <= env.n; ++v)
        map.eta[static_cast<std::size_t>(v)] =
            mespp::estimate_vertex(env, v, scores, corpus, params);
    mespp::save_estimates(map, env, o.theta, o.image_fraction, o.out);
}

struct PlanOpts {
    std::string env, belief, estimates, team, mode = "NC", out, lp_out;
    int horizon = 14;
    double gamma = 0.99;
};

void run_plan(const PlanOpts& o) {
    const auto env = mespp::load_environment(o.env);
    const auto estimates = mespp::load_estimates(o.estimates);
    const auto team = mespp::load_team(o.team);
    const auto motion = mespp::MotionModel::identity(env.n);

    mespp::PlanProblem problem;
    problem.graph = &env;
    problem.estimates = &estimates;
    problem.motion = &motion;
    problem.belief = mespp::load_belief(o.belief, env.n);
    problem.agents = team;
    problem.config.horizon = o.horizon;
    problem.config.gamma = o.gamma;
    problem.config.mode = mespp::constraint_mode_from_string(o.mode);

    const auto plan = mespp::plan_team(problem);
    if (!o.lp_out.empty()) mespp::export_lp(mespp::build_milp(problem), o.lp_out);
    emit(mespp::plan_to_json(plan, problem.config), o.out);
}

struct SimulateOpts {
    std::string env, scores, corpus, team, mode = "NC", prior = "PU", hazard = "paper-range", out;
    int tau = 100, horizon = 14, replan_period = 1, belief_k = 9, target_vertex = 0;
    double gamma = 0.99, theta = 0.5, image_fraction = 0.05;
    std::uint64_t seed = 0;
    bool record_trace = false;
};

void run_simulate(const SimulateOpts& o) {
    const auto env = mespp::load_environment(o.env);
    const auto scores = mespp::load_scores(o.scores);
    const auto corpus = mespp::load_corpus(o.corpus);

    mespp::MissionSpec spec;
    spec.env = &env;
    spec.scores = &scores;
    spec.corpus = &corpus;
    spec.team = mespp::load_team(o.team);
    spec.planner.horizon = o.horizon;
    spec.planner.gamma = o.gamma;
    spec.planner.mode = mespp::constraint_mode_from_string(o.mode);
    spec.planner.replan_period = o.replan_period;
    spec.hazard = mespp::resolve_hazard(o.hazard);
    if (o.prior == "PU")
        spec.prior = mespp::PriorKind::Uniform;
    else if (o.prior == "PK")
        spec.prior = mespp::PriorKind::Perfect;
    else
        throw mespp::ValidationError("unknown prior '" + o.prior + "' (expected PU or PK)");
    spec.estimation.theta = o.theta;
    spec.estimation.image_fraction = o.image_fraction;
    spec.motion = mespp::MotionModel::identity(env.n);
    spec.belief_spec.k = o.belief_k;
    if (o.target_vertex > 0) {
        spec.target_spec.kind = mespp::TargetSpec::Kind::Fixed;
        spec.target_spec.vertex = o.target_vertex;
    }
    spec.tau = o.tau;
    spec.record_trace = o.record_trace;

    emit(mespp::mission_to_json(mespp::run_mission(spec, o.seed)), o.out);
}

struct ExperimentOpts {
    std::string grid = "builtin", env, scores, corpus, out, format;
    int instances = 1000, threads = 0, tau = 100, horizon = 14, replan_period = 1, belief_k = 9,
        start_vertex = 1;
    double gamma = 0.99, theta = 0.5, image_fraction = 0.05;
    std::uint64_t seed = 0;
};

void run_experiment(const ExperimentOpts& o) {
    const auto env = mespp::load_environment(o.env);
    const auto scores = mespp::load_scores(o.scores);
    const auto corpus = mespp::load_corpus(o.corpus);
    const auto configs = o.grid == "builtin" ? mespp::builtin_grid(o.instances, o.seed)
                                             : mespp::load_grid(o.grid, o.instances, o.seed);
    mespp::HarnessOptions opt;
    opt.tau = o.tau;
    opt.horizon = o.horizon;
    opt.gamma = o.gamma;
    opt.replan_period = o.replan_period;
    opt.estimation.theta = o.theta;
    opt.estimation.image_fraction = o.image_fraction;
    opt.start_vertex = o.start_vertex;
    opt.belief_k = o.belief_k;
    opt.threads = o.threads;

    const auto report = mespp::run_experiments(configs, env, scores, corpus, opt);
    std::string format = o.format;
    if (format.empty())
        format = o.out.size() >= 5 && o.out.substr(o.out.size() - 5) == ".json" ? "json" : "csv";
    mespp::write_report(report, o.out, format);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-aware multi-robot search: scenarios, estimation, planning, simulation"};
    app.require_subcommand(1);

    GenScenarioOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-scenario", "assign hazard types and levels to an environment");
    gen_cmd->add_option("--env", gen.env, "environment JSON")->required();
    gen_cmd->add_option("--type", gen.type, "scenario type: NFF, NCC or NCF")->required();
    gen_cmd->add_option("--seed", gen.seed, "random seed");
    gen_cmd->add_option("--out", gen.out, "output environment JSON")->required();
    gen_cmd->callback([&] { run_gen_scenario(gen); });

    SynthScoresOpts synth;
    auto* synth_cmd = app.add_subcommand("synth-scores", "synthesize similarity scores from ground truth");
    synth_cmd->add_option("--env", synth.env, "environment JSON")->required();
    synth_cmd->add_option("--corpus", synth.corpus, "descriptor corpus JSON")->required();
    synth_cmd->add_option("--sigma", synth.sigma, "gaussian noise level");
    synth_cmd->add_option("--mu-hi", synth.mu_hi, "mean score on matching descriptors");
    synth_cmd->add_option("--mu-lo", synth.mu_lo, "mean score elsewhere");
    synth_cmd->add_flag("--leak", synth.leak, "adjacent levels of the matching type score midway");
    synth_cmd->add_flag("--leak-up", synth.leak_up, "leakage only toward the next higher level");
    synth_cmd->add_option("--mu-leak", synth.mu_leak, "mean score for adjacent-level leakage");
    synth_cmd->add_flag("--no-safe-match", synth.no_safe_match,
                        "hazard-free vertices stop matching level-1 descriptors");
    synth_cmd->add_option("--seed", synth.seed, "random seed");
    synth_cmd->add_option("--out", synth.out, "output scores CSV")->required();
    synth_cmd->callback([&] { run_synth_scores(synth); });

    EstimateOpts est;
    auto* est_cmd = app.add_subcommand("estimate", "offline danger estimation for every vertex");
    est_cmd->add_option("--env", est.env, "environment JSON")->required();
    est_cmd->add_option("--scores", est.scores, "scores CSV")->required();
    est_cmd->add_option("--corpus", est.corpus, "descriptor corpus JSON")->required();
    est_cmd->add_option("--theta", est.theta, "binarization threshold");
    est_cmd->add_option("--image-fraction", est.image_fraction, "fraction of each scene used");
    est_cmd->add_option("--out", est.out, "output estimates JSON")->required();
    est_cmd->callback([&] { run_estimate(est); });

    PlanOpts plan;
    auto* plan_cmd = app.add_subcommand("plan", "plan one receding-horizon step for a team");
    plan_cmd->add_option("--env", plan.env, "environment JSON")->required();
    plan_cmd->add_option("--belief", plan.belief, "belief JSON")->required();
    plan_cmd->add_option("--estimates", plan.estimates, "danger estimates JSON")->required();
    plan_cmd->add_option("--team", plan.team, "team JSON")->required();
    plan_cmd->add_option("--mode", plan.mode, "constraint mode: NC, PT or PB");
    plan_cmd->add_option("--horizon", plan.horizon, "planning horizon");
    plan_cmd->add_option("--gamma", plan.gamma, "discount factor");
    plan_cmd->add_option("--lp-out", plan.lp_out, "also export the MILP model as an LP file");
    plan_cmd->add_option("--out", plan.out, "output plan JSON (stdout when omitted)");
    plan_cmd->callback([&] { run_plan(plan); });

    SimulateOpts sim;
    auto* sim_cmd = app.add_subcommand("simulate", "run one seeded mission");
    sim_cmd->add_option("--env", sim.env, "environment JSON")->required();
    sim_cmd->add_option("--scores", sim.scores, "scores CSV")->required();
    sim_cmd->add_option("--corpus", sim.corpus, "descriptor corpus JSON")->required();
    sim_cmd->add_option("--team", sim.team, "team JSON")->required();
    sim_cmd->add_option("--mode", sim.mode, "constraint mode: NC, PT or PB");
    sim_cmd->add_option("--prior", sim.prior, "danger prior: PU or PK");
    sim_cmd->add_option("--hazard", sim.hazard, "hazard table: none, paper-formula, paper-range or file");
    sim_cmd->add_option("--tau", sim.tau, "mission deadline");
    sim_cmd->add_option("--horizon", sim.horizon, "planning horizon");
    sim_cmd->add_option("--gamma", sim.gamma, "discount factor");
    sim_cmd->add_option("--replan-period", sim.replan_period, "steps between planner calls");
    sim_cmd->add_option("--theta", sim.theta, "binarization threshold");
    sim_cmd->add_option("--image-fraction", sim.image_fraction, "fraction of each scene used");
    sim_cmd->add_option("--belief-k", sim.belief_k, "vertices in the random initial belief");
    sim_cmd->add_option("--target-vertex", sim.target_vertex, "fix the target (default: sampled from belief)");
    sim_cmd->add_flag("--record-trace", sim.record_trace, "record per-agent step decisions");
    sim_cmd->add_option("--seed", sim.seed, "random seed");
    sim_cmd->add_option("--out", sim.out, "output mission JSON (stdout when omitted)");
    sim_cmd->callback([&] { run_simulate(sim); });

    ExperimentOpts exp;
    auto* exp_cmd = app.add_subcommand("experiment", "run a configuration grid of seeded missions");
    exp_cmd->add_option("--grid", exp.grid, "grid JSON file, or 'builtin'");
    exp_cmd->add_option("--env", exp.env, "environment JSON")->required();
    exp_cmd->add_option("--scores", exp.scores, "scores CSV")->required();
    exp_cmd->add_option("--corpus", exp.corpus, "descriptor corpus JSON")->required();
    exp_cmd->add_option("--instances", exp.instances, "missions per config");
    exp_cmd->add_option("--seed", exp.seed, "base seed");
    exp_cmd->add_option("--threads", exp.threads, "worker threads (0 = machine parallelism)");
    exp_cmd->add_option("--tau", exp.tau, "mission deadline");
    exp_cmd->add_option("--horizon", exp.horizon, "planning horizon");
    exp_cmd->add_option("--gamma", exp.gamma, "discount factor");
    exp_cmd->add_option("--replan-period", exp.replan_period, "steps between planner calls");
    exp_cmd->add_option("--theta", exp.theta, "binarization threshold");
    exp_cmd->add_option("--image-fraction", exp.image_fraction, "fraction of each scene used");
    exp_cmd->add_option("--belief-k", exp.belief_k, "vertices in the random initial belief");
    exp_cmd->add_option("--start-vertex", exp.start_vertex, "team start vertex");
    exp_cmd->add_option("--format", exp.format, "report format: csv or json (default from --out)");
    exp_cmd->add_option("--out", exp.out, "output report path")->required();
    exp_cmd->callback([&] { run_experiment(exp); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    } catch (const mespp::IoError& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
