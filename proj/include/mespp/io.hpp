#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mespp/common.hpp"
#include "mespp/danger.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/experiment.hpp"
#include "mespp/planner.hpp"
#include "mespp/similarity.hpp"
#include "mespp/simulator.hpp"

namespace mespp {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path + "'");
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline nlohmann::json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key))
        throw ValidationError(context + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(context + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace detail

// ---- environment -----------------------------------------------------

// Schema: {vertices:[{id, neighborhood, truth_level, scene_images:[...],
// hazard?}], edges:[[u,v]]}. A missing hazard field defaults to none for
// level-1 vertices and fire otherwise.
inline EnvironmentGraph environment_from_json(const nlohmann::json& j) {
    const auto vertices = detail::get_field<nlohmann::json>(j, "vertices", "environment");
    if (!vertices.is_array() || vertices.empty())
        throw ValidationError("environment: 'vertices' must be a non-empty array");
    EnvironmentGraph g;
    g.n = static_cast<int>(vertices.size());
    const auto sz = static_cast<std::size_t>(g.n) + 1;
    g.neighbors.assign(sz, {});
    g.neighborhood_name.assign(sz, "");
    g.truth_level.assign(sz, 1);
    g.hazard_type.assign(sz, HazardType::None);
    g.scenes.assign(sz, {});

    std::vector<char> seen(sz, 0);
    for (const auto& vj : vertices) {
        const int id = detail::get_field<int>(vj, "id", "environment vertex");
        if (id < 1 || id > g.n)
            throw ValidationError("environment: vertex id " + std::to_string(id) +
                                  " outside 1.." + std::to_string(g.n));
        const auto vi = static_cast<std::size_t>(id);
        if (seen[vi]) throw ValidationError("environment: duplicate vertex id " + std::to_string(id));
        seen[vi] = 1;
        const std::string ctx = "environment vertex " + std::to_string(id);
        g.neighborhood_name[vi] = detail::get_field<std::string>(vj, "neighborhood", ctx);
        g.truth_level[vi] = detail::get_field<int>(vj, "truth_level", ctx);
        g.scenes[vi] = detail::get_field<std::vector<std::string>>(vj, "scene_images", ctx);
        if (vj.contains("hazard"))
            g.hazard_type[vi] = hazard_type_from_string(detail::get_field<std::string>(vj, "hazard", ctx));
        else
            g.hazard_type[vi] = g.truth_level[vi] <= 1 ? HazardType::None : HazardType::Fire;
    }

    const auto edges = detail::get_field<nlohmann::json>(j, "edges", "environment");
    if (!edges.is_array()) throw ValidationError("environment: 'edges' must be an array");
    for (const auto& e : edges) {
        if (!e.is_array() || e.size() != 2)
            throw ValidationError("environment: each edge must be a [u,v] pair");
        const int u = e.at(0).get<int>();
        const int v = e.at(1).get<int>();
        if (u < 1 || u > g.n || v < 1 || v > g.n)
            throw ValidationError("environment: edge (" + std::to_string(u) + "," +
                                  std::to_string(v) + ") references an unknown vertex");
        if (u == v) throw ValidationError("self-loop at vertex " + std::to_string(u));
        g.neighbors[static_cast<std::size_t>(u)].push_back(v);
        g.neighbors[static_cast<std::size_t>(v)].push_back(u);
    }
    for (int v = 1; v <= g.n; ++v) {
        auto& adj = g.neighbors[static_cast<std::size_t>(v)];
        std::sort(adj.begin(), adj.end());
        const auto dup = std::adjacent_find(adj.begin(), adj.end());
        if (dup != adj.end())
            throw ValidationError("environment: duplicate edge (" + std::to_string(v) + "," +
                                  std::to_string(*dup) + ")");
    }
    validate_environment(g);
    return g;
}

inline nlohmann::json environment_to_json(const EnvironmentGraph& g) {
    nlohmann::json vertices = nlohmann::json::array();
    for (int v = 1; v <= g.n; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        vertices.push_back({{"id", v},
                            {"neighborhood", g.neighborhood_name[vi]},
                            {"truth_level", g.truth_level[vi]},
                            {"hazard", to_string(g.hazard_type[vi])},
                            {"scene_images", g.scenes[vi]}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (int u = 1; u <= g.n; ++u)
        for (int v : g.neighbors[static_cast<std::size_t>(u)])
            if (u < v) edges.push_back({u, v});
    return {{"vertices", vertices}, {"edges", edges}};
}

inline EnvironmentGraph load_environment(const std::string& path) {
    return environment_from_json(detail::parse_json_file(path));
}

inline void save_environment(const EnvironmentGraph& g, const std::string& path) {
    detail::write_file(path, environment_to_json(g).dump(2) + "\n");
}

// ---- descriptor corpus -----------------------------------------------

// Schema: [{type, descriptors:{"1":id,...,"5":id}}].
inline DescriptorCorpus corpus_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ValidationError("corpus: top-level JSON array expected");
    DescriptorCorpus corpus;
    for (const auto& sj : j) {
        DescriptorSet set;
        set.type = detail::get_field<std::string>(sj, "type", "corpus set");
        const auto desc = detail::get_field<nlohmann::json>(sj, "descriptors", "corpus set");
        for (int l = 1; l <= 5; ++l) {
            const std::string key = std::to_string(l);
            if (!desc.contains(key))
                throw ValidationError("corpus set '" + set.type + "': missing level " + key);
            set.descriptor_ids[static_cast<std::size_t>(l - 1)] = desc.at(key).get<std::string>();
        }
        if (desc.size() != 5)
            throw ValidationError("corpus set '" + set.type + "': exactly 5 levels expected");
        corpus.sets.push_back(std::move(set));
    }
    corpus.validate();
    return corpus;
}

inline nlohmann::json corpus_to_json(const DescriptorCorpus& corpus) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& set : corpus.sets) {
        nlohmann::json desc;
        for (int l = 1; l <= 5; ++l)
            desc[std::to_string(l)] = set.descriptor_ids[static_cast<std::size_t>(l - 1)];
        out.push_back({{"type", set.type}, {"descriptors", desc}});
    }
    return out;
}

inline DescriptorCorpus load_corpus(const std::string& path) {
    return corpus_from_json(detail::parse_json_file(path));
}

inline void save_corpus(const DescriptorCorpus& corpus, const std::string& path) {
    detail::write_file(path, corpus_to_json(corpus).dump(2) + "\n");
}

// ---- similarity scores -----------------------------------------------

// CSV: image_id,descriptor_id,score with a header row.
inline ScoreMatrix load_scores(const std::string& path) {
    const std::string text = detail::read_file(path);
    ScoreMatrix m;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == "image_id,descriptor_id,score") continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos)
            throw ValidationError("'" + path + "' line " + std::to_string(lineno) +
                                  ": expected image_id,descriptor_id,score");
        const std::string image = line.substr(0, c1);
        const std::string descriptor = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string number = line.substr(c2 + 1);
        double score = 0.0;
        const auto res = std::from_chars(number.data(), number.data() + number.size(), score);
        if (res.ec != std::errc{} || res.ptr != number.data() + number.size())
            throw ValidationError("'" + path + "' line " + std::to_string(lineno) +
                                  ": bad score '" + number + "'");
        m.insert(image, descriptor, score);
    }
    return m;
}

inline void save_scores(const ScoreMatrix& m, const std::string& path) {
    std::string text = "image_id,descriptor_id,score\n";
    for (const auto& [key, score] : m.sorted_entries())
        text += key.first + "," + key.second + "," + detail::format_double(score) + "\n";
    detail::write_file(path, text);
}

// ---- team ------------------------------------------------------------

// Schema: {agents:[{id, kappa, alpha, start, mva?}]}. Absent mva flags
// default to marking the agents with the lowest kappa in the team.
inline std::vector<AgentProfile> team_from_json(const nlohmann::json& j) {
    const auto agents = detail::get_field<nlohmann::json>(j, "agents", "team");
    if (!agents.is_array() || agents.empty())
        throw ValidationError("team: 'agents' must be a non-empty array");
    std::vector<AgentProfile> team;
    bool any_explicit_mva = false;
    for (const auto& aj : agents) {
        AgentProfile a;
        a.id = detail::get_field<int>(aj, "id", "team agent");
        const std::string ctx = "team agent " + std::to_string(a.id);
        a.kappa = detail::get_field<int>(aj, "kappa", ctx);
        a.alpha = detail::get_field<double>(aj, "alpha", ctx);
        a.start = detail::get_field<int>(aj, "start", ctx);
        if (aj.contains("mva")) {
            a.mva = detail::get_field<bool>(aj, "mva", ctx);
            any_explicit_mva = true;
        }
        a.validate();
        team.push_back(a);
    }
    std::sort(team.begin(), team.end(),
              [](const AgentProfile& x, const AgentProfile& y) { return x.id < y.id; });
    for (std::size_t i = 1; i < team.size(); ++i)
        if (team[i].id == team[i - 1].id)
            throw ValidationError("team: duplicate agent id " + std::to_string(team[i].id));
    if (!any_explicit_mva) {
        int min_kappa = 5;
        for (const auto& a : team) min_kappa = std::min(min_kappa, a.kappa);
        for (auto& a : team) a.mva = a.kappa == min_kappa;
    }
    return team;
}

inline nlohmann::json team_to_json(const std::vector<AgentProfile>& team) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : team)
        agents.push_back({{"id", a.id},
                          {"kappa", a.kappa},
                          {"alpha", a.alpha},
                          {"start", a.start},
                          {"mva", a.mva}});
    return {{"agents", agents}};
}

inline std::vector<AgentProfile> load_team(const std::string& path) {
    return team_from_json(detail::parse_json_file(path));
}

inline void save_team(const std::vector<AgentProfile>& team, const std::string& path) {
    detail::write_file(path, team_to_json(team).dump(2) + "\n");
}

// ---- belief ----------------------------------------------------------

// Schema: {capture_prob, entries:[{vertex, prob}]}.
inline BeliefState load_belief(const std::string& path, int n) {
    const auto j = detail::parse_json_file(path);
    const double capture = detail::get_field<double>(j, "capture_prob", "belief");
    const auto entries = detail::get_field<nlohmann::json>(j, "entries", "belief");
    if (!entries.is_array()) throw ValidationError("belief: 'entries' must be an array");
    std::vector<std::pair<int, double>> pairs;
    for (const auto& ej : entries)
        pairs.push_back({detail::get_field<int>(ej, "vertex", "belief entry"),
                         detail::get_field<double>(ej, "prob", "belief entry")});
    return init_belief(n, capture, pairs);
}

inline void save_belief(const BeliefState& b, const std::string& path) {
    nlohmann::json entries = nlohmann::json::array();
    for (int v = 1; v <= b.n(); ++v)
        if (b.at(v) != 0.0) entries.push_back({{"vertex", v}, {"prob", b.at(v)}});
    const nlohmann::json j = {{"capture_prob", b.capture()}, {"entries", entries}};
    detail::write_file(path, j.dump(2) + "\n");
}

// ---- hazard ----------------------------------------------------------

// Accepts a builtin table name or a JSON file {p_loss:[5], nav_failure?}.
inline HazardModel resolve_hazard(const std::string& name_or_path) {
    if (name_or_path == "none" || name_or_path == "paper-formula" || name_or_path == "formula" ||
        name_or_path == "paper-range")
        return HazardModel::builtin(name_or_path);
    const auto j = detail::parse_json_file(name_or_path);
    HazardModel m;
    const auto p = detail::get_field<std::vector<double>>(j, "p_loss", "hazard");
    if (p.size() != 5) throw ValidationError("hazard: 'p_loss' must have 5 entries");
    std::copy(p.begin(), p.end(), m.p_loss.begin());
    if (j.contains("nav_failure"))
        m.nav_failure = detail::get_field<double>(j, "nav_failure", "hazard");
    m.validate();
    return m;
}

inline void save_hazard(const HazardModel& m, const std::string& path) {
    const nlohmann::json j = {{"p_loss", std::vector<double>(m.p_loss.begin(), m.p_loss.end())},
                              {"nav_failure", m.nav_failure}};
    detail::write_file(path, j.dump(2) + "\n");
}

// ---- danger estimates ------------------------------------------------

inline nlohmann::json estimates_to_json(const DangerEstimateMap& map, const EnvironmentGraph& g,
                                        double theta, double image_fraction) {
    nlohmann::json vertices = nlohmann::json::array();
    for (int v = 1; v <= g.n; ++v) {
        const auto& eta = map.at(v);
        vertices.push_back({{"id", v},
                            {"eta", std::vector<double>(eta.begin(), eta.end())},
                            {"z", map.point(v)},
                            {"visited", static_cast<bool>(map.visited[static_cast<std::size_t>(v)])}});
    }
    return {{"theta", theta},
            {"image_fraction", image_fraction},
            {"n", g.n},
            {"bc", bhattacharyya(map, g)},
            {"vertices", vertices}};
}

inline void save_estimates(const DangerEstimateMap& map, const EnvironmentGraph& g, double theta,
                           double image_fraction, const std::string& path) {
    detail::write_file(path, estimates_to_json(map, g, theta, image_fraction).dump(2) + "\n");
}

inline DangerEstimateMap load_estimates(const std::string& path) {
    const auto j = detail::parse_json_file(path);
    const int n = detail::get_field<int>(j, "n", "estimates");
    if (n < 1) throw ValidationError("estimates: n must be >= 1");
    DangerEstimateMap map(n);
    const auto vertices = detail::get_field<nlohmann::json>(j, "vertices", "estimates");
    if (!vertices.is_array() || vertices.size() != static_cast<std::size_t>(n))
        throw ValidationError("estimates: 'vertices' must list all n vertices");
    for (const auto& vj : vertices) {
        const int v = detail::get_field<int>(vj, "id", "estimates vertex");
        if (v < 1 || v > n) throw ValidationError("estimates: vertex id out of range");
        const auto eta = detail::get_field<std::vector<double>>(vj, "eta", "estimates vertex");
        if (eta.size() != 5) throw ValidationError("estimates: eta must have 5 entries");
        std::copy(eta.begin(), eta.end(), map.eta[static_cast<std::size_t>(v)].begin());
        map.visited[static_cast<std::size_t>(v)] =
            detail::get_field<bool>(vj, "visited", "estimates vertex");
    }
    return map;
}

// ---- plan ------------------------------------------------------------

inline nlohmann::json plan_to_json(const JointPlan& plan, const PlannerConfig& config) {
    nlohmann::json agents = nlohmann::json::array();
    for (const auto& a : plan.agents)
        agents.push_back({{"id", a.agent_id}, {"path", a.path}, {"stranded", a.stranded}});
    return {{"mode", to_string(config.mode)},
            {"horizon", config.horizon},
            {"gamma", config.gamma},
            {"objective", plan.objective},
            {"agents", agents}};
}

inline void save_plan(const JointPlan& plan, const PlannerConfig& config, const std::string& path) {
    detail::write_file(path, plan_to_json(plan, config).dump(2) + "\n");
}

// ---- mission result --------------------------------------------------

inline nlohmann::json mission_to_json(const MissionResult& r) {
    nlohmann::json losses = nlohmann::json::array();
    for (const auto& loss : r.losses)
        losses.push_back(
            {{"agent_id", loss.agent_id}, {"step", loss.step}, {"cause", to_string(loss.cause)}});
    nlohmann::json j = {{"outcome", to_string(r.outcome)},
                        {"end_time", r.end_time},
                        {"losses", losses},
                        {"mva_lost", r.mva_lost},
                        {"nmva_lost", r.nmva_lost},
                        {"bc_trace", r.bc_trace}};
    if (r.capture_time.has_value())
        j["capture_time"] = *r.capture_time;
    else
        j["capture_time"] = nullptr;
    if (!r.trace.empty()) {
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& rec : r.trace)
            trace.push_back({{"step", rec.step},
                             {"agent_id", rec.agent_id},
                             {"vertex", rec.vertex},
                             {"stranded", rec.stranded},
                             {"moved", rec.moved},
                             {"eta_at_decision", std::vector<double>(rec.eta_at_decision.begin(),
                                                                     rec.eta_at_decision.end())},
                             {"truth_level", rec.truth_level}});
        j["trace"] = trace;
    }
    return j;
}

inline void save_mission(const MissionResult& r, const std::string& path) {
    detail::write_file(path, mission_to_json(r).dump(2) + "\n");
}

// ---- experiment grid -------------------------------------------------

// Schema: {configs:[{label, instances?, seed?, hazard?}]}; per-entry fields
// default to the harness-level values passed in.
inline std::vector<ExperimentConfig> load_grid(const std::string& path, int default_instances,
                                               std::uint64_t default_seed) {
    const auto j = detail::parse_json_file(path);
    const auto configs = detail::get_field<nlohmann::json>(j, "configs", "grid");
    if (!configs.is_array() || configs.empty())
        throw ValidationError("grid: 'configs' must be a non-empty array");
    std::vector<ExperimentConfig> out;
    for (const auto& cj : configs) {
        const std::string label = detail::get_field<std::string>(cj, "label", "grid config");
        const int instances =
            cj.contains("instances") ? detail::get_field<int>(cj, "instances", label) : default_instances;
        const std::uint64_t seed =
            cj.contains("seed") ? detail::get_field<std::uint64_t>(cj, "seed", label) : default_seed;
        const std::string hazard =
            cj.contains("hazard") ? detail::get_field<std::string>(cj, "hazard", label) : "paper-range";
        auto cfg = ExperimentConfig::from_label(label, instances, seed, hazard);
        if (cj.contains("hazard") && label != "ND") cfg.hazard = resolve_hazard(hazard);
        out.push_back(std::move(cfg));
    }
    return out;
}

// ---- aggregate report ------------------------------------------------

inline std::string report_to_csv(const AggregateReport& report) {
    auto fmt = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", x);
        return std::string(buf);
    };
    std::string text =
        "label,n_instances,success,abort,cutoff,mean_time,time_ci,mean_capture_time,"
        "capture_ci,mva_loss_pct,nmva_loss_pct\n";
    for (const auto& row : report.rows) {
        text += row.label + "," + std::to_string(row.n_instances) + "," + fmt(row.success) + "," +
                fmt(row.abort) + "," + fmt(row.cutoff) + "," + fmt(row.mean_time) + "," +
                fmt(row.time_ci) + "," + fmt(row.mean_capture_time) + "," + fmt(row.capture_ci) +
                "," + fmt(row.mva_loss_pct) + "," + fmt(row.nmva_loss_pct) + "\n";
    }
    return text;
}

inline nlohmann::json report_to_json(const AggregateReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows)
        rows.push_back({{"label", row.label},
                        {"n_instances", row.n_instances},
                        {"success", row.success},
                        {"abort", row.abort},
                        {"cutoff", row.cutoff},
                        {"mean_time", row.mean_time},
                        {"time_ci", row.time_ci},
                        {"mean_capture_time", row.mean_capture_time},
                        {"capture_ci", row.capture_ci},
                        {"mva_loss_pct", row.mva_loss_pct},
                        {"nmva_loss_pct", row.nmva_loss_pct},
                        {"warning", row.warning}});
    return {{"rows", rows}};
}

inline AggregateReport report_from_json(const nlohmann::json& j) {
    AggregateReport report;
    for (const auto& rj : detail::get_field<nlohmann::json>(j, "rows", "report")) {
        ConfigStats row;
        row.label = detail::get_field<std::string>(rj, "label", "report row");
        row.n_instances = detail::get_field<int>(rj, "n_instances", row.label);
        row.success = detail::get_field<double>(rj, "success", row.label);
        row.abort = detail::get_field<double>(rj, "abort", row.label);
        row.cutoff = detail::get_field<double>(rj, "cutoff", row.label);
        row.mean_time = detail::get_field<double>(rj, "mean_time", row.label);
        row.time_ci = detail::get_field<double>(rj, "time_ci", row.label);
        row.mean_capture_time = detail::get_field<double>(rj, "mean_capture_time", row.label);
        row.capture_ci = detail::get_field<double>(rj, "capture_ci", row.label);
        row.mva_loss_pct = detail::get_field<double>(rj, "mva_loss_pct", row.label);
        row.nmva_loss_pct = detail::get_field<double>(rj, "nmva_loss_pct", row.label);
        row.warning = detail::get_field<bool>(rj, "warning", row.label);
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline void write_report(const AggregateReport& report, const std::string& path,
                         const std::string& format) {
    if (format == "csv")
        detail::write_file(path, report_to_csv(report));
    else if (format == "json")
        detail::write_file(path, report_to_json(report).dump(2) + "\n");
    else
        throw ValidationError("unknown report format '" + format + "' (expected csv or json)");
}

inline AggregateReport load_report(const std::string& path) {
    return report_from_json(detail::parse_json_file(path));
}

}  // namespace mespp
