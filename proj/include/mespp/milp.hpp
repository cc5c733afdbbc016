#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mespp/common.hpp"
#include "mespp/planner.hpp"

namespace mespp {

struct MilpVariable {
    std::string name;
    bool binary = false;
    double lower = 0.0;
    double upper = 1.0;
};

struct LinearTerm {
    double coeff = 0.0;
    int var = -1;  // index into MilpModel::variables
};

struct LinearConstraint {
    std::string name;
    std::vector<LinearTerm> terms;
    char sense = '<';  // '<' means <=, '=' equality, '>' means >=
    double rhs = 0.0;
};

struct MilpModel {
    std::vector<MilpVariable> variables;
    std::vector<LinearTerm> objective;  // maximized
    std::vector<LinearConstraint> constraints;
    std::unordered_map<std::string, int> index;

    int add_variable(const std::string& name, bool binary, double lower = 0.0,
                     double upper = 1.0) {
        const int id = static_cast<int>(variables.size());
        variables.push_back({name, binary, lower, upper});
        if (!index.emplace(name, id).second)
            throw ValidationError("duplicate model variable '" + name + "'");
        return id;
    }

    int var(const std::string& name) const {
        const auto it = index.find(name);
        if (it == index.end()) throw ValidationError("unknown model variable '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline std::string var_x(int agent_id, int t, int v) {
    return "x_" + std::to_string(agent_id) + "_" + std::to_string(t) + "_" + std::to_string(v);
}
inline std::string var_beta(int t, int v) {
    return "beta_" + std::to_string(t) + "_" + std::to_string(v);
}
inline std::string var_psi(int t, int v) {
    return "psi_" + std::to_string(t) + "_" + std::to_string(v);
}

}  // namespace detail

// Mixed-integer formulation of the receding-horizon search problem. Active
// agents own binary placement variables; teammates with already-fixed paths
// enter the capture constraints as occupancy constants. Danger exclusions
// clamp placement variables to zero through their bounds.
inline MilpModel build_milp(const PlanProblem& problem,
                            const std::vector<std::vector<int>>& fixed_plans = {}) {
    problem.validate();
    const auto& g = *problem.graph;
    const int h = problem.config.horizon;
    const int n = g.n;

    std::vector<std::vector<char>> masks;
    for (const auto& agent : problem.agents) {
        masks.push_back(feasible_mask(*problem.estimates, agent, problem.config.mode));
        if (!masks.back()[static_cast<std::size_t>(agent.start)])
            throw StrandedAgentError("agent " + std::to_string(agent.id) +
                                     " stranded at vertex " + std::to_string(agent.start));
    }

    std::vector<std::vector<char>> fixed_occ(static_cast<std::size_t>(h) + 1,
                                             std::vector<char>(static_cast<std::size_t>(n) + 1, 0));
    for (const auto& path : fixed_plans) {
        if (path.size() != static_cast<std::size_t>(h) + 1)
            throw ValidationError("fixed plan length does not match the horizon");
        for (int t = 0; t <= h; ++t)
            fixed_occ[static_cast<std::size_t>(t)][static_cast<std::size_t>(path[static_cast<std::size_t>(t)])] = 1;
    }

    MilpModel model;
    for (const auto& agent : problem.agents)
        for (int t = 0; t <= h; ++t)
            for (int v = 1; v <= n; ++v) model.add_variable(detail::var_x(agent.id, t, v), true);
    for (int t = 0; t <= h; ++t)
        for (int v = 1; v <= n; ++v) model.add_variable(detail::var_beta(t, v), false);
    for (int t = 1; t <= h; ++t)
        for (int v = 1; v <= n; ++v) model.add_variable(detail::var_psi(t, v), false);

    // placement: exactly one vertex per agent and step
    for (const auto& agent : problem.agents)
        for (int t = 0; t <= h; ++t) {
            LinearConstraint c;
            c.name = "place_" + std::to_string(agent.id) + "_" + std::to_string(t);
            c.sense = '=';
            c.rhs = 1.0;
            for (int v = 1; v <= n; ++v) c.terms.push_back({1.0, model.var(detail::var_x(agent.id, t, v))});
            model.constraints.push_back(std::move(c));
        }

    // motion: a step may only enter a vertex from itself or a neighbor
    for (const auto& agent : problem.agents)
        for (int t = 0; t < h; ++t)
            for (int v = 1; v <= n; ++v) {
                LinearConstraint c;
                c.name = "move_" + std::to_string(agent.id) + "_" + std::to_string(t + 1) + "_" +
                         std::to_string(v);
                c.sense = '<';
                c.rhs = 0.0;
                c.terms.push_back({1.0, model.var(detail::var_x(agent.id, t + 1, v))});
                for (int u : g.moves_from(v))
                    c.terms.push_back({-1.0, model.var(detail::var_x(agent.id, t, u))});
                model.constraints.push_back(std::move(c));
            }

    // start: placement at t=0 pinned to the agent's current vertex
    for (const auto& agent : problem.agents) {
        LinearConstraint c;
        c.name = "start_" + std::to_string(agent.id);
        c.sense = '=';
        c.rhs = 1.0;
        c.terms.push_back({1.0, model.var(detail::var_x(agent.id, 0, agent.start))});
        model.constraints.push_back(std::move(c));
    }

    // initial residual belief
    for (int v = 1; v <= n; ++v) {
        LinearConstraint c;
        c.name = "init_" + std::to_string(v);
        c.sense = '=';
        c.rhs = problem.belief.b[static_cast<std::size_t>(v)];
        c.terms.push_back({1.0, model.var(detail::var_beta(0, v))});
        model.constraints.push_back(std::move(c));
    }

    // capture flow: psi bounded by arriving mass and by occupancy; residual
    // belief is what the capture leaves behind
    const auto& M = *problem.motion;
    for (int t = 1; t <= h; ++t)
        for (int v = 1; v <= n; ++v) {
            const int psi = model.var(detail::var_psi(t, v));

            LinearConstraint mass;
            mass.name = "cap_mass_" + std::to_string(t) + "_" + std::to_string(v);
            mass.sense = '<';
            mass.rhs = 0.0;
            mass.terms.push_back({1.0, psi});
            for (int u = 1; u <= n; ++u) {
                const double m = M.is_identity ? (u == v ? 1.0 : 0.0) : M.prob(u, v);
                if (m != 0.0) mass.terms.push_back({-m, model.var(detail::var_beta(t - 1, u))});
            }
            model.constraints.push_back(std::move(mass));

            LinearConstraint occ;
            occ.name = "cap_occ_" + std::to_string(t) + "_" + std::to_string(v);
            occ.sense = '<';
            occ.rhs = fixed_occ[static_cast<std::size_t>(t)][static_cast<std::size_t>(v)] ? 1.0 : 0.0;
            occ.terms.push_back({1.0, psi});
            for (const auto& agent : problem.agents)
                occ.terms.push_back({-1.0, model.var(detail::var_x(agent.id, t, v))});
            model.constraints.push_back(std::move(occ));

            LinearConstraint flow;
            flow.name = "flow_" + std::to_string(t) + "_" + std::to_string(v);
            flow.sense = '=';
            flow.rhs = 0.0;
            flow.terms.push_back({1.0, model.var(detail::var_beta(t, v))});
            flow.terms.push_back({1.0, psi});
            for (int u = 1; u <= n; ++u) {
                const double m = M.is_identity ? (u == v ? 1.0 : 0.0) : M.prob(u, v);
                if (m != 0.0) flow.terms.push_back({-m, model.var(detail::var_beta(t - 1, u))});
            }
            model.constraints.push_back(std::move(flow));
        }

    // danger exclusions as variable bounds
    for (std::size_t a = 0; a < problem.agents.size(); ++a)
        for (int v = 1; v <= n; ++v)
            if (!masks[a][static_cast<std::size_t>(v)])
                for (int t = 0; t <= h; ++t)
                    model.variables[static_cast<std::size_t>(
                                        model.var(detail::var_x(problem.agents[a].id, t, v)))]
                        .upper = 0.0;

    double gpow = 1.0;
    for (int t = 1; t <= h; ++t) {
        gpow *= problem.config.gamma;
        for (int v = 1; v <= n; ++v)
            model.objective.push_back({gpow, model.var(detail::var_psi(t, v))});
    }
    return model;
}

struct AssignmentCheck {
    bool feasible = true;
    std::string violation;  // first violated constraint or bound, if any
    double objective = 0.0;
};

// Plugs a complete variable assignment into the model; used to cross-check
// solver output against the formulation.
inline AssignmentCheck evaluate_assignment(const MilpModel& model,
                                           const std::unordered_map<std::string, double>& values,
                                           double tol = 1e-9) {
    AssignmentCheck out;
    std::vector<double> x(model.variables.size(), 0.0);
    for (std::size_t i = 0; i < model.variables.size(); ++i) {
        const auto& var = model.variables[i];
        const auto it = values.find(var.name);
        if (it == values.end()) throw ValidationError("assignment misses variable '" + var.name + "'");
        x[i] = it->second;
        if (x[i] < var.lower - tol || x[i] > var.upper + tol ||
            (var.binary && std::abs(x[i] - std::round(x[i])) > tol)) {
            out.feasible = false;
            if (out.violation.empty()) out.violation = "bound on " + var.name;
        }
    }
    for (const auto& c : model.constraints) {
        double lhs = 0.0;
        for (const auto& term : c.terms) lhs += term.coeff * x[static_cast<std::size_t>(term.var)];
        const bool ok = c.sense == '<'   ? lhs <= c.rhs + tol
                        : c.sense == '>' ? lhs >= c.rhs - tol
                                         : std::abs(lhs - c.rhs) <= tol;
        if (!ok) {
            out.feasible = false;
            if (out.violation.empty()) out.violation = c.name;
        }
    }
    for (const auto& term : model.objective)
        out.objective += term.coeff * x[static_cast<std::size_t>(term.var)];
    return out;
}

namespace detail {

inline std::string format_coeff(double value) { return format_double(value); }

inline void append_terms(std::string& line, const std::vector<LinearTerm>& terms,
                         const std::vector<MilpVariable>& vars) {
    bool first = true;
    for (const auto& term : terms) {
        const double c = term.coeff;
        if (first) {
            if (c < 0.0) line += "- ";
            first = false;
        } else {
            line += c < 0.0 ? " - " : " + ";
        }
        const double mag = std::abs(c);
        if (mag != 1.0) {
            line += format_coeff(mag);
            line += ' ';
        }
        line += vars[static_cast<std::size_t>(term.var)].name;
    }
    if (first) line += "0";
}

}  // namespace detail

// Writes the model in LP text format (Maximize / Subject To / Bounds /
// Binaries / End), readable by standard MILP solvers.
inline void export_lp(const MilpModel& model, const std::string& path) {
    std::string text;
    text += "Maximize\n obj: ";
    detail::append_terms(text, model.objective, model.variables);
    text += "\nSubject To\n";
    for (const auto& c : model.constraints) {
        text += ' ';
        text += c.name;
        text += ": ";
        detail::append_terms(text, c.terms, model.variables);
        text += c.sense == '<' ? " <= " : (c.sense == '>' ? " >= " : " = ");
        text += detail::format_coeff(c.rhs);
        text += '\n';
    }
    text += "Bounds\n";
    for (const auto& var : model.variables) {
        text += ' ';
        if (var.lower == var.upper) {
            text += var.name + " = " + detail::format_coeff(var.lower);
        } else {
            text += detail::format_coeff(var.lower) + " <= " + var.name + " <= " +
                    detail::format_coeff(var.upper);
        }
        text += '\n';
    }
    text += "Binaries\n";
    for (const auto& var : model.variables)
        if (var.binary) {
            text += ' ';
            text += var.name;
            text += '\n';
        }
    text += "End\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mespp
