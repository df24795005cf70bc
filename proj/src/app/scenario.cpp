#include "scenario.hpp"

#include <cinttypes>
#include <cstdio>

namespace folddyn::app {

OscillatorParams Scenario::physical_params() const {
    if (nondimensional) return OscillatorParams::nondimensional();
    return OscillatorParams(m, c, r0);
}

PolarState Scenario::initial_state_internal() const {
    const OscillatorParams p = OscillatorParams::nondimensional();
    if (initial.kind == InitialCondition::Kind::Polar) {
        const double ls = length_scale();
        return PolarState(initial.r / ls, initial.phi, initial.x, initial.u);
    }
    if (!(initial.lambda >= 1.0))
        throw ConfigError("initial condition: lambda must be >= 1");
    return dynamics::state_on_level(p, initial.lambda, initial.mu, initial.component,
                                    initial.u_sign);
}

namespace {

dynamics::BranchPolicy parse_policy(const std::string& s) {
    if (s == "both") return dynamics::BranchPolicy::FollowBoth;
    if (s == "sheet1") return dynamics::BranchPolicy::FollowSheet1;
    if (s == "sheet2") return dynamics::BranchPolicy::FollowSheet2;
    throw ConfigError("branch_policy must be one of both|sheet1|sheet2, got: " + s);
}

const char* policy_name(dynamics::BranchPolicy p) {
    switch (p) {
        case dynamics::BranchPolicy::FollowBoth: return "both";
        case dynamics::BranchPolicy::FollowSheet1: return "sheet1";
        case dynamics::BranchPolicy::FollowSheet2: return "sheet2";
    }
    return "?";
}

} // namespace

Scenario scenario_from_config(const Config& cfg, const std::string& table) {
    Scenario s;
    if (table != "scenario") s.name = table.substr(std::string("scenario.").size());

    s.nondimensional = cfg.get_bool(table, "nondimensional", true);
    s.m = cfg.get_double(table, "m", 1.0);
    s.c = cfg.get_double(table, "c", 1.0);
    s.r0 = cfg.get_double(table, "r0", 1.0);

    const bool has_polar = cfg.has(table, "r") || cfg.has(table, "x") || cfg.has(table, "u") ||
                           cfg.has(table, "phi");
    const bool has_level = cfg.has(table, "lambda") || cfg.has(table, "mu") ||
                           cfg.has(table, "component") || cfg.has(table, "u_sign");
    if (has_polar && has_level)
        throw ConfigError("scenario '" + table +
                          "': give either a polar initial state (r, phi, x, u) or a level "
                          "selection (lambda, mu, component, u_sign), not both");
    if (has_polar) {
        s.initial.kind = InitialCondition::Kind::Polar;
        s.initial.r = cfg.get_double(table, "r", s.initial.r);
        s.initial.phi = cfg.get_double(table, "phi", s.initial.phi);
        s.initial.x = cfg.get_double(table, "x", s.initial.x);
        s.initial.u = cfg.get_double(table, "u", s.initial.u);
    } else {
        s.initial.kind = InitialCondition::Kind::Level;
        s.initial.lambda = cfg.get_double(table, "lambda", s.initial.lambda);
        s.initial.mu = cfg.get_double(table, "mu", s.initial.mu);
        s.initial.component = static_cast<int>(cfg.get_int(table, "component", 1));
        s.initial.u_sign = static_cast<int>(cfg.get_int(table, "u_sign", +1));
    }

    s.sim.t_max = cfg.get_double(table, "t_max", s.sim.t_max);
    s.sim.max_jumps = static_cast<int>(cfg.get_int(table, "max_jumps", s.sim.max_jumps));
    s.sim.branch_policy = parse_policy(cfg.get_string(table, "branch_policy", "both"));
    s.sim.branch_budget =
        static_cast<int>(cfg.get_int(table, "branch_budget", s.sim.branch_budget));
    s.sim.eps_restart = cfg.get_double(table, "eps_restart", s.sim.eps_restart);
    s.sim.radial_limit_mode = cfg.get_bool(table, "radial_limit_mode", false);

    // Shared [tolerances] table, overridable per scenario.
    auto tol = [&](const char* key, double fallback) {
        return cfg.get_double(table, key, cfg.get_double("tolerances", key, fallback));
    };
    s.sim.solver.rel_tol = tol("rel_tol", s.sim.solver.rel_tol);
    s.sim.solver.abs_tol = tol("abs_tol", s.sim.solver.abs_tol);
    s.sim.solver.max_step = tol("max_step", s.sim.solver.max_step);
    s.sim.solver.event_tol = tol("event_tol", s.sim.solver.event_tol);
    s.sim.solver.max_steps = cfg.get_int(table, "max_steps",
                                         cfg.get_int("tolerances", "max_steps",
                                                     s.sim.solver.max_steps));
    s.sim.halt_tol = tol("halt_tol", s.sim.halt_tol);
    s.sim.tol_radial = tol("tol_radial", s.sim.tol_radial);

    s.out_dir = cfg.get_string("output", "dir", s.out_dir);
    s.degrees = cfg.get_bool(table, "degrees", cfg.get_bool("output", "degrees", s.degrees));
    s.plot_stubs = cfg.get_bool("output", "plot_stubs", s.plot_stubs);
    return s;
}

std::vector<Scenario> scenarios_from_config(const Config& cfg) {
    std::vector<Scenario> out;
    const std::vector<std::string> named = cfg.tables_with_prefix("scenario");
    if (cfg.has_table("scenario") && !named.empty())
        throw ConfigError("use either a single [scenario] or named [scenario.*] tables");
    if (!named.empty()) {
        for (const std::string& t : named) out.push_back(scenario_from_config(cfg, t));
    } else {
        out.push_back(scenario_from_config(cfg, "scenario"));
    }
    const std::vector<std::string> unknown = cfg.unconsumed_keys();
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const std::string& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

namespace {

// Physics-identifying part of the configuration: everything that changes
// the computed numbers. Output location and rendering options live in the
// [output] block appended by canonical_dump and are excluded from the hash.
std::string canonical_core(const Scenario& s) {
    std::string t = s.name.empty() ? "scenario" : "scenario." + s.name;
    std::string out;
    out += "[" + t + "]\n";
    out += "nondimensional = " + std::string(s.nondimensional ? "true" : "false") + "\n";
    if (!s.nondimensional) {
        out += "m = " + fmt(s.m) + "\n";
        out += "c = " + fmt(s.c) + "\n";
        out += "r0 = " + fmt(s.r0) + "\n";
    }
    if (s.initial.kind == InitialCondition::Kind::Polar) {
        out += "r = " + fmt(s.initial.r) + "\n";
        out += "phi = " + fmt(s.initial.phi) + "\n";
        out += "x = " + fmt(s.initial.x) + "\n";
        out += "u = " + fmt(s.initial.u) + "\n";
    } else {
        out += "lambda = " + fmt(s.initial.lambda) + "\n";
        out += "mu = " + fmt(s.initial.mu) + "\n";
        out += "component = " + std::to_string(s.initial.component) + "\n";
        out += "u_sign = " + std::to_string(s.initial.u_sign) + "\n";
    }
    out += "t_max = " + fmt(s.sim.t_max) + "\n";
    out += "max_jumps = " + std::to_string(s.sim.max_jumps) + "\n";
    out += "branch_policy = " + std::string(policy_name(s.sim.branch_policy)) + "\n";
    out += "branch_budget = " + std::to_string(s.sim.branch_budget) + "\n";
    out += "eps_restart = " + fmt(s.sim.eps_restart) + "\n";
    out += "radial_limit_mode = " + std::string(s.sim.radial_limit_mode ? "true" : "false") +
           "\n";
    // Angle units change the emitted bytes, so they are part of the identity.
    out += "degrees = " + std::string(s.degrees ? "true" : "false") + "\n";
    out += "\n[tolerances]\n";
    out += "rel_tol = " + fmt(s.sim.solver.rel_tol) + "\n";
    out += "abs_tol = " + fmt(s.sim.solver.abs_tol) + "\n";
    out += "max_step = " + fmt(s.sim.solver.max_step) + "\n";
    out += "event_tol = " + fmt(s.sim.solver.event_tol) + "\n";
    out += "max_steps = " + std::to_string(s.sim.solver.max_steps) + "\n";
    out += "halt_tol = " + fmt(s.sim.halt_tol) + "\n";
    out += "tol_radial = " + fmt(s.sim.tol_radial) + "\n";
    return out;
}

} // namespace

std::string canonical_dump(const Scenario& s) {
    std::string out = canonical_core(s);
    out += "\n[output]\n";
    out += "dir = \"" + s.out_dir + "\"\n";
    out += "plot_stubs = " + std::string(s.plot_stubs ? "true" : "false") + "\n";
    return out;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char ch : data) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    return h;
}

std::string scenario_hash(const Scenario& s) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(canonical_core(s)));
    return buf;
}

} // namespace folddyn::app
