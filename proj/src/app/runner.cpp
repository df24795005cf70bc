#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "csv.hpp"
#include "folddyn/angles.hpp"
#include "folddyn/characteristics.hpp"
#include "folddyn/optics.hpp"
#include "folddyn/singular.hpp"
#include "folddyn/version.hpp"

namespace folddyn::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> header_block(const std::string& kind, const std::string& hash,
                                      const num::SolverConfig& solver) {
    return {
        "folddyn " + kind + " v" + std::string(version),
        "scenario_hash: " + hash,
        "tolerances: rel_tol=" + CsvWriter::format(solver.rel_tol) +
            " abs_tol=" + CsvWriter::format(solver.abs_tol) +
            " event_tol=" + CsvWriter::format(solver.event_tol) +
            " max_step=" + CsvWriter::format(solver.max_step),
    };
}

json state_json(const PolarState& s, double length_scale, double angle_scale) {
    return json{{"r", s.r * length_scale},
                {"phi", s.phi * angle_scale},
                {"x", s.x},
                {"u", s.u * angle_scale}};
}

} // namespace

RunResult run_simulate(const Scenario& s, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const OscillatorParams p = OscillatorParams::nondimensional();
    const std::string hash = scenario_hash(s);
    const double ls = s.length_scale();
    const double ts = s.time_scale();
    const double as = s.degrees ? 180.0 / pi : 1.0;

    const PolarState state0 = s.initial_state_internal();
    dynamics::SimConfig sim = s.sim;
    // t_max is given in scenario units; integration runs internally.
    sim.t_max = s.sim.t_max / ts;
    const dynamics::HybridTrajectory traj = dynamics::simulate(p, state0, sim);

    RunResult res;
    res.trajectory_csv = (fs::path(out_dir) / "trajectory.csv").string();
    res.summary_json = (fs::path(out_dir) / "summary.json").string();

    {
        CsvWriter csv(res.trajectory_csv, header_block("trajectory", hash, s.sim.solver),
                      {"t", "r", "phi", "x", "u", "lambda", "mu", "branch_id"});
        for (const dynamics::TrajectoryArc& arc : traj.arcs) {
            for (const dynamics::Sample& smp : arc.samples) {
                csv.row({smp.t * ts, smp.state.r * ls, smp.state.phi * as, smp.state.x,
                         smp.state.u * as, energy(p, smp.state.r, smp.state.x),
                         angular_momentum(p, smp.state.r, smp.state.x, smp.state.u),
                         static_cast<double>(arc.branch_id)});
            }
        }
    }

    bool any_halt = false;
    double max_lambda_drift = 0.0, max_mu_drift = 0.0;
    json arcs = json::array();
    for (const dynamics::TrajectoryArc& arc : traj.arcs) {
        arcs.push_back(json{{"branch_id", arc.branch_id},
                            {"parent_id", arc.parent_id},
                            {"sheet", arc.sheet},
                            {"termination", dynamics::to_string(arc.termination)},
                            {"t_begin", arc.t_begin * ts},
                            {"t_end", arc.t_end * ts},
                            {"n_samples", arc.samples.size()},
                            {"lambda", arc.lambda},
                            {"mu", arc.mu},
                            {"lambda_drift", arc.lambda_drift},
                            {"mu_drift", arc.mu_drift}});
        max_lambda_drift = std::max(max_lambda_drift, arc.lambda_drift);
        max_mu_drift = std::max(max_mu_drift, arc.mu_drift);
        if (arc.termination != dynamics::Termination::TimeLimit &&
            arc.termination != dynamics::Termination::ImpactS1)
            any_halt = true;
    }

    json jumps = json::array();
    for (std::size_t i = 0; i < traj.jumps.size(); ++i) {
        const dynamics::JumpEvent& ev = traj.jumps[i];
        json deps = json::array();
        for (const PolarState& d : ev.departures) deps.push_back(state_json(d, ls, as));
        jumps.push_back(json{{"index", i},
                             {"t", ev.t * ts},
                             {"arrival_arc", ev.arrival_arc},
                             {"arrival", state_json(ev.arrival, ls, as)},
                             {"departures", deps},
                             {"departure_sheets", ev.departure_sheets},
                             {"delta_phi_raw", ev.jump.delta_phi * as},
                             {"delta_phi_wrapped", wrap_angle(ev.jump.delta_phi) * as},
                             {"x_star", ev.jump.x_star},
                             {"a", ev.jump.a},
                             {"branch_sign", ev.jump.branch_sign},
                             {"tangent", ev.jump.tangent}});
    }

    json diags = json::array();
    for (const dynamics::BranchError& e : traj.errors)
        diags.push_back(json{{"branch_id", e.branch_id}, {"message", e.message}});

    res.exit_code = !traj.errors.empty() ? exit_numerical : (any_halt ? exit_halt : exit_ok);

    const json summary{{"artifact_version", version},
                       {"scenario_hash", hash},
                       {"scenario_name", s.name},
                       {"exit_status", res.exit_code},
                       {"effective_config", canonical_dump(s)},
                       {"initial_state", state_json(state0, ls, as)},
                       {"conservation",
                        json{{"max_lambda_drift", max_lambda_drift},
                             {"max_mu_drift", max_mu_drift}}},
                       {"arcs", arcs},
                       {"jumps", jumps},
                       {"diagnostics", diags},
                       {"jump_count", traj.jump_count},
                       {"timing", json{{"wall_seconds", traj.wall_seconds}}}};
    write_file(res.summary_json, summary.dump(2) + "\n");

    if (s.plot_stubs) {
        write_file((fs::path(out_dir) / "plot_trajectory.py").string(),
                   "# companion stub: plots trajectory.csv emitted alongside\n"
                   "import csv, math, sys\n"
                   "rows = [r for r in csv.reader(open('trajectory.csv'))\n"
                   "        if r and not r[0].startswith('#')][1:]\n"
                   "t, r, phi = ([float(r[i]) for r in rows] for i in (0, 1, 2))\n"
                   "try:\n"
                   "    import matplotlib.pyplot as plt\n"
                   "except ImportError:\n"
                   "    sys.exit('matplotlib not available; the CSV is the artifact')\n"
                   "plt.polar(phi, r, '.')\n"
                   "plt.savefig('trajectory.png', dpi=150)\n");
    }
    return res;
}

int run_batch(const std::vector<Scenario>& scenarios, const std::string& out_root) {
    unsigned cap = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("FOLD_DYNAMICS_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) cap = static_cast<unsigned>(n);
    }
    cap = std::max(1u, std::min<unsigned>(cap, static_cast<unsigned>(scenarios.size())));

    std::vector<int> codes(scenarios.size(), exit_ok);
    std::mutex mtx;
    std::size_t next = 0;
    auto worker = [&]() {
        while (true) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (next >= scenarios.size()) return;
                i = next++;
            }
            const Scenario& s = scenarios[i];
            const std::string dir =
                s.name.empty() ? out_root : (fs::path(out_root) / s.name).string();
            try {
                codes[i] = run_simulate(s, dir).exit_code;
            } catch (const ConfigError&) {
                codes[i] = exit_config;
            } catch (const std::exception&) {
                codes[i] = exit_numerical;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < cap; ++k) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    return *std::max_element(codes.begin(), codes.end());
}

int emit_characteristics(const OscillatorParams& p, const std::vector<double>& a_values,
                         int samples, const std::string& out_dir, bool degrees) {
    fs::create_directories(out_dir);
    const double as = degrees ? 180.0 / pi : 1.0;
    const std::string hash = "none";
    num::SolverConfig solver;

    {
        CsvWriter csv((fs::path(out_dir) / "characteristics.csv").string(),
                      header_block("characteristics", hash, solver),
                      {"a", "branch", "x", "u", "degenerate"});
        for (const double a : a_values) {
            if (a == 0.0) {
                // The invariant value 0 is carried by the two lines u = 0, pi.
                for (int i = 0; i <= samples; ++i) {
                    const double x = p.x_max() * 0.98 * i / samples;
                    csv.row({0.0, 0.0, x, 0.0, 1.0});
                }
                for (int i = 0; i <= samples; ++i) {
                    const double x = p.x_max() * 0.98 * i / samples;
                    csv.row({0.0, 1.0, x, pi * as, 1.0});
                }
                continue;
            }
            const characteristics::CharacteristicArc arc = characteristics::make_arc(
                p, a, std::min(0.98 * p.x_max() + 0.02 * characteristics::x_star(p, a), 0.999));
            for (int branch = 0; branch < 2; ++branch) {
                for (int i = 0; i <= samples; ++i) {
                    // Cluster points toward the turning abscissa.
                    const double w = static_cast<double>(i) / samples;
                    const double x = arc.x_min + (arc.x_max - arc.x_min) * w * w;
                    const double sin_u =
                        std::clamp(a / characteristics::q_of_x(p, x), -1.0, 1.0);
                    double u = std::asin(sin_u);
                    if (branch == 1) u = (sin_u >= 0.0 ? pi : -pi) - u;
                    csv.row({a, static_cast<double>(branch), x, u * as, 0.0});
                }
            }
        }
    }
    {
        CsvWriter csv((fs::path(out_dir) / "q_profile.csv").string(),
                      header_block("q_profile", hash, solver), {"x", "q", "q_prime", "r1"});
        for (int i = 1; i < samples; ++i) {
            const double x = 0.98 * p.x_max() * i / samples;
            csv.row({x, characteristics::q_of_x(p, x), characteristics::q_prime(p, x),
                     singular::r1_of_x(p, x)});
        }
    }
    return exit_ok;
}

int emit_levelsets(const OscillatorParams& p, const std::vector<double>& lambdas, int samples,
                   const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string hash = "none";
    num::SolverConfig solver;

    {
        CsvWriter csv((fs::path(out_dir) / "singular_curves.csv").string(),
                      header_block("singular_curves", hash, solver), {"curve", "x", "r"});
        for (int i = 0; i <= samples; ++i) {
            const double x = 0.98 * p.x_max() * i / samples;
            csv.row({1.0, x, singular::r1_of_x(p, x)});
        }
        for (int i = 0; i <= samples; ++i) {
            const double x = 0.98 * p.x_max() * i / samples;
            csv.row({2.0, x, p.r0 * std::pow(1.0 - x, -0.25)});
        }
    }
    {
        CsvWriter csv((fs::path(out_dir) / "level_curves.csv").string(),
                      header_block("level_curves", hash, solver), {"lambda", "x", "r"});
        for (const double lam : lambdas) {
            const double xmax = dynamics::level_x_max(p, lam);
            for (int i = 0; i <= samples; ++i) {
                const double x = xmax * i / samples;
                csv.row({lam, x, dynamics::r_en(p, std::min(x, xmax), lam)});
            }
        }
    }
    json rows = json::array();
    for (const double lam : lambdas) {
        const dynamics::LevelTopology topo = dynamics::level_topology(p, lam);
        json row{{"lambda", lam},
                 {"components", topo.components},
                 {"degenerate_contact", topo.degenerate_contact}};
        row["x1"] = topo.x1 ? json(*topo.x1) : json();
        row["x2"] = topo.x2 ? json(*topo.x2) : json();
        row["x_c"] = topo.x_c ? json(*topo.x_c) : json();
        rows.push_back(row);
    }
    const json table{{"artifact_version", version}, {"topology", rows}};
    write_file((fs::path(out_dir) / "topology.json").string(), table.dump(2) + "\n");
    return exit_ok;
}

std::string jump_report(const OscillatorParams& p, double x_bar, double u_bar, bool degrees,
                        int* exit_code) {
    const double as = degrees ? 180.0 / pi : 1.0;
    json rep{{"artifact_version", version}, {"x_bar", x_bar}, {"u_bar", u_bar * as}};
    *exit_code = exit_ok;
    try {
        const auto cls = singular::classify_inout(p, x_bar, u_bar);
        rep["class"] = cls == singular::InOut::InPoint
                           ? "InPoint"
                           : (cls == singular::InOut::OutPoint ? "OutPoint" : "Tangent");
        const auto sol = characteristics::decisive_partner(p, x_bar, u_bar, 0.0);
        if (!sol) {
            rep["partner"] = json();
            rep["note"] = "arrival classifies as an in-point; no decisive continuation";
        } else {
            rep["partner"] = json{{"x", sol->x_bar}, {"u", sol->u_tilde * as}};
            rep["delta_phi_raw"] = sol->delta_phi * as;
            rep["delta_phi_wrapped"] = wrap_angle(sol->delta_phi) * as;
            rep["x_star"] = sol->x_star;
            rep["a"] = sol->a;
            rep["branch_sign"] = sol->branch_sign;
            rep["tangent"] = sol->tangent;
            if (!sol->tangent) {
                const double ode = characteristics::delta_phi_via_flow(p, x_bar, u_bar);
                rep["quadrature_vs_flow_residual"] = std::abs(ode - sol->delta_phi);
            } else {
                rep["quadrature_vs_flow_residual"] = 0.0;
            }
        }
    } catch (const DegenerateRadialError& e) {
        rep["error"] = std::string("degenerate-radial: ") + e.what();
        *exit_code = exit_numerical;
    }
    return rep.dump(2) + "\n";
}

int emit_optics(double n_plus, double n_minus, const std::vector<double>& phis,
                const std::string& out_dir, bool degrees) {
    fs::create_directories(out_dir);
    const optics::MediumPair medium(n_plus, n_minus);
    const double as = degrees ? 180.0 / pi : 1.0;
    num::SolverConfig solver;
    CsvWriter csv((fs::path(out_dir) / "optics.csv").string(),
                  header_block("optics", "none", solver),
                  {"phi", "psi_plus", "psi_minus", "snell_residual"});
    for (const double phi : phis) {
        optics::RayState arrival;
        arrival.q = {0.0, 0.0, 0.0};
        arrival.p = {std::sin(phi), 0.0, std::cos(phi)};
        const optics::ImpactOutcome out = optics::impact(medium, arrival);
        if (out.refracted) {
            const double sp = std::sin(out.phi), sm = std::sin(*out.psi_minus);
            // Ratio form where defined; at normal incidence both sines vanish.
            const double residual =
                sm > 0.0 ? std::abs(sp / sm - medium.n_bar()) : std::abs(sp);
            csv.row_raw({CsvWriter::format(out.phi * as), CsvWriter::format(out.psi_plus * as),
                         CsvWriter::format(*out.psi_minus * as), CsvWriter::format(residual)});
        } else {
            csv.row_raw({CsvWriter::format(out.phi * as), CsvWriter::format(out.psi_plus * as),
                         "TOTAL", ""});
        }
    }
    return exit_ok;
}

} // namespace folddyn::app
