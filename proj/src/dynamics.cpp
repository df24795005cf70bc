#include "folddyn/dynamics.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>

#include "folddyn/singular.hpp"

namespace folddyn::dynamics {

const char* to_string(Termination t) {
    switch (t) {
        case Termination::TimeLimit: return "TimeLimit";
        case Termination::ImpactS1: return "ImpactS1";
        case Termination::NearS2: return "NearS2";
        case Termination::NearGamma: return "NearGamma";
        case Termination::NearLightSpeed: return "NearLightSpeed";
        case Termination::ChartSingular: return "ChartSingular";
    }
    return "?";
}

ElRates el_rhs(const OscillatorParams& p, double r, double x, double u) {
    if (!(x > 0.0) || !(r > 0.0))
        throw DomainError("el_rhs: requires r > 0 and x > 0");
    const DerivativeBundle b = derivatives(p, r, x);
    const double tol = singular::tol_locus_scale * p.mc2();
    if (std::abs(b.E_x) <= tol || std::abs(b.L_x) <= tol)
        throw SingularLocusError("el_rhs: point lies on the singular surface");
    const double sx = std::sqrt(x);
    const double cu = std::cos(u), su = std::sin(u);
    const double dr = p.c * sx * cu;
    const double dx = -p.c * (b.E_r / b.E_x) * sx * cu;
    const double du = -(p.c * su) / (2.0 * r * sx * b.L_x) * (2.0 * x * b.L_x + r * b.L_r);
    return ElRates{dr, dx, du};
}

double phi_rate(const OscillatorParams& p, double r, double x, double u) {
    if (!(r > 0.0)) throw DomainError("phi_rate: requires r > 0");
    return p.c * std::sqrt(std::max(x, 0.0)) / r * std::sin(u);
}

RescaledRates rescaled_rhs(const OscillatorParams& p, double r, double x, double u) {
    const DerivativeBundle b = derivatives(p, r, x);
    const double sx = std::sqrt(std::max(x, 0.0));
    const double cu = std::cos(u), su = std::sin(u);
    const double dr = b.E_x * p.c * sx * cu;
    const double dx = -p.c * b.E_r * sx * cu; // the 1/E_x factor cancels here
    const double du =
        -b.E_x * (p.c * su) / (2.0 * r * sx * b.L_x) * (2.0 * x * b.L_x + r * b.L_r);
    return RescaledRates{dr, dx, du, b.E_x};
}

namespace {

double lambda_of(const OscillatorParams& p, double r, double x) {
    return energy(p, r, x) / p.mc2();
}

double mu_of(const OscillatorParams& p, double r, double x, double u) {
    return angular_momentum(p, r, x, u) / (p.m * p.c * p.r0);
}

// Fictive-time state layout: y = (r, x, u, phi, t). Stage evaluations may
// probe slightly past the chart floors before an event halts the arc, so
// the internal field clamps instead of throwing; the public el_rhs /
// rescaled_rhs contracts stay strict.
num::Rhs make_fictive_rhs(const OscillatorParams& p, double sigma) {
    return [&p, sigma](double, std::span<const double> y, std::span<double> dy) {
        const double r = std::max(y[0], 1e-30);
        const double x = std::clamp(y[1], 1e-30, 1.0 - 1e-16);
        const double u = y[2];
        const DerivativeBundle b = derivatives(p, r, x);
        const double sx = std::sqrt(x);
        const double cu = std::cos(u), su = std::sin(u);
        dy[0] = sigma * b.E_x * p.c * sx * cu;
        dy[1] = -sigma * p.c * b.E_r * sx * cu;
        dy[2] = -sigma * b.E_x * (p.c * su) / (2.0 * r * sx * b.L_x) *
                (2.0 * x * b.L_x + r * b.L_r);
        dy[3] = sigma * b.E_x * p.c * sx / r * su;
        dy[4] = sigma * b.E_x;
    };
}

PolarState state_from_raw(std::span<const double> y) {
    return PolarState(y[0], y[3], std::clamp(y[1], 0.0, 1.0 - 1e-16), y[2]);
}

enum EventIndex : std::size_t {
    ev_impact = 0,
    ev_time,
    ev_light,
    ev_gamma,
    ev_x_floor,
    ev_r_floor,
    ev_s2,
};

} // namespace

TrajectoryArc integrate_arc(const OscillatorParams& p, const PolarState& state0, double t0,
                            const SimConfig& cfg) {
    if (!(state0.x > cfg.x_floor) || !(state0.r > cfg.r_floor * p.r0))
        throw DomainError("integrate_arc: start state below the chart floors");
    if (t0 >= cfg.t_max) {
        TrajectoryArc arc;
        arc.termination = Termination::TimeLimit;
        arc.t_begin = arc.t_end = t0;
        arc.lambda = lambda_of(p, state0.r, state0.x);
        arc.mu = mu_of(p, state0.r, state0.x, state0.u);
        arc.samples.push_back(Sample{t0, state0});
        return arc;
    }
    const DerivativeBundle b0 = derivatives(p, state0.r, state0.x);
    const double tol0 = singular::tol_locus_scale * p.mc2();
    if (std::abs(b0.E_x) <= tol0 && std::abs(b0.L_x) <= tol0)
        throw SingularLocusError("integrate_arc: start state lies on gamma");
    if (std::abs(b0.E_x) <= tol0)
        throw SingularLocusError("integrate_arc: start state lies on S1");

    const double sigma = b0.E_x > 0.0 ? 1.0 : -1.0;
    const double mc2 = p.mc2();
    const double lambda0 = lambda_of(p, state0.r, state0.x);
    const double mu0 = mu_of(p, state0.r, state0.x, state0.u);

    std::vector<num::Event> events;
    events.resize(7);
    events[ev_impact] = num::Event{
        [&p](double, std::span<const double> y) {
            return derivatives(p, y[0], std::clamp(y[1], 0.0, 1.0 - 1e-16)).E_x;
        },
        "impact_s1", true, sigma > 0.0 ? -1 : +1, true};
    events[ev_time] = num::Event{
        [t_max = cfg.t_max](double, std::span<const double> y) { return y[4] - t_max; },
        "time_limit", true, +1, false};
    events[ev_light] = num::Event{
        [lim = 1.0 - cfg.halt_tol](double, std::span<const double> y) { return y[1] - lim; },
        "near_light_speed", true, +1, false};
    events[ev_gamma] = num::Event{
        [&p, tol = cfg.halt_tol](double, std::span<const double> y) {
            const double dr = (y[0] - p.r0) / p.r0;
            return dr * dr + y[1] * y[1] - tol * tol;
        },
        "near_gamma", true, -1, false};
    events[ev_x_floor] = num::Event{
        [floor = cfg.x_floor](double, std::span<const double> y) { return y[1] - floor; },
        "x_floor", true, -1, false};
    events[ev_r_floor] = num::Event{
        [floor = cfg.r_floor * p.r0](double, std::span<const double> y) {
            return y[0] - floor;
        },
        "r_floor", true, -1, false};
    // S2 is reachable only by near-radial motion; the guard is armed only
    // for those arcs so that small-|mu| precessions are not clipped.
    const bool arm_s2 = std::abs(mu0) < cfg.halt_tol;
    events[ev_s2] = num::Event{
        [&p, mc2, tol = cfg.halt_tol, arm_s2](double, std::span<const double> y) {
            if (!arm_s2) return 1.0;
            const double lx = derivatives(p, y[0], std::clamp(y[1], 0.0, 1.0 - 1e-16)).L_x;
            return std::abs(lx) / mc2 - tol;
        },
        "near_s2", true, -1, false};

    const std::array<double, 5> y0{state0.r, state0.x, state0.u, state0.phi, t0};
    const auto res = num::rk_integrate(make_fictive_rhs(p, sigma), y0, 0.0, 1e9, cfg.solver,
                                       events);

    TrajectoryArc arc;
    arc.lambda = lambda0;
    arc.mu = mu0;
    arc.t_begin = t0;
    arc.sheet = sigma > 0.0 ? +1 : -1;

    if (!res.terminated_by_event)
        throw num::MaxStepsExceededError("integrate_arc: no termination event reached");
    switch (res.terminal_event) {
        case ev_impact: arc.termination = Termination::ImpactS1; break;
        case ev_time: arc.termination = Termination::TimeLimit; break;
        case ev_light: arc.termination = Termination::NearLightSpeed; break;
        case ev_gamma: arc.termination = Termination::NearGamma; break;
        case ev_x_floor:
        case ev_r_floor: arc.termination = Termination::ChartSingular; break;
        case ev_s2: arc.termination = Termination::NearS2; break;
        default: arc.termination = Termination::TimeLimit; break;
    }

    // Samples at accepted steps up to the terminal hit, then the hit itself.
    arc.samples.push_back(Sample{t0, state0});
    const double tau_stop = res.t_final;
    for (const num::DenseStep& s : res.arc.steps()) {
        const double tau1 = s.t0 + s.h;
        if (tau1 >= tau_stop) break;
        arc.samples.push_back(Sample{s.y1[4], state_from_raw(s.y1)});
    }
    arc.samples.push_back(Sample{res.y_final[4], state_from_raw(res.y_final)});
    arc.t_end = res.y_final[4];

    for (const Sample& s : arc.samples) {
        const double lam = lambda_of(p, s.state.r, s.state.x);
        arc.lambda_drift = std::max(arc.lambda_drift, std::abs(lam - lambda0) / lambda0);
        const double mu = mu_of(p, s.state.r, s.state.x, s.state.u);
        arc.mu_drift = std::max(arc.mu_drift, std::abs(mu - mu0));
    }
    return arc;
}

namespace {

// Restart state on one fold sheet: x offset from the arrival abscissa, r
// solved so that E recovers E_target exactly, u solved so that I recovers
// I_target exactly in the departure quadrant (cos u matching cos_sign).
PolarState project_restart(const OscillatorParams& p, double x_new, double r_near,
                           double E_target, double I_target, double phi, int cos_sign) {
    p.require_x(x_new);
    const double r_new = num::find_root(
        [&](double r) { return energy(p, r, x_new) - E_target; }, 0.25 * r_near,
        2.0 * r_near, 1e-15 * r_near);
    const DerivativeBundle b = derivatives(p, r_new, x_new);
    double sin_u = I_target * p.c / (2.0 * r_new * std::sqrt(x_new) * b.L_x);
    if (std::abs(sin_u) > 1.0 + 1e-10)
        throw BranchConstructionError(
            "restart projection: |sin u| > 1, the (E, I) level does not reach this sheet");
    sin_u = std::clamp(sin_u, -1.0, 1.0);
    const double u_new = cos_sign < 0 ? wrap_angle(pi - std::asin(sin_u)) : std::asin(sin_u);
    return PolarState(r_new, phi, x_new, u_new);
}

} // namespace

JumpEvent apply_transition(const OscillatorParams& p, const PolarState& arrival, double t,
                           int arrival_sheet_sign, const SimConfig& cfg) {
    const double E_target = energy(p, arrival.r, arrival.x);
    const double I_target = angular_momentum(p, arrival.r, arrival.x, arrival.u);

    JumpEvent ev;
    ev.t = t;
    ev.arrival = arrival;

    const auto inout = singular::classify_inout(p, arrival.x, arrival.u);
    if (inout == singular::InOut::InPoint)
        throw NoDecisivePointError(
            "apply_transition: trajectory arrived at an in-point of S1");

    if (std::abs(std::sin(arrival.u)) < cfg.tol_radial && !cfg.radial_limit_mode)
        throw DegenerateRadialError(
            "apply_transition: radially degenerate arrival (|sin u| < tol_radial); "
            "enable radial_limit_mode to continue with the a -> 0 limit");

    if (inout == singular::InOut::Tangent) {
        // Infinitesimal jump: continue from the same point into S1^- (the
        // cos u > 0 band). The (E, I) projection decides which sheet still
        // carries the orbit.
        auto sol = characteristics::decisive_partner(p, arrival.x, arrival.u, arrival.phi);
        ev.jump = *sol;
        for (int s : {arrival_sheet_sign, -arrival_sheet_sign}) {
            try {
                ev.departures.push_back(project_restart(p, arrival.x + s * cfg.eps_restart,
                                                        arrival.r, E_target, I_target,
                                                        arrival.phi, +1));
                ev.departure_sheets.push_back(s);
                break;
            } catch (const BranchConstructionError&) {
                continue;
            }
        }
        if (ev.departures.empty())
            throw BranchConstructionError(
                "apply_transition: tangent continuation failed on both sheets");
        return ev;
    }

    std::optional<characteristics::JumpSolution> sol;
    if (std::abs(std::sin(arrival.u)) < cfg.tol_radial) {
        // Opt-in continuity limit for radial impacts; not claimed by the model.
        characteristics::JumpSolution s{};
        s.x_bar = arrival.x;
        s.u_bar = arrival.u;
        s.u_tilde = wrap_angle(pi - arrival.u);
        s.phi_bar = arrival.phi;
        const double mag = characteristics::delta_phi_radial_limit(p);
        const double sgn = -std::cos(arrival.u) * (std::sin(arrival.u) >= 0.0 ? 1.0 : -1.0);
        s.delta_phi = (sgn >= 0.0 ? 1.0 : -1.0) * mag;
        s.phi_tilde = arrival.phi + s.delta_phi;
        s.x_star = arrival.x;
        s.a = 0.0;
        s.branch_sign = sgn >= 0.0 ? +1 : -1;
        s.tangent = false;
        sol = s;
    } else {
        sol = characteristics::decisive_partner(p, arrival.x, arrival.u, arrival.phi);
        if (!sol)
            throw NoDecisivePointError("apply_transition: no decisive partner for arrival");
    }
    ev.jump = *sol;

    const double phi_dep = sol->phi_tilde;
    for (int s : {-1, +1}) {
        ev.departures.push_back(project_restart(p, arrival.x + s * cfg.eps_restart, arrival.r,
                                                E_target, I_target, phi_dep, -1));
        ev.departure_sheets.push_back(s);
    }
    return ev;
}

HybridTrajectory simulate(const OscillatorParams& p, const PolarState& state0,
                          const SimConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    HybridTrajectory traj;

    struct WorkItem {
        PolarState state;
        double t0;
        int depth;
        int parent;
        int sheet;
    };
    std::deque<WorkItem> queue;
    queue.push_back(WorkItem{state0, 0.0, 0, -1, 0});

    while (!queue.empty()) {
        const WorkItem item = queue.front();
        queue.pop_front();
        if (static_cast<int>(traj.arcs.size()) >= cfg.branch_budget) {
            traj.errors.push_back(
                BranchError{item.parent, "branch budget exhausted; subtree not explored"});
            continue;
        }
        const int arc_id = static_cast<int>(traj.arcs.size());
        try {
            TrajectoryArc arc = integrate_arc(p, item.state, item.t0, cfg);
            arc.branch_id = arc_id;
            arc.parent_id = item.parent;
            if (item.sheet != 0) arc.sheet = item.sheet;
            const bool impact = arc.termination == Termination::ImpactS1;
            const Sample back = arc.samples.back();
            const int sheet_sign = arc.sheet;
            traj.arcs.push_back(std::move(arc));

            if (impact && item.depth < cfg.max_jumps) {
                JumpEvent ev = apply_transition(p, back.state, back.t, sheet_sign, cfg);
                ev.arrival_arc = arc_id;
                const std::size_t n_dep = ev.departures.size();
                for (std::size_t i = 0; i < n_dep; ++i) {
                    const int s = ev.departure_sheets[i];
                    const bool follow =
                        cfg.branch_policy == BranchPolicy::FollowBoth ||
                        (cfg.branch_policy == BranchPolicy::FollowSheet1 && s < 0) ||
                        (cfg.branch_policy == BranchPolicy::FollowSheet2 && s > 0) ||
                        n_dep == 1;
                    if (follow)
                        queue.push_back(
                            WorkItem{ev.departures[i], ev.t, item.depth + 1, arc_id, s});
                }
                traj.jumps.push_back(std::move(ev));
            }
        } catch (const Error& e) {
            const bool arc_recorded = static_cast<int>(traj.arcs.size()) > arc_id;
            traj.errors.push_back(BranchError{arc_recorded ? arc_id : item.parent, e.what()});
        }
    }
    traj.jump_count = static_cast<int>(traj.jumps.size());
    traj.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return traj;
}

double level_x_max(const OscillatorParams& p, double lambda) {
    if (!(lambda >= 1.0)) throw DomainError("level_x_max: lambda must be >= 1");
    return std::min(1.0 - 1.0 / (lambda * lambda), p.x_max());
}

double r_en(const OscillatorParams& p, double x, double lambda) {
    p.require_x(x);
    const double w = 1.0 - x;
    double num = lambda - 1.0 / std::sqrt(w);
    // Tolerate roundoff exactly at the level edge x = 1 - 1/lambda^2.
    if (num < 0.0 && num > -1e-12 * lambda) num = 0.0;
    if (num < 0.0)
        throw DomainError("r_en: x beyond the extent of the energy level");
    return p.r0 * std::sqrt(num / (1.0 - 0.5 * x));
}

namespace {

// 2x L_x + r L_r along the energy level; its zero is the precession center.
double center_residual(const OscillatorParams& p, double x, double lambda) {
    const double r = r_en(p, x, lambda);
    const DerivativeBundle b = derivatives(p, r, x);
    return 2.0 * x * b.L_x + r * b.L_r;
}

std::optional<double> find_center(const OscillatorParams& p, double lambda, double lo,
                                  double hi) {
    if (!(hi > lo)) return std::nullopt;
    constexpr int n = 512;
    double x_prev = lo;
    double f_prev = center_residual(p, x_prev, lambda);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / n;
        const double f = center_residual(p, x, lambda);
        if ((f_prev < 0.0) != (f < 0.0))
            return num::find_root(
                [&](double xx) { return center_residual(p, xx, lambda); }, x_prev, x, 1e-14);
        x_prev = x;
        f_prev = f;
    }
    return std::nullopt;
}

} // namespace

LevelTopology level_topology(const OscillatorParams& p, double lambda) {
    if (!(lambda >= 1.0)) throw DomainError("level_topology: lambda must be >= 1");
    LevelTopology topo;
    topo.lambda = lambda;

    const double tol = 1e-12;
    topo.degenerate_contact = std::abs(lambda - 2.0) <= tol;
    const auto x1 = singular::x1_of_lambda(p, lambda);
    const auto x2 = singular::x2_of_lambda(p, lambda);
    if (topo.degenerate_contact) {
        topo.components = 1;
        topo.x1 = 0.0;
        topo.x2 = 0.0;
    } else if (x1 && x2 && *x1 > 0.0) {
        topo.components = 3;
        topo.x1 = x1;
        topo.x2 = x2;
    } else {
        topo.components = 1;
    }

    const double xmax = level_x_max(p, lambda);
    if (xmax > 0.0) {
        const double margin = 1e-9 + 1e-9 * xmax;
        const double lo = topo.components == 3 ? *topo.x2 + margin : margin;
        topo.x_c = find_center(p, lambda, lo, xmax - margin);
    }
    return topo;
}

PolarState state_on_level(const OscillatorParams& p, double lambda, double mu, int component,
                          int u_sign) {
    if (!(lambda >= 1.0)) throw DomainError("state_on_level: lambda must be >= 1");
    const LevelTopology topo = level_topology(p, lambda);
    if (component < 1 || component > topo.components)
        throw DomainError("state_on_level: component selector outside the level topology");

    const double xmax = level_x_max(p, lambda);
    if (!(xmax > 0.0))
        throw DomainError("state_on_level: the level degenerates to a point at lambda = 1");
    const double margin = 1e-7 * xmax;
    double lo = margin, hi = xmax - margin;
    if (topo.components == 3) {
        if (component == 1)
            hi = *topo.x1 - margin;
        else if (component == 2) {
            lo = *topo.x1 + margin;
            hi = *topo.x2 - margin;
        } else
            lo = *topo.x2 + margin;
    }

    const double mu_phys = mu * p.m * p.c * p.r0;
    if (mu == 0.0) {
        // Radial start: u in {0, pi} by the sign selector, x at mid-range.
        const double x0 = 0.5 * (lo + hi);
        return PolarState(r_en(p, x0, lambda), 0.0, x0, u_sign >= 0 ? 0.0 : pi);
    }

    const double u0 = (u_sign >= 0 ? 1.0 : -1.0) * 0.5 * pi;
    auto f = [&](double x) {
        return angular_momentum(p, r_en(p, x, lambda), x, u0) - mu_phys;
    };
    constexpr int n = 4096;
    double x_prev = lo, f_prev = f(lo);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / n;
        const double fx = f(x);
        if (f_prev == 0.0) return PolarState(r_en(p, x_prev, lambda), 0.0, x_prev, u0);
        if ((f_prev < 0.0) != (fx < 0.0)) {
            const double x0 = num::find_root(f, x_prev, x, 1e-15);
            return PolarState(r_en(p, x0, lambda), 0.0, x0, u0);
        }
        x_prev = x;
        f_prev = fx;
    }
    throw DomainError(
        "state_on_level: no point with this (lambda, mu, u sign) in the component");
}

ClosedOrbitReport closed_orbit_check(const OscillatorParams& p, double lambda, double mu) {
    if (mu == 0.0)
        throw DomainError("closed_orbit_check: mu = 0 is excluded (radial degeneracy)");
    const LevelTopology topo = level_topology(p, lambda);
    if (topo.components != 3 || !topo.x_c)
        throw DomainError("closed_orbit_check: requires lambda > 2 with a precession center");

    const PolarState s0 = state_on_level(p, lambda, mu, 3, mu > 0.0 ? +1 : -1);
    const double u0 = s0.u;

    num::Rhs rhs = [&p](double, std::span<const double> y, std::span<double> dy) {
        const ElRates v = el_rhs(p, y[0], y[1], y[2]);
        dy[0] = v.dr;
        dy[1] = v.dx;
        dy[2] = v.du;
    };
    const ElRates v0 = el_rhs(p, s0.r, s0.x, s0.u);
    if (v0.du == 0.0)
        throw DomainError("closed_orbit_check: start coincides with the center");
    num::Event section{
        [u0](double, std::span<const double> y) { return y[2] - u0; },
        "first_return", true, v0.du > 0.0 ? +1 : -1, false};

    num::SolverConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-13;
    cfg.event_tol = 1e-13;
    cfg.max_step = 0.05;
    const std::array<double, 3> y0{s0.r, s0.x, s0.u};
    const auto res = num::rk_integrate(rhs, y0, 0.0, 1e4, cfg,
                                       std::span<const num::Event>(&section, 1));
    if (!res.terminated_by_event)
        throw NonClosureError("closed_orbit_check: no first return found");

    ClosedOrbitReport rep;
    rep.period = res.t_final;
    rep.x_start = s0.x;
    rep.residual_x = std::abs(res.y_final[1] - s0.x);
    rep.residual_r = std::abs(res.y_final[0] - s0.r);
    rep.min_x = s0.x;
    for (const num::DenseStep& st : res.arc.steps())
        rep.min_x = std::min(rep.min_x, st.y1[1]);
    rep.margin_above_x2 = rep.min_x - *topo.x2;
    if (rep.residual_x > 1e-6 || rep.residual_r > 1e-6)
        throw NonClosureError("closed_orbit_check: first-return residual exceeds 1e-6");
    return rep;
}

} // namespace folddyn::dynamics
