#include "folddyn/characteristics.hpp"

#include <array>
#include <cmath>

#include "folddyn/singular.hpp"

namespace folddyn::characteristics {

double q_of_x(const OscillatorParams& p, double x) {
    if (!(x >= 0.0)) throw DomainError("q_of_x: x must be >= 0");
    const double r1 = singular::r1_of_x(p, x);
    const DerivativeBundle b = derivatives(p, r1, x);
    return r1 * std::sqrt(x) * b.L_x;
}

double q_prime(const OscillatorParams& p, double x) {
    if (!(x > 0.0)) throw DomainError("q_prime: x must be > 0");
    const double r1 = singular::r1_of_x(p, x);
    const double r1p = singular::r1_prime(p, x);
    const DerivativeBundle b = derivatives(p, r1, x);
    // d/dx [r1 sqrt(x) L_x(r1(x), x)]; the fixed-r part collapses through
    // d/dx(sqrt(x) L_x) = E_x / (2 sqrt(x)), which vanishes on S1.
    const double sx = std::sqrt(x);
    return r1p * sx * b.L_x + r1 * (b.E_x / (2.0 * sx) + sx * b.L_xr * r1p);
}

CharCoeffs char_coeffs(const OscillatorParams& p, double x, double u) {
    const double r1 = singular::r1_of_x(p, x);
    const double r1p = singular::r1_prime(p, x);
    const DerivativeBundle b = derivatives(p, r1, x);
    const double sx = std::sqrt(x);
    const double su = std::sin(u), cu = std::cos(u);
    return CharCoeffs{sx * b.L_x * r1p * su, q_prime(p, x) * su, q_of_x(p, x) * cu};
}

CharVelocity characteristic_rhs(const OscillatorParams& p, double x, double u) {
    const double q = q_of_x(p, x);
    const double qp = q_prime(p, x);
    const double r1 = singular::r1_of_x(p, x);
    const double r1p = singular::r1_prime(p, x);
    const double su = std::sin(u), cu = std::cos(u);
    return CharVelocity{q * cu, -qp * su, q * (r1p / r1) * su};
}

CharacteristicArc make_arc(const OscillatorParams& p, double a, double x_hi) {
    CharacteristicArc arc;
    arc.a = a;
    arc.x_min = x_star(p, a);
    arc.x_max = x_hi;
    // u' = -q' sin u with q' < 0: u increases where sin u > 0, i.e. a < 0.
    arc.orientation = a < 0.0 ? +1 : -1;
    if (!(x_hi > arc.x_min))
        throw DomainError("make_arc: x_hi must exceed the turning abscissa x*(a)");
    return arc;
}

double x_star(const OscillatorParams& p, double a) {
    const double scale = p.mc2() * p.r0;
    if (std::abs(a) < tol_radial * scale)
        throw DegenerateRadialError("x_star: characteristic constant a is radially degenerate");
    // |q| is strictly increasing and unbounded on (0, 1); solve in log form
    // for uniform relative accuracy.
    const double target = std::log(std::abs(a));
    auto f = [&](double x) { return std::log(std::abs(q_of_x(p, x))) - target; };
    double lo = 1e-14, hi = 0.5;
    while (f(hi) < 0.0) {
        hi = 0.5 * (1.0 + hi);
        if (hi > p.x_max()) {
            hi = p.x_max();
            if (f(hi) < 0.0)
                throw DomainError("x_star: |a| exceeds |q| at the light-speed guard");
            break;
        }
    }
    while (f(lo) > 0.0) lo *= 1e-2;
    return num::find_root(f, lo, hi, 1e-16);
}

namespace {

int quadrature_sign(double u_bar) {
    // + for |u| in [pi/2, pi], - for |u| in (0, pi/2); odd under u -> -u.
    const double s = -std::cos(u_bar) * std::sin(u_bar);
    return s >= 0.0 ? +1 : -1;
}

} // namespace

DeltaPhiResult delta_phi(const OscillatorParams& p, double x_bar, double u_bar) {
    if (!(x_bar > 0.0) || !(x_bar < 1.0))
        throw DomainError("delta_phi: x_bar must lie in (0, 1)");
    const double su = std::sin(u_bar);
    if (std::abs(su) < tol_radial)
        throw DegenerateRadialError("delta_phi: |sin u_bar| below tol_radial (a ~ 0)");

    const double a = q_of_x(p, x_bar) * su;
    const double aa = std::abs(a);
    const double xs = x_star(p, a);

    DeltaPhiResult res{};
    res.a = a;
    res.x_star = xs;
    res.branch_sign = quadrature_sign(u_bar);

    if (std::abs(std::cos(u_bar)) <= singular::tol_tangent || !(x_bar > xs)) {
        // Tangent arrival: x* = x_bar and the integral is empty.
        res.raw = 0.0;
        res.wrapped = 0.0;
        return res;
    }

    auto integrand = [&](double x) {
        const double q = q_of_x(p, x);
        const double r1 = singular::r1_of_x(p, x);
        const double r1p = singular::r1_prime(p, x);
        return r1p / (r1 * std::sqrt(q * q - a * a));
    };
    const double J = num::integrate_singular(integrand, xs, x_bar, /*singular_at_a=*/true,
                                             1e-10 / std::max(2.0 * aa, 1e-300));
    res.raw = res.branch_sign * 2.0 * aa * J;
    res.wrapped = wrap_angle(res.raw);
    return res;
}

double delta_phi_radial_limit(const OscillatorParams& p) {
    // |delta_phi| decays like |a|^{2/3} toward the radial impact, so the
    // positional jump has continuity limit zero (the velocity flips, the
    // position does not). Evaluate at two shrinking |a| and extrapolate
    // linearly in h = |a|^{2/3}; the result is numerically ~0.
    const double x_bar = 0.5;
    const double scale = p.mc2() * p.r0;
    std::array<double, 2> h{}, v{};
    for (int k = 0; k < 2; ++k) {
        const double a_rel = (k == 0) ? 1e-5 : 1e-6; // |a| in units of mc^2 r0
        const double u = std::asin(a_rel * scale / std::abs(q_of_x(p, x_bar)));
        v[k] = std::abs(delta_phi(p, x_bar, u).raw);
        h[k] = std::cbrt(a_rel * a_rel);
    }
    return v[1] - h[1] * (v[0] - v[1]) / (h[0] - h[1]);
}

double delta_phi_via_flow(const OscillatorParams& p, double x_bar, double u_bar,
                          const num::SolverConfig& cfg) {
    const double u_arr = wrap_angle(u_bar);
    const double su = std::sin(u_arr);
    if (std::abs(su) < tol_radial)
        throw DegenerateRadialError("delta_phi_via_flow: radially degenerate arrival");
    // Partner angle along the unwrapped flow: u is monotone between the two
    // torus intersections, increasing on u > 0 and decreasing on u < 0, so
    // the target sign(u)*pi - u is reached without wrapping. Out-points
    // (cos u > 0) flow forward toward it, in-points backward.
    const double u_target = std::copysign(pi, u_arr) - u_arr;
    const double tau_end = (std::cos(u_arr) > 0.0) ? 1e6 : -1e6;

    num::Rhs rhs = [&](double, std::span<const double> y, std::span<double> dy) {
        const CharVelocity v = characteristic_rhs(p, y[0], y[1]);
        dy[0] = v.dx;
        dy[1] = v.du;
        dy[2] = v.dphi;
    };
    num::Event ev{[u_target](double, std::span<const double> y) { return y[1] - u_target; },
                  "partner", true, 0, false};
    const std::array<double, 3> y0{x_bar, u_arr, 0.0};
    num::SolverConfig c = cfg;
    c.max_step = std::min(c.max_step, 0.05);
    const auto res =
        num::rk_integrate(rhs, y0, 0.0, tau_end, c, std::span<const num::Event>(&ev, 1));
    if (!res.terminated_by_event)
        throw Error("delta_phi_via_flow: partner point not reached");
    return res.y_final[2];
}

std::optional<JumpSolution> decisive_partner(const OscillatorParams& p, double x_bar,
                                             double u_bar, double phi_bar) {
    using singular::InOut;
    const double u_arr = wrap_angle(u_bar);
    const InOut arrival_class = singular::classify_inout(p, x_bar, u_arr);
    if (arrival_class == InOut::Tangent) {
        JumpSolution s{};
        s.x_bar = x_bar;
        s.u_bar = u_arr;
        s.u_tilde = wrap_angle(pi - u_arr); // equals u_arr on W
        s.phi_bar = phi_bar;
        s.phi_tilde = phi_bar;
        s.delta_phi = 0.0;
        s.x_star = x_bar;
        s.a = q_of_x(p, x_bar) * std::sin(u_arr);
        s.branch_sign = 0;
        s.tangent = true;
        return s;
    }

    const double u_partner = wrap_angle(pi - u_arr);
    const InOut partner_class = singular::classify_inout(p, x_bar, u_partner);
    if (partner_class == arrival_class)
        throw NoDecisivePointError(
            "decisive_partner: arrival and mirror point classify identically");
    if (arrival_class == InOut::InPoint) return std::nullopt; // misuse as an arrival

    const DeltaPhiResult dp = delta_phi(p, x_bar, u_arr);
    JumpSolution s{};
    s.x_bar = x_bar;
    s.u_bar = u_arr;
    s.u_tilde = u_partner;
    s.phi_bar = phi_bar;
    s.phi_tilde = phi_bar + dp.raw;
    s.delta_phi = dp.raw;
    s.x_star = dp.x_star;
    s.a = dp.a;
    s.branch_sign = dp.branch_sign;
    s.tangent = false;
    return s;
}

} // namespace folddyn::characteristics
