#include "folddyn/model.hpp"

#include <cmath>

namespace folddyn {

OscillatorParams::OscillatorParams(double m_, double c_, double r0_, double x_guard_)
    : m(m_), c(c_), r0(r0_), x_guard(x_guard_) {
    if (!(m > 0.0) || !(c > 0.0) || !(r0 > 0.0))
        throw DomainError("OscillatorParams: m, c, r0 must be strictly positive");
    if (!(x_guard > 0.0) || !(x_guard < 1.0))
        throw DomainError("OscillatorParams: x_guard must lie in (0, 1)");
}

void OscillatorParams::require_x(double x) const {
    if (!(x >= 0.0) || x > x_max())
        throw DomainError("x outside admissible range [0, 1 - x_guard]");
}

PolarState::PolarState(double r_, double phi_, double x_, double u_)
    : r(r_), phi(wrap_angle(phi_)), x(x_), u(wrap_angle(u_)) {
    if (!(r >= 0.0)) throw DomainError("PolarState: r must be >= 0");
    if (!(x >= 0.0) || !(x < 1.0)) throw DomainError("PolarState: x must lie in [0, 1)");
}

double lagrangian(const OscillatorParams& p, double r, double x) {
    p.require_x(x);
    const double s = (r / p.r0) * (r / p.r0);
    return -p.mc2() * (std::sqrt(1.0 - x) + s * (1.0 + 0.5 * x));
}

double energy(const OscillatorParams& p, double r, double x) {
    p.require_x(x);
    const double s = (r / p.r0) * (r / p.r0);
    return p.mc2() * (1.0 / std::sqrt(1.0 - x) + s * (1.0 - 0.5 * x));
}

double angular_momentum(const OscillatorParams& p, double r, double x, double u) {
    p.require_x(x);
    const double s = (r / p.r0) * (r / p.r0);
    return p.m * p.c * r * std::sqrt(x) * (1.0 / std::sqrt(1.0 - x) - s) * std::sin(u);
}

DerivativeBundle derivatives(const OscillatorParams& p, double r, double x) {
    p.require_x(x);
    const double mc2 = p.mc2();
    const double w = 1.0 - x;
    const double sw = std::sqrt(w);
    const double iw = 1.0 / sw;         // w^{-1/2}
    const double iw3 = iw / w;          // w^{-3/2}
    const double iw5 = iw3 / w;         // w^{-5/2}
    const double rr = r / (p.r0 * p.r0);
    const double s = rr * r; // (r/r0)^2

    DerivativeBundle b{};
    b.L = -mc2 * (sw + s * (1.0 + 0.5 * x));
    b.L_r = -mc2 * 2.0 * rr * (1.0 + 0.5 * x);
    b.L_x = 0.5 * mc2 * (iw - s);
    b.L_xx = 0.25 * mc2 * iw3;
    b.L_xr = -mc2 * rr;
    b.E = mc2 * (iw + s * (1.0 - 0.5 * x));
    b.E_r = mc2 * 2.0 * rr * (1.0 - 0.5 * x);
    b.E_x = 0.5 * mc2 * (iw3 - s);
    b.E_xx = 0.75 * mc2 * iw5;
    b.E_xr = -mc2 * rr;
    return b;
}

PolarState to_polar(const OscillatorParams& p, const CartesianState& s) {
    const double r = std::hypot(s.q1, s.q2);
    const double v = std::hypot(s.v1, s.v2);
    if (r == 0.0) throw SingularChartError("to_polar: phi undefined at r = 0");
    if (v == 0.0) throw SingularChartError("to_polar: theta undefined at v = 0");
    if (!(v < p.c)) throw DomainError("to_polar: |v| must be below c");
    const double phi = std::atan2(s.q2, s.q1);
    const double theta = std::atan2(s.v2, s.v1);
    const double x = (v / p.c) * (v / p.c);
    return PolarState(r, phi, x, theta - phi);
}

CartesianState to_cartesian(const OscillatorParams& p, const PolarState& s) {
    const double speed = p.c * std::sqrt(s.x);
    const double theta = s.phi + s.u;
    return CartesianState{s.r * std::cos(s.phi), s.r * std::sin(s.phi),
                          speed * std::cos(theta), speed * std::sin(theta)};
}

double legendre_y(const OscillatorParams& p, double r, double x) {
    const DerivativeBundle b = derivatives(p, r, x);
    const double mc2 = p.mc2();
    return 4.0 / (mc2 * mc2) * x * b.L_x * b.L_x;
}

MomentumChartPoint legendre_map(const OscillatorParams& p, const PolarState& s) {
    return MomentumChartPoint{s.r, s.phi, legendre_y(p, s.r, s.x), wrap_angle(s.phi + s.u)};
}

DerivativeBundle derivatives(const RadialLagrangian& fam, double r, double x) {
    DerivativeBundle b{};
    b.L = fam.L(r, x);
    b.L_r = fam.L_r(r, x);
    b.L_x = fam.L_x(r, x);
    b.L_xx = fam.L_xx(r, x);
    b.L_xr = fam.L_xr(r, x);
    b.E = 2.0 * x * b.L_x - b.L;
    b.E_r = 2.0 * x * b.L_xr - b.L_r;
    b.E_x = b.L_x + 2.0 * x * b.L_xx;
    b.E_xx = 3.0 * b.L_xx + 2.0 * x * fam.L_xxx(r, x);
    b.E_xr = b.L_xr + 2.0 * x * fam.L_xxr(r, x);
    return b;
}

} // namespace folddyn
