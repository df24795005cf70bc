#pragma once
#include <functional>

#include "folddyn/angles.hpp"
#include "folddyn/errors.hpp"

namespace folddyn {

// Physical constants of the oscillator. The elastic constant is derived
// from r0 = sqrt(m/k)*c, so k*r0^2 = m*c^2 holds exactly.
struct OscillatorParams {
    double m = 1.0;
    double c = 1.0;
    double r0 = 1.0;
    // Domain guard: x is admissible on [0, 1 - x_guard]; beyond it the
    // 1/sqrt(1-x) terms are considered divergent and evaluation throws.
    double x_guard = 1e-9;

    OscillatorParams() = default;
    OscillatorParams(double m_, double c_, double r0_, double x_guard_ = 1e-9);

    double k() const { return m * c * c / (r0 * r0); }
    double mc2() const { return m * c * c; }
    double x_max() const { return 1.0 - x_guard; }

    // Internal unit system m = c = r0 = 1 (energy in mc^2, momentum in mc*r0).
    static OscillatorParams nondimensional() { return {1.0, 1.0, 1.0}; }
    bool is_nondimensional() const { return m == 1.0 && c == 1.0 && r0 == 1.0; }

    void require_x(double x) const; // throws DomainError outside [0, x_max]
};

// Phase point in the chart (r, phi, x, u): radius, polar angle, squared
// speed ratio v^2/c^2 and the angle u = theta - phi between the radius
// vector and the velocity. Angles are normalized to (-pi, pi] on
// construction; comparisons are modular.
struct PolarState {
    double r = 0.0;
    double phi = 0.0;
    double x = 0.0;
    double u = 0.0;

    PolarState() = default;
    PolarState(double r_, double phi_, double x_, double u_);
};

struct CartesianState {
    double q1 = 0.0, q2 = 0.0;
    double v1 = 0.0, v2 = 0.0;
};

// L, E and the partial derivatives used downstream, all at one (r, x).
struct DerivativeBundle {
    double L, L_r, L_x, L_xx, L_xr;
    double E, E_r, E_x, E_xx, E_xr;
};

// L(r, x) = -mc^2 [sqrt(1-x) + (r/r0)^2 (1 + x/2)]
double lagrangian(const OscillatorParams& p, double r, double x);

// E(r, x) = 2x L_x - L = mc^2 [1/sqrt(1-x) + (r/r0)^2 (1 - x/2)]
double energy(const OscillatorParams& p, double r, double x);

// I(r, x, u) = (2/c) r sqrt(x) L_x sin(u)
double angular_momentum(const OscillatorParams& p, double r, double x, double u);

// All ten closed-form partials at (r, x).
DerivativeBundle derivatives(const OscillatorParams& p, double r, double x);

// Chart conversions. to_polar requires r > 0 and |v| > 0 (the angles phi
// and theta are undefined on those loci) and |v| < c.
PolarState to_polar(const OscillatorParams& p, const CartesianState& s);
CartesianState to_cartesian(const OscillatorParams& p, const PolarState& s);

// Image chart (r, phi, y, alpha) on momentum space, with
// y = psi(r, x) = (4/m^2 c^4) x L_x^2 and alpha = theta = phi + u.
struct MomentumChartPoint {
    double r, phi, y, alpha;
};
double legendre_y(const OscillatorParams& p, double r, double x);
MomentumChartPoint legendre_map(const OscillatorParams& p, const PolarState& s);

// Test hook for a second instance of the rotationally symmetric family
// L(r, x): closed-form partials supplied by the caller, energy fields
// derived through E = 2x L_x - L and its differentiated identities.
struct RadialLagrangian {
    std::function<double(double, double)> L, L_r, L_x, L_xx, L_xr, L_xxx, L_xxr;
};
DerivativeBundle derivatives(const RadialLagrangian& fam, double r, double x);

} // namespace folddyn
