#pragma once
#include <optional>

#include "folddyn/model.hpp"
#include "folddyn/numerics.hpp"

namespace folddyn::characteristics {

// Arrivals with |sin(u)| below this are radially degenerate (a ~ 0): the
// jump construction is routed to the degenerate-case handler.
inline constexpr double tol_radial = 1e-8;

// Level curve q(x) sin(u) = a of the characteristic flow on S1.
struct CharacteristicArc {
    double a = 0.0;
    int orientation = +1; // sign of the flow parametrization
    double x_min = 0.0;
    double x_max = 0.0;
};

// Arc descriptor for the characteristic with constant a, spanning from the
// turning abscissa x*(a) up to x_hi. Orientation follows the flow: du > 0
// on the upper half-rectangle (a < 0 for this oscillator), du < 0 mirrored.
CharacteristicArc make_arc(const OscillatorParams& p, double a, double x_hi);

// Coefficients of the pulled-back symplectic form on S1 at (x, u):
// alpha dx^du + beta dx^dphi + gamma du^dphi (common factor 2/c dropped
// from the kernel computation, kept here).
struct CharCoeffs {
    double alpha, beta, gamma;
};
CharCoeffs char_coeffs(const OscillatorParams& p, double x, double u);

// q(x) = r1(x) sqrt(x) L_x(r1(x), x); for this oscillator
// q(x) = -(mc^2 r0 / 2) x^{3/2} (1-x)^{-9/4}, negative on (0, 1).
double q_of_x(const OscillatorParams& p, double x);
double q_prime(const OscillatorParams& p, double x);

struct CharVelocity {
    double dx, du, dphi;
};
// Characteristic field on S1: (q cos u, -q' sin u, q (r1'/r1) sin u).
CharVelocity characteristic_rhs(const OscillatorParams& p, double x, double u);

// Unique root of |q(x)| = |a| on (0, 1): the turning abscissa of the
// characteristic with constant a. Throws DegenerateRadialError at a = 0.
double x_star(const OscillatorParams& p, double a);

struct DeltaPhiResult {
    double raw;       // the physical jump, not wrapped
    double wrapped;   // raw reduced to (-pi, pi]
    int branch_sign;  // +1 for u_bar in the second quadrant band, -1 first
    double a;         // characteristic constant q(x_bar) sin(u_bar)
    double x_star;    // turning abscissa
};

// Angle increment of the jump at (x_bar, u_bar):
//   delta_phi = +/- 2|a| Int_{x*}^{x_bar} r1'/(r1 sqrt(q^2 - a^2)) dx,
// sign + for |u_bar| in [pi/2, pi], - for |u_bar| in (0, pi/2), and odd
// under u -> -u. The endpoint singularity is removed by x = x* + s^2.
DeltaPhiResult delta_phi(const OscillatorParams& p, double x_bar, double u_bar);

// Opt-in continuity limit of |delta_phi| as a -> 0 (radial impact). The
// pairing of the u = 0 and u = pi lines is not a claim of model fidelity.
double delta_phi_radial_limit(const OscillatorParams& p);

// Independent cross-check: accumulate phi by integrating the
// characteristic flow from (x_bar, u_bar) to the partner (x_bar, pi - u_bar).
// Algorithmically disjoint from the quadrature path.
double delta_phi_via_flow(const OscillatorParams& p, double x_bar, double u_bar,
                          const num::SolverConfig& cfg = {});

struct JumpSolution {
    double x_bar, u_bar;  // arrival
    double u_tilde;       // departure angle pi - u_bar (wrapped)
    double phi_bar, phi_tilde;
    double delta_phi;     // raw (unwrapped) increment
    double x_star;
    double a;
    int branch_sign;
    bool tangent;         // arrival on W: partner coincides with arrival
};

// Decisive-point pairing at a fold arrival. Returns the partner state when
// the {arrival, partner} pair classifies {out, in}; the tangent band maps
// to the infinitesimal jump (partner = arrival). An in-point handed in as
// the arrival is a misuse (trajectories cannot terminate there): nullopt.
// Throws NoDecisivePointError if the pair classifies the same way, and
// DegenerateRadialError for |sin u_bar| < tol_radial.
std::optional<JumpSolution> decisive_partner(const OscillatorParams& p, double x_bar,
                                             double u_bar, double phi_bar);

} // namespace folddyn::characteristics
