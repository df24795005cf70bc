#pragma once
#include <optional>

#include "folddyn/model.hpp"

namespace folddyn::singular {

// |E_x| and |L_x| below tol_locus_scale * mc^2 count as zero when
// classifying a point against S = S1 u S2.
inline constexpr double tol_locus_scale = 1e-9;

enum class LocusTag { Regular, S1Fold, S2, GammaSing };

struct LocusClass {
    LocusTag tag;
    double tol; // absolute tolerance used (energy units)
};

// Factored Hessian determinant of the Legendre map, (4/c^4) L_x E_x.
double hessian(const OscillatorParams& p, double r, double x);

LocusClass classify_locus(const OscillatorParams& p, double r, double x);

// Fold parametrization of S1: r1(x) = r0 (1-x)^{-3/4}, the unique radius
// with E_x(r1(x), x) = 0.
double r1_of_x(const OscillatorParams& p, double x);
double r1_prime(const OscillatorParams& p, double x);

// Inverse branch x1(r) = 1 - (r/r0)^{-4/3}, defined for r >= r0.
double x1_of_r(const OscillatorParams& p, double r);

// x-coordinate of the torus T1 = Sigma_lambda n S1: the root of
// E(r1(x), x) = lambda mc^2. Empty when lambda < 2; zero at lambda = 2.
std::optional<double> x1_of_lambda(const OscillatorParams& p, double lambda);

// Same along C2 = {L_x = 0}: root of (1-x)^{-1/2} (2 - x/2) = lambda.
std::optional<double> x2_of_lambda(const OscillatorParams& p, double lambda);

// Image-side fold surface g(r, y) = (4/m^2 c^4) x1(r) L_x(r, x1(r))^2 - y.
// Zero on the Legendre image of S1, positive on the image of a neighbourhood.
double g_surface(const OscillatorParams& p, double r, double y);

// Relative Hamiltonian field applied to g, restricted to S1 at the point
// with fold coordinate x and velocity angle u:
//   (4/m^2 c^3) sqrt(x) cos(u) L_x(r1(x), x) E_r(r1(x), x).
// For this oscillator the sign is -sign(cos u).
double relative_field_on_s1(const OscillatorParams& p, double x, double u);

enum class InOut { InPoint, OutPoint, Tangent };

// In/out classification of a fold point by the sign of the relative field.
// The tangency band is |cos u| <= tol_tangent.
inline constexpr double tol_tangent = 1e-10;
InOut classify_inout(const OscillatorParams& p, double x, double u);

struct ChartVector {
    double d_r, d_phi, d_x, d_u;
};

// Kernel of the Legendre differential in the (r, phi, x, u) chart:
// span(d/dx) on S1 \ S2, span(-d/du) on S2 \ S1. Throws UndefinedKernelError
// on the circle gamma and SingularLocusError at regular points.
ChartVector kernel_direction(const OscillatorParams& p, double r, double x, double u);

struct FoldGeometry {
    double x_value;
    double r1_value;
    ChartVector kernel;
    int g_r_sign; // sign of dg/dr on the image surface
    int g_y_sign; // always -1: g is affine in y with slope -1
};
FoldGeometry fold_geometry(const OscillatorParams& p, double x);

} // namespace folddyn::singular
