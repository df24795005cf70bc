#include "folddyn/singular.hpp"

#include <cmath>

#include "folddyn/numerics.hpp"

namespace folddyn::singular {

double hessian(const OscillatorParams& p, double r, double x) {
    const DerivativeBundle b = derivatives(p, r, x);
    const double c2 = p.c * p.c;
    return 4.0 / (c2 * c2) * b.L_x * b.E_x;
}

LocusClass classify_locus(const OscillatorParams& p, double r, double x) {
    const double tol = tol_locus_scale * p.mc2();
    const DerivativeBundle b = derivatives(p, r, x);
    const bool on_s1 = std::abs(b.E_x) <= tol;
    const bool on_s2 = std::abs(b.L_x) <= tol;
    LocusTag tag = LocusTag::Regular;
    if (on_s1 && on_s2)
        tag = LocusTag::GammaSing;
    else if (on_s1)
        tag = LocusTag::S1Fold;
    else if (on_s2)
        tag = LocusTag::S2;
    return LocusClass{tag, tol};
}

double r1_of_x(const OscillatorParams& p, double x) {
    p.require_x(x);
    return p.r0 * std::pow(1.0 - x, -0.75);
}

double r1_prime(const OscillatorParams& p, double x) {
    p.require_x(x);
    return 0.75 * p.r0 * std::pow(1.0 - x, -1.75);
}

double x1_of_r(const OscillatorParams& p, double r) {
    if (!(r >= p.r0)) throw DomainError("x1_of_r: defined only for r >= r0");
    return 1.0 - std::pow(r / p.r0, -4.0 / 3.0);
}

namespace {

// Nondimensional energy along S1, E(r1(x), x)/mc^2. Strictly increasing
// from 2 at x = 0; verified numerically once per parameter set.
double energy_on_s1(double x) {
    const double w = 1.0 - x;
    return 1.0 / std::sqrt(w) + std::pow(w, -1.5) * (1.0 - 0.5 * x);
}

// Nondimensional energy along C2 = {L_x = 0}, where (r/r0)^2 = (1-x)^{-1/2}.
double energy_on_c2(double x) {
    return (2.0 - 0.5 * x) / std::sqrt(1.0 - x);
}

void assert_monotone(double (*f)(double), double hi, const char* name) {
    double prev = f(0.0);
    for (int i = 1; i <= 64; ++i) {
        const double x = hi * static_cast<double>(i) / 64.0;
        const double v = f(x);
        if (!(v > prev))
            throw SingularLocusError(std::string("monotonicity check failed for ") + name);
        prev = v;
    }
}

std::optional<double> level_crossing(double (*f)(double), const OscillatorParams& p,
                                     double lambda, const char* name) {
    if (!(lambda >= 1.0)) throw DomainError("level crossing: lambda must be >= 1");
    if (lambda < 2.0) return std::nullopt;
    if (lambda == 2.0) return 0.0;
    const double hi = p.x_max();
    assert_monotone(f, hi, name);
    if (f(hi) < lambda)
        throw DomainError("level crossing: lambda beyond the admissible x range");
    return num::find_root([&](double x) { return f(x) - lambda; }, 0.0, hi, 1e-15);
}

} // namespace

std::optional<double> x1_of_lambda(const OscillatorParams& p, double lambda) {
    return level_crossing(&energy_on_s1, p, lambda, "E(r1(x), x)");
}

std::optional<double> x2_of_lambda(const OscillatorParams& p, double lambda) {
    return level_crossing(&energy_on_c2, p, lambda, "E on C2");
}

double g_surface(const OscillatorParams& p, double r, double y) {
    const double x1 = x1_of_r(p, r);
    const DerivativeBundle b = derivatives(p, r, x1);
    const double mc2 = p.mc2();
    return 4.0 / (mc2 * mc2) * x1 * b.L_x * b.L_x - y;
}

double relative_field_on_s1(const OscillatorParams& p, double x, double u) {
    if (!(x > 0.0)) throw DomainError("relative_field_on_s1: requires x in (0, 1)");
    const double r1 = r1_of_x(p, x);
    const DerivativeBundle b = derivatives(p, r1, x);
    const double m2c3 = p.m * p.m * p.c * p.c * p.c;
    return 4.0 / m2c3 * std::sqrt(x) * std::cos(u) * b.L_x * b.E_r;
}

InOut classify_inout(const OscillatorParams& p, double x, double u) {
    if (std::abs(std::cos(u)) <= tol_tangent) return InOut::Tangent;
    const double v = relative_field_on_s1(p, x, u);
    return v > 0.0 ? InOut::InPoint : InOut::OutPoint;
}

ChartVector kernel_direction(const OscillatorParams& p, double r, double x, double u) {
    static_cast<void>(u);
    const LocusClass cls = classify_locus(p, r, x);
    switch (cls.tag) {
        case LocusTag::S1Fold:
            return ChartVector{0.0, 0.0, 1.0, 0.0};
        case LocusTag::S2:
            return ChartVector{0.0, 0.0, 0.0, -1.0};
        case LocusTag::GammaSing:
            throw UndefinedKernelError(
                "kernel_direction: kernel is two-dimensional-degenerate on gamma");
        case LocusTag::Regular:
        default:
            throw SingularLocusError("kernel_direction: point is not on S");
    }
}

FoldGeometry fold_geometry(const OscillatorParams& p, double x) {
    const double r1 = r1_of_x(p, x);
    const DerivativeBundle b = derivatives(p, r1, x);
    // g_r = (8/m^2c^4) x L_x L_xr on the image surface; L_x < 0 and L_xr < 0
    // for this oscillator, so the sign is positive away from x = 0.
    const double g_r = 8.0 / (p.mc2() * p.mc2()) * x * b.L_x * b.L_xr;
    return FoldGeometry{x, r1, ChartVector{0.0, 0.0, 1.0, 0.0},
                        g_r > 0.0 ? 1 : (g_r < 0.0 ? -1 : 0), -1};
}

} // namespace folddyn::singular
