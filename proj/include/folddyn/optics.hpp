#pragma once
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "folddyn/errors.hpp"

namespace folddyn::optics {

// Two homogeneous isotropic media separated by the plane {q3 = 0} in
// adapted coordinates, with the q3-axis pointing into the minus side.
struct MediumPair {
    double n_plus = 1.0;
    double n_minus = 1.0;
    double c = 1.0;

    MediumPair() = default;
    MediumPair(double n_plus_, double n_minus_, double c_ = 1.0);

    double n_bar() const { return n_minus / n_plus; }
    double v_plus() const { return c / n_plus; }
    double v_minus() const { return c / n_minus; }
};

enum class Side { Plus, Minus };

struct RayState {
    std::array<double, 3> q{0.0, 0.0, 0.0};
    std::array<double, 3> p{0.0, 0.0, 0.0};

    double p_norm() const;
};

// H(q, p) = V ||p||, homogeneous of degree 1 in p. Throws DomainError for
// zero momentum.
double optical_hamiltonian(const MediumPair& medium, Side side, const RayState& ray);

// Ray velocity dq/dt = dH/dp; its norm equals the medium light speed.
std::array<double, 3> ray_velocity(const MediumPair& medium, Side side, const RayState& ray);

// Characteristic line of the separating surface through a point of Gamma:
// the fiber line q(t) = q_bar, p(t) = p_bar + t e_3.
struct CharacteristicLine {
    RayState base;
    RayState at(double t) const;
};
CharacteristicLine characteristic_line(const RayState& x_bar);

struct ImpactOutcome {
    RayState reflected;
    std::optional<RayState> refracted;
    bool total_reflection = false;
    double phi = 0.0;       // incidence angle
    double psi_plus = 0.0;  // reflection angle, equals phi
    std::optional<double> psi_minus; // refraction angle when it exists
};

// Decisive-point transition at the surface for a ray arriving from the
// plus side (p3 > 0). The reflected branch always exists; the refracted
// branch exists iff sin(phi) <= n_bar, and then satisfies
// sin(phi)/sin(psi_minus) = n_bar. Grazing incidence (p3 = 0) and arrivals
// off the surface are misuse errors.
ImpactOutcome impact(const MediumPair& medium, const RayState& arrival);

// Keep exactly the candidates whose Hamiltonian field points into the
// target side, i.e. the in-points: p3 > 0 for Minus, p3 < 0 for Plus.
std::vector<RayState> decisive_filter(std::span<const RayState> candidates, Side target);

} // namespace folddyn::optics
