#include "folddyn/optics.hpp"

#include <cmath>

namespace folddyn::optics {

MediumPair::MediumPair(double n_plus_, double n_minus_, double c_)
    : n_plus(n_plus_), n_minus(n_minus_), c(c_) {
    if (!(n_plus > 0.0) || !(n_minus > 0.0))
        throw DomainError("MediumPair: refraction indices must be positive");
    if (!(c > 0.0)) throw DomainError("MediumPair: c must be positive");
}

double RayState::p_norm() const {
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

double optical_hamiltonian(const MediumPair& medium, Side side, const RayState& ray) {
    const double n = ray.p_norm();
    if (n == 0.0) throw DomainError("optical_hamiltonian: zero momentum");
    const double v = side == Side::Plus ? medium.v_plus() : medium.v_minus();
    return v * n;
}

std::array<double, 3> ray_velocity(const MediumPair& medium, Side side, const RayState& ray) {
    const double n = ray.p_norm();
    if (n == 0.0) throw DomainError("ray_velocity: zero momentum");
    const double v = side == Side::Plus ? medium.v_plus() : medium.v_minus();
    return {v * ray.p[0] / n, v * ray.p[1] / n, v * ray.p[2] / n};
}

RayState CharacteristicLine::at(double t) const {
    RayState r = base;
    r.p[2] += t;
    return r;
}

CharacteristicLine characteristic_line(const RayState& x_bar) {
    if (x_bar.q[2] != 0.0)
        throw DomainError("characteristic_line: base point must lie on {q3 = 0}");
    return CharacteristicLine{x_bar};
}

ImpactOutcome impact(const MediumPair& medium, const RayState& arrival) {
    const double scale = 1.0 + std::abs(arrival.q[0]) + std::abs(arrival.q[1]);
    if (std::abs(arrival.q[2]) > 1e-12 * scale)
        throw DomainError("impact: arrival is not on the separating surface");
    const double pn = arrival.p_norm();
    if (pn == 0.0) throw DomainError("impact: zero momentum");
    const double p3 = arrival.p[2];
    if (p3 == 0.0)
        throw DomainError("impact: grazing incidence (p3 = 0) has no transition rule");
    if (p3 < 0.0) throw DomainError("impact: arrival must come from the plus side (p3 > 0)");

    ImpactOutcome out;
    out.reflected = arrival;
    out.reflected.p[2] = -p3;

    out.phi = std::acos(std::min(p3 / pn, 1.0));
    out.psi_plus = std::acos(std::min(std::abs(out.reflected.p[2]) / out.reflected.p_norm(), 1.0));

    const double nb = medium.n_bar();
    // Reduced discriminant of t^2 + 2 p3 t + (1 - nb^2)||p||^2 = 0; it is
    // ||p||^2 (nb^2 - sin^2 phi), so real roots exist iff sin phi <= nb.
    const double disc = p3 * p3 + (nb * nb - 1.0) * pn * pn;
    if (disc < 0.0) {
        out.total_reflection = true;
        return out;
    }
    const double p3_refr = std::sqrt(disc);
    RayState refr = arrival;
    refr.p[2] = p3_refr; // the decisive root: the field points into the minus side
    out.psi_minus = std::acos(std::min(p3_refr / refr.p_norm(), 1.0));
    out.refracted = refr;
    return out;
}

std::vector<RayState> decisive_filter(std::span<const RayState> candidates, Side target) {
    std::vector<RayState> kept;
    for (const RayState& r : candidates) {
        const double toward_minus = r.p[2];
        if ((target == Side::Minus && toward_minus > 0.0) ||
            (target == Side::Plus && toward_minus < 0.0))
            kept.push_back(r);
    }
    return kept;
}

} // namespace folddyn::optics
