#pragma once
#include <cmath>
#include <numbers>

namespace folddyn {

inline constexpr double pi = std::numbers::pi;

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

// Shortest signed angular distance b - a, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(b - a); }

inline double deg_to_rad(double d) { return d * pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / pi; }

} // namespace folddyn
