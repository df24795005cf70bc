#pragma once
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "folddyn/errors.hpp"

namespace folddyn::num {

struct SolverConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 1.0;
    double event_tol = 1e-12;
    long max_steps = 5'000'000;

    // Throws std::invalid_argument unless all fields are positive and
    // event_tol <= abs_tol.
    void validate() const;
};

using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
using EventFn = std::function<double(double t, std::span<const double> y)>;

// Scalar event functional g(t, y). A hit is a sign change of g across an
// accepted step (filtered by `direction`), localized by bisection on the
// dense output. Grazing hits (|g| dips below event_tol without a sign
// change) are reported separately when `detect_grazing` is set.
struct Event {
    EventFn g;
    std::string name;
    bool terminal = true;
    int direction = 0; // -1 falling, +1 rising, 0 either
    bool detect_grazing = false;
};

struct EventHit {
    std::size_t event_index = 0;
    double t = 0.0;
    std::vector<double> state;
    double value = 0.0;
    bool grazing = false;
};

// One accepted Dormand-Prince step with the stage derivatives needed for
// the order-4 continuous extension.
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<double> y0, y1;
    std::vector<double> k1, k3, k4, k5, k6, k7;
};

class DenseArc {
public:
    DenseArc() = default;
    explicit DenseArc(std::size_t dim) : dim_(dim) {}

    std::size_t dimension() const { return dim_; }
    bool empty() const { return steps_.empty(); }
    double t_begin() const;
    double t_end() const;

    // Evaluate the interpolant at t (clamped to the covered span).
    void eval(double t, std::span<double> out) const;
    std::vector<double> eval(double t) const;

    void push_step(DenseStep step) { steps_.push_back(std::move(step)); }
    const std::vector<DenseStep>& steps() const { return steps_; }

    static void eval_step(const DenseStep& s, double t, std::span<double> out);

private:
    std::size_t dim_ = 0;
    std::vector<DenseStep> steps_;
};

struct IntegrationResult {
    DenseArc arc;
    std::vector<EventHit> hits;
    bool terminated_by_event = false;
    std::size_t terminal_event = static_cast<std::size_t>(-1);
    double t_final = 0.0;
    std::vector<double> y_final;
    long n_accepted = 0;
    long n_rejected = 0;
};

// Adaptive Dormand-Prince 5(4) with dense output and first-event semantics:
// integration stops at the earliest terminal event hit; non-terminal hits
// are recorded and integration continues past them.
IntegrationResult rk_integrate(const Rhs& rhs, std::span<const double> y0, double t0,
                               double t1, const SolverConfig& config,
                               std::span<const Event> events = {});

// Bracketed scalar root: Brent's method (inverse quadratic / secant with
// bisection fallback). Requires f(lo) and f(hi) of opposite sign; a zero at
// an endpoint returns that endpoint. `tol` bounds the bracket width.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-14);

// Adaptive Gauss-Kronrod 15(7) quadrature of a smooth integrand.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_panels = 4000);

// Integral of f over [a, b] where f may blow up like 1/sqrt(distance) at one
// endpoint. The substitution x = endpoint +/- s^2 removes the singularity,
// after which the adaptive rule is applied.
double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          bool singular_at_a, double abs_tol);

} // namespace folddyn::num
