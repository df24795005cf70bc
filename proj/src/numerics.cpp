#include "folddyn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace folddyn::num {

void SolverConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) || !(event_tol > 0.0) ||
        max_steps <= 0)
        throw std::invalid_argument("SolverConfig: all fields must be strictly positive");
    if (event_tol > abs_tol)
        throw std::invalid_argument("SolverConfig: event_tol must not exceed abs_tol");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat, weights of the embedded 4th-order error estimate.
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

} // namespace

void DenseArc::eval_step(const DenseStep& s, double t, std::span<double> out) {
    // Order-4 continuous extension of the Dormand-Prince pair,
    // y(t0 + theta*h) = y0 + h * sum_i b_i(theta) k_i.
    const double theta = (t - s.t0) / s.h;
    const double x1 = 5.0 * (2558722523.0 - 31403016.0 * theta) / 11282082432.0;
    const double x3 = 100.0 * (882725551.0 - 15701508.0 * theta) / 32700410799.0;
    const double x4 = 25.0 * (443332067.0 - 31403016.0 * theta) / 1880347072.0;
    const double x5 = 32805.0 * (23143187.0 - 3489224.0 * theta) / 199316789632.0;
    const double x6 = 55.0 * (29972135.0 - 7076736.0 * theta) / 822651844.0;
    const double x7 = 10.0 * (7414447.0 - 829305.0 * theta) / 29380423.0;

    const double tm1 = theta - 1.0;
    const double th2 = theta * theta;
    const double A = th2 * (3.0 - 2.0 * theta);
    const double B = th2 * tm1;
    const double C = th2 * tm1 * tm1;
    const double D = theta * tm1 * tm1;

    const double bt1 = A * b1 - C * x1 + D;
    const double bt3 = A * b3 + C * x3;
    const double bt4 = A * b4 - C * x4;
    const double bt5 = A * b5 + C * x5;
    const double bt6 = A * b6 - C * x6;
    const double bt7 = B + C * x7;

    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = s.y0[i] + s.h * (bt1 * s.k1[i] + bt3 * s.k3[i] + bt4 * s.k4[i] +
                                  bt5 * s.k5[i] + bt6 * s.k6[i] + bt7 * s.k7[i]);
}

double DenseArc::t_begin() const { return steps_.front().t0; }
double DenseArc::t_end() const {
    const DenseStep& s = steps_.back();
    return s.t0 + s.h;
}

void DenseArc::eval(double t, std::span<double> out) const {
    if (steps_.empty()) throw std::logic_error("DenseArc::eval on empty arc");
    const bool fwd = steps_.back().h > 0.0;
    // Binary search for the step containing t, clamping outside the span.
    std::size_t lo = 0, hi = steps_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        const double t_end_mid = steps_[mid].t0 + steps_[mid].h;
        if (fwd ? (t <= t_end_mid) : (t >= t_end_mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    eval_step(steps_[lo], t, out);
}

std::vector<double> DenseArc::eval(double t) const {
    std::vector<double> out(dim_);
    eval(t, out);
    return out;
}

namespace {

double error_norm(std::span<const double> y0, std::span<const double> y1,
                  std::span<const double> err, const SolverConfig& cfg) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double q = err[i] / sk;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(y0.size()));
}

double initial_step(const Rhs& rhs, double t0, std::span<const double> y0,
                    std::span<const double> f0, double dir, double span,
                    const SolverConfig& cfg) {
    double dn = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y0[i]);
        dn += (y0[i] / sk) * (y0[i] / sk);
        fn += (f0[i] / sk) * (f0[i] / sk);
    }
    double h0 = (dn < 1e-10 || fn < 1e-10) ? 1e-6 : 0.01 * std::sqrt(dn / fn);
    h0 = std::min({h0, std::abs(span), cfg.max_step});

    // One explicit Euler probe to estimate the second derivative scale.
    std::vector<double> y1(y0.size()), f1(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) y1[i] = y0[i] + dir * h0 * f0[i];
    rhs(t0 + dir * h0, y1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        const double sk = cfg.abs_tol + cfg.rel_tol * std::abs(y0[i]);
        const double q = (f1[i] - f0[i]) / sk;
        d2 += q * q;
    }
    d2 = std::sqrt(d2 / static_cast<double>(y0.size())) / h0;
    const double fm = std::max(std::sqrt(fn), d2);
    const double h1 = (fm <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                    : std::pow(0.01 / fm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, std::abs(span), cfg.max_step});
}

struct PendingHit {
    EventHit hit;
    bool terminal;
};

// Localize a sign change of g inside an accepted step by bisection on the
// dense interpolant. Returns the pre-event-side point, never past the root.
EventHit localize(const DenseStep& step, const Event& ev, std::size_t index, double t_lo,
                  double g_lo, double t_hi, const SolverConfig& cfg, std::size_t dim) {
    std::vector<double> y(dim);
    double a = t_lo, ga = g_lo, b = t_hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double width = std::abs(b - a);
        if (std::abs(ga) <= cfg.event_tol) break;
        if (width <= 1e-12 * std::max(1.0, std::abs(b))) break;
        const double m = 0.5 * (a + b);
        DenseArc::eval_step(step, m, y);
        const double gm = ev.g(m, y);
        if ((ga < 0.0) == (gm < 0.0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    DenseArc::eval_step(step, a, y);
    return EventHit{index, a, std::move(y), ga, false};
}

} // namespace

IntegrationResult rk_integrate(const Rhs& rhs, std::span<const double> y0_in, double t0,
                               double t1, const SolverConfig& cfg,
                               std::span<const Event> events) {
    cfg.validate();
    const std::size_t n = y0_in.size();
    const double dir = (t1 >= t0) ? 1.0 : -1.0;

    IntegrationResult res;
    res.arc = DenseArc(n);

    std::vector<double> y(y0_in.begin(), y0_in.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> ytmp(n), y1(n), errv(n);
    std::vector<double> g_prev(events.size());

    double t = t0;
    rhs(t, y, k1);
    for (std::size_t j = 0; j < events.size(); ++j) g_prev[j] = events[j].g(t, y);

    double h = initial_step(rhs, t, y, k1, dir, t1 - t0, cfg);
    double err_prev = 1e-4;
    bool last = false;

    while (!last) {
        if (res.n_accepted + res.n_rejected >= cfg.max_steps)
            throw MaxStepsExceededError("rk_integrate: step budget exhausted at t = " +
                                        std::to_string(t));
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw StepUnderflowError("rk_integrate: step size underflow at t = " +
                                     std::to_string(t));
        h = std::min(h, cfg.max_step);
        if (dir * (t + dir * h - t1) >= 0.0) {
            h = dir * (t1 - t);
            last = true;
        }
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        rhs(t + c2 * hs, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * hs, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * hs, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * hs, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                   a65 * k5[i]);
        rhs(t + hs, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y1[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + hs, y1, k7);
        for (std::size_t i = 0; i < n; ++i)
            errv[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);

        const double err = error_norm(y, y1, errv, cfg);
        if (err > 1.0) {
            res.n_rejected++;
            last = false;
            const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = h * fac;
            continue;
        }

        res.n_accepted++;
        DenseStep step;
        step.t0 = t;
        step.h = hs;
        step.y0 = y;
        step.y1 = y1;
        step.k1 = k1;
        step.k3 = k3;
        step.k4 = k4;
        step.k5 = k5;
        step.k6 = k6;
        step.k7 = k7;

        // Event scan over the accepted step.
        PendingHit* first = nullptr;
        std::vector<PendingHit> pend;
        for (std::size_t j = 0; j < events.size(); ++j) {
            const Event& ev = events[j];
            const double g0 = g_prev[j];
            const double g1 = ev.g(t + hs, y1);
            const bool crossed = (g0 < 0.0) != (g1 < 0.0);
            const bool dir_ok = ev.direction == 0 || (ev.direction > 0 ? g1 > g0 : g1 < g0);
            if (crossed && dir_ok && std::abs(g0) > 0.0) {
                pend.push_back({localize(step, ev, j, t, g0, t + hs, cfg, n), ev.terminal});
            } else if (ev.detect_grazing && !crossed) {
                // Tangential approach: |g| may dip below event_tol inside the
                // step without a sign change. Screen on non-monotonicity of g
                // across the step, then minimize |g| on the dense output.
                std::vector<double> ym(n);
                DenseArc::eval_step(step, t + 0.5 * hs, ym);
                const double gm = ev.g(t + 0.5 * hs, ym);
                const bool dips = (gm - g0) * (g1 - gm) < 0.0;
                if (dips || std::abs(gm) < cfg.event_tol) {
                    double a = t, b = t + hs;
                    for (int it = 0; it < 80 && std::abs(b - a) >
                                                  1e-14 * std::max(1.0, std::abs(b));
                         ++it) {
                        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
                        DenseArc::eval_step(step, m1, ym);
                        const double f1 = std::abs(ev.g(m1, ym));
                        DenseArc::eval_step(step, m2, ym);
                        const double f2 = std::abs(ev.g(m2, ym));
                        if (f1 < f2)
                            b = m2;
                        else
                            a = m1;
                    }
                    const double tm = 0.5 * (a + b);
                    DenseArc::eval_step(step, tm, ym);
                    const double gmin = ev.g(tm, ym);
                    if (std::abs(gmin) < cfg.event_tol) {
                        EventHit hit{j, tm, std::move(ym), gmin, true};
                        pend.push_back({std::move(hit), ev.terminal});
                    }
                }
            }
            g_prev[j] = g1;
        }
        for (auto& p : pend) {
            if (p.terminal && (!first || dir * (p.hit.t - first->hit.t) < 0.0)) first = &p;
        }

        res.arc.push_step(std::move(step));

        if (first) {
            // First-event semantics: stop at the earliest terminal hit; any
            // non-terminal hit earlier in the same step is still recorded.
            for (auto& p : pend) {
                if (!p.terminal && dir * (p.hit.t - first->hit.t) <= 0.0)
                    res.hits.push_back(std::move(p.hit));
            }
            std::sort(res.hits.begin(), res.hits.end(),
                      [dir](const EventHit& a, const EventHit& b) {
                          return dir * (a.t - b.t) < 0.0;
                      });
            res.terminated_by_event = true;
            res.terminal_event = first->hit.event_index;
            res.t_final = first->hit.t;
            res.y_final = first->hit.state;
            res.hits.push_back(std::move(first->hit));
            return res;
        }
        for (auto& p : pend) res.hits.push_back(std::move(p.hit));

        t += hs;
        y.swap(y1);
        k1.swap(k7); // FSAL
        // PI controller: current error with a memory term from the previous step.
        const double err_cur = std::max(err, 1e-10);
        const double fac =
            std::clamp(0.9 * std::pow(err_cur, -0.17) * std::pow(err_prev, 0.04), 0.2, 5.0);
        err_prev = err_cur;
        h = h * fac;
    }

    res.t_final = t;
    res.y_final = y;
    return res;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) == (fb < 0.0))
        throw NoSignChangeError("find_root: f has the same sign at both bracket endpoints");

    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < 500; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b, b = c, c = a;
            fa = fb, fb = fc, fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if ((fb < 0.0) == (fc < 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    return b;
}

namespace {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 nodes/weights).
constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
    double value;
    double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(mid);
    double kron = gk_wk[7] * fc;
    double gauss = gk_wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = hl * gk_x[i];
        const double fv = f(mid - dx) + f(mid + dx);
        kron += gk_wk[i] * fv;
        if (i % 2 == 1) gauss += gk_wg[i / 2] * fv;
    }
    kron *= hl;
    gauss *= hl;
    return {kron, std::abs(kron - gauss)};
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_panels) {
    if (a == b) return 0.0;
    struct Panel {
        double a, b, value, error;
    };
    std::vector<Panel> panels;
    auto push = [&](double lo, double hi) {
        const PanelResult r = gk15(f, lo, hi);
        panels.push_back({lo, hi, r.value, r.error});
    };
    push(a, b);
    while (true) {
        double total_err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total_err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        if (total_err <= abs_tol) break;
        if (static_cast<int>(panels.size()) >= max_panels)
            throw NonConvergenceError("integrate_adaptive: panel budget exhausted", total_err);
        const Panel p = panels[worst];
        panels.erase(panels.begin() + static_cast<std::ptrdiff_t>(worst));
        const double m = 0.5 * (p.a + p.b);
        if (m <= p.a || m >= p.b)
            throw NonConvergenceError("integrate_adaptive: interval underflow", total_err);
        push(p.a, m);
        push(m, p.b);
    }
    double total = 0.0;
    for (const Panel& p : panels) total += p.value;
    return total;
}

double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          bool singular_at_a, double abs_tol) {
    if (!(b > a)) throw std::invalid_argument("integrate_singular: requires b > a");
    const double smax = std::sqrt(b - a);
    auto g = singular_at_a
                 ? std::function<double(double)>([&f, a](double s) { return 2.0 * s * f(a + s * s); })
                 : std::function<double(double)>([&f, b](double s) { return 2.0 * s * f(b - s * s); });
    return integrate_adaptive(g, 0.0, smax, abs_tol);
}

} // namespace folddyn::num
