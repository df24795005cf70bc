#pragma once
#include <optional>
#include <string>
#include <vector>

#include "folddyn/characteristics.hpp"
#include "folddyn/model.hpp"
#include "folddyn/numerics.hpp"

namespace folddyn::dynamics {

struct ElRates {
    double dr, dx, du;
};

// Reduced Euler-Lagrange field in (r, x, u):
//   dr = c sqrt(x) cos u
//   dx = -c (E_r/E_x) sqrt(x) cos u
//   du = -(c sin u)/(2 r sqrt(x) L_x) (2x L_x + r L_r)
// Undefined on S (E_x or L_x ~ 0) and for x = 0 or r = 0.
ElRates el_rhs(const OscillatorParams& p, double r, double x, double u);

// dphi = (c sqrt(x)/r) sin u; phi is recovered by quadrature along the arc.
double phi_rate(const OscillatorParams& p, double r, double x, double u);

// The Euler-Lagrange field multiplied by E_x: finite and smooth through S1,
// with the physical-time rate carried in dt = E_x. Integrate with the sign
// of E_x flipped where E_x < 0 so that physical time advances.
struct RescaledRates {
    double dr, dx, du, dt;
};
RescaledRates rescaled_rhs(const OscillatorParams& p, double r, double x, double u);

enum class Termination {
    TimeLimit,
    ImpactS1,
    NearS2,
    NearGamma,
    NearLightSpeed,
    ChartSingular, // x or r under the chart floor (radial/degenerate starts)
};
const char* to_string(Termination t);

enum class BranchPolicy { FollowBoth, FollowSheet1, FollowSheet2 };

struct SimConfig {
    num::SolverConfig solver{1e-10, 1e-12, 0.25, 1e-12, 5'000'000};
    double t_max = 10.0;
    int max_jumps = 8;
    BranchPolicy branch_policy = BranchPolicy::FollowBoth;
    int branch_budget = 1024;
    // Post-jump restart offset in x on each fold sheet; r is then corrected
    // so that E and I recover the pre-jump values exactly.
    double eps_restart = 1e-7;
    // NearS2 / NearGamma / NearLightSpeed guard tolerance (nondimensional).
    double halt_tol = 1e-6;
    double tol_radial = 1e-8;
    bool radial_limit_mode = false;
    // Chart floors triggering ChartSingular.
    double x_floor = 1e-9;
    double r_floor = 1e-9;
};

struct Sample {
    double t;
    PolarState state;
};

struct TrajectoryArc {
    std::vector<Sample> samples;
    double lambda = 0.0; // E / mc^2 at the arc start
    double mu = 0.0;     // I / (m c r0) at the arc start
    Termination termination = Termination::TimeLimit;
    double lambda_drift = 0.0; // max |lambda - lambda_0| / lambda_0 over samples
    double mu_drift = 0.0;     // max |mu - mu_0| (absolute) over samples
    double t_begin = 0.0;
    double t_end = 0.0;
    int branch_id = 0;
    int parent_id = -1;
    int sheet = 0; // -1 low-x restart sheet, +1 high-x, 0 root arc
};

struct JumpEvent {
    double t = 0.0;
    PolarState arrival;
    std::vector<PolarState> departures;
    std::vector<int> departure_sheets; // -1 low-x sheet, +1 high-x sheet
    characteristics::JumpSolution jump;
    int arrival_arc = -1;
};

struct BranchError {
    int branch_id;
    std::string message;
};

struct HybridTrajectory {
    std::vector<TrajectoryArc> arcs; // tree linked by parent_id, BFS order
    std::vector<JumpEvent> jumps;
    std::vector<BranchError> errors;
    int jump_count = 0;
    double wall_seconds = 0.0;
};

// Single smooth arc from state0 at physical time t0, integrated in fictive
// time with impact detection against S1 and the guard events.
TrajectoryArc integrate_arc(const OscillatorParams& p, const PolarState& state0, double t0,
                            const SimConfig& cfg);

// Decisive-point transition at a fold arrival: departures at
// (r1(x), phi + delta_phi, x, pi - u) restarted on one or both fold sheets
// with (E, I) projected back to the arrival values exactly. Tangent
// arrivals produce a single grazing continuation on the arrival sheet.
JumpEvent apply_transition(const OscillatorParams& p, const PolarState& arrival, double t,
                           int arrival_sheet_sign, const SimConfig& cfg);

// Alternate integrate_arc / apply_transition up to t_max, max_jumps or a
// halt condition; branch errors are collected without aborting siblings.
HybridTrajectory simulate(const OscillatorParams& p, const PolarState& state0,
                          const SimConfig& cfg);

struct LevelTopology {
    double lambda = 0.0;
    int components = 1; // 1 or 3
    bool degenerate_contact = false; // lambda = 2: single-point contact at (r0, 0)
    std::optional<double> x1, x2; // torus abscissae, present iff lambda > 2
    std::optional<double> x_c;    // precession-center abscissa, when the root exists
};
LevelTopology level_topology(const OscillatorParams& p, double lambda);

// Radius on the energy level: E(r_en(x, lambda), x) = lambda mc^2.
double r_en(const OscillatorParams& p, double x, double lambda);
// Largest admissible x on the level (r_en = 0 there).
double level_x_max(const OscillatorParams& p, double lambda);

struct ClosedOrbitReport {
    double period = 0.0;
    double residual_x = 0.0;
    double residual_r = 0.0;
    double x_start = 0.0;
    double min_x = 0.0;
    double margin_above_x2 = 0.0;
};

// Integrate one loop of a closed orbit around the precession center and
// report the Poincare first-return residual. Throws NonClosureError when
// the residual exceeds 1e-6.
ClosedOrbitReport closed_orbit_check(const OscillatorParams& p, double lambda, double mu);

// Deterministic start state on the level set: component 1..3 selects the
// connected component of Sigma_lambda \ S (1 for lambda <= 2); the state is
// placed at u = u_sign * pi/2 with x solved from I = mu (first root in x).
PolarState state_on_level(const OscillatorParams& p, double lambda, double mu, int component,
                          int u_sign);

} // namespace folddyn::dynamics
