#pragma once
#include <string>
#include <vector>

#include "folddyn/dynamics.hpp"
#include "scenario.hpp"

namespace folddyn::app {

// Exit-code contract shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_numerical = 1;
inline constexpr int exit_halt = 2;
inline constexpr int exit_config = 64;

struct RunResult {
    int exit_code = exit_ok;
    std::string trajectory_csv;
    std::string summary_json;
};

// Execute one scenario and write trajectory.csv + summary.json (and an
// optional plot stub) into out_dir. Integration runs in internal units;
// physical scales are applied to the emitted t and r columns only.
RunResult run_simulate(const Scenario& s, const std::string& out_dir);

// Run a batch of scenarios in parallel workers (capped by the
// FOLD_DYNAMICS_THREADS environment variable), each into out_root/<name>.
// Returns the worst exit code.
int run_batch(const std::vector<Scenario>& scenarios, const std::string& out_root);

// Characteristic curves q(x) sin u = a for each requested constant, plus
// the q(x) profile.
int emit_characteristics(const OscillatorParams& p, const std::vector<double>& a_values,
                         int samples, const std::string& out_dir, bool degrees);

// C1/C2 curves, level curves and the topology table for each lambda.
int emit_levelsets(const OscillatorParams& p, const std::vector<double>& lambdas, int samples,
                   const std::string& out_dir);

// Single-jump report at (x_bar, u_bar), including the quadrature-vs-flow
// cross-check residual. Returns the JSON text.
std::string jump_report(const OscillatorParams& p, double x_bar, double u_bar, bool degrees,
                        int* exit_code);

// Snell table over the incidence angles (radians unless degrees is set).
int emit_optics(double n_plus, double n_minus, const std::vector<double>& phis,
                const std::string& out_dir, bool degrees);

} // namespace folddyn::app
