#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "folddyn/dynamics.hpp"
#include "folddyn/model.hpp"

namespace folddyn::app {

struct InitialCondition {
    enum class Kind { Polar, Level };
    Kind kind = Kind::Level;
    // Polar form, in the scenario's physical units.
    double r = 1.0, phi = 0.0, x = 0.1, u = 1.5707963267948966;
    // Level form.
    double lambda = 2.5, mu = -0.1;
    int component = 1;
    int u_sign = +1;
};

struct Scenario {
    std::string name; // empty for the single [scenario] form

    bool nondimensional = true;
    double m = 1.0, c = 1.0, r0 = 1.0;

    InitialCondition initial;
    dynamics::SimConfig sim;

    std::string out_dir = "out";
    bool degrees = false;
    bool plot_stubs = false;

    OscillatorParams physical_params() const;
    // Internal unit system: integration always runs nondimensionally.
    double length_scale() const { return nondimensional ? 1.0 : r0; }
    double time_scale() const { return nondimensional ? 1.0 : r0 / c; }

    // Initial state in internal units; throws ConfigError/DomainError for
    // infeasible level-form selections.
    PolarState initial_state_internal() const;
};

// Assemble one scenario from the table named `table` (plus the shared
// [tolerances] and [output] tables, which per-scenario keys override).
Scenario scenario_from_config(const Config& cfg, const std::string& table);

// The single [scenario] table, or every [scenario.<name>] table in file
// order. A missing scenario table yields the default scenario.
std::vector<Scenario> scenarios_from_config(const Config& cfg);

// Full effective configuration, printable and re-parseable; this is also
// what `print-config` emits and what the scenario hash is computed over.
std::string canonical_dump(const Scenario& s);

std::uint64_t fnv1a64(const std::string& data);
std::string scenario_hash(const Scenario& s);

} // namespace folddyn::app
