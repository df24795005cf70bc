#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "folddyn/angles.hpp"
#include "folddyn/version.hpp"
#include "runner.hpp"
#include "scenario.hpp"

using namespace folddyn;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    bool degrees = false;
};

app::Config load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) return app::Config::parse_string("");
    return app::Config::parse_file(g.config_path);
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const app::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return app::exit_config;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return app::exit_config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return app::exit_numerical;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"fold-singular oscillator simulator"};
    cli.set_version_flag("--version", std::string(version));
    cli.require_subcommand(1);
    // Global options (--config/--out/--degrees) may follow the subcommand.
    cli.fallthrough();

    GlobalOpts g;
    cli.add_option("--config", g.config_path, "declarative scenario/configuration file");
    cli.add_option("--out", g.out_dir, "output directory (overrides [output].dir)");
    cli.add_flag("--degrees", g.degrees, "emit angles in degrees (output only)");
    // No RNG exists anywhere in the artifact; the flag is reserved so that
    // scripted callers can pass it uniformly. Giving it a value is an error.
    bool seedless = false;
    cli.add_flag("--seedless", seedless, "reserved; the simulator is deterministic")
        ->disable_flag_override();

    auto* sim = cli.add_subcommand("simulate", "run a scenario (or batch) to CSV + JSON");

    auto* chars = cli.add_subcommand("characteristics", "emit characteristic-curve datasets");
    std::vector<double> a_values{-0.05, -0.1, -0.2, -0.4};
    int char_samples = 400;
    chars->add_option("--a", a_values, "characteristic constants (internal units)")
        ->delimiter(',');
    chars->add_option("--samples", char_samples, "sample count per curve");

    auto* levels = cli.add_subcommand("levelsets", "emit level curves and topology table");
    std::vector<double> lambdas{1.2, 2.0, 2.5, 3.0, 5.0};
    int level_samples = 400;
    levels->add_option("--lambdas", lambdas, "energy levels (units of mc^2)")
        ->delimiter(',');
    levels->add_option("--samples", level_samples, "sample count per curve");

    auto* jump = cli.add_subcommand("jump", "single-jump calculator at (x_bar, u_bar)");
    double x_bar = 0.4, u_bar = 0.25 * pi;
    jump->add_option("--x-bar", x_bar, "fold abscissa of the arrival")->required();
    jump->add_option("--u-bar", u_bar, "arrival angle u (radians)")->required();

    auto* opt = cli.add_subcommand("optics", "Snell / total-reflection table");
    double n_plus = 1.0, n_minus = 1.5;
    std::vector<double> phis;
    opt->add_option("--n-plus", n_plus, "refraction index of the incoming side");
    opt->add_option("--n-minus", n_minus, "refraction index of the far side");
    opt->add_option("--phi", phis, "incidence angles (radians; degrees with --degrees)")
        ->delimiter(',');

    auto* print_cfg = cli.add_subcommand("print-config",
                                         "print the full effective configuration");

    CLI11_PARSE(cli, argc, argv);

    return guarded([&]() -> int {
        const app::Config cfg = load_config(g);

        if (sim->parsed()) {
            std::vector<app::Scenario> scenarios = app::scenarios_from_config(cfg);
            for (app::Scenario& s : scenarios) {
                if (!g.out_dir.empty()) s.out_dir = g.out_dir;
                if (g.degrees) s.degrees = true;
            }
            if (scenarios.size() == 1)
                return app::run_simulate(scenarios[0], scenarios[0].out_dir).exit_code;
            return app::run_batch(scenarios, scenarios[0].out_dir);
        }

        // The analysis subcommands share the model table of the scenario.
        std::vector<app::Scenario> scenarios = app::scenarios_from_config(cfg);
        const app::Scenario& s0 = scenarios.front();
        const OscillatorParams p = OscillatorParams::nondimensional();
        const std::string out = !g.out_dir.empty() ? g.out_dir : s0.out_dir;
        const bool degrees = g.degrees || s0.degrees;

        if (chars->parsed())
            return app::emit_characteristics(p, a_values, char_samples, out, degrees);
        if (levels->parsed()) return app::emit_levelsets(p, lambdas, level_samples, out);
        if (jump->parsed()) {
            int code = 0;
            const double u_in = degrees ? deg_to_rad(u_bar) : u_bar;
            std::fputs(app::jump_report(p, x_bar, u_in, degrees, &code).c_str(), stdout);
            return code;
        }
        if (opt->parsed()) {
            std::vector<double> phi_list = phis;
            if (phi_list.empty())
                for (int d = 5; d <= 85; d += 5) phi_list.push_back(deg_to_rad(d));
            else if (degrees)
                for (double& v : phi_list) v = deg_to_rad(v);
            return app::emit_optics(n_plus, n_minus, phi_list, out, degrees);
        }
        if (print_cfg->parsed()) {
            for (const app::Scenario& s : scenarios)
                std::fputs(app::canonical_dump(s).c_str(), stdout);
            return app::exit_ok;
        }
        return app::exit_config;
    });
}
