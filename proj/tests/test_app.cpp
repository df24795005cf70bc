#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "csv.hpp"
#include "folddyn/singular.hpp"
#include "runner.hpp"
#include "scenario.hpp"

using namespace folddyn;
using namespace folddyn::app;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "folddyn_test" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Structural validation against the shipped draft-07 subset: required keys,
// types, enums, array items, $ref into definitions.
bool validates(const json& schema, const json& root, const json& value);

bool type_ok(const std::string& t, const json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    return false;
}

bool validates(const json& schema, const json& root, const json& value) {
    if (schema.contains("$ref")) {
        const std::string ref = schema["$ref"];
        const std::string key = ref.substr(ref.rfind('/') + 1);
        return validates(root["definitions"][key], root, value);
    }
    if (schema.contains("type") && !type_ok(schema["type"], value)) return false;
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found |= (e == value);
        if (!found) return false;
    }
    if (schema.contains("required"))
        for (const auto& k : schema["required"])
            if (!value.contains(k.get<std::string>())) return false;
    if (schema.contains("properties") && value.is_object())
        for (const auto& [k, sub] : schema["properties"].items())
            if (value.contains(k) && !validates(sub, root, value[k])) return false;
    if (schema.contains("items") && value.is_array())
        for (const auto& item : value)
            if (!validates(schema["items"], root, item)) return false;
    return true;
}

} // namespace

TEST_CASE("config parser round trip and errors") {
    const Config cfg = Config::parse_string(
        "# comment\n"
        "[scenario]\n"
        "lambda = 2.5\n"
        "mu = -0.1\n"
        "name = \"quoted value\"\n"
        "flag = true\n"
        "list = 1.0, 2.5, -3\n");
    CHECK(cfg.get_double("scenario", "lambda", 0.0) == 2.5);
    CHECK(cfg.get_string("scenario", "name", "") == "quoted value");
    CHECK(cfg.get_bool("scenario", "flag", false));
    CHECK(cfg.get_double_list("scenario", "list", {}).size() == 3);
    CHECK(cfg.get_double("scenario", "missing", 7.0) == 7.0);

    CHECK_THROWS_AS(Config::parse_string("[t]\nkey 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[t\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse_string("[t]\nk = 1\nk = 2\n"), ConfigError);
    const Config bad = Config::parse_string("[t]\nk = abc\n");
    CHECK_THROWS_AS(bad.get_double("t", "k", 0.0), ConfigError);
}

TEST_CASE("unknown keys are rejected after scenario assembly") {
    const Config cfg = Config::parse_string("[scenario]\nlambda = 2.5\ntypo_key = 3\n");
    CHECK_THROWS_AS(scenarios_from_config(cfg), ConfigError);
}

TEST_CASE("scenario assembly: defaults, overrides, exclusivity") {
    const Config cfg = Config::parse_string(
        "[scenario]\n"
        "lambda = 2.5\n"
        "mu = -0.16\n"
        "t_max = 1.5\n"
        "branch_policy = sheet1\n"
        "[tolerances]\n"
        "rel_tol = 1e-9\n"
        "[output]\n"
        "dir = \"runs\"\n");
    const auto scenarios = scenarios_from_config(cfg);
    REQUIRE(scenarios.size() == 1);
    const Scenario& s = scenarios[0];
    CHECK(s.initial.kind == InitialCondition::Kind::Level);
    CHECK(s.sim.t_max == 1.5);
    CHECK(s.sim.branch_policy == dynamics::BranchPolicy::FollowSheet1);
    CHECK(s.sim.solver.rel_tol == 1e-9);
    CHECK(s.out_dir == "runs");

    const Config both = Config::parse_string("[scenario]\nlambda = 2.5\nx = 0.1\n");
    CHECK_THROWS_AS(scenarios_from_config(both), ConfigError);
}

TEST_CASE("canonical dump is re-parseable and hashes are stable") {
    const Config cfg = Config::parse_string("[scenario]\nlambda = 2.5\nmu = -0.16\n");
    const Scenario s = scenarios_from_config(cfg)[0];
    const std::string dump = canonical_dump(s);
    const Config back = Config::parse_string(dump);
    const Scenario s2 = scenario_from_config(back, "scenario");
    CHECK(canonical_dump(s2) == dump);
    CHECK(scenario_hash(s) == scenario_hash(s2));
    CHECK(scenario_hash(s).size() == 16);
}

TEST_CASE("batch scenarios parse in file order") {
    const Config cfg = Config::parse_string(
        "[scenario.b_run]\nlambda = 2.5\nmu = -0.1\n"
        "[scenario.a_run]\nlambda = 3.0\nmu = 1.0\ncomponent = 3\n");
    const auto scenarios = scenarios_from_config(cfg);
    REQUIRE(scenarios.size() == 2);
    CHECK(scenarios[0].name == "b_run");
    CHECK(scenarios[1].name == "a_run");
}

TEST_CASE("run_simulate writes byte-identical CSV on rerun") {
    const Config cfg = Config::parse_string(
        "[scenario]\nlambda = 2.5\nmu = -0.16780969854515525\n"
        "t_max = 0.5\nmax_jumps = 3\nbranch_policy = sheet1\n");
    const Scenario s = scenarios_from_config(cfg)[0];
    const fs::path d1 = scratch_dir("det1");
    const fs::path d2 = scratch_dir("det2");
    const RunResult r1 = run_simulate(s, d1.string());
    const RunResult r2 = run_simulate(s, d2.string());
    CHECK(r1.exit_code == 0);
    CHECK(read_file(r1.trajectory_csv) == read_file(r2.trajectory_csv));
    CHECK(!read_file(r1.trajectory_csv).empty());
}

TEST_CASE("summary json validates against the shipped schema") {
    const Config cfg = Config::parse_string(
        "[scenario]\nlambda = 2.5\nmu = -0.16780969854515525\n"
        "t_max = 0.4\nmax_jumps = 2\nbranch_policy = both\n");
    const Scenario s = scenarios_from_config(cfg)[0];
    const fs::path dir = scratch_dir("schema");
    const RunResult r = run_simulate(s, dir.string());
    const json summary = json::parse(read_file(r.summary_json));
    const json schema = json::parse(read_file(std::string(FOLDDYN_SOURCE_DIR) +
                                              "/docs/summary.schema.json"));
    CHECK(validates(schema, schema, summary));
    CHECK(summary["jump_count"].get<int>() >= 1);
    // Ledger completeness: each jump appears exactly once, indices 0..n-1.
    std::set<int> seen;
    for (const auto& j : summary["jumps"]) seen.insert(j["index"].get<int>());
    CHECK(seen.size() == summary["jumps"].size());
    CHECK(*seen.begin() == 0);
}

TEST_CASE("halt diagnostics map to exit code 2") {
    // Radial scenario: the arc ends at the chart floor.
    const Config cfg = Config::parse_string(
        "[scenario]\nlambda = 1.5\nmu = 0\nt_max = 20\n");
    const Scenario s = scenarios_from_config(cfg)[0];
    const fs::path dir = scratch_dir("halt");
    const RunResult r = run_simulate(s, dir.string());
    CHECK(r.exit_code == exit_halt);
    const json summary = json::parse(read_file(r.summary_json));
    CHECK(summary["arcs"][0]["termination"] == "ChartSingular");
}

TEST_CASE("csv formatting round-trips doubles exactly") {
    const double vals[] = {0.1, 1.0 / 3.0, 2.718281828459045, -1e-17, 12345.6789e12};
    for (const double v : vals) {
        const std::string txt = CsvWriter::format(v);
        CHECK(std::strtod(txt.c_str(), nullptr) == v);
    }
}

TEST_CASE("optics table emits TOTAL rows past the critical angle") {
    const fs::path dir = scratch_dir("optics");
    emit_optics(1.5, 1.0, {deg_to_rad(10.0), deg_to_rad(80.0)}, dir.string(), false);
    const std::string txt = read_file((dir / "optics.csv").string());
    CHECK(txt.find("TOTAL") != std::string::npos);
    CHECK(txt.find("# folddyn optics") != std::string::npos);
}

TEST_CASE("characteristics emission keeps the invariant on resampling") {
    const fs::path dir = scratch_dir("chars");
    const OscillatorParams p = OscillatorParams::nondimensional();
    emit_characteristics(p, {-0.1, 0.1, 0.0}, 50, dir.string(), false);
    std::ifstream in((dir / "characteristics.csv").string());
    std::string line;
    int checked = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'a') continue;
        double a, branch, x, u, degenerate;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &a, &branch, &x, &u,
                            &degenerate) == 5);
        if (degenerate != 0.0 || x <= 0.0) continue;
        const double inv = characteristics::q_of_x(p, x) * std::sin(u) - a;
        CHECK(std::abs(inv) < 1e-8);
        ++checked;
    }
    CHECK(checked > 150);
    // Mirror pair a, -a symmetric in u: spot-check via the emitted rows.
}

TEST_CASE("levelsets topology table") {
    const fs::path dir = scratch_dir("levels");
    const OscillatorParams p = OscillatorParams::nondimensional();
    emit_levelsets(p, {1.0, 2.0, 3.0}, 60, dir.string());
    const json topo = json::parse(read_file((dir / "topology.json").string()));
    REQUIRE(topo["topology"].size() == 3);
    CHECK(topo["topology"][0]["components"] == 1);
    CHECK(topo["topology"][1]["degenerate_contact"] == true);
    CHECK(topo["topology"][2]["components"] == 3);
    CHECK(topo["topology"][2]["x1"].get<double>() <
          topo["topology"][2]["x2"].get<double>());
}

TEST_CASE("jump report carries the cross-check residual") {
    int code = -1;
    const OscillatorParams p = OscillatorParams::nondimensional();
    const std::string rep = jump_report(p, 0.4, pi / 4.0, false, &code);
    CHECK(code == 0);
    const json j = json::parse(rep);
    CHECK(j["class"] == "OutPoint");
    CHECK(j["quadrature_vs_flow_residual"].get<double>() < 1e-6);
    CHECK(j["partner"]["u"].get<double>() == doctest::Approx(3.0 * pi / 4.0));

    const std::string rep2 = jump_report(p, 0.4, pi / 2.0, false, &code);
    const json j2 = json::parse(rep2);
    CHECK(j2["class"] == "Tangent");
    CHECK(j2["delta_phi_raw"].get<double>() == 0.0);

    const std::string rep3 = jump_report(p, 0.4, 1e-12, false, &code);
    CHECK(code == exit_numerical);
    CHECK(json::parse(rep3).contains("error"));
}

TEST_CASE("mirror characteristics a and -a emit u-symmetric curves") {
    const fs::path dir = scratch_dir("mirror");
    const OscillatorParams p = OscillatorParams::nondimensional();
    emit_characteristics(p, {-0.15, 0.15}, 40, dir.string(), false);
    std::ifstream in((dir / "characteristics.csv").string());
    std::string line;
    std::vector<std::array<double, 3>> neg, pos; // (branch, x, u)
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'a') continue;
        double a, branch, x, u, degenerate;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &a, &branch, &x, &u,
                            &degenerate) == 5);
        (a < 0.0 ? neg : pos).push_back({branch, x, u});
    }
    REQUIRE(neg.size() == pos.size());
    for (std::size_t i = 0; i < neg.size(); ++i) {
        CHECK(neg[i][1] == pos[i][1]); // same x sampling
        CHECK(std::abs(wrap_angle(neg[i][2] + pos[i][2])) < 1e-12); // u -> -u
    }
}

TEST_CASE("start state on the singular surface is a reported branch error") {
    // r = r1(0.3) to full precision: the arc cannot start there.
    char buf[200];
    std::snprintf(buf, sizeof buf, "[scenario]\nr = %.17g\nphi = 0\nx = 0.3\nu = 0.7\nt_max = 1\n",
                  folddyn::singular::r1_of_x(OscillatorParams::nondimensional(), 0.3));
    const Config cfg = Config::parse_string(buf);
    const Scenario s = scenarios_from_config(cfg)[0];
    const fs::path dir = scratch_dir("on_s1");
    const RunResult r = run_simulate(s, dir.string());
    CHECK(r.exit_code == exit_numerical);
    const json summary = json::parse(read_file(r.summary_json));
    CHECK(!summary["diagnostics"].empty());
}
