#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "prli/config.hpp"
#include "prli/experiment.hpp"

using prli::json;
using prli::Vector;

namespace {

json minimal_config() {
    return {
        {"name", "unit"},
        {"cost", prli::example_cost_spec()},
        {"scheme", {{"kind", "gd"}, {"gamma", 0.5}}},
        {"signal", {{"kind", "sinusoidal"}, {"n", 3}}},
        {"a", 0.1},
        {"initial", {{"u", {0.0, 0.0, 0.0}}}},
        {"jumps", 5},
    };
}

std::string file_contents(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
    const prli::ExperimentConfig config = prli::parse_config(minimal_config());
    REQUIRE(config.name == "unit");
    REQUIRE(config.amplitude == 0.1);
    REQUIRE(config.quadrature_points == 4096);
    REQUIRE(config.step == 1e-3);
    REQUIRE(config.jumps == 5);
    REQUIRE_FALSE(config.has_plant());
}

TEST_CASE("checked-in example configs parse and match the canonical ones") {
    const std::filesystem::path configs = std::filesystem::path(PRLI_SOURCE_DIR) / "configs";
    REQUIRE(std::filesystem::exists(configs / "example1_gd.json"));
    for (const char* name : {"example1_gd.json", "example1_hb.json", "example2_pgd.json",
                             "example3_plant.json"}) {
        const prli::ExperimentConfig config = prli::load_config((configs / name).string());
        REQUIRE(config.jumps >= 1);
    }

    // the checked-in example-1 file and the built-in canonical config must
    // produce byte-identical arcs
    const prli::ExperimentConfig from_file =
        prli::load_config((configs / "example1_gd.json").string());
    const prli::ExperimentConfig builtin =
        prli::parse_config(prli::example_config_jsons(1)[0].second);
    const auto dir_a = std::filesystem::temp_directory_path() / "prli_cfg_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "prli_cfg_b";
    const prli::RunResult a = prli::run_experiment(from_file, dir_a.string());
    const prli::RunResult b = prli::run_experiment(builtin, dir_b.string());
    REQUIRE(file_contents(a.arc_path) == file_contents(b.arc_path));
}

TEST_CASE("config validation rejects malformed experiments") {
    json no_model = minimal_config();
    no_model.erase("cost");
    REQUIRE_THROWS_AS(prli::parse_config(no_model), prli::ConfigError);

    json both = minimal_config();
    both["plant"] = prli::example_config_jsons(3)[0].second["plant"];
    REQUIRE_THROWS_AS(prli::parse_config(both), prli::ConfigError);

    json zero_dither = minimal_config();
    zero_dither["a"] = 0.0;
    REQUIRE_THROWS_MATCHES(prli::parse_config(zero_dither), prli::ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("a")));

    json bad_dim = minimal_config();
    bad_dim["initial"]["u"] = {0.0, 0.0};
    REQUIRE_THROWS_AS(prli::make_setup(prli::parse_config(bad_dim)), prli::ConfigError);

    json bad_scheme = minimal_config();
    bad_scheme["scheme"] = {{"kind", "nesterov"}, {"gamma", 0.5}};
    REQUIRE_THROWS_MATCHES(prli::parse_config(bad_scheme), prli::ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("scheme")));

    json bad_jumps = minimal_config();
    bad_jumps["jumps"] = 0;
    REQUIRE_THROWS_AS(prli::parse_config(bad_jumps), prli::ConfigError);

    json bad_nodes = minimal_config();
    bad_nodes["signal"] = {{"kind", "piecewise_linear"},
                           {"nodes", {{1.0, 0.0}, {0.0, 1.0, 0.0}}}};
    REQUIRE_THROWS(prli::parse_config(bad_nodes));
}

TEST_CASE("validator warnings surface through the setup") {
    json hb = minimal_config();
    hb["scheme"] = {{"kind", "heavy_ball"}, {"gamma", 0.5}, {"nu", 0.125}};
    const prli::ExperimentSetup setup = prli::make_setup(prli::parse_config(hb));
    bool has_validator_warning = false;
    for (const std::string& w : setup.warnings)
        has_validator_warning = has_validator_warning || w.find("validator") != std::string::npos;
    REQUIRE(has_validator_warning);
}

TEST_CASE("nonzero internal initial states raise the first-window hazard") {
    json risky = minimal_config();
    risky["initial"]["tau"] = 0.5;
    risky["initial"]["p"] = {1.0, 0.0, 0.0};
    const prli::ExperimentSetup setup = prli::make_setup(prli::parse_config(risky));
    int hazard_warnings = 0;
    for (const std::string& w : setup.warnings)
        if (w.find("initial.") != std::string::npos) ++hazard_warnings;
    REQUIRE(hazard_warnings == 2);

    // the run proceeds regardless, with a truncated first window
    const prli::RunResult result = prli::run_experiment(prli::parse_config(risky));
    REQUIRE(result.arc.jump_count() == 5);
    REQUIRE(result.arc.jump_times.front() == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("unwhitened raw signals run but are flagged as uncertified") {
    json raw = minimal_config();
    json nodes = json::array();
    for (const Vector& node : prli::example_signal_nodes().nodes)
        nodes.push_back({node[0], node[1], node[2]});
    raw["signal"] = {{"kind", "piecewise_linear"}, {"nodes", nodes}, {"whiten", false}};
    const prli::ExperimentSetup setup = prli::make_setup(prli::parse_config(raw));
    // the published constants are nearly white, so the certificates hold even raw
    REQUIRE(setup.signal.moment_tolerance() == Catch::Approx(1e-3));
    REQUIRE(prli::is_certified(setup.signal, 4096));
}

TEST_CASE("ramp-form signals are exposed behind the opt-in flag") {
    json ramp = minimal_config();
    json nodes = json::array();
    for (const Vector& node : prli::example_signal_nodes().nodes)
        nodes.push_back({node[0], node[1], node[2]});
    ramp["signal"] = {{"kind", "piecewise_linear"},
                      {"nodes", nodes},
                      {"whiten", false},
                      {"form", "ramp"}};
    const prli::ExperimentSetup setup = prli::make_setup(prli::parse_config(ramp));
    bool flagged = false;
    for (const std::string& w : setup.warnings)
        flagged = flagged || w.find("certificates") != std::string::npos;
    REQUIRE(flagged);  // the discontinuous reading fails certification
}

TEST_CASE("config file loader reports parse failures") {
    const auto bad = std::filesystem::temp_directory_path() / "prli_bad.json";
    std::ofstream(bad) << "{ not json";
    REQUIRE_THROWS_AS(prli::load_config(bad.string()), prli::ConfigError);
    REQUIRE_THROWS_AS(prli::load_config("/nonexistent/nowhere.json"), prli::ConfigError);
}
