#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "prli/prli.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitSolverEscape = 3;

void print_run(const prli::RunResult& result) {
    std::cout << "  jumps: " << result.arc.jump_count()
              << (result.arc.escaped() ? "  [solver escape]" : "") << "\n";
    for (const std::string& warning : result.warnings)
        std::cout << "  warning: " << warning << "\n";
    if (result.report) {
        std::cout << "  final distance to target: " << result.report->final_distance << "\n";
        std::cout << "  ultimate bound estimate:   " << result.report->ultimate_bound_estimate
                  << "\n";
    }
    if (!result.arc_path.empty())
        std::cout << "  wrote " << result.arc_path << " and " << result.summary_path << "\n";
}

int run_configs(const std::vector<std::pair<std::string, prli::json>>& configs,
                const std::string& out_dir, bool strict) {
    bool escaped = false;
    for (const auto& [label, spec] : configs) {
        const prli::ExperimentConfig config = prli::parse_config(spec);
        std::cout << label << ":\n";
        const prli::RunResult result = prli::run_experiment(config, out_dir);
        if (strict && !result.warnings.empty()) {
            for (const std::string& warning : result.warnings)
                std::cerr << "error (strict): " << warning << "\n";
            return kExitConfigError;
        }
        print_run(result);
        escaped = escaped || result.arc.escaped();
    }
    return escaped ? kExitSolverEscape : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-free feedback optimization with resetting learning integrators"};
    app.require_subcommand(1);

    int example_index = 1;
    std::string out_dir = "prli_out";
    bool strict = false;

    CLI::App* example = app.add_subcommand("example", "Run a canonical example experiment");
    example->add_option("index", example_index, "Example index")->check(CLI::Range(1, 3))->required();
    example->add_option("--output", out_dir, "Output directory");

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("config", config_path, "Path to a JSON config")->required();
    run->add_option("--output", out_dir, "Output directory");
    run->add_flag("--strict", strict, "Treat validator warnings as errors");

    std::string sweep_config_path;
    std::vector<double> epsilons;
    CLI::App* sweep = app.add_subcommand("sweep", "Timescale sweep of a plant experiment");
    sweep->add_option("config", sweep_config_path, "Path to a JSON plant config")->required();
    sweep->add_option("--epsilon", epsilons, "Timescales to sweep")->required()->expected(-2);
    sweep->add_option("--output", out_dir, "Output directory");

    bool verify_strict = false;
    std::string fault;
    bool verify_sinusoidal = false;
    CLI::App* verify = app.add_subcommand("verify", "Run the property verification suite");
    verify->add_flag("--strict", verify_strict, "Fail on validator warnings");
    verify->add_option("--fault", fault, "Inject a named fault (p_x10)")
        ->check(CLI::IsMember({"p_x10"}));
    verify->add_flag("--sinusoidal", verify_sinusoidal,
                     "Substitute the analytic signal for the canonical one");

    CLI11_PARSE(app, argc, argv);

    try {
        if (example->parsed())
            return run_configs(prli::example_config_jsons(example_index), out_dir, false);

        if (run->parsed()) {
            const prli::ExperimentConfig config = prli::load_config(config_path);
            if (strict) {
                // reject before simulating when validation is not clean
                const prli::ExperimentSetup setup = prli::make_setup(config);
                if (!setup.warnings.empty()) {
                    for (const std::string& warning : setup.warnings)
                        std::cerr << "error (strict): " << warning << "\n";
                    return kExitConfigError;
                }
            }
            std::cout << config.name << ":\n";
            const prli::RunResult result = prli::run_experiment(config, out_dir);
            print_run(result);
            return result.arc.escaped() ? kExitSolverEscape : kExitOk;
        }

        if (sweep->parsed()) {
            const prli::ExperimentConfig config = prli::load_config(sweep_config_path);
            const std::vector<prli::SgpasRow> rows = prli::sgpas_sweep(config, epsilons);
            prli::json table = prli::json::array();
            std::cout << "epsilon  max_post_jump_deviation\n";
            for (const prli::SgpasRow& row : rows) {
                std::cout << "  " << row.epsilon << "  "
                          << (row.escaped ? "solver escape" : std::to_string(row.max_deviation))
                          << "\n";
                table.push_back({{"epsilon", row.epsilon},
                                 {"max_deviation", row.max_deviation},
                                 {"escaped", row.escaped}});
            }
            std::filesystem::create_directories(out_dir);
            prli::write_text_file(out_dir + "/" + config.name + "_sweep.json",
                                  table.dump(2) + "\n");
            return kExitOk;
        }

        if (verify->parsed()) {
            prli::VerifyOptions options;
            options.strict = verify_strict;
            options.fault = fault;
            options.sinusoidal_signal = verify_sinusoidal;
            const std::vector<prli::PropertyResult> results = prli::run_verification(options);
            for (const prli::PropertyResult& r : results)
                std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail
                          << ")\n";
            return prli::all_passed(results) ? kExitOk : kExitVerificationFailure;
        }
    } catch (const prli::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitVerificationFailure;
    }
    return kExitOk;
}
