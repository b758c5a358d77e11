#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "prli/analysis.hpp"
#include "prli/experiment.hpp"
#include "prli/verify.hpp"

using prli::Matrix;
using prli::Vector;

namespace {

prli::CostFunction example_cost() {
    return prli::quadratic_cost((Matrix(3, 3) << 2, 0, 1, 0, 1, 0, 1, 0, 2).finished(),
                                (Vector(3) << 1, -1, 5).finished(), -20.0);
}

// synthetic arc resting at a point: initial sample plus `jumps` post-jump samples
prli::HybridArc constant_arc(const Vector& point, int jumps) {
    prli::HybridArc arc;
    Vector state = Vector::Zero(2 * point.size() + 1);
    state.head(point.size()) = point;
    arc.samples.push_back({0.0, 0, state});
    for (int j = 1; j <= jumps; ++j) {
        arc.samples.push_back({static_cast<double>(j), j, state});
        arc.post_jump.push_back({static_cast<double>(j), j, state});
        arc.pre_jump.push_back({static_cast<double>(j), j - 1, state});
        arc.jump_times.push_back(static_cast<double>(j));
    }
    return arc;
}

std::string file_contents(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("convergence report of an arc resting at the target") {
    const Vector target = (Vector(3) << 1, -1, 5).finished();
    const prli::ConvergenceReport report =
        prli::convergence_report(constant_arc(target, 8), target);
    REQUIRE(report.final_distance == 0.0);
    for (const auto& [tolerance, jumps] : report.jumps_to_tolerance) REQUIRE(jumps == 0);
    REQUIRE(report.ultimate_bound_estimate == 0.0);
}

TEST_CASE("convergence report needs at least four jumps") {
    const Vector target = Vector::Zero(3);
    REQUIRE_THROWS_AS(prli::convergence_report(constant_arc(target, 3), target),
                      std::invalid_argument);
}

TEST_CASE("tolerance hits are nonincreasing in the tolerance") {
    const prli::ExperimentConfig config =
        prli::parse_config(prli::example_config_jsons(1)[0].second);
    const prli::RunResult run = prli::run_experiment(config);
    REQUIRE(run.report.has_value());
    // tolerances are listed loose to tight, so reached counts must not
    // decrease, and once a tolerance is missed all tighter ones are missed
    int previous = run.report->jumps_to_tolerance.front().second;
    for (const auto& [tolerance, jumps] : run.report->jumps_to_tolerance) {
        if (previous < 0)
            REQUIRE(jumps < 0);
        else if (jumps >= 0)
            REQUIRE(jumps >= previous);
        previous = jumps;
    }
    REQUIRE(run.report->ultimate_bound_estimate <= 0.5);
}

TEST_CASE("integrator envelope holds on a canonical run and catches tampering") {
    const prli::ExperimentConfig config =
        prli::parse_config(prli::example_config_jsons(1)[0].second);
    const prli::RunResult run = prli::run_experiment(config);
    const prli::OracleConfig cfg(config.amplitude,
                                 prli::parse_signal(config.signal_spec, config.quadrature_points),
                                 config.quadrature_points);

    const prli::IntegratorBoundReport clean = prli::integrator_bound_check(
        run.arc, example_cost().measurement(), cfg, run.layout);
    REQUIRE(clean.ok());
    REQUIRE(clean.samples_checked > 0);
    REQUIRE(clean.worst_ratio <= 1.0);

    prli::HybridArc tampered = run.arc;
    for (prli::HybridSample& s : tampered.samples)
        s.x.segment(run.layout.p_offset(), run.layout.n) *= 10.0;
    const prli::IntegratorBoundReport caught = prli::integrator_bound_check(
        tampered, example_cost().measurement(), cfg, run.layout);
    REQUIRE_FALSE(caught.ok());
}

TEST_CASE("an identically zero integrator trivially satisfies the envelope") {
    prli::HybridArc arc = constant_arc(Vector::Zero(3), 5);  // p = 0 everywhere
    const auto zero_cost = [](const Vector&) { return 0.0; };
    const prli::OracleConfig cfg(0.1, prli::sinusoidal_upe(3));
    const prli::IntegratorBoundReport report =
        prli::integrator_bound_check(arc, zero_cost, cfg, prli::PrliLayout{3, 0, 0});
    REQUIRE(report.ok());
}

TEST_CASE("scheme comparison ranks the momentum method first at coarse tolerance") {
    const auto configs = prli::example_config_jsons(1);
    const prli::RunResult gd = prli::run_experiment(prli::parse_config(configs[0].second));
    const prli::RunResult hb = prli::run_experiment(prli::parse_config(configs[1].second));
    const prli::SchemeOrdering ordering = prli::compare_schemes(
        {{"gd", *gd.report}, {"hb", *hb.report}}, 0.5);
    REQUIRE(ordering.ranking.front().label == "hb");
    REQUIRE(ordering.ranking.front().jumps_to_tolerance <
            ordering.ranking.back().jumps_to_tolerance);
}

TEST_CASE("scheme comparison handles singletons, ties, and non-convergent runs") {
    const auto configs = prli::example_config_jsons(1);
    const prli::RunResult gd = prli::run_experiment(prli::parse_config(configs[0].second));

    const prli::SchemeOrdering single = prli::compare_schemes({{"only", *gd.report}}, 0.5);
    REQUIRE(single.ranking.size() == 1);

    const prli::SchemeOrdering tie =
        prli::compare_schemes({{"a", *gd.report}, {"b", *gd.report}}, 0.5);
    REQUIRE(tie.ranking[0].jumps_to_tolerance == tie.ranking[1].jumps_to_tolerance);
    REQUIRE(tie.ranking[0].label == "a");  // stable order on ties

    prli::ConvergenceReport never;
    never.jumps_to_tolerance = {{1.0, -1}, {0.5, -1}, {0.1, -1}, {0.05, -1}};
    const prli::SchemeOrdering mixed =
        prli::compare_schemes({{"never", never}, {"gd", *gd.report}}, 0.5);
    REQUIRE(mixed.ranking.front().label == "gd");
    REQUIRE_FALSE(mixed.ranking.back().convergent);
}

TEST_CASE("deviation table needs at least two timescales") {
    auto runner = [](double) { return std::vector<Vector>{}; };
    REQUIRE_THROWS_AS(prli::sgpas_deviation_table(runner, {}, {0.1}), std::invalid_argument);
}

TEST_CASE("a memoryless stub plant reproduces the static run exactly") {
    // theta frozen, output ignores it: the closed loop integrates the same
    // right-hand side as the static loop, so post-jump inputs coincide
    prli::json spec = prli::example_config_jsons(3)[0].second;
    const prli::ExperimentConfig config = prli::parse_config(spec);

    const prli::CostFunction quadratic = example_cost();
    prli::Plant stub;
    stub.state_dim = 1;
    stub.input_dim = 3;
    stub.dynamics = [](const Vector&, const Vector&) { return Vector::Zero(1); };
    stub.output = [quadratic](const Vector&, const Vector& u) { return quadratic.value(u); };
    stub.quasi_steady_state = [](const Vector&) { return Vector::Zero(1); };
    stub.epsilon = 1.0;

    const prli::UpeSignal signal = prli::parse_signal(config.signal_spec, config.quadrature_points);
    const prli::OracleConfig cfg(0.1, signal, config.quadrature_points);
    const auto pgd = prli::pgd_scheme(0.5, prli::parse_feasible_set(prli::example_feasible_set_spec()));

    prli::StateBox bound;
    bound.lower = Vector::Constant(6, -500);
    bound.upper = Vector::Constant(6, 500);
    const prli::HybridSystem closed = prli::build_interconnected(stub, pgd, cfg, bound);
    const prli::PrliLayout closed_layout{3, 0, 1};
    const prli::HybridArc closed_arc =
        prli::solve(closed, Vector::Zero(closed_layout.state_dim()), prli::Horizon{40.0, 10},
                    prli::SolveOptions{1e-3, 1, nullptr});

    const prli::HybridSystem open = prli::build_prli(quadratic.measurement(), pgd, cfg);
    const prli::PrliLayout open_layout{3, 0, 0};
    const prli::HybridArc open_arc =
        prli::solve(open, prli::prli_initial_state(Vector::Zero(3), 3), prli::Horizon{40.0, 10},
                    prli::SolveOptions{1e-3, 1, nullptr});

    REQUIRE(closed_arc.jump_count() == open_arc.jump_count());
    for (int k = 0; k < closed_arc.jump_count(); ++k) {
        const double gap = (closed_layout.u(closed_arc.post_jump[k].x) -
                            open_layout.u(open_arc.post_jump[k].x))
                               .norm();
        REQUIRE(gap == 0.0);
    }
}

TEST_CASE("timescale sweep deviation decreases monotonically") {
    prli::json spec = prli::example_config_jsons(3)[0].second;
    spec["jumps"] = 12;  // shorter horizon keeps the unit suite fast
    const prli::ExperimentConfig config = prli::parse_config(spec);
    const std::vector<prli::SgpasRow> rows =
        prli::sgpas_sweep(config, {0.1, 0.03, 0.01, 0.003});
    REQUIRE(rows.size() == 4);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        REQUIRE_FALSE(rows[k].escaped);
        // monotone within 10% slack
        REQUIRE(rows[k + 1].max_deviation <= 1.1 * rows[k].max_deviation);
    }
    REQUIRE(rows.back().max_deviation < rows.front().max_deviation);
}

TEST_CASE("ultimate bound sits inside the conservative error envelope") {
    const prli::ExperimentConfig config =
        prli::parse_config(prli::example_config_jsons(1)[0].second);
    const prli::RunResult run = prli::run_experiment(config);
    const prli::UpeSignal signal =
        prli::parse_signal(config.signal_spec, config.quadrature_points);
    // linear-recursion envelope: certified error times gamma/(1 - rho),
    // rho = max |1 - gamma*lambda| = 0.5 for this cost
    const double envelope =
        prli::remainder_bound(signal.sup_norm(), 3.0, config.amplitude) * 0.5 / 0.5;
    REQUIRE(run.report->ultimate_bound_estimate <= envelope);
}

TEST_CASE("identical runs produce byte-identical artifacts") {
    const prli::ExperimentConfig config =
        prli::parse_config(prli::example_config_jsons(1)[0].second);
    const auto dir_a = std::filesystem::temp_directory_path() / "prli_det_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "prli_det_b";
    const prli::RunResult a = prli::run_experiment(config, dir_a.string());
    const prli::RunResult b = prli::run_experiment(config, dir_b.string());
    REQUIRE(file_contents(a.arc_path) == file_contents(b.arc_path));
    REQUIRE(file_contents(a.summary_path) == file_contents(b.summary_path));
    REQUIRE_FALSE(file_contents(a.arc_path).empty());
}

TEST_CASE("verification suite passes and the fault injection trips it") {
    const std::vector<prli::PropertyResult> clean = prli::run_verification({});
    for (const prli::PropertyResult& r : clean) {
        INFO(r.name << ": " << r.detail);
        CHECK(r.pass);
    }
    REQUIRE(prli::all_passed(clean));

    prli::VerifyOptions fault;
    fault.fault = "p_x10";
    const std::vector<prli::PropertyResult> tripped = prli::run_verification(fault);
    bool integrator_failed = false;
    for (const prli::PropertyResult& r : tripped)
        if (r.name == "integrator_bound") integrator_failed = !r.pass;
    REQUIRE(integrator_failed);
}

TEST_CASE("verification suite is signal-agnostic") {
    prli::VerifyOptions options;
    options.sinusoidal_signal = true;
    REQUIRE(prli::all_passed(prli::run_verification(options)));
}
