#pragma once

#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prli/analysis.hpp"
#include "prli/config.hpp"
#include "prli/io.hpp"

namespace prli {

/// Node constants of the piecewise-linear exploration signal used by the
/// canonical example experiments.
inline PiecewiseLinearNodes example_signal_nodes() {
    PiecewiseLinearNodes nodes;
    nodes.nodes = {
        (Vector(3) << 1.5993, 1.7234, 1.9678).finished(),
        (Vector(3) << 0.6653, -1.8544, -0.8478).finished(),
        (Vector(3) << -1.7934, 0.2314, 1.1533).finished(),
        (Vector(3) << 0.6570, 1.5225, -2.5788).finished(),
    };
    return nodes;
}

inline json example_signal_spec() {
    json nodes = json::array();
    for (const Vector& node : example_signal_nodes().nodes)
        nodes.push_back({node[0], node[1], node[2]});
    return {{"kind", "piecewise_linear"}, {"nodes", nodes}, {"whiten", true}};
}

inline json example_cost_spec() {
    return {{"kind", "quadratic"},
            {"Q", {{2.0, 0.0, 1.0}, {0.0, 1.0, 0.0}, {1.0, 0.0, 2.0}}},
            {"u_star", {1.0, -1.0, 5.0}},
            {"offset", -20.0}};
}

inline json example_feasible_set_spec() {
    return {{"kind", "ball"}, {"center", {0.0, 0.0, 0.0}}, {"radius", 3.0}};
}

/// Constrained minimizer of a strongly convex quadratic over a centered ball,
/// via the optimality system: (Q + lambda I) u = Q u_star with lambda >= 0
/// chosen by bisection so that ||u|| matches the radius (lambda = 0 when the
/// unconstrained minimizer is feasible). Serves as the independent reference
/// for the projected runs.
inline Vector constrained_quadratic_minimizer(const Matrix& Q, const Vector& u_star,
                                              double radius) {
    if (u_star.norm() <= radius) return u_star;
    const Vector rhs = Q * u_star;
    const int n = static_cast<int>(u_star.size());
    double lo = 0.0, hi = 1.0;
    auto norm_at = [&](double lambda) {
        return (Q + lambda * Matrix::Identity(n, n)).fullPivLu().solve(rhs).norm();
    };
    while (norm_at(hi) > radius) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) > radius ? lo : hi) = mid;
    }
    return (Q + 0.5 * (lo + hi) * Matrix::Identity(n, n)).fullPivLu().solve(rhs);
}

/// Canonical experiment configurations. Example 1 compares the plain and the
/// momentum update on the unconstrained quadratic; example 2 adds the ball
/// constraint and the projected update; example 3 closes the same projected
/// loop around the first-order tracking plant at timescale 0.01.
inline std::vector<std::pair<std::string, json>> example_config_jsons(int which) {
    json base = {
        {"signal", example_signal_spec()},
        {"a", 0.1},
        {"quadrature_points", 4096},
        {"initial", {{"u", {0.0, 0.0, 0.0}}}},
        {"step", 1e-3},
        {"seed", 1},
    };
    const Vector u_star = (Vector(3) << 1.0, -1.0, 5.0).finished();
    const Matrix q = (Matrix(3, 3) << 2, 0, 1, 0, 1, 0, 1, 0, 2).finished();
    const Vector u_sharp = constrained_quadratic_minimizer(q, u_star, 3.0);

    std::vector<std::pair<std::string, json>> configs;
    if (which == 1) {
        json gd = base;
        gd["name"] = "example1_gd";
        gd["cost"] = example_cost_spec();
        gd["scheme"] = {{"kind", "gd"}, {"gamma", 0.5}};
        gd["target"] = {1.0, -1.0, 5.0};
        gd["jumps"] = 50;
        json hb = gd;
        hb["name"] = "example1_hb";
        hb["scheme"] = {{"kind", "heavy_ball"}, {"gamma", 0.5}, {"nu", 0.125}};
        configs.emplace_back("example1_gd", std::move(gd));
        configs.emplace_back("example1_hb", std::move(hb));
    } else if (which == 2) {
        json pgd = base;
        pgd["name"] = "example2_pgd";
        pgd["cost"] = example_cost_spec();
        pgd["scheme"] = {{"kind", "pgd"}, {"gamma", 0.5}, {"set", example_feasible_set_spec()}};
        pgd["target"] = {u_sharp[0], u_sharp[1], u_sharp[2]};
        pgd["jumps"] = 50;
        configs.emplace_back("example2_pgd", std::move(pgd));
    } else if (which == 3) {
        json plant = base;
        plant["name"] = "example3_plant";
        plant["plant"] = {{"kind", "first_order_tracking"},
                          {"Q", {{2.0, 0.0, 1.0}, {0.0, 1.0, 0.0}, {1.0, 0.0, 2.0}}},
                          {"center", {1.0, -1.0, 5.0}},
                          {"offset", -20.0},
                          {"epsilon", 0.01}};
        plant["scheme"] = {{"kind", "pgd"}, {"gamma", 0.5}, {"set", example_feasible_set_spec()}};
        plant["target"] = {u_sharp[0], u_sharp[1], u_sharp[2]};
        plant["jumps"] = 30;
        // generous compact restriction: the integrator coordinate scales with
        // the cost magnitude over the dithered feasible ball, not with u
        plant["k_bound"] = {{"lower", {-10, -10, -10, -500, -500, -500}},
                            {"upper", {10, 10, 10, 500, 500, 500}}};
        configs.emplace_back("example3_plant", std::move(plant));
    } else {
        throw ConfigError("example: index must be 1, 2, or 3");
    }
    return configs;
}

/// Fully assembled run inputs derived from a config.
struct ExperimentSetup {
    ExperimentConfig config;
    UpeSignal signal;
    OptimizerScheme scheme;
    std::optional<CostFunction> cost;   // static runs
    std::optional<Plant> plant;         // interconnected runs
    OracleConfig oracle;
    PrliLayout layout;
    Vector x0;
    std::vector<std::string> warnings;
};

inline ExperimentSetup make_setup(const ExperimentConfig& config) {
    UpeSignal signal = parse_signal(config.signal_spec, config.quadrature_points);
    OptimizerScheme scheme = parse_scheme(config.scheme_spec);
    const int n = signal.dimension();
    if (config.u0.size() != n)
        throw ConfigError("initial.u: dimension does not match the signal dimension");
    const int m = scheme.aux_dimension(n);

    std::vector<std::string> warnings;
    if (!is_certified(signal, config.quadrature_points))
        warnings.push_back("signal: moment certificates exceed the declared tolerance");

    std::optional<CostFunction> cost;
    std::optional<Plant> plant;
    int plant_dim = 0;
    if (config.has_plant()) {
        plant = parse_plant(config.plant_spec);
        if (plant->input_dim != n) throw ConfigError("plant: input dimension mismatch");
        plant_dim = plant->state_dim;
    } else {
        cost = parse_cost(config.cost_spec);
        if (cost->dimension != n) throw ConfigError("cost: dimension mismatch");
        if (cost->lipschitz) {
            const IssReport iss = validate(scheme, *cost->lipschitz, cost->strong_convexity);
            for (const std::string& w : iss.warnings) warnings.push_back("validator: " + w);
        }
    }

    PrliLayout layout{n, m, plant_dim};
    Vector x0 = Vector::Zero(layout.state_dim());
    x0.head(n) = config.u0;
    if (m > 0) x0.segment(n, m) = config.w0.value_or(config.u0);  // momentum starts at rest
    if (config.p0) {
        if (config.p0->size() != n) throw ConfigError("initial.p: dimension mismatch");
        x0.segment(layout.p_offset(), n) = *config.p0;
        if (config.p0->norm() > 0.0)
            warnings.push_back(
                "initial.p is nonzero: the first update is amplified by 1/a; zero-start avoids this");
    }
    if (config.tau0) {
        x0[layout.tau_index()] = *config.tau0;
        if (*config.tau0 != 0.0)
            warnings.push_back(
                "initial.tau is nonzero: the first window is truncated and its update is unreliable");
    }
    if (plant) {
        Vector theta0 = config.theta0.value_or(plant->quasi_steady_state(config.u0));
        if (theta0.size() != plant_dim) throw ConfigError("initial.theta: dimension mismatch");
        x0.segment(layout.theta_offset(), plant_dim) = theta0;
    }

    OracleConfig oracle(config.amplitude, signal, config.quadrature_points);
    return ExperimentSetup{config,    std::move(signal), std::move(scheme), std::move(cost),
                           std::move(plant), std::move(oracle), layout,     std::move(x0),
                           std::move(warnings)};
}

struct RunResult {
    HybridArc arc;
    PrliLayout layout;
    std::optional<ConvergenceReport> report;
    std::vector<std::string> warnings;
    std::string arc_path;
    std::string summary_path;
};

namespace detail {

inline json report_to_json(const ConvergenceReport& report) {
    json tolerances = json::array();
    for (const auto& [tol, jumps] : report.jumps_to_tolerance)
        tolerances.push_back({{"tolerance", tol}, {"jumps", jumps}});
    json trace = json::array();
    for (const auto& [j, value] : report.lyapunov_trace)
        trace.push_back({{"j", j}, {"value", value}});
    return {{"final_distance", report.final_distance},
            {"jumps_to_tolerance", tolerances},
            {"ultimate_bound_estimate", report.ultimate_bound_estimate},
            {"lyapunov_trace", trace}};
}

}  // namespace detail

/// Execute one configured experiment and, when an output directory is given,
/// write <name>_arc.csv and <name>_summary.json there.
inline RunResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::string>& out_dir = std::nullopt) {
    ExperimentSetup setup = make_setup(config);

    HybridSystem system;
    SolveOptions options;
    options.step = config.step;
    if (setup.plant) {
        const StateBox k_bound =
            config.k_bound.value_or(default_k_bound(setup.x0.head(setup.layout.eta_dim()),
                                                    setup.layout.n));
        system = build_interconnected(*setup.plant, setup.scheme, setup.oracle, k_bound);
        options.step = plant_step_control(*setup.plant, config.step);
        const auto output = setup.plant->output;
        const auto layout = setup.layout;
        const auto oracle = setup.oracle;
        options.output = [output, layout, oracle](const Vector& x) {
            const double tau = std::clamp(layout.tau(x), 0.0, 1.0);
            return output(layout.theta(x), layout.u(x) + oracle.amplitude() * oracle.signal()(tau));
        };
    } else {
        system = build_prli(setup.cost->measurement(), setup.scheme, setup.oracle);
        const auto measure = setup.cost->measurement();
        const auto layout = setup.layout;
        options.output = [measure, layout](const Vector& x) { return measure(layout.u(x)); };
    }

    Horizon horizon{static_cast<double>(config.jumps) + 2.0, config.jumps};
    RunResult result;
    result.layout = setup.layout;
    result.warnings = setup.warnings;
    result.arc = solve(system, setup.x0, horizon, options);
    for (const std::string& w : result.arc.warnings) result.warnings.push_back(w);

    if (setup.config.target && result.arc.jump_count() >= 4) {
        std::optional<double> cost_at_target;
        if (setup.cost) cost_at_target = setup.cost->value(*setup.config.target);
        result.report = convergence_report(result.arc, *setup.config.target, cost_at_target);
    }

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        result.arc_path = *out_dir + "/" + config.name + "_arc.csv";
        result.summary_path = *out_dir + "/" + config.name + "_summary.json";
        write_arc_csv(result.arc_path, result.arc, result.layout);

        json summary = {
            {"name", config.name},
            {"jumps", result.arc.jump_count()},
            {"termination", result.arc.escaped() ? "solver_escape" : "horizon"},
            {"warnings", result.warnings},
        };
        json notes = json::array();
        if (setup.plant)
            notes.push_back(
                "plant-state restriction is a box over-approximation around the equilibrium "
                "image of the input range");
        if (result.report) {
            summary["convergence"] = detail::report_to_json(*result.report);
            notes.push_back(
                "ultimate bound is the sup over the settled window of the recorded run, an "
                "empirical under-approximation of the limiting set");
        }
        summary["notes"] = notes;
        write_text_file(result.summary_path, summary.dump(2) + "\n");
    }
    return result;
}

/// Post-jump u sequence of a run (the quantity the sweep and the scheme
/// comparisons consume).
inline std::vector<Vector> post_jump_inputs(const RunResult& result) {
    std::vector<Vector> us;
    us.reserve(result.arc.post_jump.size());
    for (const HybridSample& sample : result.arc.post_jump)
        us.push_back(result.layout.u(sample.x));
    return us;
}

/// Timescale sweep of a plant config: each row reports the max post-jump
/// deviation from the static run over the same cost, scheme, and signal. A
/// solver escape at some timescale is recorded and the sweep continues.
inline std::vector<SgpasRow> sgpas_sweep(const ExperimentConfig& config,
                                         const std::vector<double>& epsilons) {
    if (!config.has_plant()) throw ConfigError("sweep: config must describe a plant");

    // static reference: the same loop driven by the plant's steady-state cost
    const Plant plant = parse_plant(config.plant_spec);
    const CostFunction steady = steady_state_cost(plant);
    ExperimentSetup setup = make_setup(config);
    OptimizerScheme scheme = setup.scheme;
    OracleConfig oracle = setup.oracle;
    PrliLayout static_layout{setup.layout.n, setup.layout.m, 0};

    auto run_static = [&]() {
        HybridSystem system = build_prli(steady.measurement(), scheme, oracle);
        Vector x0 = Vector::Zero(static_layout.state_dim());
        x0.head(static_layout.eta_dim()) = setup.x0.head(static_layout.eta_dim());
        HybridArc arc = solve(system, x0, Horizon{config.jumps + 2.0, config.jumps},
                              SolveOptions{config.step, 1, nullptr});
        std::vector<Vector> us;
        for (const HybridSample& s : arc.post_jump) us.push_back(static_layout.u(s.x));
        return us;
    };
    const std::vector<Vector> reference = run_static();

    // each run owns its state, so the sweep dispatches them concurrently and
    // joins in input order, which keeps the table deterministic
    std::vector<std::future<std::vector<Vector>>> workers;
    workers.reserve(epsilons.size());
    for (double epsilon : epsilons)
        workers.push_back(std::async(std::launch::async, [config, epsilon]() -> std::vector<Vector> {
            ExperimentConfig per_eps = config;
            per_eps.plant_spec["epsilon"] = epsilon;
            const RunResult result = run_experiment(per_eps);
            if (result.arc.escaped()) return {};
            return post_jump_inputs(result);
        }));
    std::size_t cursor = 0;
    auto run_at_epsilon = [&](double) { return workers[cursor++].get(); };
    return sgpas_deviation_table(run_at_epsilon, reference, epsilons);
}

}  // namespace prli
