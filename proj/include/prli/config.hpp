#pragma once

#include <fstream>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prli/errors.hpp"
#include "prli/plant.hpp"

namespace prli {

using nlohmann::json;

namespace detail {

inline Vector parse_vector(const json& node, const std::string& where) {
    if (!node.is_array()) throw ConfigError(where + ": expected an array of numbers");
    Vector v(node.size());
    for (std::size_t i = 0; i < node.size(); ++i) {
        if (!node[i].is_number()) throw ConfigError(where + "[" + std::to_string(i) + "]: expected a number");
        v[static_cast<Eigen::Index>(i)] = node[i].get<double>();
    }
    return v;
}

inline Matrix parse_matrix(const json& node, const std::string& where) {
    if (!node.is_array() || node.empty()) throw ConfigError(where + ": expected an array of rows");
    const std::size_t cols = node[0].size();
    Matrix m(node.size(), cols);
    for (std::size_t r = 0; r < node.size(); ++r) {
        const Vector row = parse_vector(node[r], where + "[" + std::to_string(r) + "]");
        if (static_cast<std::size_t>(row.size()) != cols)
            throw ConfigError(where + ": ragged rows");
        m.row(static_cast<Eigen::Index>(r)) = row;
    }
    return m;
}

template <typename T>
T require(const json& node, const std::string& key, const std::string& where) {
    if (!node.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return node.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

}  // namespace detail

inline ConvexFeasibleSet parse_feasible_set(const json& node, const std::string& where = "set") {
    const std::string kind = detail::require<std::string>(node, "kind", where);
    if (kind == "ball")
        return ConvexFeasibleSet::ball(detail::parse_vector(node.at("center"), where + ".center"),
                                       detail::require<double>(node, "radius", where));
    if (kind == "box")
        return ConvexFeasibleSet::box(detail::parse_vector(node.at("lower"), where + ".lower"),
                                      detail::parse_vector(node.at("upper"), where + ".upper"));
    if (kind == "halfspace")
        return ConvexFeasibleSet::halfspace(
            detail::parse_vector(node.at("normal"), where + ".normal"),
            detail::require<double>(node, "offset", where));
    throw ConfigError(where + ".kind: unknown feasible set kind '" + kind + "'");
}

inline CostFunction parse_cost(const json& node, const std::string& where = "cost") {
    const std::string kind = detail::require<std::string>(node, "kind", where);
    if (kind == "quadratic") {
        if (!node.contains("Q") || !node.contains("u_star"))
            throw ConfigError(where + ": quadratic cost needs 'Q' and 'u_star'");
        return quadratic_cost(detail::parse_matrix(node.at("Q"), where + ".Q"),
                              detail::parse_vector(node.at("u_star"), where + ".u_star"),
                              node.value("offset", 0.0));
    }
    throw ConfigError(where + ".kind: unknown cost kind '" + kind + "'");
}

/// Signal spec: {"kind":"sinusoidal","n":3} or
/// {"kind":"piecewise_linear","nodes":[[...],...],"whiten":true,"form":"interpolant"}.
inline UpeSignal parse_signal(const json& node, int quadrature_points,
                              const std::string& where = "signal") {
    const std::string kind = detail::require<std::string>(node, "kind", where);
    if (kind == "sinusoidal") {
        const int n = detail::require<int>(node, "n", where);
        if (n < 1) throw ConfigError(where + ".n: dimension must be positive");
        return sinusoidal_upe(n);
    }
    if (kind == "piecewise_linear") {
        if (!node.contains("nodes")) throw ConfigError(where + ": missing field 'nodes'");
        PiecewiseLinearNodes nodes;
        for (std::size_t i = 0; i < node.at("nodes").size(); ++i)
            nodes.nodes.push_back(detail::parse_vector(node.at("nodes")[i],
                                                       where + ".nodes[" + std::to_string(i) + "]"));
        PiecewiseForm form = PiecewiseForm::kInterpolant;
        const std::string form_name = node.value("form", "interpolant");
        if (form_name == "ramp")
            form = PiecewiseForm::kRamp;
        else if (form_name != "interpolant")
            throw ConfigError(where + ".form: unknown form '" + form_name + "'");
        UpeSignal signal = piecewise_linear_upe(nodes, form);
        if (node.value("whiten", true)) signal = whiten(signal, quadrature_points);
        return signal;
    }
    throw ConfigError(where + ".kind: unknown signal kind '" + kind + "'");
}

inline OptimizerScheme parse_scheme(const json& node, const std::string& where = "scheme") {
    const std::string kind = detail::require<std::string>(node, "kind", where);
    const double gamma = detail::require<double>(node, "gamma", where);
    if (kind == "gd") return gd_scheme(gamma);
    if (kind == "heavy_ball") return hb_scheme(gamma, detail::require<double>(node, "nu", where));
    if (kind == "pgd") {
        if (!node.contains("set")) throw ConfigError(where + ": pgd needs a 'set'");
        return pgd_scheme(gamma, parse_feasible_set(node.at("set"), where + ".set"));
    }
    throw ConfigError(where + ".kind: unknown scheme kind '" + kind + "'");
}

/// Plant spec: {"kind":"first_order_tracking","Q":...,"center":...,"offset":...,"epsilon":...}
/// or {"kind":"linear","A":...,"B":...,"psi":{"Q":...,"center":...,"offset":...},"epsilon":...}.
inline Plant parse_plant(const json& node, const std::string& where = "plant") {
    const std::string kind = detail::require<std::string>(node, "kind", where);
    const double epsilon = detail::require<double>(node, "epsilon", where);
    if (epsilon <= 0.0) throw ConfigError(where + ".epsilon: must be positive");
    if (kind == "first_order_tracking")
        return first_order_tracking_plant(detail::parse_matrix(node.at("Q"), where + ".Q"),
                                          detail::parse_vector(node.at("center"), where + ".center"),
                                          node.value("offset", 0.0), epsilon);
    if (kind == "linear") {
        if (!node.contains("psi")) throw ConfigError(where + ": linear plant needs 'psi'");
        const json& psi = node.at("psi");
        return linear_plant(detail::parse_matrix(node.at("A"), where + ".A"),
                            detail::parse_matrix(node.at("B"), where + ".B"),
                            detail::parse_matrix(psi.at("Q"), where + ".psi.Q"),
                            detail::parse_vector(psi.at("center"), where + ".psi.center"),
                            psi.value("offset", 0.0), epsilon);
    }
    throw ConfigError(where + ".kind: unknown plant kind '" + kind + "'");
}

/// One experiment: a cost or a plant, an update rule, a signal, the dither
/// amplitude, the initial state, and run bookkeeping.
struct ExperimentConfig {
    std::string name = "experiment";
    json cost_spec;   // exactly one of cost_spec / plant_spec is non-null
    json plant_spec;
    json scheme_spec;
    json signal_spec;
    double amplitude = 0.1;
    int quadrature_points = 4096;
    Vector u0;
    std::optional<Vector> w0;
    std::optional<Vector> p0;
    std::optional<double> tau0;
    std::optional<Vector> theta0;
    std::optional<Vector> target;  // reporting-only reference point
    std::optional<StateBox> k_bound;
    int jumps = 50;
    double step = 1e-3;
    std::uint64_t seed = 1;

    [[nodiscard]] bool has_plant() const { return !plant_spec.is_null(); }
};

inline ExperimentConfig parse_config(const json& root) {
    ExperimentConfig cfg;
    cfg.name = root.value("name", "experiment");
    const bool has_cost = root.contains("cost");
    const bool has_plant = root.contains("plant");
    if (has_cost == has_plant)
        throw ConfigError("config: exactly one of 'cost' or 'plant' must be present");
    if (has_cost) {
        cfg.cost_spec = root.at("cost");
        parse_cost(cfg.cost_spec);  // validate eagerly for early diagnostics
    } else {
        cfg.plant_spec = root.at("plant");
        parse_plant(cfg.plant_spec);
    }
    if (!root.contains("scheme")) throw ConfigError("config: missing field 'scheme'");
    cfg.scheme_spec = root.at("scheme");
    parse_scheme(cfg.scheme_spec);
    if (!root.contains("signal")) throw ConfigError("config: missing field 'signal'");
    cfg.signal_spec = root.at("signal");

    cfg.amplitude = root.value("a", 0.1);
    if (cfg.amplitude == 0.0) throw ConfigError("config.a: dither amplitude must be nonzero");
    cfg.quadrature_points = root.value("quadrature_points", 4096);
    if (cfg.quadrature_points < 2) throw ConfigError("config.quadrature_points: need at least 2");
    parse_signal(cfg.signal_spec, cfg.quadrature_points);

    if (!root.contains("initial") || !root.at("initial").contains("u"))
        throw ConfigError("config: missing field 'initial.u'");
    const json& initial = root.at("initial");
    cfg.u0 = detail::parse_vector(initial.at("u"), "initial.u");
    if (initial.contains("w")) cfg.w0 = detail::parse_vector(initial.at("w"), "initial.w");
    if (initial.contains("p")) cfg.p0 = detail::parse_vector(initial.at("p"), "initial.p");
    if (initial.contains("tau")) cfg.tau0 = initial.at("tau").get<double>();
    if (initial.contains("theta")) cfg.theta0 = detail::parse_vector(initial.at("theta"), "initial.theta");

    if (root.contains("target")) cfg.target = detail::parse_vector(root.at("target"), "target");
    if (root.contains("k_bound")) {
        StateBox box;
        box.lower = detail::parse_vector(root.at("k_bound").at("lower"), "k_bound.lower");
        box.upper = detail::parse_vector(root.at("k_bound").at("upper"), "k_bound.upper");
        if (box.lower.size() != box.upper.size() || ((box.upper - box.lower).array() < 0.0).any())
            throw ConfigError("k_bound: lower/upper mismatch");
        cfg.k_bound = box;
    }

    cfg.jumps = root.value("jumps", 50);
    if (cfg.jumps < 1) throw ConfigError("config.jumps: jump budget must be at least 1");
    cfg.step = root.value("step", 1e-3);
    if (cfg.step <= 0.0) throw ConfigError("config.step: must be positive");
    cfg.seed = root.value("seed", static_cast<std::uint64_t>(1));
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& err) {
        throw ConfigError("config parse error in " + path + ": " + err.what());
    }
    return parse_config(root);
}

}  // namespace prli
