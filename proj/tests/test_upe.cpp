#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "prli/experiment.hpp"
#include "prli/upe.hpp"

using prli::Matrix;
using prli::Vector;

namespace {

// independent mean oracle for the interpolant on K equal segments:
// trapezoid rule is exact piecewise, giving (v0 + 2 v1 + ... + 2 v_{K-1} + vK) / (2K)
Vector trapezoid_mean(const prli::PiecewiseLinearNodes& nodes) {
    const std::size_t last = nodes.nodes.size() - 1;
    Vector sum = nodes.nodes.front() + nodes.nodes.back();
    for (std::size_t k = 1; k < last; ++k) sum += 2.0 * nodes.nodes[k];
    return sum / (2.0 * static_cast<double>(last));
}

}  // namespace

TEST_CASE("sinusoidal signal evaluates the scaled sine stack") {
    const prli::UpeSignal v1 = prli::sinusoidal_upe(1);
    REQUIRE(v1(0.25)[0] == Catch::Approx(std::numbers::sqrt2).epsilon(1e-12));

    const prli::UpeSignal v3 = prli::sinusoidal_upe(3);
    REQUIRE(v3(0.0).norm() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(v3.dimension() == 3);
    REQUIRE(v3.sup_norm() == Catch::Approx(std::sqrt(6.0)));
}

TEST_CASE("sinusoidal construction and evaluation preconditions") {
    REQUIRE_THROWS_AS(prli::sinusoidal_upe(0), std::invalid_argument);
    const prli::UpeSignal v = prli::sinusoidal_upe(2);
    REQUIRE_THROWS_AS(v(-0.01), std::domain_error);
    REQUIRE_THROWS_AS(v(1.01), std::domain_error);
}

TEST_CASE("sinusoidal moments certify at quadrature resolution") {
    const prli::MomentResiduals r = prli::certify_moments(prli::sinusoidal_upe(2), 10000);
    REQUIRE(r.mean_residual <= 1e-6);
    REQUIRE(r.covariance_residual <= 1e-6);
}

TEST_CASE("zero-like signal has covariance defect equal to identity norm") {
    // a constant zero signal: mean residual zero, covariance residual ||I||_F
    const prli::UpeSignal zero(3, [](double) { return Vector::Zero(3); }, 0.0, 1.0);
    const prli::MomentResiduals r = prli::certify_moments(zero, 128);
    REQUIRE(r.mean_residual == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(r.covariance_residual == Catch::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("piecewise-linear interpolant matches the trapezoid mean oracle") {
    const prli::PiecewiseLinearNodes nodes = prli::example_signal_nodes();
    const prli::UpeSignal v = prli::piecewise_linear_upe(nodes);

    const Vector mean_oracle = trapezoid_mean(nodes);
    REQUIRE(mean_oracle.norm() <= 1e-3);  // the published constants nearly telescope

    const prli::MomentResiduals r = prli::certify_moments(v, 4096);
    REQUIRE(r.mean_residual == Catch::Approx(mean_oracle.norm()).margin(1e-9));
}

TEST_CASE("piecewise-linear sup norm is the largest node norm") {
    const prli::PiecewiseLinearNodes nodes = prli::example_signal_nodes();
    const prli::UpeSignal v = prli::piecewise_linear_upe(nodes);
    double expected = 0.0;
    for (const Vector& node : nodes.nodes) expected = std::max(expected, node.norm());
    REQUIRE(v.sup_norm() == Catch::Approx(expected).epsilon(1e-15));
    REQUIRE(v.sup_norm() == Catch::Approx(3.066).epsilon(1e-3));
}

TEST_CASE("piecewise-linear validation") {
    prli::PiecewiseLinearNodes bad;
    bad.nodes = {Vector::Zero(3)};
    REQUIRE_THROWS_AS(prli::piecewise_linear_upe(bad), std::invalid_argument);

    prli::PiecewiseLinearNodes mismatched;
    mismatched.nodes = {Vector::Zero(3), Vector::Zero(2)};
    REQUIRE_THROWS_AS(prli::piecewise_linear_upe(mismatched), std::invalid_argument);
}

TEST_CASE("constant two-node signal fails the moment certificates unless zero") {
    prli::PiecewiseLinearNodes constant;
    constant.nodes = {Vector::Constant(2, 1.5), Vector::Constant(2, 1.5)};
    const prli::UpeSignal v = prli::piecewise_linear_upe(constant);
    const prli::MomentResiduals r = prli::certify_moments(v, 512);
    REQUIRE(r.mean_residual > 1.0);  // nonzero mean
    REQUIRE_FALSE(prli::is_certified(v, 512));

    prli::PiecewiseLinearNodes zero;
    zero.nodes = {Vector::Zero(2), Vector::Zero(2)};
    const prli::MomentResiduals rz = prli::certify_moments(prli::piecewise_linear_upe(zero), 512);
    REQUIRE(rz.mean_residual == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("ramp form is the discontinuous reading and fails certification") {
    const prli::PiecewiseLinearNodes nodes = prli::example_signal_nodes();
    const prli::UpeSignal ramp = prli::piecewise_linear_upe(nodes, prli::PiecewiseForm::kRamp);
    const prli::UpeSignal interp = prli::piecewise_linear_upe(nodes);

    // just left of a segment boundary the ramp sits at node[k]+node[k+1],
    // while the next segment starts at node[k+1]
    const double just_left = 1.0 / 3.0 - 1e-9;
    const Vector left = ramp(just_left);
    const Vector right = ramp(1.0 / 3.0 + 1e-12);
    REQUIRE((left - right).norm() > 1.0);

    REQUIRE((interp(just_left) - interp(1.0 / 3.0 + 1e-12)).norm() < 1e-6);

    const prli::MomentResiduals r = prli::certify_moments(ramp, 4096);
    REQUIRE(r.mean_residual > 0.1);
}

TEST_CASE("whitening an already-white signal is the identity pointwise") {
    const prli::UpeSignal base = prli::sinusoidal_upe(2);
    const prli::UpeSignal whitened = prli::whiten(base, 4096);
    for (int i = 0; i <= 100; ++i) {
        const double tau = i / 100.0;
        REQUIRE((whitened(tau) - base(tau)).norm() <= 1e-6);
    }
}

TEST_CASE("whitening rejects constant signals") {
    REQUIRE_THROWS_AS(prli::whiten([](double) { return Vector::Constant(3, 1.0); }, 3, 256),
                      prli::NotPersistentlyExcitingError);
}

TEST_CASE("whitened canonical signal certifies to 1e-9") {
    const prli::UpeSignal whitened =
        prli::whiten(prli::piecewise_linear_upe(prli::example_signal_nodes()), 4096);
    const prli::MomentResiduals r = prli::certify_moments(whitened, 4096);
    REQUIRE(r.mean_residual <= 1e-9);
    REQUIRE(r.covariance_residual <= 1e-9);
    REQUIRE(prli::is_certified(whitened, 4096));
}

TEST_CASE("whitening is idempotent up to tolerance") {
    const prli::UpeSignal once =
        prli::whiten(prli::piecewise_linear_upe(prli::example_signal_nodes()), 4096);
    const prli::UpeSignal twice = prli::whiten(once, 4096);
    for (int i = 0; i <= 200; ++i) {
        const double tau = i / 200.0;
        REQUIRE((twice(tau) - once(tau)).norm() <= 10.0 * once.moment_tolerance());
    }
}

TEST_CASE("sup-norm bound is sound over a dense scan") {
    const std::vector<prli::UpeSignal> signals = {
        prli::sinusoidal_upe(4),
        prli::piecewise_linear_upe(prli::example_signal_nodes()),
        prli::whiten(prli::piecewise_linear_upe(prli::example_signal_nodes()), 4096),
        prli::whiten([](double tau) { return prli::sinusoidal_upe(3)(tau); }, 3, 2048),
    };
    for (const prli::UpeSignal& v : signals) {
        double max_norm = 0.0;
        for (int i = 0; i <= 1000; ++i) max_norm = std::max(max_norm, v(i / 1000.0).norm());
        REQUIRE(max_norm <= v.sup_norm() + 1e-12);
    }
}

TEST_CASE("orthogonal images of certified signals stay certified") {
    const Matrix seed =
        (Matrix(3, 3) << 0.3, -1.2, 0.7, 1.1, 0.4, -0.5, -0.9, 0.2, 1.3).finished();
    const Matrix rotation = Eigen::HouseholderQR<Matrix>(seed).householderQ();
    const prli::UpeSignal base = prli::sinusoidal_upe(3);
    const prli::UpeSignal rotated(3, [base, rotation](double tau) -> Vector {
        return rotation * base(tau);
    }, base.sup_norm(), base.moment_tolerance());
    const prli::MomentResiduals r = prli::certify_moments(rotated, 4096);
    REQUIRE(r.mean_residual <= 1e-6);
    REQUIRE(r.covariance_residual <= 1e-6);
}

TEST_CASE("whitening certifies node lists of any segment count") {
    // six segments: 4096 points do not divide evenly, exercising the
    // largest-remainder allocation; same-grid whitening is still exact
    prli::PiecewiseLinearNodes nodes;
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int k = 0; k < 7; ++k) {
        Vector node(3);
        for (int i = 0; i < 3; ++i) node[i] = coord(rng);
        nodes.nodes.push_back(node);
    }
    const prli::UpeSignal whitened = prli::whiten(prli::piecewise_linear_upe(nodes), 4096);
    const prli::MomentResiduals r = prli::certify_moments(whitened, 4096);
    REQUIRE(r.mean_residual <= 1e-9);
    REQUIRE(r.covariance_residual <= 1e-9);

    double max_norm = 0.0;
    for (int i = 0; i <= 1000; ++i) max_norm = std::max(max_norm, whitened(i / 1000.0).norm());
    REQUIRE(max_norm <= whitened.sup_norm() + 1e-12);
}

TEST_CASE("quadrature rule covers [0,1] and honors breakpoints") {
    REQUIRE_THROWS_AS(prli::midpoint_rule(1), std::invalid_argument);
    const prli::QuadratureRule rule = prli::midpoint_rule(4096, {1.0 / 3.0, 2.0 / 3.0});
    REQUIRE(rule.nodes.size() == 4096);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        total += rule.weights[i];
        // no midpoint interval straddles a kink
        const double lo = rule.nodes[i] - rule.weights[i] / 2.0;
        const double hi = rule.nodes[i] + rule.weights[i] / 2.0;
        for (double b : {1.0 / 3.0, 2.0 / 3.0}) REQUIRE((hi <= b + 1e-12 || lo >= b - 1e-12));
    }
    REQUIRE(total == Catch::Approx(1.0).epsilon(1e-12));
}
