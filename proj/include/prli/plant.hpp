#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "prli/hybrid.hpp"

namespace prli {

/// A fast plant eps * theta_dot = f(theta, u) with scalar output y = psi(theta, u)
/// and a declared input-parameterized equilibrium map chi (f(chi(u), u) = 0).
struct Plant {
    int state_dim = 0;
    int input_dim = 0;
    std::function<Vector(const Vector&, const Vector&)> dynamics;      // f(theta, u)
    std::function<double(const Vector&, const Vector&)> output;        // psi(theta, u)
    std::function<Vector(const Vector&)> quasi_steady_state;           // chi(u)
    double epsilon = 0.0;
};

/// Steady-state cost u -> psi(chi(u), u). Measurement-only: no gradient is
/// attached, matching what a model-free loop is allowed to see.
inline CostFunction steady_state_cost(const Plant& plant) {
    if (!plant.quasi_steady_state)
        throw std::invalid_argument("steady_state_cost: plant has no quasi-steady-state map");
    CostFunction cost;
    cost.dimension = plant.input_dim;
    const auto chi = plant.quasi_steady_state;
    const auto psi = plant.output;
    cost.value = [chi, psi](const Vector& u) { return psi(chi(u), u); };
    return cost;
}

/// Sampled check of the declared equilibrium map: ||f(chi(u), u)|| must vanish
/// (relative to 1 + ||u||) over points drawn from the given box.
struct QuasiSteadyStateReport {
    bool ok = true;
    double worst_residual = 0.0;
    Vector worst_input;
};

inline QuasiSteadyStateReport check_quasi_steady_state(const Plant& plant, const Vector& lower,
                                                       const Vector& upper, int samples,
                                                       std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    QuasiSteadyStateReport report;
    report.worst_input = Vector::Zero(plant.input_dim);
    for (int i = 0; i < samples; ++i) {
        const Vector u = uniform_in_box(rng, lower, upper);
        const double residual =
            plant.dynamics(plant.quasi_steady_state(u), u).norm() / (1.0 + u.norm());
        if (residual > report.worst_residual) {
            report.worst_residual = residual;
            report.worst_input = u;
        }
        if (residual > 1e-9) report.ok = false;
    }
    return report;
}

/// Effective integrator step for the stiff flow: explicit integration needs
/// the step well inside the plant's time constant.
inline double plant_step_control(const Plant& plant, double step) {
    if (step <= 0.0) throw std::invalid_argument("plant_step_control: step must be positive");
    return std::min(step, plant.epsilon / 10.0);
}

/// Axis-aligned compact restriction in (eta, p) space.
struct StateBox {
    Vector lower, upper;

    [[nodiscard]] bool contains(const Vector& x, double slack = 0.0) const {
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
        return true;
    }
};

/// Default compact restriction: a box spanning ten times the initial
/// condition's magnitude (at least ten) in every (eta, p) coordinate. Leaving
/// it surfaces as a solver escape, which signals mis-tuning rather than being
/// silently clamped.
inline StateBox default_k_bound(const Vector& eta0, int n) {
    const double half_width = 10.0 * std::max(1.0, eta0.lpNorm<Eigen::Infinity>());
    const int dim = static_cast<int>(eta0.size()) + n;
    StateBox box;
    box.lower = Vector::Constant(dim, -half_width);
    box.upper = Vector::Constant(dim, half_width);
    return box;
}

/// Instrumentation handle: counts quasi-steady-state evaluations so tests can
/// assert the map is never consulted while a run is in progress.
struct ChiCallCounter {
    std::shared_ptr<long> count = std::make_shared<long>(0);
};

inline Plant instrument_chi(const Plant& plant, const ChiCallCounter& counter) {
    Plant wrapped = plant;
    const auto chi = plant.quasi_steady_state;
    auto count = counter.count;
    wrapped.quasi_steady_state = [chi, count](const Vector& u) {
        ++(*count);
        return chi(u);
    };
    return wrapped;
}

/// The optimization loop closed around a live plant. Flows integrate p from
/// the measured plant output (never the steady-state cost), drive the plant
/// with the dithered input h(eta) + a*v(tau), and advance the timer; the jump
/// updates eta and leaves the plant state untouched. Flow and jump sets are
/// restricted to k_bound x [0,1] x Theta, with Theta a box around the
/// equilibrium image of the restriction's input range inflated by a*sup_norm
/// (an over-approximation; the equilibrium map is sampled on a grid during
/// construction only).
inline HybridSystem build_interconnected(const Plant& plant, const OptimizerScheme& scheme,
                                         const OracleConfig& cfg, const StateBox& k_bound) {
    if (plant.epsilon <= 0.0)
        throw std::invalid_argument("build_interconnected: plant timescale must be positive");
    const int n = cfg.signal().dimension();
    if (plant.input_dim != n)
        throw std::invalid_argument("build_interconnected: plant input dimension mismatch");
    PrliLayout layout{n, scheme.aux_dimension(n), plant.state_dim};
    if (k_bound.lower.size() != layout.eta_dim() + n)
        throw std::invalid_argument("build_interconnected: k_bound must cover (eta, p)");

    // Theta: componentwise range of chi over a grid of the restriction's
    // u-range, inflated by the dither radius.
    Vector theta_lo = Vector::Constant(plant.state_dim, std::numeric_limits<double>::infinity());
    Vector theta_hi = Vector::Constant(plant.state_dim, -std::numeric_limits<double>::infinity());
    {
        const int grid = 5;
        std::vector<int> index(static_cast<std::size_t>(n), 0);
        const Vector u_lo = k_bound.lower.head(n);
        const Vector u_hi = k_bound.upper.head(n);
        while (true) {
            Vector u(n);
            for (int d = 0; d < n; ++d)
                u[d] = u_lo[d] + (u_hi[d] - u_lo[d]) * index[static_cast<std::size_t>(d)] / (grid - 1);
            const Vector chi = plant.quasi_steady_state(u);
            theta_lo = theta_lo.cwiseMin(chi);
            theta_hi = theta_hi.cwiseMax(chi);
            int d = 0;
            for (; d < n; ++d) {
                if (++index[static_cast<std::size_t>(d)] < grid) break;
                index[static_cast<std::size_t>(d)] = 0;
            }
            if (d == n) break;
        }
        const double inflate = std::abs(cfg.amplitude()) * cfg.signal().sup_norm();
        theta_lo.array() -= inflate;
        theta_hi.array() += inflate;
    }

    const double epsilon = plant.epsilon;
    const auto dynamics = plant.dynamics;
    const auto output = plant.output;

    HybridSystem system;
    system.state_dim = layout.state_dim();
    system.flow_map = [cfg, layout, epsilon, dynamics, output](const Vector& x) {
        Vector dx = Vector::Zero(x.size());
        const double tau = std::clamp(layout.tau(x), 0.0, 1.0);
        const Vector dither = cfg.signal()(tau);
        const Vector input = layout.u(x) + cfg.amplitude() * dither;
        const Vector theta = layout.theta(x);
        dx.segment(layout.p_offset(), layout.n) = output(theta, input) * dither;
        dx[layout.tau_index()] = 1.0;
        dx.segment(layout.theta_offset(), layout.plant_dim) = dynamics(theta, input) / epsilon;
        return dx;
    };
    system.jump_map = [scheme, cfg, layout](const Vector& x) {
        Vector next = Vector::Zero(x.size());
        next.head(layout.eta_dim()) =
            scheme.update(layout.eta(x), layout.p(x) / cfg.amplitude());
        next.segment(layout.theta_offset(), layout.plant_dim) = layout.theta(x);
        return next;
    };
    auto in_restriction = [layout, k_bound, theta_lo, theta_hi](const Vector& x) {
        if (!k_bound.contains(x.head(layout.eta_dim() + layout.n), detail::kSetTolerance))
            return false;
        const Vector theta = layout.theta(x);
        for (Eigen::Index i = 0; i < theta.size(); ++i)
            if (theta[i] < theta_lo[i] - detail::kSetTolerance ||
                theta[i] > theta_hi[i] + detail::kSetTolerance)
                return false;
        return true;
    };
    system.flow_set = [layout, in_restriction](const Vector& x) {
        const double tau = layout.tau(x);
        return tau >= -detail::kSetTolerance && tau <= 1.0 + detail::kSetTolerance &&
               in_restriction(x);
    };
    system.jump_set = [layout, in_restriction](const Vector& x) {
        return std::abs(layout.tau(x) - 1.0) <= detail::kSetTolerance && in_restriction(x);
    };
    system.time_to_jump = [layout](const Vector& x) { return 1.0 - layout.tau(x); };
    const std::vector<double> signal_breaks = cfg.signal().breakpoints();
    system.flow_breakpoints = [layout, signal_breaks](const Vector& x) {
        std::vector<double> cuts;
        const double tau = layout.tau(x);
        for (double b : signal_breaks)
            if (b > tau) cuts.push_back(b - tau);
        return cuts;
    };
    return system;
}

/// First-order lag plant with the canonical quadratic output: eps*theta_dot =
/// u - theta, y = 0.5*(theta - c)' Q (theta - c) + offset. Its equilibrium map
/// is the identity, so the steady-state cost equals the quadratic itself.
inline Plant first_order_tracking_plant(const Matrix& Q, const Vector& center, double offset,
                                        double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("plant: timescale must be positive");
    Plant plant;
    plant.state_dim = static_cast<int>(center.size());
    plant.input_dim = static_cast<int>(center.size());
    plant.dynamics = [](const Vector& theta, const Vector& u) -> Vector { return u - theta; };
    plant.output = [Q, center, offset](const Vector& theta, const Vector&) {
        const Vector d = theta - center;
        return 0.5 * d.dot(Q * d) + offset;
    };
    plant.quasi_steady_state = [](const Vector& u) { return u; };
    plant.epsilon = epsilon;
    return plant;
}

/// Linear plant eps*theta_dot = A*theta + B*u with quadratic output in theta.
/// A must be Hurwitz so chi(u) = -A^{-1} B u is the attracting equilibrium.
inline Plant linear_plant(const Matrix& A, const Matrix& B, const Matrix& output_q,
                          const Vector& output_center, double output_offset, double epsilon) {
    if (A.rows() != A.cols()) throw std::invalid_argument("linear_plant: A must be square");
    if (B.rows() != A.rows()) throw std::invalid_argument("linear_plant: A/B row mismatch");
    if (epsilon <= 0.0) throw std::invalid_argument("linear_plant: timescale must be positive");
    Eigen::EigenSolver<Matrix> eig(A);
    if (eig.eigenvalues().real().maxCoeff() >= 0.0)
        throw std::invalid_argument("linear_plant: A must be Hurwitz");
    const Matrix neg_a_inv_b = -A.fullPivLu().solve(B);

    Plant plant;
    plant.state_dim = static_cast<int>(A.rows());
    plant.input_dim = static_cast<int>(B.cols());
    plant.dynamics = [A, B](const Vector& theta, const Vector& u) -> Vector {
        return A * theta + B * u;
    };
    plant.output = [output_q, output_center, output_offset](const Vector& theta, const Vector&) {
        const Vector d = theta - output_center;
        return 0.5 * d.dot(output_q * d) + output_offset;
    };
    plant.quasi_steady_state = [neg_a_inv_b](const Vector& u) -> Vector { return neg_a_inv_b * u; };
    plant.epsilon = epsilon;
    return plant;
}

}  // namespace prli
