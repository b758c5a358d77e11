#pragma once

#include <cmath>
#include <stdexcept>

#include "prli/cost.hpp"
#include "prli/upe.hpp"

namespace prli {

/// Dither amplitude, exploration signal, and quadrature resolution shared by
/// the closed-form and the dynamic form of the gradient oracle. The amplitude
/// must be nonzero because the dynamic form divides the terminal integrator
/// state by it; negative amplitudes are allowed.
class OracleConfig {
public:
    OracleConfig(double amplitude, UpeSignal signal, int quadrature_points = 4096)
        : amplitude_(amplitude), signal_(std::move(signal)), quadrature_points_(quadrature_points) {
        if (amplitude_ == 0.0)
            throw std::invalid_argument(
                "OracleConfig: amplitude must be nonzero (the update divides by it); use the true "
                "gradient instead");
        if (quadrature_points_ < 2)
            throw std::invalid_argument("OracleConfig: need at least 2 quadrature points");
    }

    [[nodiscard]] double amplitude() const { return amplitude_; }
    [[nodiscard]] const UpeSignal& signal() const { return signal_; }
    [[nodiscard]] int quadrature_points() const { return quadrature_points_; }

private:
    double amplitude_;
    UpeSignal signal_;
    int quadrature_points_;
};

/// Closed-form gradient estimate
///   (1/a) * int_0^1 phi(u + a v(tau)) v(tau) dtau
/// by composite midpoint quadrature. Consumes scalar measurements only. For a
/// cost with an L-Lipschitz gradient the estimation error is bounded by
/// sup_norm^3 * L * |a|, uniformly in u.
inline Vector quadrature_oracle(const Measurement& phi, const Vector& u, const OracleConfig& cfg) {
    const UpeSignal& v = cfg.signal();
    if (u.size() != v.dimension())
        throw std::invalid_argument("quadrature_oracle: input dimension mismatch");
    const QuadratureRule rule = midpoint_rule(cfg.quadrature_points(), v.breakpoints());
    Vector integral = Vector::Zero(u.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Vector val = v(rule.nodes[i]);
        integral += rule.weights[i] * phi(u + cfg.amplitude() * val) * val;
    }
    return integral / cfg.amplitude();
}

inline Vector quadrature_oracle(const CostFunction& cost, const Vector& u,
                                const OracleConfig& cfg) {
    return quadrature_oracle(cost.measurement(), u, cfg);
}

/// Right-hand side of the learning integrator, dp/dtau = phi(u + a v(tau)) v(tau).
/// The held input does not change during a flow; only a scalar measurement of
/// the cost enters.
inline Vector integrator_rhs(const Measurement& phi, const Vector& u_held, const OracleConfig& cfg,
                             double tau) {
    const Vector val = cfg.signal()(tau);
    return phi(u_held + cfg.amplitude() * val) * val;
}

/// Uniform bound on the oracle's estimation error: sup_norm^3 * lipschitz * |amplitude|.
inline double remainder_bound(double sup_norm, double lipschitz, double amplitude) {
    return sup_norm * sup_norm * sup_norm * lipschitz * std::abs(amplitude);
}

}  // namespace prli
