#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prli/cost.hpp"

namespace prli {

enum class OptimizerKind { kGradientDescent, kHeavyBall, kProjectedGradientDescent };

inline const char* to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::kGradientDescent: return "gd";
        case OptimizerKind::kHeavyBall: return "heavy_ball";
        case OptimizerKind::kProjectedGradientDescent: return "pgd";
    }
    return "?";
}

/// A discrete update rule split into state extraction h (which input the
/// oracle is queried at) and jump update g (how the state advances given a
/// gradient estimate f). The optimizer state eta stacks u with m auxiliary
/// coordinates; m = 0 except for the momentum method, where the previous
/// iterate is carried along (m = n).
class OptimizerScheme {
public:
    [[nodiscard]] OptimizerKind kind() const { return kind_; }
    [[nodiscard]] double learning_rate() const { return gamma_; }
    [[nodiscard]] double momentum() const { return nu_; }
    [[nodiscard]] const std::optional<ConvexFeasibleSet>& feasible_set() const { return set_; }

    [[nodiscard]] int aux_dimension(int n) const {
        return kind_ == OptimizerKind::kHeavyBall ? n : 0;
    }

    /// h: eta -> u (the first n coordinates).
    [[nodiscard]] Vector extract(const Vector& eta, int n) const {
        check_eta(eta, n);
        return eta.head(n);
    }

    /// g: (eta, f) -> eta^+.
    [[nodiscard]] Vector update(const Vector& eta, const Vector& f) const {
        const int n = static_cast<int>(f.size());
        check_eta(eta, n);
        switch (kind_) {
            case OptimizerKind::kGradientDescent:
                return eta - gamma_ * f;
            case OptimizerKind::kHeavyBall: {
                const Vector u = eta.head(n);
                const Vector w = eta.tail(n);
                Vector out(2 * n);
                out.head(n) = u - gamma_ * f + nu_ * (u - w);
                out.tail(n) = u;
                return out;
            }
            case OptimizerKind::kProjectedGradientDescent:
                return set_->project(eta - gamma_ * f);
        }
        return eta;
    }

    friend OptimizerScheme gd_scheme(double gamma);
    friend OptimizerScheme hb_scheme(double gamma, double nu);
    friend OptimizerScheme pgd_scheme(double gamma, ConvexFeasibleSet set);

private:
    void check_eta(const Vector& eta, int n) const {
        if (eta.size() != n + aux_dimension(n))
            throw std::invalid_argument("OptimizerScheme: state dimension mismatch");
    }

    OptimizerKind kind_ = OptimizerKind::kGradientDescent;
    double gamma_ = 0.0;
    double nu_ = 0.0;
    std::optional<ConvexFeasibleSet> set_;
};

inline OptimizerScheme gd_scheme(double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("gd_scheme: learning rate must be positive");
    OptimizerScheme s;
    s.kind_ = OptimizerKind::kGradientDescent;
    s.gamma_ = gamma;
    return s;
}

inline OptimizerScheme hb_scheme(double gamma, double nu) {
    if (gamma <= 0.0) throw std::invalid_argument("hb_scheme: learning rate must be positive");
    if (nu < 0.0) throw std::invalid_argument("hb_scheme: momentum must be nonnegative");
    OptimizerScheme s;
    s.kind_ = OptimizerKind::kHeavyBall;
    s.gamma_ = gamma;
    s.nu_ = nu;
    return s;
}

inline OptimizerScheme pgd_scheme(double gamma, ConvexFeasibleSet set) {
    if (gamma <= 0.0) throw std::invalid_argument("pgd_scheme: learning rate must be positive");
    OptimizerScheme s;
    s.kind_ = OptimizerKind::kProjectedGradientDescent;
    s.gamma_ = gamma;
    s.set_ = std::move(set);
    return s;
}

/// Result of checking a scheme's step-size conditions against the cost's
/// regularity constants. The conditions are sufficient, not necessary, so a
/// failed check produces warnings rather than a refusal; strict callers can
/// upgrade warnings to errors.
struct IssReport {
    bool valid = false;
    double margin = 0.0;
    std::vector<std::string> warnings;

    // gradient-descent constants (also reported for the momentum method)
    std::optional<double> c0, c1, c2, c3;

    // momentum method: entries and smallest eigenvalue of the 2x2 block of P
    std::optional<double> p11, p12, p22, p_lambda_min;
    bool p_positive_definite = false;

    // projected gradient descent: contraction factor and ISS gain
    std::optional<double> rho, iss_gain;
};

namespace detail {

inline double c3_from(double c0, double c1, double c2) {
    return (std::sqrt(c1 * c1 + 4.0 * c0 * c2) + c1) / c2;
}

}  // namespace detail

/// Step-size validation. GD and PGD require 0 < gamma*L < 2; the momentum
/// method requires gamma < 2/(2+L) and nu^2 < 4*gamma - 2*gamma^2*(2+L).
/// PGD additionally needs the strong-convexity constant to define its
/// contraction factor.
inline IssReport validate(const OptimizerScheme& scheme, double lipschitz,
                          std::optional<double> strong_convexity = std::nullopt) {
    if (lipschitz <= 0.0) throw std::invalid_argument("validate: lipschitz must be positive");
    const double gamma = scheme.learning_rate();
    IssReport report;

    switch (scheme.kind()) {
        case OptimizerKind::kGradientDescent: {
            report.valid = gamma * lipschitz > 0.0 && gamma * lipschitz < 2.0;
            report.margin = 2.0 - gamma * lipschitz;
            report.c0 = gamma * gamma * lipschitz / 2.0;
            report.c1 = gamma * (1.0 + gamma * lipschitz);
            report.c2 = gamma * (1.0 - gamma * lipschitz / 2.0) / 2.0;
            report.c3 = detail::c3_from(*report.c0, *report.c1, *report.c2);
            if (!report.valid)
                report.warnings.push_back("gd: step-size condition 0 < gamma*L < 2 fails (gamma*L = " +
                                          std::to_string(gamma * lipschitz) + ")");
            break;
        }
        case OptimizerKind::kHeavyBall: {
            const double nu = scheme.momentum();
            const double l_tilde = 1.0 + lipschitz / 2.0;
            const double gamma_bound = 2.0 / (2.0 + lipschitz);
            const double nu_sq_bound = 4.0 * gamma - 2.0 * gamma * gamma * (2.0 + lipschitz);
            const bool gamma_ok = gamma > 0.0 && gamma < gamma_bound;
            const bool nu_ok = nu > 0.0 && nu_sq_bound > 0.0 && nu * nu < nu_sq_bound;
            report.valid = gamma_ok && nu_ok;
            report.margin = std::min(gamma_bound - gamma,
                                     nu_sq_bound > 0.0 ? std::sqrt(nu_sq_bound) - nu : -nu);
            report.p11 = gamma * (1.0 - gamma * l_tilde);
            report.p12 = -(nu / 2.0) * (1.0 - 2.0 * gamma * l_tilde);
            report.p22 = 1.0 - l_tilde * nu * nu;
            // positive definiteness through determinant and trace of the block
            const double det = (*report.p11) * (*report.p22) - (*report.p12) * (*report.p12);
            const double trace = *report.p11 + *report.p22;
            report.p_positive_definite = det > 0.0 && trace > 0.0;
            report.p_lambda_min =
                trace / 2.0 - std::sqrt(std::max(trace * trace / 4.0 - det, 0.0));
            if (report.p_positive_definite && *report.p_lambda_min > 0.0) {
                const double c2 = *report.p_lambda_min / 2.0;
                const double c1 = gamma * l_tilde * std::sqrt(4.0 + nu * nu);
                const double c0 = gamma * gamma * l_tilde;
                report.c0 = c0;
                report.c1 = c1;
                report.c2 = c2;
                report.c3 = detail::c3_from(c0, c1, c2);
            }
            if (!gamma_ok)
                report.warnings.push_back("heavy_ball: learning rate outside (0, 2/(2+L)) = (0, " +
                                          std::to_string(gamma_bound) + ")");
            if (!nu_ok)
                report.warnings.push_back(
                    "heavy_ball: momentum outside (0, sqrt(4*gamma - 2*gamma^2*(2+L)))" +
                    std::string(nu_sq_bound > 0.0
                                    ? " = (0, " + std::to_string(std::sqrt(nu_sq_bound)) + ")"
                                    : " (bound is empty at this learning rate)"));
            break;
        }
        case OptimizerKind::kProjectedGradientDescent: {
            if (!strong_convexity)
                throw std::invalid_argument(
                    "validate: projected gradient descent requires a strong-convexity constant");
            report.valid = gamma * lipschitz > 0.0 && gamma * lipschitz < 2.0;
            report.margin = 2.0 - gamma * lipschitz;
            const double rho = std::max(std::abs(1.0 - gamma * lipschitz),
                                        std::abs(1.0 - gamma * (*strong_convexity)));
            report.rho = rho;
            if (rho < 1.0) report.iss_gain = gamma / (1.0 - rho);
            if (!report.valid)
                report.warnings.push_back("pgd: step-size condition 0 < gamma*L < 2 fails");
            break;
        }
    }
    return report;
}

/// Lyapunov value along a trajectory: V(u) = phi(u) - phi(u*) for the
/// single-state schemes, V(u) + ||u - w||^2 for the momentum method.
inline double lyapunov_value(const OptimizerScheme& scheme, const CostFunction& cost,
                             const Vector& eta) {
    if (!cost.minimizer) throw std::invalid_argument("lyapunov_value: cost has no minimizer");
    const int n = cost.dimension;
    const Vector u = scheme.extract(eta, n);
    const double v = cost.value(u) - cost.value(*cost.minimizer);
    if (scheme.kind() == OptimizerKind::kHeavyBall) {
        const Vector w = eta.tail(n);
        return v + (u - w).squaredNorm();
    }
    return v;
}

/// Per-step Lyapunov decrement audit over a recorded eta trajectory. Steps
/// whose gradient norm clears the c3 * error_bound threshold must satisfy
/// Delta V <= -c2 * ||grad V||^2 (up to a 1e-6 relative slack); others are
/// outside the guaranteed region and are skipped.
struct DecrementReport {
    int steps_checked = 0;
    int steps_skipped = 0;
    std::vector<int> violations;  // indices into the trajectory (step start)
    double worst_margin = 0.0;    // most positive Delta V + c2*||grad V||^2 observed
    [[nodiscard]] bool ok() const { return violations.empty(); }
};

inline DecrementReport decrement_check(const OptimizerScheme& scheme, const CostFunction& cost,
                                       const std::vector<Vector>& trajectory, double error_bound) {
    if (!cost.has_gradient() || !cost.minimizer)
        throw std::invalid_argument("decrement_check: cost needs a gradient and a minimizer");
    if (scheme.kind() == OptimizerKind::kProjectedGradientDescent)
        throw std::invalid_argument(
            "decrement_check: not defined for projected schemes (use the ISS envelope check)");
    if (!cost.lipschitz) throw std::invalid_argument("decrement_check: cost needs a Lipschitz constant");

    const IssReport iss = validate(scheme, *cost.lipschitz);
    if (!iss.c2 || !iss.c3)
        throw std::invalid_argument("decrement_check: scheme constants unavailable (invalid step sizes)");
    const double c2 = *iss.c2;
    const double c3 = *iss.c3;
    const int n = cost.dimension;

    DecrementReport report;
    for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
        const Vector u = scheme.extract(trajectory[i], n);
        const Vector grad = cost.gradient(u);
        double decrease_scale;  // the quantity whose square bounds the decrement
        if (scheme.kind() == OptimizerKind::kHeavyBall) {
            const Vector w = trajectory[i].tail(n);
            const double kappa_sq = grad.squaredNorm() + (u - w).squaredNorm();
            if (std::sqrt(grad.norm() + (u - w).squaredNorm()) < c3 * error_bound) {
                ++report.steps_skipped;
                continue;
            }
            decrease_scale = kappa_sq;
        } else {
            if (grad.norm() < c3 * error_bound) {
                ++report.steps_skipped;
                continue;
            }
            decrease_scale = grad.squaredNorm();
        }
        const double delta =
            lyapunov_value(scheme, cost, trajectory[i + 1]) - lyapunov_value(scheme, cost, trajectory[i]);
        const double margin = delta + c2 * decrease_scale * (1.0 - 1e-6);
        // V is a difference of cost values, so near the minimizer the
        // decrement sits under the cancellation floor of those evaluations
        const Vector u_next = scheme.extract(trajectory[i + 1], n);
        const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() *
                                (1.0 + std::abs(cost.value(u)) + std::abs(cost.value(u_next)) +
                                 2.0 * std::abs(cost.value(*cost.minimizer)));
        report.worst_margin = std::max(report.worst_margin, margin);
        ++report.steps_checked;
        if (margin > roundoff) report.violations.push_back(static_cast<int>(i));
    }
    return report;
}

}  // namespace prli
