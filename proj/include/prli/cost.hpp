#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prli/sampling.hpp"

namespace prli {

/// Scalar-measurement view of a cost: the only thing the model-free pipeline
/// is allowed to consume.
using Measurement = std::function<double(const Vector&)>;

/// A cost with optional gradient and regularity metadata. Immutable; gradients
/// may be absent for measurement-only use.
struct CostFunction {
    int dimension = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;  // may be empty
    std::optional<double> lipschitz;                // gradient Lipschitz constant
    std::optional<double> strong_convexity;
    std::optional<Vector> minimizer;
    bool indefinite_warning = false;

    [[nodiscard]] bool has_gradient() const { return static_cast<bool>(gradient); }

    [[nodiscard]] Measurement measurement() const {
        auto fn = value;
        return [fn](const Vector& u) { return fn(u); };
    }
};

/// value(u) = 0.5*(u-u_star)' Q (u-u_star) + offset with gradient Q*(u-u_star).
/// Q must be symmetric; an indefinite Q is accepted but flagged and leaves the
/// strong-convexity constant unset.
inline CostFunction quadratic_cost(const Matrix& Q, const Vector& u_star, double offset) {
    if (Q.rows() != Q.cols()) throw std::invalid_argument("quadratic_cost: Q must be square");
    if (Q.rows() != u_star.size())
        throw std::invalid_argument("quadratic_cost: dimension mismatch between Q and u_star");
    if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()))
        throw std::invalid_argument("quadratic_cost: Q must be symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("quadratic_cost: eigendecomposition failed");
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double lambda_max = eig.eigenvalues().maxCoeff();

    CostFunction cost;
    cost.dimension = static_cast<int>(Q.rows());
    const Matrix Qc = Q;
    const Vector us = u_star;
    cost.value = [Qc, us, offset](const Vector& u) {
        const Vector d = u - us;
        return 0.5 * d.dot(Qc * d) + offset;
    };
    cost.gradient = [Qc, us](const Vector& u) -> Vector { return Qc * (u - us); };
    cost.lipschitz = lambda_max;
    if (lambda_min > 0.0)
        cost.strong_convexity = lambda_min;
    else
        cost.indefinite_warning = true;
    cost.minimizer = u_star;
    return cost;
}

/// Sampled probe of the regularity conditions a cost is declared to satisfy:
/// positivity off the minimizer, nonvanishing gradient off the minimizer, and
/// the declared gradient Lipschitz constant.
struct RegularityReport {
    bool positivity_ok = true;
    bool gradient_nonvanishing_ok = true;
    bool lipschitz_ok = true;
    double worst_value_gap = 0.0;       // most negative phi(u)-phi(u*) observed
    double worst_gradient_norm = 0.0;   // smallest off-minimizer gradient norm
    double worst_lipschitz_ratio = 0.0; // largest sampled difference quotient
    [[nodiscard]] bool all_ok() const {
        return positivity_ok && gradient_nonvanishing_ok && lipschitz_ok;
    }
};

inline RegularityReport probe_regularity(const CostFunction& cost, int samples, double radius,
                                           std::uint64_t seed = 0) {
    if (!cost.minimizer || !cost.has_gradient())
        throw std::invalid_argument("probe_regularity: cost needs a minimizer and a gradient");
    if (samples < 1) throw std::invalid_argument("probe_regularity: samples must be positive");
    if (radius <= 0.0) throw std::invalid_argument("probe_regularity: radius must be positive");

    const Vector& u_star = *cost.minimizer;
    const double phi_star = cost.value(u_star);
    std::mt19937_64 rng(seed);
    RegularityReport report;
    report.worst_value_gap = std::numeric_limits<double>::infinity();
    report.worst_gradient_norm = std::numeric_limits<double>::infinity();

    Vector previous = uniform_in_ball(rng, u_star, radius);
    for (int i = 0; i < samples; ++i) {
        const Vector u = uniform_in_ball(rng, u_star, radius);
        const double off = (u - u_star).norm();
        if (off > 1e-8) {
            const double gap = cost.value(u) - phi_star;
            report.worst_value_gap = std::min(report.worst_value_gap, gap);
            if (gap <= 0.0) report.positivity_ok = false;
            const double gnorm = cost.gradient(u).norm();
            report.worst_gradient_norm = std::min(report.worst_gradient_norm, gnorm);
            if (gnorm <= 1e-12) report.gradient_nonvanishing_ok = false;
        }
        if (cost.lipschitz) {
            const double gap = (u - previous).norm();
            if (gap > 1e-10) {
                const double ratio = (cost.gradient(u) - cost.gradient(previous)).norm() / gap;
                report.worst_lipschitz_ratio = std::max(report.worst_lipschitz_ratio, ratio);
                if (ratio > *cost.lipschitz * (1.0 + 1e-9)) report.lipschitz_ok = false;
            }
        }
        previous = u;
    }
    return report;
}

/// Closed convex feasible set with a closed-form Euclidean projection.
class ConvexFeasibleSet {
public:
    enum class Kind { kBall, kBox, kHalfspace };

    static ConvexFeasibleSet ball(Vector center, double radius) {
        if (radius <= 0.0) throw std::invalid_argument("ConvexFeasibleSet: radius must be positive");
        ConvexFeasibleSet set;
        set.kind_ = Kind::kBall;
        set.center_ = std::move(center);
        set.radius_ = radius;
        return set;
    }

    static ConvexFeasibleSet box(Vector lower, Vector upper) {
        if (lower.size() != upper.size())
            throw std::invalid_argument("ConvexFeasibleSet: box bound dimensions differ");
        if (((upper - lower).array() < 0.0).any())
            throw std::invalid_argument("ConvexFeasibleSet: box has lower > upper");
        ConvexFeasibleSet set;
        set.kind_ = Kind::kBox;
        set.lower_ = std::move(lower);
        set.upper_ = std::move(upper);
        return set;
    }

    /// { u : <normal, u> <= offset }
    static ConvexFeasibleSet halfspace(Vector normal, double offset) {
        if (normal.norm() == 0.0)
            throw std::invalid_argument("ConvexFeasibleSet: halfspace normal must be nonzero");
        ConvexFeasibleSet set;
        set.kind_ = Kind::kHalfspace;
        set.normal_ = std::move(normal);
        set.offset_ = offset;
        return set;
    }

    [[nodiscard]] Kind kind() const { return kind_; }

    [[nodiscard]] int dimension() const {
        switch (kind_) {
            case Kind::kBall: return static_cast<int>(center_.size());
            case Kind::kBox: return static_cast<int>(lower_.size());
            case Kind::kHalfspace: return static_cast<int>(normal_.size());
        }
        return 0;
    }

    [[nodiscard]] Vector project(const Vector& u) const {
        if (u.size() != dimension())
            throw std::invalid_argument("ConvexFeasibleSet: projection dimension mismatch");
        // membership snaps at rounding scale so re-projecting a projected
        // point is the exact identity
        constexpr double eps = std::numeric_limits<double>::epsilon();
        switch (kind_) {
            case Kind::kBall: {
                const Vector d = u - center_;
                const double dist = d.norm();
                if (dist <= radius_ * (1.0 + 16.0 * eps)) return u;
                return center_ + (radius_ / dist) * d;
            }
            case Kind::kBox:
                return u.cwiseMax(lower_).cwiseMin(upper_);
            case Kind::kHalfspace: {
                const double inner = normal_.dot(u);
                const double excess = inner - offset_;
                if (excess <= 16.0 * eps * (std::abs(inner) + std::abs(offset_))) return u;
                return u - (excess / normal_.squaredNorm()) * normal_;
            }
        }
        return u;
    }

    [[nodiscard]] bool contains(const Vector& u, double slack = 0.0) const {
        return (project(u) - u).norm() <= slack;
    }

private:
    Kind kind_ = Kind::kBall;
    Vector center_, lower_, upper_, normal_;
    double radius_ = 0.0, offset_ = 0.0;
};

inline Vector project(const ConvexFeasibleSet& set, const Vector& u) { return set.project(u); }

/// Central finite-difference gradient with a step scaled by ||u|| to control
/// cancellation; used as the independent cross-check for declared gradients.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& value,
                                         const Vector& u, double relative_step = 1e-6) {
    const double h = relative_step * (1.0 + u.norm());
    Vector g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        Vector up = u, dn = u;
        up[i] += h;
        dn[i] -= h;
        g[i] = (value(up) - value(dn)) / (2.0 * h);
    }
    return g;
}

}  // namespace prli
