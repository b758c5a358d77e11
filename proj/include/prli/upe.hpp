#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "prli/errors.hpp"

namespace prli {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordered node list of a piecewise-linear signal on [0,1]; K = nodes.size()-1
/// equal-length segments.
struct PiecewiseLinearNodes {
    std::vector<Vector> nodes;
};

/// How a node list is turned into a signal. The interpolant is continuous on
/// [0,1]; the ramp form evaluates node[k] + s*node[k+1] on segment k and is in
/// general discontinuous at segment boundaries — it exists only for
/// side-by-side comparison runs.
enum class PiecewiseForm { kInterpolant, kRamp };

/// An exploration signal v : [0,1] -> R^n together with its sup-norm bound and
/// the tolerance at which its zero-mean / identity-second-moment certificates
/// are expected to hold. Immutable after construction; safe for concurrent
/// evaluation.
class UpeSignal {
public:
    UpeSignal(int dimension, std::function<Vector(double)> eval, double sup_norm,
              double moment_tolerance, std::vector<double> breakpoints = {},
              std::optional<PiecewiseLinearNodes> nodes = std::nullopt)
        : dimension_(dimension),
          eval_(std::move(eval)),
          sup_norm_(sup_norm),
          moment_tolerance_(moment_tolerance),
          breakpoints_(std::move(breakpoints)),
          nodes_(std::move(nodes)) {
        if (dimension_ < 1) throw std::invalid_argument("UpeSignal: dimension must be positive");
        if (sup_norm_ < 0.0) throw std::invalid_argument("UpeSignal: negative sup-norm bound");
    }

    [[nodiscard]] int dimension() const { return dimension_; }
    [[nodiscard]] double sup_norm() const { return sup_norm_; }
    [[nodiscard]] double moment_tolerance() const { return moment_tolerance_; }

    /// Interior points of [0,1] where the signal is not smooth. Integrators
    /// align their steps with these so local accuracy is not lost.
    [[nodiscard]] const std::vector<double>& breakpoints() const { return breakpoints_; }

    /// Node list when the signal is piecewise linear (lets whitening transform
    /// the nodes exactly instead of sampling).
    [[nodiscard]] const std::optional<PiecewiseLinearNodes>& nodes() const { return nodes_; }

    Vector operator()(double tau) const {
        if (!(tau >= 0.0 && tau <= 1.0))
            throw std::domain_error("UpeSignal: evaluation outside [0,1]");
        return eval_(tau);
    }

private:
    int dimension_;
    std::function<Vector(double)> eval_;
    double sup_norm_;
    double moment_tolerance_;
    std::vector<double> breakpoints_;
    std::optional<PiecewiseLinearNodes> nodes_;
};

/// Composite midpoint rule on [0,1]. With breakpoints the points are spread
/// over the smooth pieces (proportionally, largest remainder) so that no
/// midpoint interval straddles a kink.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline QuadratureRule midpoint_rule(int points, const std::vector<double>& breakpoints = {}) {
    if (points < 2) throw std::invalid_argument("midpoint_rule: need at least 2 points");
    QuadratureRule rule;
    rule.nodes.reserve(static_cast<std::size_t>(points));
    rule.weights.reserve(static_cast<std::size_t>(points));
    std::vector<double> edges{0.0};
    for (double b : breakpoints)
        if (b > 0.0 && b < 1.0) edges.push_back(b);
    edges.push_back(1.0);
    std::sort(edges.begin(), edges.end());

    const int pieces = static_cast<int>(edges.size()) - 1;
    // proportional allocation with largest-remainder rounding, >= 1 per piece
    std::vector<int> alloc(pieces, 1);
    int remaining = points - pieces;
    if (remaining < 0) throw std::invalid_argument("midpoint_rule: more pieces than points");
    std::vector<std::pair<double, int>> fractional(pieces);
    for (int k = 0; k < pieces; ++k) {
        const double want = (edges[k + 1] - edges[k]) * remaining;
        alloc[k] += static_cast<int>(want);
        fractional[k] = {want - std::floor(want), k};
    }
    int assigned = 0;
    for (int a : alloc) assigned += a;
    std::sort(fractional.begin(), fractional.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; assigned < points; ++i, ++assigned) alloc[fractional[static_cast<std::size_t>(i)].second] += 1;

    for (int k = 0; k < pieces; ++k) {
        const double lo = edges[k], hi = edges[k + 1];
        const double h = (hi - lo) / alloc[k];
        for (int i = 0; i < alloc[k]; ++i) {
            rule.nodes.push_back(lo + (i + 0.5) * h);
            rule.weights.push_back(h);
        }
    }
    return rule;
}

struct MomentResiduals {
    double mean_residual = 0.0;        // || int v dtau ||
    double covariance_residual = 0.0;  // || int v v' dtau - I ||_F
};

/// Zero-mean and identity-second-moment residuals under the module's
/// quadrature (Frobenius norm for the covariance defect).
inline MomentResiduals certify_moments(const UpeSignal& v, int quadrature_points) {
    const QuadratureRule rule = midpoint_rule(quadrature_points, v.breakpoints());
    const int n = v.dimension();
    Vector mean = Vector::Zero(n);
    Matrix second = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Vector val = v(rule.nodes[i]);
        mean += rule.weights[i] * val;
        second += rule.weights[i] * (val * val.transpose());
    }
    return {mean.norm(), (second - Matrix::Identity(n, n)).norm()};
}

/// Whether the signal's certificates hold at its declared tolerance.
inline bool is_certified(const UpeSignal& v, int quadrature_points) {
    const MomentResiduals r = certify_moments(v, quadrature_points);
    return r.mean_residual <= v.moment_tolerance() &&
           r.covariance_residual <= v.moment_tolerance();
}

/// v(tau) = sqrt(2) * (sin(2*pi*tau), sin(4*pi*tau), ..., sin(2*n*pi*tau)).
/// Zero mean and identity second moment hold exactly; the sup norm is bounded
/// by sqrt(2n).
inline UpeSignal sinusoidal_upe(int n) {
    if (n < 1) throw std::invalid_argument("sinusoidal_upe: dimension must be positive");
    const double root2 = std::numbers::sqrt2;
    auto eval = [n, root2](double tau) {
        Vector v(n);
        for (int k = 1; k <= n; ++k)
            v[k - 1] = root2 * std::sin(2.0 * std::numbers::pi * k * tau);
        return v;
    };
    return UpeSignal(n, std::move(eval), std::sqrt(2.0 * n), 1e-6);
}

namespace detail {

inline void check_nodes(const PiecewiseLinearNodes& nodes) {
    if (nodes.nodes.size() < 2)
        throw std::invalid_argument("piecewise_linear_upe: need at least 2 nodes");
    const Eigen::Index n = nodes.nodes.front().size();
    if (n < 1) throw std::invalid_argument("piecewise_linear_upe: empty node");
    for (const Vector& node : nodes.nodes)
        if (node.size() != n)
            throw std::invalid_argument("piecewise_linear_upe: node dimension mismatch");
}

inline std::vector<double> segment_breakpoints(int segments) {
    std::vector<double> bps;
    for (int k = 1; k < segments; ++k)
        bps.push_back(static_cast<double>(k) / segments);
    return bps;
}

}  // namespace detail

/// Piecewise-linear signal on K equal segments. The interpolant form evaluates
/// (1-s)*node[k] + s*node[k+1] with s = K*tau - k, so the sup norm is attained
/// at a node (the norm is convex along each segment).
inline UpeSignal piecewise_linear_upe(const PiecewiseLinearNodes& nodes,
                                      PiecewiseForm form = PiecewiseForm::kInterpolant) {
    detail::check_nodes(nodes);
    const int segments = static_cast<int>(nodes.nodes.size()) - 1;
    const int n = static_cast<int>(nodes.nodes.front().size());
    auto node_list = nodes.nodes;

    double sup = 0.0;
    if (form == PiecewiseForm::kInterpolant) {
        for (const Vector& node : node_list) sup = std::max(sup, node.norm());
    } else {
        // ramp segments run from node[k] to node[k]+node[k+1]; both ends count
        for (int k = 0; k < segments; ++k) {
            sup = std::max(sup, node_list[static_cast<std::size_t>(k)].norm());
            sup = std::max(sup, (node_list[static_cast<std::size_t>(k)] +
                                 node_list[static_cast<std::size_t>(k) + 1])
                                    .norm());
        }
    }

    auto eval = [node_list, segments, form](double tau) {
        int k = std::min(static_cast<int>(tau * segments), segments - 1);
        const double s = segments * tau - k;
        const Vector& a = node_list[static_cast<std::size_t>(k)];
        const Vector& b = node_list[static_cast<std::size_t>(k) + 1];
        if (form == PiecewiseForm::kInterpolant) return Vector((1.0 - s) * a + s * b);
        return Vector(a + s * b);
    };
    std::optional<PiecewiseLinearNodes> keep;
    if (form == PiecewiseForm::kInterpolant) keep = nodes;
    return UpeSignal(n, std::move(eval), sup, 1e-3, detail::segment_breakpoints(segments),
                     std::move(keep));
}

namespace detail {

struct WhiteningTransform {
    Vector mean;
    Matrix inverse_sqrt;
};

/// Empirical mean and inverse covariance square root under the rule's
/// quadrature. Throws when the covariance is numerically singular.
inline WhiteningTransform whitening_transform(const std::function<Vector(double)>& raw, int n,
                                              const QuadratureRule& rule) {
    Vector mean = Vector::Zero(n);
    Matrix second = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Vector val = raw(rule.nodes[i]);
        if (val.size() != n)
            throw std::invalid_argument("whiten: raw signal dimension mismatch");
        mean += rule.weights[i] * val;
        second += rule.weights[i] * (val * val.transpose());
    }
    const Matrix covariance = second - mean * mean.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("whiten: eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() <= 1e-10)
        throw NotPersistentlyExcitingError(
            "whiten: empirical covariance is singular or near-singular (smallest eigenvalue " +
            std::to_string(eig.eigenvalues().minCoeff()) + "); signal is not persistently exciting");
    const Matrix inverse_sqrt = eig.eigenvectors() *
                                eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                eig.eigenvectors().transpose();
    return {std::move(mean), inverse_sqrt};
}

}  // namespace detail

/// Center and whiten a raw continuous signal so that its empirical moments
/// under the same quadrature are exactly zero / identity (up to roundoff).
/// The sup-norm bound comes from a dense scan inflated by the largest
/// adjacent-sample gap.
inline UpeSignal whiten(const std::function<Vector(double)>& raw, int n, int quadrature_points,
                        std::vector<double> breakpoints = {}) {
    const QuadratureRule rule = midpoint_rule(quadrature_points, breakpoints);
    auto transform = detail::whitening_transform(raw, n, rule);
    const Vector mean = transform.mean;
    const Matrix inverse_sqrt = transform.inverse_sqrt;
    auto eval = [raw, mean, inverse_sqrt](double tau) -> Vector {
        return inverse_sqrt * (raw(tau) - mean);
    };

    const int scan = std::max(4 * quadrature_points, 4096);
    double sup = 0.0, largest_gap = 0.0;
    Vector prev = eval(0.0);
    sup = prev.norm();
    for (int i = 1; i <= scan; ++i) {
        const Vector cur = eval(static_cast<double>(i) / scan);
        sup = std::max(sup, cur.norm());
        largest_gap = std::max(largest_gap, (cur - prev).norm());
        prev = cur;
    }
    return UpeSignal(n, std::move(eval), sup + largest_gap, 1e-9, std::move(breakpoints));
}

/// Whitening of an existing signal. Piecewise-linear signals are transformed
/// node-exactly (affine images stay piecewise linear), which keeps the
/// sup-norm bound tight.
inline UpeSignal whiten(const UpeSignal& signal, int quadrature_points) {
    if (signal.nodes()) {
        const QuadratureRule rule = midpoint_rule(quadrature_points, signal.breakpoints());
        auto raw = [&signal](double tau) { return signal(tau); };
        auto transform = detail::whitening_transform(raw, signal.dimension(), rule);
        PiecewiseLinearNodes whitened;
        whitened.nodes.reserve(signal.nodes()->nodes.size());
        for (const Vector& node : signal.nodes()->nodes)
            whitened.nodes.push_back(transform.inverse_sqrt * (node - transform.mean));
        UpeSignal out = piecewise_linear_upe(whitened);
        return UpeSignal(out.dimension(),
                         [out](double tau) { return out(tau); }, out.sup_norm(), 1e-9,
                         out.breakpoints(), out.nodes());
    }
    auto raw = [signal](double tau) { return signal(tau); };
    return whiten(raw, signal.dimension(), quadrature_points, signal.breakpoints());
}

}  // namespace prli
