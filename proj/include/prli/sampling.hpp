#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace prli {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

/// Van der Corput radical inverse in the given base.
inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double scale = inv;
    double result = 0.0;
    while (index > 0) {
        result += static_cast<double>(index % base) * scale;
        index /= base;
        scale *= inv;
    }
    return result;
}

inline std::uint64_t nth_prime(int i) {
    static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (i < 0 || i >= static_cast<int>(sizeof(primes) / sizeof(primes[0])))
        throw std::invalid_argument("nth_prime: dimension too large for Halton sampling");
    return primes[i];
}

}  // namespace detail

/// Deterministic low-discrepancy points filling a closed Euclidean ball.
/// Points come from a Halton sequence on the bounding cube, rejecting the
/// corners; the center and the axis-extreme points are always included so the
/// boundary is probed even at small counts.
inline std::vector<Vector> ball_points(const Vector& center, double radius, int count) {
    if (radius < 0.0) throw std::invalid_argument("ball_points: negative radius");
    if (count < 1) throw std::invalid_argument("ball_points: count must be positive");
    const int n = static_cast<int>(center.size());
    std::vector<Vector> points;
    points.reserve(static_cast<std::size_t>(count));
    points.push_back(center);
    for (int i = 0; i < n && static_cast<int>(points.size()) < count; ++i) {
        for (double sign : {1.0, -1.0}) {
            if (static_cast<int>(points.size()) >= count) break;
            Vector p = center;
            p[i] += sign * radius;
            points.push_back(p);
        }
    }
    std::uint64_t index = 1;
    while (static_cast<int>(points.size()) < count) {
        Vector offset(n);
        for (int d = 0; d < n; ++d)
            offset[d] = 2.0 * detail::radical_inverse(index, detail::nth_prime(d)) - 1.0;
        ++index;
        if (offset.norm() <= 1.0) points.push_back(center + radius * offset);
    }
    return points;
}

/// Uniform sample in an axis-aligned box, driven by the caller's generator.
inline Vector uniform_in_box(std::mt19937_64& rng, const Vector& lower, const Vector& upper) {
    if (lower.size() != upper.size())
        throw std::invalid_argument("uniform_in_box: bound dimensions differ");
    Vector x(lower.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        std::uniform_real_distribution<double> dist(lower[i], upper[i]);
        x[i] = dist(rng);
    }
    return x;
}

/// Uniform sample in a closed ball (direction from normalized Gaussian, radius
/// from the volume-correct power law).
inline Vector uniform_in_ball(std::mt19937_64& rng, const Vector& center, double radius) {
    const int n = static_cast<int>(center.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector dir(n);
    do {
        for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    } while (dir.norm() == 0.0);
    dir /= dir.norm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
    return center + r * dir;
}

}  // namespace prli
