#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prli/hybrid.hpp"
#include "prli/sampling.hpp"

namespace prli {

/// Post-hoc convergence summary of a recorded arc toward a target point.
/// All quantities are pure functions of the recorded samples, so identical
/// arcs yield identical reports.
struct ConvergenceReport {
    double final_distance = 0.0;
    /// first jump index reaching each tolerance; -1 when never reached
    std::vector<std::pair<double, int>> jumps_to_tolerance;
    /// sup of the distance over the last quarter of the jumps (at least 10)
    double ultimate_bound_estimate = 0.0;
    /// recorded cost at each post-jump sample, shifted by the target cost
    /// when that is known
    std::vector<std::pair<int, double>> lyapunov_trace;
};

inline ConvergenceReport convergence_report(const HybridArc& arc, const Vector& target,
                                            std::optional<double> cost_at_target = std::nullopt) {
    if (arc.jump_count() < 4)
        throw std::invalid_argument("convergence_report: arc has fewer than 4 jumps");
    const int n = static_cast<int>(target.size());

    std::vector<double> distances;  // post-jump distances, index k <-> jump k+1
    distances.reserve(arc.post_jump.size());
    for (const HybridSample& sample : arc.post_jump)
        distances.push_back((sample.x.head(n) - target).norm());
    const double initial_distance =
        arc.samples.empty() ? distances.front() : (arc.samples.front().x.head(n) - target).norm();

    ConvergenceReport report;
    report.final_distance = distances.back();
    for (double tolerance : {1.0, 0.5, 0.1, 0.05}) {
        int hit = initial_distance <= tolerance ? 0 : -1;
        if (hit < 0)
            for (std::size_t k = 0; k < distances.size(); ++k)
                if (distances[k] <= tolerance) {
                    hit = static_cast<int>(k) + 1;
                    break;
                }
        report.jumps_to_tolerance.emplace_back(tolerance, hit);
    }

    const int jumps = static_cast<int>(distances.size());
    const int window = std::max(jumps / 4, std::min(10, jumps));
    report.ultimate_bound_estimate =
        *std::max_element(distances.end() - window, distances.end());

    if (!arc.outputs.empty()) {
        // locate the recorded output at each post-jump sample
        std::size_t cursor = 0;
        for (std::size_t k = 0; k < arc.post_jump.size(); ++k) {
            while (cursor < arc.samples.size() &&
                   (arc.samples[cursor].j < arc.post_jump[k].j ||
                    arc.samples[cursor].t < arc.post_jump[k].t))
                ++cursor;
            if (cursor < arc.outputs.size()) {
                const double value = arc.outputs[cursor] - cost_at_target.value_or(0.0);
                report.lyapunov_trace.emplace_back(static_cast<int>(k) + 1, value);
            }
        }
    }
    return report;
}

/// Audit of the integrator envelope: along every recorded sample after the
/// first jump, ||p|| may not exceed sup_norm * max |phi| over the dither ball
/// around the window's held input. The ball maximum is estimated from
/// deterministic low-discrepancy samples, with a small relative slack.
struct IntegratorBoundReport {
    int samples_checked = 0;
    std::vector<std::size_t> violations;  // indices into arc.samples
    double worst_ratio = 0.0;             // max ||p|| / bound observed
    [[nodiscard]] bool ok() const { return violations.empty(); }
};

inline IntegratorBoundReport integrator_bound_check(const HybridArc& arc, const Measurement& phi,
                                                    const OracleConfig& cfg, const PrliLayout& layout,
                                                    int ball_samples = 1000) {
    IntegratorBoundReport report;
    const double radius = std::abs(cfg.amplitude()) * cfg.signal().sup_norm();
    // the sample cloud only ever translates, so build it once at the origin
    const std::vector<Vector> offsets = ball_points(Vector::Zero(layout.n), radius, ball_samples);
    for (std::size_t i = 0; i < arc.samples.size(); ++i) {
        const HybridSample& sample = arc.samples[i];
        if (sample.j < 1) continue;
        const Vector held = layout.u(sample.x);  // constant during the window
        double ball_max = 0.0;
        for (const Vector& offset : offsets)
            ball_max = std::max(ball_max, std::abs(phi(held + offset)));
        const double bound = cfg.signal().sup_norm() * ball_max * (1.0 + 1e-6);
        const double p_norm = layout.p(sample.x).norm();
        if (bound > 0.0) report.worst_ratio = std::max(report.worst_ratio, p_norm / bound);
        ++report.samples_checked;
        if (p_norm > bound) report.violations.push_back(i);
    }
    return report;
}

/// Ranking of labeled runs by how many jumps each needed to reach the given
/// tolerance. Runs that never reach it are reported as non-convergent and
/// ordered last; equal counts tie and keep their input order.
struct SchemeOrdering {
    struct Entry {
        std::string label;
        int jumps_to_tolerance = -1;  // -1 = never reached
        bool convergent = false;
    };
    std::vector<Entry> ranking;
};

inline SchemeOrdering compare_schemes(
    const std::vector<std::pair<std::string, ConvergenceReport>>& reports, double tolerance) {
    SchemeOrdering ordering;
    for (const auto& [label, report] : reports) {
        int jumps = -1;
        for (const auto& [tol, hit] : report.jumps_to_tolerance)
            if (tol == tolerance) jumps = hit;
        ordering.ranking.push_back({label, jumps, jumps >= 0});
    }
    std::stable_sort(ordering.ranking.begin(), ordering.ranking.end(),
                     [](const auto& a, const auto& b) {
                         if (a.convergent != b.convergent) return a.convergent;
                         if (!a.convergent) return false;
                         return a.jumps_to_tolerance < b.jumps_to_tolerance;
                     });
    return ordering;
}

/// Per-timescale deviation of the closed-plant run from a static reference:
/// max distance between post-jump u values over the shared jump budget. The
/// runner closure returns the post-jump u sequence at a given timescale, or
/// an empty vector to flag a solver escape (recorded, sweep continues).
struct SgpasRow {
    double epsilon = 0.0;
    double max_deviation = 0.0;
    bool escaped = false;
};

inline std::vector<SgpasRow> sgpas_deviation_table(
    const std::function<std::vector<Vector>(double)>& run_at_epsilon,
    const std::vector<Vector>& static_reference, const std::vector<double>& epsilons) {
    if (epsilons.size() < 2)
        throw std::invalid_argument("sgpas_deviation_table: need at least two timescales");
    std::vector<SgpasRow> rows;
    for (double epsilon : epsilons) {
        SgpasRow row;
        row.epsilon = epsilon;
        const std::vector<Vector> us = run_at_epsilon(epsilon);
        if (us.empty()) {
            row.escaped = true;
        } else {
            const std::size_t count = std::min(us.size(), static_reference.size());
            for (std::size_t k = 0; k < count; ++k)
                row.max_deviation =
                    std::max(row.max_deviation, (us[k] - static_reference[k]).norm());
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace prli
