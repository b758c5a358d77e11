#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prli/oracle.hpp"
#include "prli/optimizers.hpp"

namespace prli {

/// Data (C, F, D, G) of a hybrid system over a flat state vector. The set
/// indicators describe closed sets (boundary points included, with a small
/// numerical tolerance baked into the indicator). Two optional hints let the
/// executor schedule flows exactly instead of event-detecting: the time until
/// the jump set is reached, and the durations at which the flow map stops
/// being smooth (integration steps are split there).
struct HybridSystem {
    int state_dim = 0;
    std::function<Vector(const Vector&)> flow_map;
    std::function<Vector(const Vector&)> jump_map;
    std::function<bool(const Vector&)> flow_set;
    std::function<bool(const Vector&)> jump_set;
    std::function<double(const Vector&)> time_to_jump;                  // optional
    std::function<std::vector<double>(const Vector&)> flow_breakpoints; // optional
};

struct HybridSample {
    double t = 0.0;
    int j = 0;
    Vector x;
};

enum class ArcTermination { kHorizonReached, kSolverEscape };

/// A recorded solution on its hybrid time domain: every accepted integration
/// step and every jump, ordered lexicographically in (t, j).
struct HybridArc {
    std::vector<HybridSample> samples;
    std::vector<HybridSample> post_jump;  // state right after each jump
    std::vector<HybridSample> pre_jump;   // state right before each jump
    std::vector<double> jump_times;
    std::vector<double> outputs;  // measured cost per sample (parallel to samples), may be empty
    ArcTermination termination = ArcTermination::kHorizonReached;
    double escape_t = 0.0;
    int escape_j = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] int jump_count() const { return static_cast<int>(jump_times.size()); }
    [[nodiscard]] bool escaped() const { return termination == ArcTermination::kSolverEscape; }
};

struct Horizon {
    double max_t = std::numeric_limits<double>::infinity();
    int max_j = 0;
};

struct SolveOptions {
    double step = 1e-3;
    int record_stride = 1;  // record every k-th flow step; jumps and phase ends always
    std::function<double(const Vector&)> output;  // optional per-sample scalar channel
};

namespace detail {

constexpr double kSetTolerance = 1e-9;

inline void rk4_step(const std::function<Vector(const Vector&)>& f, Vector& x, double h) {
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Run a hybrid system from x0 until the horizon. Jumps take priority when
/// the state lies in both sets; flows use fixed-step explicit 4th-order
/// integration, with the final step of each smooth piece shortened so phase
/// boundaries are hit exactly. A state leaving the union of the flow and jump
/// sets terminates the run as a solver escape, keeping the last valid sample.
inline HybridArc solve(const HybridSystem& system, const Vector& x0, const Horizon& horizon,
                       const SolveOptions& options = {}) {
    if (options.step <= 0.0) throw std::invalid_argument("solve: step must be positive");
    if (x0.size() != system.state_dim)
        throw std::invalid_argument("solve: initial state dimension mismatch");
    if (!system.flow_set(x0) && !system.jump_set(x0))
        throw std::invalid_argument("solve: initial state lies outside the flow and jump sets");

    HybridArc arc;
    Vector x = x0;
    double t = 0.0;
    int j = 0;
    int stride_count = 0;

    auto record = [&](bool force) {
        if (!force && options.record_stride > 1 && (stride_count++ % options.record_stride) != 0)
            return;
        arc.samples.push_back({t, j, x});
        if (options.output) arc.outputs.push_back(options.output(x));
    };
    record(true);

    // escape reports the last valid point of the domain, not the failed step
    auto escape = [&](double valid_t, int valid_j, const Vector& valid_x) {
        if (arc.samples.back().t != valid_t || arc.samples.back().j != valid_j) {
            arc.samples.push_back({valid_t, valid_j, valid_x});
            if (options.output) arc.outputs.push_back(options.output(valid_x));
        }
        arc.termination = ArcTermination::kSolverEscape;
        arc.escape_t = valid_t;
        arc.escape_j = valid_j;
        arc.warnings.push_back("solver escape: state left the flow and jump sets; last valid point t=" +
                               std::to_string(valid_t) + ", j=" + std::to_string(valid_j));
    };

    while (t < horizon.max_t && j < horizon.max_j) {
        if (system.jump_set(x)) {
            arc.pre_jump.push_back({t, j, x});
            x = system.jump_map(x);
            ++j;
            arc.jump_times.push_back(t);
            record(true);
            arc.post_jump.push_back({t, j, x});
            continue;
        }
        if (!system.flow_set(x)) {
            // a jump carried the state out of both sets; the pre-jump point
            // was the last valid one when it exists
            if (!arc.pre_jump.empty() && arc.jump_times.back() == t)
                escape(t, j - 1, arc.pre_jump.back().x);
            else
                escape(t, j, x);
            return arc;
        }

        // one flow phase: up to the next jump (when known) or the horizon
        double phase_length = horizon.max_t - t;
        bool exact_jump_scheduling = false;
        if (system.time_to_jump) {
            const double ttj = std::max(system.time_to_jump(x), 0.0);
            if (ttj <= phase_length) {
                phase_length = ttj;
                exact_jump_scheduling = true;
            }
        }

        std::vector<double> cuts;
        if (system.flow_breakpoints)
            for (double b : system.flow_breakpoints(x))
                if (b > detail::kSetTolerance && b < phase_length - detail::kSetTolerance)
                    cuts.push_back(b);
        cuts.push_back(phase_length);
        std::sort(cuts.begin(), cuts.end());

        const double phase_start = t;
        double piece_start = 0.0;
        bool jumped_early = false;
        for (double piece_end : cuts) {
            const double length = piece_end - piece_start;
            const int full_steps = static_cast<int>(std::floor(length / options.step + 1e-12));
            const double tail = length - full_steps * options.step;
            for (int i = 0; i < full_steps + (tail > detail::kSetTolerance ? 1 : 0); ++i) {
                const double h = i < full_steps ? options.step : tail;
                const double previous_t = t;
                const Vector previous_x = x;
                detail::rk4_step(system.flow_map, x, h);
                const double offset =
                    i < full_steps ? piece_start + (i + 1) * options.step : piece_end;
                t = phase_start + offset;
                const bool in_d = system.jump_set(x);
                if (!system.flow_set(x) && !in_d) {
                    escape(previous_t, j, previous_x);
                    return arc;
                }
                record(false);
                if (!exact_jump_scheduling && in_d) {
                    jumped_early = true;
                    break;
                }
            }
            if (jumped_early) break;
            piece_start = piece_end;
        }
        // make the phase end visible even under a coarse recording stride
        if (arc.samples.back().t != t) record(true);

        if (exact_jump_scheduling && !system.jump_set(x)) {
            // the hint promised a jump here; treat a mismatch as an escape
            escape(t, j, x);
            return arc;
        }
    }
    arc.termination = ArcTermination::kHorizonReached;
    return arc;
}

/// Coordinate layout of the resetting-integrator loop state:
/// [eta (n+m) | p (n) | tau (1) | theta (plant_dim, interconnected runs only)].
struct PrliLayout {
    int n = 0;
    int m = 0;
    int plant_dim = 0;

    [[nodiscard]] int eta_dim() const { return n + m; }
    [[nodiscard]] int p_offset() const { return n + m; }
    [[nodiscard]] int tau_index() const { return n + m + n; }
    [[nodiscard]] int theta_offset() const { return n + m + n + 1; }
    [[nodiscard]] int state_dim() const { return n + m + n + 1 + plant_dim; }

    [[nodiscard]] Vector eta(const Vector& x) const { return x.head(n + m); }
    [[nodiscard]] Vector u(const Vector& x) const { return x.head(n); }
    [[nodiscard]] Vector p(const Vector& x) const { return x.segment(p_offset(), n); }
    [[nodiscard]] double tau(const Vector& x) const { return x[tau_index()]; }
    [[nodiscard]] Vector theta(const Vector& x) const { return x.segment(theta_offset(), plant_dim); }
};

/// Initial loop state (eta0, p=0, tau=0). The internal oracle states are
/// always startable at zero, which avoids the amplified first jump that a
/// nonzero p or tau would cause.
inline Vector prli_initial_state(const Vector& eta0, int n) {
    Vector x = Vector::Zero(eta0.size() + n + 1);
    x.head(eta0.size()) = eta0;
    return x;
}

/// The resetting-integrator optimization loop over a static cost, as a hybrid
/// system: flows hold eta, accumulate p through the dithered measurement, and
/// advance the timer; the jump feeds p/a to the update rule and resets p and
/// the timer to zero.
inline HybridSystem build_prli(const Measurement& phi, const OptimizerScheme& scheme,
                               const OracleConfig& cfg) {
    const int n = cfg.signal().dimension();
    if (scheme.feasible_set() && scheme.feasible_set()->dimension() != n)
        throw std::invalid_argument("build_prli: feasible set dimension mismatch");
    PrliLayout layout{n, scheme.aux_dimension(n), 0};

    HybridSystem system;
    system.state_dim = layout.state_dim();
    system.flow_map = [phi, cfg, layout](const Vector& x) {
        Vector dx = Vector::Zero(x.size());
        // stage evaluations may land a rounding error past the window edge
        const double tau = std::clamp(layout.tau(x), 0.0, 1.0);
        dx.segment(layout.p_offset(), layout.n) =
            integrator_rhs(phi, layout.u(x), cfg, tau);
        dx[layout.tau_index()] = 1.0;
        return dx;
    };
    system.jump_map = [scheme, cfg, layout](const Vector& x) {
        Vector next = Vector::Zero(x.size());
        next.head(layout.eta_dim()) =
            scheme.update(layout.eta(x), layout.p(x) / cfg.amplitude());
        return next;
    };
    system.flow_set = [layout](const Vector& x) {
        const double tau = layout.tau(x);
        return tau >= -detail::kSetTolerance && tau <= 1.0 + detail::kSetTolerance;
    };
    system.jump_set = [layout](const Vector& x) {
        return std::abs(layout.tau(x) - 1.0) <= detail::kSetTolerance;
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

/// Iterate the reduced discrete system eta+ = g(eta, oracle(h(eta))). The
/// oracle argument decides the regime: quadrature estimate, exact gradient,
/// or gradient plus an injected error.
inline std::vector<Vector> discrete_trajectory(const OptimizerScheme& scheme,
                                               const std::function<Vector(const Vector&)>& oracle,
                                               const Vector& eta0, int steps) {
    std::vector<Vector> trajectory;
    trajectory.reserve(static_cast<std::size_t>(steps) + 1);
    trajectory.push_back(eta0);
    Vector eta = eta0;
    const int n = scheme.kind() == OptimizerKind::kHeavyBall ? static_cast<int>(eta0.size()) / 2
                                                             : static_cast<int>(eta0.size());
    for (int k = 0; k < steps; ++k) {
        eta = scheme.update(eta, oracle(eta.head(n)));
        trajectory.push_back(eta);
    }
    return trajectory;
}

}  // namespace prli
