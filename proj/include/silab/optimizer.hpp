#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "silab/errors.hpp"
#include "silab/grouped_params.hpp"
#include "silab/rng.hpp"

namespace silab {

enum class OptimizerMode {
    ProjectedSphere,  // fixed-ELR projected SGD on the sphere
    WholeSpaceWd,     // plain SGD with weight decay, no projection
    RandomWalk,       // Gaussian steps of a prescribed length, projected
};

enum class ScheduleKind { Constant, Cosine, StepChange };

struct Schedule {
    ScheduleKind kind = ScheduleKind::Constant;
    std::size_t t_max = 0;      // cosine horizon
    std::size_t at = 0;         // step-change boundary
    double new_value = 0.0;     // rate after the boundary

    bool operator==(const Schedule&) const = default;
};

// Multiplier applied to the base rate at step t.
inline double schedule_value(const Schedule& s, std::size_t t, double base_rate) {
    switch (s.kind) {
        case ScheduleKind::Constant:
            return 1.0;
        case ScheduleKind::Cosine: {
            if (s.t_max == 0) throw std::invalid_argument("cosine schedule needs t_max > 0");
            if (t >= s.t_max) return 0.0;
            const double phase = std::numbers::pi * static_cast<double>(t) /
                                 static_cast<double>(s.t_max);
            return 0.5 * (1.0 + std::cos(phase));
        }
        case ScheduleKind::StepChange:
            if (!(base_rate > 0.0))
                throw std::invalid_argument("step-change schedule needs a positive base rate");
            return t < s.at ? 1.0 : s.new_value / base_rate;
    }
    return 1.0;
}

struct OptimizerConfig {
    OptimizerMode mode = OptimizerMode::ProjectedSphere;
    // ProjectedSphere: the effective rate (raw lr is elr * rho^2).
    double elr = 0.0;
    // WholeSpaceWd: raw learning rate and decay coefficient.
    double lr = 0.0;
    double weight_decay = 0.0;
    // RandomWalk: length of each pre-projection step.
    double reference_step_size = 0.0;
    Schedule schedule;

    bool operator==(const OptimizerConfig&) const = default;
};

// Gradient step followed by projection back onto the sphere of radius
// params.radius. For scale-invariant gradients the pre-projection norm can
// only grow; it is reported through `pre_projection_norm` when requested.
inline GroupedParams projected_sgd_step(const GroupedParams& params,
                                        std::span<const double> gradient, double lr,
                                        double* pre_projection_norm = nullptr) {
    if (gradient.size() != params.dim())
        throw std::invalid_argument("projected_sgd_step: gradient length mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("projected_sgd_step: lr must be positive");

    GroupedParams out = params;
    axpy(-lr, gradient, out.values);
    const double n = norm(out.values);
    if (pre_projection_norm != nullptr) *pre_projection_norm = n;
    if (!(n > kDegenerateNorm))
        throw DegeneratePointError("projected step landed at the origin");
    scale_in_place(out.values, params.radius / n);
    return out;
}

// theta <- theta - lr * (grad + wd * theta); no projection. Throws once the
// iterate stops being finite so callers can mark the run as diverged.
inline GroupedParams whole_space_wd_step(const GroupedParams& params,
                                         std::span<const double> gradient, double lr,
                                         double weight_decay) {
    if (gradient.size() != params.dim())
        throw std::invalid_argument("whole_space_wd_step: gradient length mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("whole_space_wd_step: lr must be positive");
    if (weight_decay < 0.0)
        throw std::invalid_argument("whole_space_wd_step: weight decay must be >= 0");

    GroupedParams out = params;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] -= lr * (gradient[i] + weight_decay * out.values[i]);
    if (!all_finite(out.values))
        throw DivergenceError("whole-space step produced non-finite parameters");
    return out;
}

// Step of fixed length in a uniformly random ambient direction, then projected
// back onto the sphere. Replicates the step sizes of a real run without using
// its gradients.
inline GroupedParams random_walk_step(const GroupedParams& params, double step_size, Rng& rng) {
    if (!(step_size > 0.0))
        throw std::invalid_argument("random_walk_step: step size must be positive");

    std::vector<double> direction(params.dim());
    rng.fill_normal(direction);
    const double n = norm(direction);
    if (!(n > kDegenerateNorm)) throw DegeneratePointError("degenerate random direction");

    GroupedParams out = params;
    axpy(step_size / n, direction, out.values);
    const double post = norm(out.values);
    if (!(post > kDegenerateNorm))
        throw DegeneratePointError("random-walk step landed at the origin");
    scale_in_place(out.values, params.radius / post);
    return out;
}

}  // namespace silab
