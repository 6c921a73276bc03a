#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "silab/linalg.hpp"
#include "silab/objective.hpp"

namespace silab {

// Guard for normalized cosine/orthogonality ratios at zero gradient.
inline constexpr double kOrthogonalityGuard = 1e-30;

struct InvarianceReport {
    // |F(scaled) - F(original)|
    double value_deviation = 0.0;
    // Worst relative deviation from the gradient scaling law across groups:
    // the scaled group's gradient must shrink by 1/c, the others must not move.
    double gradient_deviation = 0.0;
};

namespace detail {

inline double relative_gradient_deviation(const GroupLayout& layout,
                                          std::span<const double> base,
                                          std::span<const double> scaled,
                                          std::size_t scaled_group, double c) {
    double worst = 0.0;
    for (std::size_t j = 0; j < layout.num_groups(); ++j) {
        const auto g0 = layout.group(base, j);
        const auto g1 = layout.group(scaled, j);
        const double factor = (j == scaled_group) ? c : 1.0;
        double diff_sq = 0.0;
        for (std::size_t k = 0; k < g0.size(); ++k) {
            const double d = g1[k] * factor - g0[k];
            diff_sq += d * d;
        }
        const double rel = std::sqrt(diff_sq) / (norm(g0) + kOrthogonalityGuard);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace detail

// Scales one group by c and measures how far the objective is from being
// invariant, in value and in the gradient law.
inline InvarianceReport check_scale_invariance(const SIObjective& objective,
                                               const GroupedParams& params,
                                               std::size_t group_index, double c,
                                               std::span<const std::size_t> batch = {}) {
    if (!(c > 0.0)) throw std::invalid_argument("check_scale_invariance: c must be positive");

    std::vector<double> grad_base, grad_scaled;
    const double f_base = objective.value_and_gradient(params, grad_base, batch);
    const GroupedParams scaled = params.scaled_group(group_index, c);
    const double f_scaled = objective.value_and_gradient(scaled, grad_scaled, batch);

    InvarianceReport report;
    report.value_deviation = std::abs(f_scaled - f_base);
    report.gradient_deviation = detail::relative_gradient_deviation(
        params.layout, grad_base, grad_scaled, group_index, c);
    return report;
}

// Same check with the whole vector scaled: F(c theta) = F(theta) and
// grad F(c theta) = grad F(theta) / c.
inline InvarianceReport check_total_scale_invariance(const SIObjective& objective,
                                                     const GroupedParams& params, double c,
                                                     std::span<const std::size_t> batch = {}) {
    if (!(c > 0.0)) throw std::invalid_argument("check_total_scale_invariance: c must be positive");

    std::vector<double> grad_base, grad_scaled;
    const double f_base = objective.value_and_gradient(params, grad_base, batch);
    GroupedParams scaled = params;
    scale_in_place(scaled.values, c);
    const double f_scaled = objective.value_and_gradient(scaled, grad_scaled, batch);

    InvarianceReport report;
    report.value_deviation = std::abs(f_scaled - f_base);
    double diff_sq = 0.0;
    for (std::size_t k = 0; k < grad_base.size(); ++k) {
        const double d = grad_scaled[k] * c - grad_base[k];
        diff_sq += d * d;
    }
    report.gradient_deviation = std::sqrt(diff_sq) / (norm(grad_base) + kOrthogonalityGuard);
    return report;
}

// Normalized |<theta_i, grad_i>|; identically zero for an exactly
// scale-invariant objective.
inline double group_orthogonality(const GroupedParams& params, std::span<const double> gradient,
                                  std::size_t group_index) {
    const auto theta_i = params.group(group_index);
    const auto grad_i = params.layout.group(gradient, group_index);
    return std::abs(dot(theta_i, grad_i)) /
           (norm(theta_i) * norm(grad_i) + kOrthogonalityGuard);
}

inline double max_group_orthogonality(const GroupedParams& params,
                                      std::span<const double> gradient) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params.num_groups(); ++i)
        worst = std::max(worst, group_orthogonality(params, gradient, i));
    return worst;
}

}  // namespace silab
