#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "silab/errors.hpp"
#include "silab/grouped_params.hpp"

namespace silab {

// Per-group effective learning rates, effective gradients, and effective step
// sizes for one parameter/gradient pair. Norms are the ones actually measured,
// so the identities
//     sum_i 1/elr_i = 1/elr_total
//     (elr_total * eff_grad_total)^2 = sum_i w_i (elr_i * eff_grad_i)^2
// hold for any consistent input, on or off the sphere.
struct ElrReport {
    double lr = 0.0;  // raw learning rate the report was computed for

    double total_elr = 0.0;
    double total_eff_grad = 0.0;
    double total_ess = 0.0;

    std::vector<double> group_rho;
    std::vector<double> group_elr;
    std::vector<double> group_eff_grad;
    std::vector<double> group_ess;
    std::vector<double> weights;  // w_i = total_elr / elr_i, sums to 1

    std::size_t num_groups() const { return group_elr.size(); }
};

inline ElrReport compute_elr_report(const GroupedParams& params, std::span<const double> gradient,
                                    double lr) {
    if (gradient.size() != params.dim())
        throw std::invalid_argument("compute_elr_report: gradient length mismatch");
    if (!(lr > 0.0)) throw std::invalid_argument("compute_elr_report: lr must be positive");

    const std::size_t n = params.num_groups();
    ElrReport r;
    r.lr = lr;
    r.group_rho.resize(n);
    r.group_elr.resize(n);
    r.group_eff_grad.resize(n);
    r.group_ess.resize(n);
    r.weights.resize(n);

    // Totals are accumulated from the per-group sums so the report is
    // self-consistent to machine precision.
    double rho_sq = 0.0;
    double grad_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double gi_sq = squared_norm(params.layout.group(gradient, i));
        const double rho_i_sq = squared_norm(params.group(i));
        const double rho_i = std::sqrt(rho_i_sq);
        if (!(rho_i > kDegenerateNorm))
            throw DegeneratePointError("group '" + params.layout.name(i) +
                                       "' has (near-)zero norm");
        r.group_rho[i] = rho_i;
        r.group_elr[i] = lr / rho_i_sq;
        r.group_eff_grad[i] = std::sqrt(gi_sq) * rho_i;
        r.group_ess[i] = r.group_elr[i] * r.group_eff_grad[i];
        rho_sq += rho_i_sq;
        grad_sq += gi_sq;
    }
    r.total_elr = lr / rho_sq;
    r.total_eff_grad = std::sqrt(grad_sq) * std::sqrt(rho_sq);
    r.total_ess = r.total_elr * r.total_eff_grad;
    for (std::size_t i = 0; i < n; ++i) r.weights[i] = r.total_elr / r.group_elr[i];
    return r;
}

// One-step-ahead ELR of each group under a full-batch projected step:
//     elr_i' = elr_i * (1 + total_ess^2) / (1 + ess_i^2).
// Follows from the norm update under gradient-parameter orthogonality; groups
// whose step size exceeds the total get a smaller rate next step.
inline std::vector<double> predict_next_elr(const ElrReport& r) {
    std::vector<double> out(r.num_groups());
    const double total = 1.0 + r.total_ess * r.total_ess;
    for (std::size_t i = 0; i < r.num_groups(); ++i)
        out[i] = r.group_elr[i] * total / (1.0 + r.group_ess[i] * r.group_ess[i]);
    return out;
}

}  // namespace silab
