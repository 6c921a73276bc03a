#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "silab/errors.hpp"
#include "silab/grouped_params.hpp"
#include "silab/objective.hpp"

namespace silab {

// Analytic benchmark objective: a conical combination of n two-variable ratio
// terms, F(x, y) = sum_i alpha_i * x_i^2 / (x_i^2 + y_i^2). Each (x_i, y_i)
// pair is a scale-invariant group, so the whole function lives on spheres.
struct ToySystem {
    std::vector<double> alphas;

    explicit ToySystem(std::vector<double> alphas_) : alphas(std::move(alphas_)) {
        if (alphas.empty()) throw std::invalid_argument("ToySystem: at least one term required");
        for (double a : alphas)
            if (!(a > 0.0)) throw std::invalid_argument("ToySystem: coefficients must be positive");
    }

    std::size_t num_groups() const { return alphas.size(); }
    std::size_t dim() const { return 2 * alphas.size(); }
    double alpha_sum() const { return std::accumulate(alphas.begin(), alphas.end(), 0.0); }

    GroupLayout make_layout() const { return GroupLayout::uniform(num_groups(), 2, "pair"); }
};

namespace detail {

inline void require_toy_point(const ToySystem& sys, const GroupedParams& p) {
    if (p.dim() != sys.dim()) throw std::invalid_argument("toy point has wrong dimension");
    for (std::size_t i = 0; i < sys.num_groups(); ++i) {
        if (!(p.group_norm(i) > kDegenerateNorm))
            throw DegeneratePointError("pair " + std::to_string(i) + " is at the origin");
    }
}

}  // namespace detail

inline double toy_value(const ToySystem& sys, const GroupedParams& point) {
    detail::require_toy_point(sys, point);
    double f = 0.0;
    for (std::size_t i = 0; i < sys.num_groups(); ++i) {
        const double x = point.values[2 * i];
        const double y = point.values[2 * i + 1];
        f += sys.alphas[i] * x * x / (x * x + y * y);
    }
    return f;
}

// Exact gradient: per pair, (2 a x y / s^2) * [y, -x] with s = x^2 + y^2.
inline std::vector<double> toy_gradient(const ToySystem& sys, const GroupedParams& point) {
    detail::require_toy_point(sys, point);
    std::vector<double> grad(point.dim());
    for (std::size_t i = 0; i < sys.num_groups(); ++i) {
        const double x = point.values[2 * i];
        const double y = point.values[2 * i + 1];
        const double s = x * x + y * y;
        const double common = 2.0 * sys.alphas[i] * x * y / (s * s);
        grad[2 * i] = common * y;
        grad[2 * i + 1] = -common * x;
    }
    return grad;
}

class ToyObjective : public SIObjective {
public:
    explicit ToyObjective(ToySystem system)
        : system_(std::move(system)), layout_(system_.make_layout()) {}

    const ToySystem& system() const { return system_; }
    const GroupLayout& layout() const override { return layout_; }

    double value(const GroupedParams& params,
                 std::span<const std::size_t> /*batch*/ = {}) const override {
        return toy_value(system_, params);
    }

    double value_and_gradient(const GroupedParams& params, std::vector<double>& gradient,
                              std::span<const std::size_t> /*batch*/ = {}) const override {
        gradient = toy_gradient(system_, params);
        return toy_value(system_, params);
    }

private:
    ToySystem system_;
    GroupLayout layout_;
};

// Contraction factor of the ratio r = x/y for a single pair optimized on the
// unit circle with effective rate elr:  |r'| = kappa * |r|.
inline double single_f_contraction(double alpha, double elr, double r) {
    const double u = r * r / (1.0 + r * r);
    return std::abs(1.0 - 2.0 * alpha * elr / (1.0 + 2.0 * alpha * elr * u));
}

// Squared fixed-point ratio of the single-pair map when alpha * elr > 1.
inline double single_f_fixed_ratio_sq(double alpha, double elr) {
    return (alpha * elr - 1.0) / (alpha * elr + 1.0);
}

// Level at which a single pair stabilizes when alpha * elr > 1.
inline double single_f_stable_value(double alpha, double elr) {
    return 0.5 * (alpha - 1.0 / elr);
}

// Closed-form predictions for projected descent on the toy system at a given
// total effective rate.
struct ToyOracle {
    double elr = 0.0;
    // Total rates below this converge to the global minimum.
    double convergence_threshold = 0.0;
    bool predicts_convergence = false;
    // Per-group rates at which every group's effective step size is equal.
    std::vector<double> equilibrium_elrs;
    // Per-group squared step size at the equilibrium rates (equal across groups
    // above threshold).
    std::vector<double> equilibrium_ess_sq;
    // Function level the equilibrated dynamics hover around.
    double equilibrium_value = 0.0;
    // Expectation of the function over random sphere points; the level reached
    // when the rate is taken to infinity.
    double asymptotic_chaos_value = 0.0;
};

inline ToyOracle oracle_for(const ToySystem& sys, double elr) {
    if (!(elr > 0.0)) throw std::invalid_argument("oracle_for: elr must be positive");
    const double a_sum = sys.alpha_sum();

    ToyOracle oracle;
    oracle.elr = elr;
    oracle.convergence_threshold = 1.0 / a_sum;
    oracle.predicts_convergence = elr < oracle.convergence_threshold;
    oracle.asymptotic_chaos_value = 0.5 * a_sum;

    oracle.equilibrium_elrs.resize(sys.num_groups());
    oracle.equilibrium_ess_sq.resize(sys.num_groups());
    double value = 0.0;
    for (std::size_t i = 0; i < sys.num_groups(); ++i) {
        const double elr_i = elr * a_sum / sys.alphas[i];
        oracle.equilibrium_elrs[i] = elr_i;
        const double prod = sys.alphas[i] * elr_i;  // == elr * a_sum for every group
        oracle.equilibrium_ess_sq[i] = prod * prod - 1.0;
        value += std::max(0.0, 0.5 * (sys.alphas[i] - 1.0 / elr_i));
    }
    oracle.equilibrium_value = value;
    return oracle;
}

}  // namespace silab
