#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "silab/grouped_params.hpp"

namespace silab {

// A scale-invariant objective: multiplying any single parameter group (or the
// whole vector) by a positive scalar leaves the value unchanged.
//
// `batch` holds sample indices into the objective's training split; an empty
// batch means the full training set. Objectives without data ignore it.
class SIObjective {
public:
    virtual ~SIObjective() = default;

    virtual const GroupLayout& layout() const = 0;
    std::size_t dim() const { return layout().dim(); }

    virtual double value(const GroupedParams& params,
                         std::span<const std::size_t> batch = {}) const = 0;

    // Returns the value; writes the gradient w.r.t. all trainable parameters.
    virtual double value_and_gradient(const GroupedParams& params, std::vector<double>& gradient,
                                      std::span<const std::size_t> batch = {}) const = 0;

    // Number of training samples; 0 means the objective is full-batch only.
    virtual std::size_t train_size() const { return 0; }

    virtual bool has_test_metrics() const { return false; }

    // Fraction of misclassified held-out samples; NaN when not applicable.
    virtual double test_error(const GroupedParams& /*params*/, std::size_t /*batch_size*/) const {
        return std::numeric_limits<double>::quiet_NaN();
    }
};

}  // namespace silab
