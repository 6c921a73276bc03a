#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "silab/linalg.hpp"
#include "silab/rng.hpp"

namespace silab {

// In-memory classification dataset: row-major sample matrix plus integer
// labels, with fixed train/test index lists. Immutable once built.
struct Dataset {
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> inputs;  // num_samples x input_dim
    std::vector<int> labels;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    std::size_t num_samples() const { return labels.size(); }
    std::span<const double> sample(std::size_t i) const {
        return std::span<const double>(inputs).subspan(i * input_dim, input_dim);
    }

    bool operator==(const Dataset&) const = default;
};

// Gaussian clusters, one per class: centers drawn uniformly on the sphere of
// radius `separation`, unit within-class variance. The first 80% of each
// class is the train split, the rest test.
inline Dataset make_blobs(std::size_t num_classes, std::size_t samples_per_class,
                          std::size_t input_dim, double separation, std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("make_blobs: need at least two classes");
    if (samples_per_class == 0 || input_dim == 0)
        throw std::invalid_argument("make_blobs: empty dataset requested");
    if (!(separation > 0.0)) throw std::invalid_argument("make_blobs: separation must be positive");

    Rng rng(seed);
    Dataset ds;
    ds.input_dim = input_dim;
    ds.num_classes = num_classes;
    ds.inputs.reserve(num_classes * samples_per_class * input_dim);
    ds.labels.reserve(num_classes * samples_per_class);

    std::vector<double> center(input_dim);
    const std::size_t train_per_class = (samples_per_class * 8) / 10;
    for (std::size_t c = 0; c < num_classes; ++c) {
        rng.fill_normal(center);
        const double n = norm(center);
        for (double& x : center) x *= separation / n;

        for (std::size_t s = 0; s < samples_per_class; ++s) {
            const std::size_t idx = ds.labels.size();
            for (std::size_t d = 0; d < input_dim; ++d)
                ds.inputs.push_back(center[d] + rng.normal());
            ds.labels.push_back(static_cast<int>(c));
            if (s < train_per_class)
                ds.train_indices.push_back(idx);
            else
                ds.test_indices.push_back(idx);
        }
    }
    return ds;
}

// Fixed deterministic shuffle used whenever a split is evaluated in batches:
// batch-statistics normalization needs class-mixed batches, and datasets are
// stored class-major.
inline std::vector<std::size_t> evaluation_order(std::vector<std::size_t> indices) {
    Rng rng(0xeba17a7c4e5ull);
    rng.shuffle(indices);
    return indices;
}

// The training samples whose labels will be resampled: exactly
// floor(fraction * train_size) of them, drawn uniformly without replacement.
inline std::vector<std::size_t> label_noise_selection(const std::vector<std::size_t>& train,
                                                      double fraction, Rng& rng) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("label noise fraction must lie in [0, 1]");
    const std::size_t count =
        static_cast<std::size_t>(fraction * static_cast<double>(train.size()));
    std::vector<std::size_t> pool = train;
    rng.shuffle(pool);
    pool.resize(count);
    return pool;
}

// Resamples the labels of the selected training samples uniformly over all
// classes (a resampled label may coincide with the original). Test split
// untouched.
inline Dataset inject_label_noise(const Dataset& ds, double fraction, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<std::size_t> selected =
        label_noise_selection(ds.train_indices, fraction, rng);
    Dataset out = ds;
    for (std::size_t idx : selected) out.labels[idx] = static_cast<int>(rng.index(ds.num_classes));
    return out;
}

}  // namespace silab
