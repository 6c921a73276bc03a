#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace silab {

// All accumulations are plain sequential sums: runs must be reproducible
// bit-for-bit, and the tolerances used throughout assume no better than that.

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

inline void scale_in_place(std::span<double> v, double c) {
    for (double& x : v) x *= c;
}

// y <- y + c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// 1 - <a, b> / (|a| |b|); 0 for identical directions, 1 for orthogonal, 2 for
// opposite. Zero-length inputs yield distance 1 by convention of the guard term.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    constexpr double kGuard = 1e-300;
    return 1.0 - dot(a, b) / (norm(a) * norm(b) + kGuard);
}

}  // namespace silab
