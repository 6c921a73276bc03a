#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "silab/errors.hpp"
#include "silab/group_layout.hpp"
#include "silab/linalg.hpp"
#include "silab/rng.hpp"

namespace silab {

// Below this norm a group is treated as sitting at the origin: the sphere
// geometry (and every effective-rate quantity) stops being well defined there.
inline constexpr double kDegenerateNorm = 1e-150;

// A flat parameter vector partitioned into scale-invariant groups, intended to
// live on the sphere of the given radius when trained with projected descent.
struct GroupedParams {
    std::vector<double> values;
    GroupLayout layout;
    double radius = 1.0;

    GroupedParams() = default;
    GroupedParams(std::vector<double> values_, GroupLayout layout_, double radius_)
        : values(std::move(values_)), layout(std::move(layout_)), radius(radius_) {}

    std::size_t dim() const { return values.size(); }
    std::size_t num_groups() const { return layout.num_groups(); }

    std::span<const double> group(std::size_t i) const { return layout.group(values, i); }
    std::span<double> group(std::size_t i) { return layout.group(std::span<double>(values), i); }

    double norm() const { return silab::norm(values); }
    double group_norm(std::size_t i) const { return silab::norm(group(i)); }
    std::vector<double> group_norms() const { return layout.group_norms(values); }

    GroupedParams scaled_group(std::size_t i, double c) const {
        GroupedParams out = *this;
        scale_in_place(out.group(i), c);
        return out;
    }
};

// Throws if any group norm is too close to zero for sphere geometry.
inline void require_nondegenerate(const GroupedParams& p) {
    for (std::size_t i = 0; i < p.num_groups(); ++i) {
        if (!(p.group_norm(i) > kDegenerateNorm))
            throw DegeneratePointError("group '" + p.layout.name(i) + "' has (near-)zero norm");
    }
}

// Rescale the whole vector onto the sphere of radius p.radius.
inline GroupedParams project_to_sphere(const GroupedParams& p) {
    const double n = p.norm();
    if (!(n > kDegenerateNorm))
        throw DegeneratePointError("cannot project a (near-)zero vector onto the sphere");
    GroupedParams out = p;
    scale_in_place(out.values, p.radius / n);
    return out;
}

// Coordinates drawn i.i.d. standard normal, then projected: uniform on the sphere.
inline GroupedParams random_sphere_point(const GroupLayout& layout, double radius, Rng& rng) {
    GroupedParams p(std::vector<double>(layout.dim()), layout, radius);
    rng.fill_normal(p.values);
    return project_to_sphere(p);
}

}  // namespace silab
