#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "silab/linalg.hpp"

namespace silab {

struct GroupSpan {
    std::size_t offset = 0;
    std::size_t length = 0;
    bool operator==(const GroupSpan&) const = default;
};

// Partition of a flat parameter vector into contiguous scale-invariant groups.
// Spans must be disjoint, in order, and cover [0, P) exactly.
class GroupLayout {
public:
    GroupLayout() = default;

    GroupLayout(std::vector<GroupSpan> spans, std::vector<std::string> names)
        : spans_(std::move(spans)), names_(std::move(names)) {
        if (spans_.empty()) throw std::invalid_argument("GroupLayout: at least one group required");
        if (names_.size() != spans_.size())
            throw std::invalid_argument("GroupLayout: one name per group required");
        std::size_t expected = 0;
        for (const GroupSpan& s : spans_) {
            if (s.length == 0) throw std::invalid_argument("GroupLayout: empty group");
            if (s.offset != expected)
                throw std::invalid_argument("GroupLayout: spans must tile [0, P) in order");
            expected = s.offset + s.length;
        }
        dim_ = expected;
    }

    // Single group covering the whole vector.
    static GroupLayout single(std::size_t dim, std::string name = "all") {
        return GroupLayout({{0, dim}}, {std::move(name)});
    }

    // n consecutive groups of equal length.
    static GroupLayout uniform(std::size_t num_groups, std::size_t group_len,
                               const std::string& prefix = "g") {
        std::vector<GroupSpan> spans(num_groups);
        std::vector<std::string> names(num_groups);
        for (std::size_t i = 0; i < num_groups; ++i) {
            spans[i] = {i * group_len, group_len};
            names[i] = prefix + std::to_string(i);
        }
        return GroupLayout(std::move(spans), std::move(names));
    }

    std::size_t dim() const { return dim_; }
    std::size_t num_groups() const { return spans_.size(); }
    const GroupSpan& span(std::size_t i) const { return spans_.at(i); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<GroupSpan>& spans() const { return spans_; }
    const std::vector<std::string>& names() const { return names_; }

    std::span<const double> group(std::span<const double> v, std::size_t i) const {
        const GroupSpan& s = spans_.at(i);
        return v.subspan(s.offset, s.length);
    }

    std::span<double> group(std::span<double> v, std::size_t i) const {
        const GroupSpan& s = spans_.at(i);
        return v.subspan(s.offset, s.length);
    }

    // Euclidean norm of each group slice of `v`.
    std::vector<double> group_norms(std::span<const double> v) const {
        std::vector<double> out(num_groups());
        for (std::size_t i = 0; i < num_groups(); ++i) out[i] = norm(group(v, i));
        return out;
    }

    bool operator==(const GroupLayout& other) const {
        return spans_ == other.spans_ && names_ == other.names_;
    }

private:
    std::vector<GroupSpan> spans_;
    std::vector<std::string> names_;
    std::size_t dim_ = 0;
};

}  // namespace silab
