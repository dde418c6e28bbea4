#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bethe {

// Rooted regular tree with branching K (root has K children, every other
// non-leaf vertex has K children and one parent), truncated at depth D.
// Vertices carry breadth-first integer ids: shell n occupies the contiguous
// block [shell_start(n), shell_start(n+1)).  Adjacency is pure arithmetic;
// nothing is stored per vertex.
class TreeGeometry {
public:
    TreeGeometry(std::int64_t branching, std::int64_t depth)
        : branching_(branching), depth_(depth) {
        if (branching < 2) throw std::invalid_argument("TreeGeometry: branching K must be >= 2");
        if (depth < 0) throw std::invalid_argument("TreeGeometry: depth D must be >= 0");
        shell_starts_.reserve(static_cast<std::size_t>(depth) + 2);
        std::int64_t start = 0, size = 1;
        for (std::int64_t n = 0; n <= depth; ++n) {
            shell_starts_.push_back(start);
            if (start > (INT64_MAX - size)) throw std::overflow_error("TreeGeometry: vertex count overflows 64-bit index range");
            start += size;
            if (n < depth && size > INT64_MAX / branching) throw std::overflow_error("TreeGeometry: vertex count overflows 64-bit index range");
            size *= branching;
        }
        shell_starts_.push_back(start);
    }

    std::int64_t branching() const { return branching_; }
    std::int64_t depth() const { return depth_; }

    std::int64_t vertex_count() const { return shell_starts_.back(); }

    // first vertex id of shell n; shell_start(D+1) == vertex_count()
    std::int64_t shell_start(std::int64_t n) const { return shell_starts_[static_cast<std::size_t>(n)]; }
    std::int64_t shell_size(std::int64_t n) const { return shell_starts_[static_cast<std::size_t>(n) + 1] - shell_starts_[static_cast<std::size_t>(n)]; }

    std::int64_t shell_of(std::int64_t index) const {
        check_index(index);
        // D is tiny (< 64); linear scan beats binary search here
        std::int64_t n = 0;
        while (shell_starts_[static_cast<std::size_t>(n) + 1] <= index) ++n;
        return n;
    }

    std::int64_t parent_of(std::int64_t index) const {
        check_index(index);
        if (index == 0) throw std::invalid_argument("parent_of: the root has no parent");
        const std::int64_t n = shell_of(index);
        return shell_start(n - 1) + (index - shell_start(n)) / branching_;
    }

    bool is_leaf(std::int64_t index) const { return shell_of(index) == depth_; }

    // children occupy a contiguous block; empty for leaves
    std::int64_t first_child_of(std::int64_t index) const {
        const std::int64_t n = shell_of(index);
        return shell_start(n + 1) + (index - shell_start(n)) * branching_;
    }

    std::vector<std::int64_t> children_of(std::int64_t index) const {
        check_index(index);
        if (is_leaf(index)) return {};
        std::vector<std::int64_t> out(static_cast<std::size_t>(branching_));
        const std::int64_t first = first_child_of(index);
        for (std::int64_t i = 0; i < branching_; ++i) out[static_cast<std::size_t>(i)] = first + i;
        return out;
    }

private:
    void check_index(std::int64_t index) const {
        if (index < 0 || index >= vertex_count()) throw std::out_of_range("TreeGeometry: vertex id out of range");
    }

    std::int64_t branching_;
    std::int64_t depth_;
    std::vector<std::int64_t> shell_starts_;
};

}  // namespace bethe
