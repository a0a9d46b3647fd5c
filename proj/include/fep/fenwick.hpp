#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fep {

// Fenwick (binary indexed) tree over nonnegative weights with prefix-sum
// descent for weighted sampling. Indices are 0-based externally.
class FenwickTree {
  public:
    FenwickTree() = default;
    explicit FenwickTree(std::int64_t n) : n_(n), tree_(static_cast<std::size_t>(n) + 1, 0.0) {
        mask_ = 1;
        while ((mask_ << 1) <= n_) mask_ <<= 1;
    }

    std::int64_t size() const { return n_; }

    void add(std::int64_t i, double delta) {
        total_ += delta;
        for (std::int64_t j = i + 1; j <= n_; j += j & -j) tree_[static_cast<std::size_t>(j)] += delta;
    }

    double prefix(std::int64_t i) const {  // sum of [0, i)
        double s = 0.0;
        for (std::int64_t j = i; j > 0; j -= j & -j) s += tree_[static_cast<std::size_t>(j)];
        return s;
    }

    // running total; kept in sync by add()/rebuild(), refreshed against the
    // tree by the caller's periodic rebuild
    double total() const { return total_; }

    // Smallest index i with prefix(i+1) > target. target must be < total().
    std::int64_t find(double target) const {
        std::int64_t idx = 0;
        double acc = 0.0;
        for (std::int64_t step = mask_; step != 0; step >>= 1) {
            std::int64_t next = idx + step;
            if (next <= n_ && acc + tree_[static_cast<std::size_t>(next)] <= target) {
                idx = next;
                acc += tree_[static_cast<std::size_t>(next)];
            }
        }
        return idx < n_ ? idx : n_ - 1;
    }

    // O(n) bulk rebuild
    void rebuild(std::span<const double> values) {
        n_ = static_cast<std::int64_t>(values.size());
        tree_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
        total_ = 0.0;
        for (std::int64_t i = 1; i <= n_; ++i) {
            total_ += values[static_cast<std::size_t>(i - 1)];
            tree_[static_cast<std::size_t>(i)] += values[static_cast<std::size_t>(i - 1)];
            std::int64_t parent = i + (i & -i);
            if (parent <= n_) tree_[static_cast<std::size_t>(parent)] += tree_[static_cast<std::size_t>(i)];
        }
        mask_ = 1;
        while ((mask_ << 1) <= n_) mask_ <<= 1;
    }

  private:
    std::int64_t n_ = 0;
    std::int64_t mask_ = 0;
    double total_ = 0.0;
    std::vector<double> tree_;
};

}  // namespace fep
