#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fep/errors.hpp"

namespace fep {

/// Occupation state on a ring of L sites, bit-packed into 64-bit words.
/// Site indices are taken modulo L, so any signed index is valid.
class Configuration {
  public:
    explicit Configuration(std::int64_t L);

    static Configuration all_ones(std::int64_t L);
    static Configuration from_string(const std::string& zeros_and_ones);

    std::int64_t size() const { return size_; }

    int get(std::int64_t x) const {
        std::uint64_t i = wrap(x);
        return static_cast<int>((words_[i >> 6] >> (i & 63)) & 1u);
    }

    void set(std::int64_t x, int value) {
        std::uint64_t i = wrap(x);
        std::uint64_t bit = 1ULL << (i & 63);
        if (value)
            words_[i >> 6] |= bit;
        else
            words_[i >> 6] &= ~bit;
    }

    /// Exchange the values at sites x and x+1.
    void swap_bond(std::int64_t x) {
        std::uint64_t a = wrap(x), b = wrap(x + 1);
        int va = static_cast<int>((words_[a >> 6] >> (a & 63)) & 1u);
        int vb = static_cast<int>((words_[b >> 6] >> (b & 63)) & 1u);
        if (va != vb) {
            words_[a >> 6] ^= 1ULL << (a & 63);
            words_[b >> 6] ^= 1ULL << (b & 63);
        }
    }

    /// Bits (eta_{x-1}, eta_x, eta_{x+1}, eta_{x+2}) packed as bit0..bit3.
    unsigned window4(std::int64_t x) const {
        return static_cast<unsigned>(get(x - 1)) | static_cast<unsigned>(get(x)) << 1 |
               static_cast<unsigned>(get(x + 1)) << 2 | static_cast<unsigned>(get(x + 2)) << 3;
    }

    /// n <= 24 consecutive occupancies starting at site x, bit i = site x + i.
    unsigned bits_window(std::int64_t x, int n) const {
        std::uint64_t i = wrap(x);
        std::uint64_t word = i >> 6, off = i & 63;
        std::uint64_t bits = words_[word] >> off;
        if (off + static_cast<std::uint64_t>(n) > 64 && words_.size() > 1)
            bits |= words_[(word + 1) % words_.size()] << (64 - off);
        if (i + static_cast<std::uint64_t>(n) > static_cast<std::uint64_t>(size_)) {
            // wrap across the seam
            std::uint64_t have = static_cast<std::uint64_t>(size_) - i;
            for (std::uint64_t j = have; j < static_cast<std::uint64_t>(n); ++j)
                bits = (bits & ~(1ULL << j)) | (static_cast<std::uint64_t>(get(static_cast<std::int64_t>(j - have))) << j);
        }
        return static_cast<unsigned>(bits & ((1ULL << n) - 1));
    }

    std::int64_t particle_count() const;

    bool operator==(const Configuration& other) const {
        return size_ == other.size_ && words_ == other.words_;
    }

    std::string to_string() const;
    std::string to_run_length() const;
    void save_binary(std::ostream& out) const;
    static Configuration load_binary(std::istream& in);

  private:
    std::uint64_t wrap(std::int64_t x) const {
        // near-range indices dominate; the modulo is the cold fallback
        if (x >= 0) {
            if (x < size_) return static_cast<std::uint64_t>(x);
            if (x < 2 * size_) return static_cast<std::uint64_t>(x - size_);
        } else if (x >= -size_) {
            return static_cast<std::uint64_t>(x + size_);
        }
        std::int64_t m = x % size_;
        return static_cast<std::uint64_t>(m < 0 ? m + size_ : m);
    }

    std::int64_t size_;
    std::vector<std::uint64_t> words_;
};

/// True iff no two cyclically adjacent sites are both empty.
bool is_ergodic(const Configuration& config);

/// eta_{x-1} eta_x (1-eta_{x+1}) + eta_{x+2} eta_{x+1} (1-eta_x)
inline int rate_sym(const Configuration& config, std::int64_t x) {
    unsigned w = config.window4(x);
    int left = static_cast<int>((w & 1u) & ((w >> 1) & 1u) & (~(w >> 2) & 1u));
    int right = static_cast<int>(((w >> 3) & 1u) & ((w >> 2) & 1u) & (~(w >> 1) & 1u));
    return left + right;
}

/// eta_{x-1} eta_x (1-eta_{x+1})
inline int rate_asym(const Configuration& config, std::int64_t x) {
    unsigned w = config.window4(x);
    return static_cast<int>((w & 1u) & ((w >> 1) & 1u) & (~(w >> 2) & 1u));
}

/// Value of the swap eta^{x,x+1} as a new configuration.
Configuration swapped(const Configuration& config, std::int64_t x);

/// tau_x h with h(eta) = eta_{-1} eta_0 + eta_0 eta_1 - eta_{-1} eta_0 eta_1.
inline int h_local(const Configuration& config, std::int64_t x) {
    int l = config.get(x - 1), c = config.get(x), r = config.get(x + 1);
    return l * c + c * r - l * c * r;
}

/// Window-based variants used by exhaustive tests: bits are
/// (eta_{x-1}, eta_x, eta_{x+1}, eta_{x+2}) for rates and
/// (eta_{x-1}, eta_x, eta_{x+1}) for h.
inline int rate_sym_window(unsigned w) {
    int left = static_cast<int>((w & 1u) & ((w >> 1) & 1u) & (~(w >> 2) & 1u));
    int right = static_cast<int>(((w >> 3) & 1u) & ((w >> 2) & 1u) & (~(w >> 1) & 1u));
    return left + right;
}
inline int rate_asym_window(unsigned w) {
    return static_cast<int>((w & 1u) & ((w >> 1) & 1u) & (~(w >> 2) & 1u));
}
inline int h_window(unsigned w) {
    int l = static_cast<int>(w & 1u), c = static_cast<int>((w >> 1) & 1u), r = static_cast<int>((w >> 2) & 1u);
    return l * c + c * r - l * c * r;
}

/// Block average over the 2*ell+1 sites centered at x. Throws WindowTooLarge
/// if the window does not fit on the ring.
double block_average(const Configuration& config, std::int64_t x, std::int64_t ell);

}  // namespace fep
