#include "fep/lattice.hpp"

#include <bit>
#include <istream>
#include <ostream>

namespace fep {

Configuration::Configuration(std::int64_t L)
    : size_(L), words_(static_cast<std::size_t>((L + 63) / 64), 0) {
    if (L <= 0) throw Error("ring size must be positive");
}

Configuration Configuration::all_ones(std::int64_t L) {
    Configuration c(L);
    for (auto& w : c.words_) w = ~0ULL;
    std::int64_t rem = L & 63;
    if (rem != 0) c.words_.back() = (1ULL << rem) - 1;
    return c;
}

Configuration Configuration::from_string(const std::string& s) {
    Configuration c(static_cast<std::int64_t>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') throw Error("configuration string must be 0/1");
        c.set(static_cast<std::int64_t>(i), s[i] == '1');
    }
    return c;
}

std::int64_t Configuration::particle_count() const {
    std::int64_t n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
}

std::string Configuration::to_string() const {
    std::string s(static_cast<std::size_t>(size_), '0');
    for (std::int64_t i = 0; i < size_; ++i)
        if (get(i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

std::string Configuration::to_run_length() const {
    // e.g. "1x5 0x1 1x2" for 111110 11
    std::string out;
    std::int64_t i = 0;
    while (i < size_) {
        int v = get(i);
        std::int64_t j = i;
        while (j < size_ && get(j) == v) ++j;
        if (!out.empty()) out += ' ';
        out += v ? '1' : '0';
        out += 'x';
        out += std::to_string(j - i);
        i = j;
    }
    return out;
}

void Configuration::save_binary(std::ostream& out) const {
    // L as 64-bit little-endian count, then packed bits (LSB-first bytes)
    std::uint64_t n = static_cast<std::uint64_t>(size_);
    unsigned char hdr[8];
    for (int i = 0; i < 8; ++i) hdr[i] = static_cast<unsigned char>((n >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(hdr), 8);
    std::int64_t nbytes = (size_ + 7) / 8;
    for (std::int64_t b = 0; b < nbytes; ++b) {
        unsigned char byte = static_cast<unsigned char>((words_[static_cast<std::size_t>(b / 8)] >> (8 * (b % 8))) & 0xFF);
        out.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

Configuration Configuration::load_binary(std::istream& in) {
    unsigned char hdr[8];
    in.read(reinterpret_cast<char*>(hdr), 8);
    if (!in) throw Error("truncated configuration snapshot");
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(hdr[i]) << (8 * i);
    Configuration c(static_cast<std::int64_t>(n));
    std::int64_t nbytes = (c.size_ + 7) / 8;
    for (std::int64_t b = 0; b < nbytes; ++b) {
        unsigned char byte;
        in.read(reinterpret_cast<char*>(&byte), 1);
        if (!in) throw Error("truncated configuration snapshot");
        c.words_[static_cast<std::size_t>(b / 8)] |= static_cast<std::uint64_t>(byte) << (8 * (b % 8));
    }
    return c;
}

bool is_ergodic(const Configuration& config) {
    std::int64_t L = config.size();
    for (std::int64_t x = 0; x < L; ++x)
        if (config.get(x) + config.get(x + 1) == 0) return false;
    return true;
}

Configuration swapped(const Configuration& config, std::int64_t x) {
    Configuration out = config;
    out.swap_bond(x);
    return out;
}

double block_average(const Configuration& config, std::int64_t x, std::int64_t ell) {
    if (2 * ell + 1 > config.size()) throw WindowTooLarge("block window exceeds ring size");
    std::int64_t n = 0;
    for (std::int64_t y = -ell; y <= ell; ++y) n += config.get(x + y);
    return static_cast<double>(n) / static_cast<double>(2 * ell + 1);
}

}  // namespace fep
