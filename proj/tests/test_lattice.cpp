#include <doctest.h>

#include <sstream>

#include "fep/lattice.hpp"
#include "fep/rng.hpp"

using namespace fep;

TEST_CASE("ergodicity predicate") {
    CHECK(is_ergodic(Configuration::all_ones(8)));
    CHECK(is_ergodic(Configuration::from_string("10101010")));
    CHECK_FALSE(is_ergodic(Configuration::from_string("110011")));
    // wrap-around pair
    CHECK_FALSE(is_ergodic(Configuration::from_string("011110")));
}

TEST_CASE("symmetric bond rate from 4-site windows") {
    // windows are (eta_{x-1}, eta_x, eta_{x+1}, eta_{x+2}) read at x = 1
    CHECK(rate_sym(Configuration::from_string("110100"), 1) == 1);
    CHECK(rate_sym(Configuration::from_string("110010"), 1) == 1);
    CHECK(rate_sym(Configuration::from_string("011010"), 1) == 0);
}

TEST_CASE("asymmetric bond rate") {
    CHECK(rate_asym(Configuration::from_string("110100"), 1) == 1);
    CHECK(rate_asym(Configuration::from_string("010100"), 1) == 0);
    CHECK(rate_asym(Configuration::from_string("111100"), 1) == 0);
}

TEST_CASE("swap semantics") {
    Configuration c = Configuration::from_string("10110");
    Configuration s = swapped(c, 0);
    CHECK(s.to_string() == "01110");
    // swap of equal values is the identity
    CHECK(swapped(c, 2) == c);
    // involution
    CHECK(swapped(s, 0) == c);
}

TEST_CASE("swap conserves particles and is an involution (randomized)") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        std::int64_t L = 5 + static_cast<std::int64_t>(rng.below(60));
        Configuration c(L);
        for (std::int64_t x = 0; x < L; ++x) c.set(x, rng.bernoulli(0.7));
        auto bond = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(L)));
        Configuration s = swapped(c, bond);
        CHECK(s.particle_count() == c.particle_count());
        CHECK(swapped(s, bond) == c);
    }
}

TEST_CASE("local gradient function h") {
    CHECK(h_local(Configuration::from_string("110"), 1) == 1);
    CHECK(h_local(Configuration::from_string("111"), 1) == 1);
    CHECK(h_local(Configuration::from_string("010"), 1) == 0);
}

TEST_CASE("gradient identity over all 16 windows") {
    for (unsigned w = 0; w < 16; ++w) {
        int eta_x = static_cast<int>((w >> 1) & 1u);
        int eta_x1 = static_cast<int>((w >> 2) & 1u);
        int lhs = rate_sym_window(w) * (eta_x - eta_x1);
        int rhs = h_window(w & 7u) - h_window((w >> 1) & 7u);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("rates stay in range and preserve ergodicity (exhaustive small rings)") {
    for (std::int64_t L = 4; L <= 10; ++L) {
        for (std::uint32_t mask = 0; mask < (1u << L); ++mask) {
            Configuration c(L);
            for (std::int64_t x = 0; x < L; ++x) c.set(x, static_cast<int>((mask >> x) & 1u));
            bool ergodic = is_ergodic(c);
            for (std::int64_t x = 0; x < L; ++x) {
                int rs = rate_sym(c, x);
                int ra = rate_asym(c, x);
                CHECK(rs >= 0);
                CHECK(rs <= 2);
                CHECK(ra >= 0);
                CHECK(ra <= 1);
                if (ergodic && rs > 0) CHECK(is_ergodic(swapped(c, x)));
                if (ergodic && ra > 0) CHECK(is_ergodic(swapped(c, x)));
            }
        }
    }
}

TEST_CASE("block averages") {
    CHECK(block_average(Configuration::all_ones(9), 4, 3) == doctest::Approx(1.0));
    Configuration alt = Configuration::from_string("101010");
    CHECK(block_average(alt, 0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(block_average(alt, 1, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(block_average(Configuration::from_string("11011"), 2, 2) == doctest::Approx(4.0 / 5.0));
    CHECK_THROWS_AS(block_average(alt, 0, 3), WindowTooLarge);
}

TEST_CASE("text and binary serialization round-trips") {
    Rng rng(77);
    for (std::int64_t L : {1, 7, 63, 64, 65, 200}) {
        Configuration c(L);
        for (std::int64_t x = 0; x < L; ++x) c.set(x, rng.bernoulli(0.6));
        CHECK(Configuration::from_string(c.to_string()) == c);
        std::stringstream buf;
        c.save_binary(buf);
        CHECK(Configuration::load_binary(buf) == c);
    }
    CHECK(Configuration::from_string("1110").to_run_length() == "1x3 0x1");
}
