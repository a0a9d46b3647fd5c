#include "fep/measures.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace fep {

PerturbedMeasure::PerturbedMeasure(double density, TestFunction profile, double a_N_, std::int64_t N_)
    : rho(density), phi(std::move(profile)), a_N(a_N_), N(N_) {
    if (!(rho > 0.5 && rho < 1.0)) throw InvalidDensity(rho);
    double sup = phi.sup_abs() * eps();
    if (!(rho + sup < 1.0 && rho - sup > 0.5))
        throw DensityOutOfRange("perturbed density leaves (1/2, 1): rho=" + std::to_string(rho) +
                                " max shift=" + std::to_string(sup));
}

LocalFunction::LocalFunction(int support_half_width, std::function<double(unsigned)> fn)
    : s_g_(support_half_width) {
    if (s_g_ < 0 || s_g_ > 15) throw Error("local function support out of range");
    table_.resize(std::size_t{1} << (2 * s_g_ + 1));
    for (unsigned w = 0; w < table_.size(); ++w) table_[w] = fn(w);
}

LocalFunction LocalFunction::occupancy() {
    return LocalFunction(0, [](unsigned w) { return static_cast<double>(w & 1u); });
}

LocalFunction LocalFunction::gradient_h() {
    return LocalFunction(1, [](unsigned w) { return static_cast<double>(h_window(w)); });
}

LocalFunction LocalFunction::bond_activity() {
    // window sites -2..2; c_{0,1} reads sites -1..2 (bits 1..4) and the
    // squared difference is 1 exactly when the rate indicator fires
    return LocalFunction(2, [](unsigned w) {
        int b0 = static_cast<int>((w >> 2) & 1u), b1 = static_cast<int>((w >> 3) & 1u);
        return static_cast<double>(rate_sym_window((w >> 1) & 15u) * (b0 - b1) * (b0 - b1));
    });
}

double LocalFunction::eval(const Configuration& config, std::int64_t x) const {
    unsigned bits = 0;
    for (int i = 0; i <= 2 * s_g_; ++i)
        bits |= static_cast<unsigned>(config.get(x + i - s_g_)) << i;
    return table_[bits];
}

Configuration sample_gc_segment(const GrandCanonical& spec, std::int64_t len, Rng& rng) {
    Configuration c(len);
    double d = spec.d();
    int prev = rng.bernoulli(spec.rho) ? 1 : 0;
    c.set(0, prev);
    for (std::int64_t x = 1; x < len; ++x) {
        int v = prev == 0 ? 1 : (rng.bernoulli(d) ? 1 : 0);
        c.set(x, v);
        prev = v;
    }
    return c;
}

Configuration sample_gc_ring(const GrandCanonical& spec, std::int64_t L, Rng& rng) {
    Configuration c = sample_gc_segment(spec, L, rng);
    if (c.get(L - 1) == 0 && c.get(0) == 0) c.set(L - 1, 1);
    return c;
}

namespace {

bool word_ergodic(const std::vector<int>& word) {
    for (std::size_t i = 0; i + 1 < word.size(); ++i)
        if (word[i] == 0 && word[i + 1] == 0) return false;
    return true;
}

}  // namespace

double segment_pmf(const std::vector<int>& word, const GrandCanonical& spec) {
    if (word.empty()) throw Error("empty word");
    if (!word_ergodic(word)) throw NonErgodicWord();
    auto l = static_cast<std::int64_t>(word.size());
    std::int64_t p = 0;
    for (int v : word) p += v;
    std::int64_t e1 = 2 * p - l + 1 - word.front() - word.back();
    std::int64_t e2 = l - 1 - p;
    double d = spec.d();
    return (1.0 - spec.rho) * std::pow(d, static_cast<double>(e1)) *
           std::pow(1.0 - d, static_cast<double>(e2));
}

double segment_pmf_chain(const std::vector<int>& word, const GrandCanonical& spec) {
    if (word.empty()) throw Error("empty word");
    double d = spec.d();
    double p = word[0] ? spec.rho : 1.0 - spec.rho;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
        if (word[i] == 1)
            p *= word[i + 1] ? d : 1.0 - d;
        else if (word[i + 1] == 0)
            return 0.0;  // transition 0 -> 0 has probability 0
    }
    return p;
}

double segment_pmf_drho(const std::vector<int>& word, const GrandCanonical& spec) {
    double pmf = segment_pmf(word, spec);
    auto l = static_cast<std::int64_t>(word.size());
    std::int64_t p = 0;
    for (int v : word) p += v;
    std::int64_t e1 = 2 * p - l + 1 - word.front() - word.back();
    std::int64_t e2 = l - 1 - p;
    double rho = spec.rho;
    // d'(rho)/d = 1 / (rho (2 rho - 1)); (1-d)'/(1-d) = -1 / (rho (1 - rho))
    double logderiv = -1.0 / (1.0 - rho) + static_cast<double>(e1) / (rho * (2.0 * rho - 1.0)) -
                      static_cast<double>(e2) / (rho * (1.0 - rho));
    return pmf * logderiv;
}

CanonicalSampler::CanonicalSampler(const CanonicalWindow& window, const GrandCanonical& weights)
    : win_(window), len_(2 * window.ell + 1) {
    if (win_.ell < 0 || win_.k < 0 || win_.k > len_) throw EmptySupport("impossible particle count");
    if ((win_.a != 0 && win_.a != 1) || (win_.b != 0 && win_.b != 1))
        throw Error("boundary occupancies must be 0 or 1");
    double d = weights.d();
    w_[0][0] = 0.0;
    w_[0][1] = 1.0;
    w_[1][0] = 1.0 - d;
    w_[1][1] = d;
    table_.assign(static_cast<std::size_t>((len_ + 1) * (win_.k + 1) * 2), 0.0);
    at(len_, 0, 0) = w_[0][win_.b];
    at(len_, 0, 1) = w_[1][win_.b];
    for (std::int64_t i = len_ - 1; i >= 0; --i) {
        double layer_max = 0.0;
        for (std::int64_t j = 0; j <= win_.k; ++j) {
            for (int s = 0; s < 2; ++s) {
                double tot = w_[s][0] * at(i + 1, j, 0);
                if (j >= 1) tot += w_[s][1] * at(i + 1, j - 1, 1);
                at(i, j, s) = tot;
                layer_max = std::max(layer_max, tot);
            }
        }
        if (layer_max > 0.0) {
            for (std::int64_t j = 0; j <= win_.k; ++j)
                for (int s = 0; s < 2; ++s) at(i, j, s) /= layer_max;
        }
    }
    if (at(0, win_.k, win_.a) <= 0.0)
        throw EmptySupport("no ergodic word matches the conditioning event");
}

std::pair<double, double> CanonicalSampler::step_weights(std::int64_t i, std::int64_t j, int s) const {
    double w1 = j >= 1 ? w_[s][1] * at(i + 1, j - 1, 1) : 0.0;
    double w0 = w_[s][0] * at(i + 1, j, 0);
    return {w0, w1};
}

std::vector<int> CanonicalSampler::sample(Rng& rng) const {
    std::vector<int> out(static_cast<std::size_t>(len_));
    int s = win_.a;
    std::int64_t j = win_.k;
    for (std::int64_t i = 0; i < len_; ++i) {
        auto [w0, w1] = step_weights(i, j, s);
        int v = rng.uniform() * (w0 + w1) < w1 ? 1 : 0;
        out[static_cast<std::size_t>(i)] = v;
        s = v;
        j -= v;
    }
    return out;
}

double CanonicalSampler::word_pmf(const std::vector<int>& word) const {
    if (static_cast<std::int64_t>(word.size()) != len_) throw Error("word length mismatch");
    double p = 1.0;
    int s = win_.a;
    std::int64_t j = win_.k;
    for (std::int64_t i = 0; i < len_; ++i) {
        auto [w0, w1] = step_weights(i, j, s);
        double tot = w0 + w1;
        if (tot <= 0.0) return 0.0;
        int v = word[static_cast<std::size_t>(i)];
        p *= (v ? w1 : w0) / tot;
        if (p == 0.0) return 0.0;
        s = v;
        j -= v;
    }
    return j == 0 ? p : 0.0;
}

double canonical_rho_dependence(const CanonicalWindow& window, double rho1, double rho2) {
    CanonicalSampler s1(window, GrandCanonical(rho1));
    CanonicalSampler s2(window, GrandCanonical(rho2));
    std::int64_t len = 2 * window.ell + 1;
    double worst = 0.0;
    if (len <= 17) {
        std::vector<int> word(static_cast<std::size_t>(len));
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << len); ++bits) {
            for (std::int64_t i = 0; i < len; ++i)
                word[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1u);
            worst = std::max(worst, std::abs(s1.word_pmf(word) - s2.word_pmf(word)));
        }
    } else {
        // compare site marginals along the window
        Rng rng(7);
        std::vector<double> m1(static_cast<std::size_t>(len), 0.0), m2 = m1;
        const int M = 20000;
        for (int r = 0; r < M; ++r) {
            auto a = s1.sample(rng);
            auto b = s2.sample(rng);
            for (std::int64_t i = 0; i < len; ++i) {
                m1[static_cast<std::size_t>(i)] += a[static_cast<std::size_t>(i)];
                m2[static_cast<std::size_t>(i)] += b[static_cast<std::size_t>(i)];
            }
        }
        for (std::int64_t i = 0; i < len; ++i)
            worst = std::max(worst, std::abs(m1[static_cast<std::size_t>(i)] - m2[static_cast<std::size_t>(i)]) / M);
    }
    return worst;
}

Configuration sample_perturbed_segment(const PerturbedMeasure& spec, std::int64_t len,
                                       std::int64_t center_site, Rng& rng) {
    Configuration c(len);
    auto dens = [&](std::int64_t x) {
        return spec.density_at(static_cast<double>(x - center_site) / static_cast<double>(spec.N));
    };
    int prev = rng.bernoulli(dens(0)) ? 1 : 0;
    c.set(0, prev);
    for (std::int64_t x = 1; x < len; ++x) {
        int v;
        if (prev == 0) {
            v = 1;
        } else {
            double dz = (2.0 * dens(x) - 1.0) / dens(x);
            v = rng.bernoulli(dz) ? 1 : 0;
        }
        c.set(x, v);
        prev = v;
    }
    return c;
}

Configuration sample_perturbed_ring(const PerturbedMeasure& spec, std::int64_t L, Rng& rng) {
    Configuration c = sample_perturbed_segment(spec, L, L / 2, rng);
    if (c.get(L - 1) == 0 && c.get(0) == 0) c.set(L - 1, 1);
    return c;
}

namespace {

double entropy_term(const PerturbedMeasure& spec, std::int64_t x, double d_rho, double dt_rho) {
    double n = static_cast<double>(spec.N);
    double rx = spec.density_at(static_cast<double>(x) / n);
    double rxm = spec.density_at(static_cast<double>(x - 1) / n);
    double dx = (2.0 * rx - 1.0) / rx;
    double dtx = 1.0 - dx;
    return rxm * dx * std::log(dx / d_rho) + rxm * dtx * std::log(dtx / dt_rho);
}

}  // namespace

double relative_entropy_perturbed_serial(const PerturbedMeasure& spec) {
    double n = static_cast<double>(spec.N);
    double c = spec.phi.center(), r = spec.phi.support_radius();
    auto lo = static_cast<std::int64_t>(std::floor((c - r) * n)) - 1;
    auto hi = static_cast<std::int64_t>(std::ceil((c + r) * n)) + 1;
    double d_rho = (2.0 * spec.rho - 1.0) / spec.rho, dt_rho = 1.0 - d_rho;
    double sum = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) sum += entropy_term(spec, x, d_rho, dt_rho);
    return sum;
}

double relative_entropy_perturbed(const PerturbedMeasure& spec) {
    double n = static_cast<double>(spec.N);
    double c = spec.phi.center(), r = spec.phi.support_radius();
    auto lo = static_cast<std::int64_t>(std::floor((c - r) * n)) - 1;
    auto hi = static_cast<std::int64_t>(std::ceil((c + r) * n)) + 1;
    double d_rho = (2.0 * spec.rho - 1.0) / spec.rho, dt_rho = 1.0 - d_rho;
    // fixed chunk count so the reduction order (and hence rounding) does not
    // depend on the number of threads
    const std::int64_t chunks = 1024;
    std::int64_t total = hi - lo + 1;
    std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t ch = 0; ch < chunks; ++ch) {
        std::int64_t b0 = lo + ch * total / chunks;
        std::int64_t b1 = lo + (ch + 1) * total / chunks;
        double s = 0.0;
        for (std::int64_t x = b0; x < b1; ++x) s += entropy_term(spec, x, d_rho, dt_rho);
        partial[static_cast<std::size_t>(ch)] = s;
    }
    double sum = 0.0;
    for (double s : partial) sum += s;
    return sum;
}

namespace {

template <typename PmfFn>
double enumerate_expectation(const LocalFunction& g, PmfFn&& pmf) {
    int len = g.window_length();
    std::vector<int> word(static_cast<std::size_t>(len));
    double acc = 0.0;
    for (unsigned bits = 0; bits < (1u << len); ++bits) {
        bool ergodic = true;
        for (int i = 0; i + 1 < len; ++i)
            if (((bits >> i) & 3u) == 0u) {
                ergodic = false;
                break;
            }
        if (!ergodic) continue;
        for (int i = 0; i < len; ++i) word[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1u);
        acc += g.eval_window(bits) * pmf(word);
    }
    return acc;
}

}  // namespace

double exact_local_expectation(const LocalFunction& g, double rho) {
    if (g.s_g() > 6) throw Error("support too wide for exact enumeration; use mc_local_expectation");
    GrandCanonical spec(rho);
    return enumerate_expectation(g, [&](const std::vector<int>& w) { return segment_pmf(w, spec); });
}

double exact_local_expectation_drho(const LocalFunction& g, double rho) {
    if (g.s_g() > 6) throw Error("support too wide for exact enumeration; use mc_local_expectation");
    GrandCanonical spec(rho);
    return enumerate_expectation(g, [&](const std::vector<int>& w) { return segment_pmf_drho(w, spec); });
}

double exact_local_expectation_drho_fd(const LocalFunction& g, double rho) {
    const double h = 1e-6;
    return (exact_local_expectation(g, rho + h) - exact_local_expectation(g, rho - h)) / (2.0 * h);
}

std::pair<double, double> mc_local_expectation(const LocalFunction& g, double rho,
                                               std::int64_t samples, Rng& rng) {
    GrandCanonical spec(rho);
    std::int64_t len = 2 * g.s_g() + 1;
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        Configuration c = sample_gc_segment(spec, len, rng);
        double v = g.eval(c, g.s_g());
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / static_cast<double>(samples);
    double var = (sumsq - sum * mean) / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples))};
}

std::pair<double, double> zeta_moments(double rho) {
    GrandCanonical spec(rho);
    double mean = 0.0, second = 0.0;
    for (int left = 0; left < 2; ++left) {
        for (int right = 0; right < 2; ++right) {
            std::vector<int> word{left, right};
            double p = word_ergodic(word) ? segment_pmf(word, spec) : 0.0;
            double zeta = rho * (right - rho) + (1.0 - rho) * (left - rho);
            mean += p * zeta;
            second += p * zeta * zeta;
        }
    }
    return {mean, second - mean * mean};
}

}  // namespace fep
