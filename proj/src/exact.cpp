#include "fep/exact.hpp"

#include <algorithm>
#include <bit>

namespace fep {

namespace {

bool mask_ergodic(std::uint32_t mask, int L) {
    for (int x = 0; x < L; ++x) {
        int y = x + 1 == L ? 0 : x + 1;
        if ((((mask >> x) & 1u) | ((mask >> y) & 1u)) == 0u) return false;
    }
    return true;
}

Configuration mask_to_config(std::uint32_t mask, int L) {
    Configuration c(L);
    for (int x = 0; x < L; ++x) c.set(x, static_cast<int>((mask >> x) & 1u));
    return c;
}

// Tarjan strongly connected components on the positive-rate digraph.
int count_sccs(const Eigen::MatrixXd& Q) {
    int n = static_cast<int>(Q.rows());
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
    std::vector<int> stack;
    int next_index = 0, sccs = 0;

    struct Frame {
        int v;
        int child;
    };
    for (int start = 0; start < n; ++start) {
        if (index[static_cast<std::size_t>(start)] != -1) continue;
        std::vector<Frame> call{{start, 0}};
        index[static_cast<std::size_t>(start)] = low[static_cast<std::size_t>(start)] = next_index++;
        stack.push_back(start);
        on_stack[static_cast<std::size_t>(start)] = true;
        while (!call.empty()) {
            auto& [v, child] = call.back();
            if (child < n) {
                int w = child++;
                if (w == v || Q(v, w) <= 0.0) continue;
                if (index[static_cast<std::size_t>(w)] == -1) {
                    index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = next_index++;
                    stack.push_back(w);
                    on_stack[static_cast<std::size_t>(w)] = true;
                    call.push_back({w, 0});
                } else if (on_stack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(v)] =
                        std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
                }
            } else {
                if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
                    ++sccs;
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[static_cast<std::size_t>(w)] = false;
                        if (w == v) break;
                    }
                }
                int vv = v;
                call.pop_back();
                if (!call.empty())
                    low[static_cast<std::size_t>(call.back().v)] = std::min(
                        low[static_cast<std::size_t>(call.back().v)], low[static_cast<std::size_t>(vv)]);
            }
        }
    }
    return sccs;
}

}  // namespace

int GeneratorMatrix::state_index(std::uint32_t mask) const {
    auto it = std::lower_bound(states.begin(), states.end(), mask);
    if (it == states.end() || *it != mask) return -1;
    return static_cast<int>(it - states.begin());
}

Configuration GeneratorMatrix::state_config(int index) const {
    return mask_to_config(states[static_cast<std::size_t>(index)], L);
}

std::vector<std::uint32_t> enumerate_ergodic_states(int L, int k) {
    if (L < 2 || L > 18) throw Error("ring size must be in [2, 18] for exact enumeration");
    std::vector<std::uint32_t> out;
    for (std::uint32_t mask = 0; mask < (1u << L); ++mask) {
        if (std::popcount(mask) != k) continue;
        if (mask_ergodic(mask, L)) out.push_back(mask);
    }
    return out;
}

GeneratorMatrix build_generator(int L, int k, ModelKind kind) {
    if (kind == ModelKind::symmetric)
        return build_generator(L, k, [](const Configuration& c, std::int64_t x) {
            return static_cast<double>(rate_sym(c, x));
        });
    return build_generator(L, k, [](const Configuration& c, std::int64_t x) {
        return static_cast<double>(rate_asym(c, x));
    });
}

GeneratorMatrix build_generator(int L, int k,
                                const std::function<double(const Configuration&, std::int64_t)>& bond_rate) {
    GeneratorMatrix gen;
    gen.L = L;
    gen.k = k;
    gen.states = enumerate_ergodic_states(L, k);
    if (gen.states.empty()) throw EmptyStateSpace("no ergodic state on " + std::to_string(L) +
                                                  " sites with " + std::to_string(k) + " particles");
    int n = static_cast<int>(gen.states.size());
    gen.Q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Configuration c = mask_to_config(gen.states[static_cast<std::size_t>(i)], L);
        for (std::int64_t x = 0; x < L; ++x) {
            double r = bond_rate(c, x);
            if (r <= 0.0) continue;
            std::uint32_t target = gen.states[static_cast<std::size_t>(i)];
            int y = static_cast<int>((x + 1) % L);
            // swap bits x and y (rates only fire when they differ)
            target ^= (1u << x) | (1u << y);
            int j = gen.state_index(target);
            if (j < 0) throw Error("state space not closed under positive-rate transitions");
            gen.Q(i, j) += r;
            gen.Q(i, i) -= r;
        }
    }
    return gen;
}

Eigen::VectorXd stationary_distribution(const GeneratorMatrix& gen) {
    int n = static_cast<int>(gen.states.size());
    int classes = count_sccs(gen.Q);
    if (classes != 1)
        throw Reducible("state space has " + std::to_string(classes) + " communicating classes", classes);
    // solve pi Q = 0 with the normalization row appended, via dense QR of Q^T
    Eigen::MatrixXd A(n + 1, n);
    A.topRows(n) = gen.Q.transpose();
    A.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);
    double residual = (gen.Q.transpose() * pi).lpNorm<Eigen::Infinity>();
    if (residual > 1e-12) throw Error("stationary distribution residual " + std::to_string(residual));
    for (int i = 0; i < n; ++i)
        if (pi(i) < -1e-13) throw Error("stationary distribution has a negative entry");
    return pi.cwiseMax(0.0) / pi.cwiseMax(0.0).sum();
}

double exact_expectation(const std::vector<double>& observable, const Eigen::VectorXd& pi) {
    if (static_cast<int>(observable.size()) != pi.size()) throw Error("observable size mismatch");
    double acc = 0.0;
    for (int i = 0; i < pi.size(); ++i) acc += observable[static_cast<std::size_t>(i)] * pi(i);
    return acc;
}

std::vector<double> observable_on_states(const GeneratorMatrix& gen,
                                         const std::function<double(const Configuration&)>& f) {
    std::vector<double> out;
    out.reserve(gen.states.size());
    for (std::size_t i = 0; i < gen.states.size(); ++i)
        out.push_back(f(gen.state_config(static_cast<int>(i))));
    return out;
}

}  // namespace fep
