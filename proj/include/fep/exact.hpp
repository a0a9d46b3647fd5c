#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fep/errors.hpp"
#include "fep/lattice.hpp"

namespace fep {

enum class ModelKind { symmetric, asymmetric };

/// Full generator matrix over all ergodic configurations of a small ring
/// with a fixed particle count. States are stored as bit masks (bit x =
/// occupancy of site x).
struct GeneratorMatrix {
    int L = 0;
    int k = 0;
    std::vector<std::uint32_t> states;
    Eigen::MatrixXd Q;  // row sums are zero; off-diagonals nonnegative

    int state_index(std::uint32_t mask) const;
    Configuration state_config(int index) const;
};

/// Enumerate all cyclically ergodic masks on L sites with k particles.
std::vector<std::uint32_t> enumerate_ergodic_states(int L, int k);

/// Build the generator for one of the two base models. L <= 18.
/// Throws EmptyStateSpace when no ergodic state with k particles exists.
GeneratorMatrix build_generator(int L, int k, ModelKind kind);

/// Build with an arbitrary bond-rate function (used for tilted models).
GeneratorMatrix build_generator(int L, int k,
                                const std::function<double(const Configuration&, std::int64_t)>& bond_rate);

/// Unique probability vector pi with pi Q = 0, by dense decomposition of the
/// transposed generator. Throws Reducible (with the number of communicating
/// classes) when the positive-rate digraph is not strongly connected.
Eigen::VectorXd stationary_distribution(const GeneratorMatrix& gen);

double exact_expectation(const std::vector<double>& observable, const Eigen::VectorXd& pi);

/// Observable vector helper: evaluate f on every state.
std::vector<double> observable_on_states(const GeneratorMatrix& gen,
                                         const std::function<double(const Configuration&)>& f);

}  // namespace fep
