#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "combforge/tensor.hpp"

namespace combforge {

using Rng = std::mt19937_64;

/// Matrix of i.i.d. standard complex Gaussians (real and imaginary parts N(0, 1/2)).
Matrix ginibre(std::size_t rows, std::size_t cols, Rng& rng);

/// Haar-random isometry C^cols -> C^rows (rows >= cols): QR of a Ginibre
/// matrix with the phases of R's diagonal absorbed into Q.
Matrix haar_isometry(std::size_t rows, std::size_t cols, Rng& rng);

inline Matrix haar_unitary(std::size_t dim, Rng& rng) { return haar_isometry(dim, dim, rng); }

/// Flat Dirichlet(1, ..., 1) sample.
std::vector<double> dirichlet_uniform(std::size_t count, Rng& rng);

/// Random column-stochastic table (each column drawn from Dirichlet(1, ..., 1)).
Eigen::MatrixXd random_stochastic(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace combforge
