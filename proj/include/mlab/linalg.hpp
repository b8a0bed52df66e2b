#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mlab/phase_grid.hpp"

namespace mlab {

// Eigenvalues of a Hermitian matrix (upper triangle used), ascending.
Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m);

// True when the Hermitian matrix admits a Cholesky factorization.
bool positive_definite(const Eigen::MatrixXcd& m);

// Largest singular value.
double operator_norm(const Eigen::MatrixXcd& m);

// Unnormalized DFT along one axis of a row-major array, in place.
// sign = -1 is the forward transform, +1 the inverse.
void fft_axis(std::vector<cd>& data, const std::vector<int>& shape, int axis, int sign);

}  // namespace mlab
