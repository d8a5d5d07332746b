#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "pathvi/errors.hpp"
#include "pathvi/rng.hpp"

namespace pathvi::numerics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// The two smallest singular values of a square matrix together with the
/// right singular vector of the smallest one.
struct SingularTriple {
  double sigma_min = 0.0;
  double sigma_second = 0.0;
  Vector v_min;  ///< unit right singular vector for sigma_min
  /// Set when sigma_min and sigma_second are equal within tolerance; the
  /// returned v_min is then one valid minimizer among many.
  bool degenerate = false;
};

/// Full dense SVD (Jacobi), returning the two smallest singular values and
/// the minimizing right singular vector. For a 1x1 matrix sigma_second is
/// reported equal to sigma_min.
SingularTriple smallest_singular_pair(const Matrix& m);

/// Largest singular value.
double operator_norm(const Matrix& m);

/// An n x n matrix and an n-vector with i.i.d. Gaussian entries of the given
/// variance. Entries are drawn row-major for the matrix first, then the
/// vector, from Rng(seed); identical arguments give bit-identical output.
std::pair<Matrix, Vector> sample_gaussian_linear(int n, double variance,
                                                 std::uint64_t seed);

}  // namespace pathvi::numerics
