#include "pathvi/numerics.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace pathvi::numerics {

namespace {

void require_square_finite(const Matrix& m, const char* op) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InvalidInputError(std::string(op) + ": matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw InvalidInputError(std::string(op) + ": matrix has non-finite entries");
  }
}

}  // namespace

SingularTriple smallest_singular_pair(const Matrix& m) {
  require_square_finite(m, "smallest_singular_pair");
  const Eigen::Index n = m.rows();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();  // sorted descending

  SingularTriple out;
  out.sigma_min = sv[n - 1];
  out.sigma_second = n >= 2 ? sv[n - 2] : sv[0];
  out.v_min = svd.matrixV().col(n - 1);
  const double scale = std::max(1.0, sv[0]);
  out.degenerate = (out.sigma_second - out.sigma_min) <= 1e-12 * scale;
  return out;
}

double operator_norm(const Matrix& m) {
  require_square_finite(m, "operator_norm");
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()[0];
}

std::pair<Matrix, Vector> sample_gaussian_linear(int n, double variance,
                                                 std::uint64_t seed) {
  if (n < 1) throw InvalidInputError("sample_gaussian_linear: n must be >= 1");
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw InvalidInputError("sample_gaussian_linear: variance must be finite and >= 0");
  }
  const double sd = std::sqrt(variance);
  Rng rng(seed);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = sd * rng.gaussian();
  }
  Vector b(n);
  for (int i = 0; i < n; ++i) b[i] = sd * rng.gaussian();
  return {std::move(a), std::move(b)};
}

}  // namespace pathvi::numerics
