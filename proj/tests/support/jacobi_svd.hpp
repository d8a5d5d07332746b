#pragma once

// Textbook one-sided Jacobi SVD, used as an independent oracle for the
// numerics module. Deliberately written from scratch (no Eigen SVD calls):
// right Givens rotations orthogonalize the columns; the singular values are
// the final column norms and the accumulated rotations form V.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace testsupport {

struct JacobiSvdResult {
  std::vector<double> singular_values;  // sorted descending
  Eigen::MatrixXd v;                    // right singular vectors, same order
};

inline JacobiSvdResult one_sided_jacobi_svd(const Eigen::MatrixXd& a_in) {
  Eigen::MatrixXd a = a_in;
  const int n = static_cast<int>(a.cols());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double tol = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double app = a.col(p).squaredNorm();
        const double aqq = a.col(q).squaredNorm();
        const double apq = a.col(p).dot(a.col(q));
        if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0)
                             ? 1.0 / (zeta + std::sqrt(1.0 + zeta * zeta))
                             : 1.0 / (zeta - std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const Eigen::VectorXd ap = a.col(p);
        a.col(p) = c * ap - s * a.col(q);
        a.col(q) = s * ap + c * a.col(q);
        const Eigen::VectorXd vp = v.col(p);
        v.col(p) = c * vp - s * v.col(q);
        v.col(q) = s * vp + c * v.col(q);
      }
    }
    if (!rotated) break;
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) norms[i] = a.col(i).norm();
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return norms[i] > norms[j]; });

  JacobiSvdResult out;
  out.v = Eigen::MatrixXd(n, n);
  out.singular_values.resize(n);
  for (int i = 0; i < n; ++i) {
    out.singular_values[i] = norms[order[i]];
    out.v.col(i) = v.col(order[i]);
  }
  return out;
}

}  // namespace testsupport
