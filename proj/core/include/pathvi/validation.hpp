#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathvi/fields.hpp"
#include "pathvi/numerics.hpp"

namespace pathvi::validation {

using fields::VectorField;
using numerics::Vector;

/// Result of a brute-force search over a grid cover of the ball.
struct OracleResult {
  Vector best_point;
  double best_residual = 0.0;
  std::uint64_t points_examined = 0;
};

/// Evaluates the VI residual on every grid point of the given spacing inside
/// the ball plus the radial projection of each nonzero grid point onto the
/// sphere (exact boundary solutions would otherwise be missed). Errors with
/// the required count when (2/resolution)^n exceeds 1e8.
OracleResult grid_vi_oracle(const VectorField& f, double resolution);

/// Monte-Carlo reading of the VI definition: max over `samples` uniform
/// unit-ball points y of <F(x), y - x>. Always <= the closed form.
double sampled_vi_residual(const VectorField& f, const Vector& x,
                           std::int64_t samples, std::uint64_t seed);

/// Worst relative deviations between analytic and central-difference
/// derivatives over random interior points (radius <= 0.99, step 1e-5).
/// Relative error is ||analytic - fd|| / (1 + ||fd||), Frobenius norms.
struct FdCheckReport {
  double jacobian_rel_err = 0.0;   ///< J_F vs differences of F
  double k_jacobian_rel_err = 0.0; ///< J_K vs differences of K
  double k_grad_rel_err = 0.0;     ///< grad ||K||^2 vs differences of ||K||^2
  std::int64_t points = 0;
};

FdCheckReport fd_check(const VectorField& f, std::int64_t points,
                       std::uint64_t seed);

/// One Monte-Carlo trial of the spectral-gap study.
struct GapTrialRecord {
  std::uint64_t seed = 0;
  double min_gap = 0.0;          ///< min sigma_{n-1}(J_K(u)) over near-path cells
  std::uint64_t near_cells = 0;  ///< cells with ||K(u)|| <= L_K * probe_grid
  double zeta = 0.0;             ///< inner exclusion radius used for this trial
};

struct GapStudyReport {
  std::vector<GapTrialRecord> trials;
  double gap_min = 0.0, gap_q25 = 0.0, gap_median = 0.0, gap_q75 = 0.0,
         gap_max = 0.0;
  double cells_median = 0.0;
  double sigma = 0.0;
  double probe_grid = 0.0;

  std::string to_csv() const;
  std::string summary_json() const;
};

/// Perturbs f0 with a fresh seed per trial, scans a probe grid over the ball
/// outside the inner exclusion radius zeta (J_K vanishes identically at the
/// origin, so the gap is only meaningful on the operation range), and on
/// cells whose ||K|| is below L_K * probe_grid (the near-path cells) records
/// the smallest second-smallest singular value of J_K seen. The grid probing
/// is independent of any solver trajectory.
GapStudyReport gap_study(const VectorField& f0, double sigma,
                         std::int64_t trials, double probe_grid,
                         std::uint64_t seed);

}  // namespace pathvi::validation
