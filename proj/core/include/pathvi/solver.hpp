#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pathvi/fields.hpp"
#include "pathvi/reference.hpp"

namespace pathvi::solver {

using fields::LipschitzBounds;
using fields::VectorField;
using numerics::Matrix;
using numerics::Vector;
using reference::PredicateState;

enum class Mode { Theoretical, Adaptive };
enum class TerminationKind { Stop, Project, BudgetExhausted };

const char* to_string(Mode m);
const char* to_string(TerminationKind k);

/// Closed-form parameter formulas. Kept as tiny free functions with a fixed
/// floating-point evaluation order so tests can re-derive them independently.
namespace formulas {

inline double lipschitz_K(double la, double lb, double l0, double l1) {
  return 4.0 * la + 4.0 * lb + 5.0 * l0 + l1;
}

inline double lipschitz_JK(double la, double lb, double l0, double l1, double l2) {
  return 8.0 * la + 4.0 * lb + 8.0 * l1 + 8.0 * l0 + l2;
}

inline double eta1(double theta, double lk, double lj, double xi) {
  return std::min((theta * theta) / (1024.0 * lj * lk),
                  std::sqrt(theta) * xi / (64.0 * std::sqrt(lk)));
}

inline double eta2(double theta, double lk) {
  return (theta * theta) / (1024.0 * lk * lk * lk * lk);
}

inline double pushback_count(double theta, double lk) {
  return std::ceil(20.0 * lk * lk * lk / (theta * theta * theta));
}

inline double init_error(double theta, double lk, double lj, double xi) {
  return std::min(std::pow(theta, 1.5) / (32.0 * std::sqrt(lk) * lj), xi / 2.0);
}

inline double xi(double eps, double l0, double l1, double la, double lb) {
  return eps / (16.0 * (l1 + la + l0 + la + lb));
}

inline double zeta(double rb, double l1, double la) {
  return rb / (5.0 * (l1 + la));
}

/// Universal constant used wherever the analysis leaves one unspecified.
inline constexpr double kUniversalC = 4.0;

/// delta = C^-n (sqrt(n) s1)^n (sqrt(n) s2)^(4n-1) L_J^-(5n-1) p^3, with the
/// entry deviations normalized as s1 = s2 = sigma / sqrt(n), so the
/// sqrt(n)-scaled factors reduce to powers of sigma.
inline double delta(int n, double sigma, double lj, double p) {
  const double nn = static_cast<double>(n);
  return std::pow(kUniversalC, -nn) * std::pow(sigma, nn) *
         std::pow(sigma, 4.0 * nn - 1.0) * std::pow(lj, -(5.0 * nn - 1.0)) *
         (p * p * p);
}

inline double theta(int n, double sigma, double lj, double p) {
  return 2.0 * lj * delta(n, sigma, lj, p);
}

/// T = C^n (sqrt(n) s2)^-(3n-3) L_K^(3n-3) / p^3, same normalization.
inline double path_length_budget(int n, double sigma, double lk, double p) {
  const double nn = static_cast<double>(n);
  return std::pow(kUniversalC, nn) * std::pow(sigma, -(3.0 * nn - 3.0)) *
         std::pow(lk, 3.0 * nn - 3.0) / (p * p * p);
}

}  // namespace formulas

/// Sampled norms of the drawn perturbation plus the Lipschitz budget of the
/// reference function derived from them.
struct DerivedBounds {
  int dim = 0;           ///< dimension the perturbation was sampled in
  double L_A = 0.0;      ///< operator norm of the sampled A
  double L_B = 0.0;      ///< norm of the sampled b
  double r_B = 0.0;      ///< sampled lower bound for ||F~(0)|| (the value itself)
  double L_K = 0.0;      ///< 4 L_A + 4 L_B + 5 L0 + L1
  double L_J = 0.0;      ///< 8 L_A + 4 L_B + 8 L1 + 8 L0 + L2
  double L1_eff = 0.0;   ///< L1 + L_A, the Lipschitz constant actually used
  double T_budget = 0.0; ///< path-length budget (formula value)

  static DerivedBounds from_sampled(const LipschitzBounds& bounds, double la,
                                    double lb, double rb);
};

/// Full parameter bundle for one follow-the-path run.
struct SolverParams {
  double eps = 0.0;
  double theta = 0.0;
  double xi = 0.0;
  double zeta = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  std::int64_t pushback_count = 0;
  double eps_init = 0.0;
  std::int64_t max_iterations = 0;
  Mode mode = Mode::Adaptive;
  DerivedBounds derived;

  /// Theoretical-mode bundles must satisfy the step-size formulas exactly.
  void validate() const;
};

/// Per-iteration diagnostics record.
struct TraceRecord {
  std::int64_t iteration = 0;
  Vector x;
  double k_norm = 0.0;
  double sigma_min = 0.0;
  double sigma_second = 0.0;
  PredicateState predicate = PredicateState::Run;
  double eta1_used = 0.0;     ///< forward step that produced this iterate
  std::int64_t pushback_steps_used = 0;
  /// ||K|| right after the forward step, before any push-back correction.
  double k_norm_forward = 0.0;
};

struct SolveResult {
  Vector point;
  TerminationKind kind = TerminationKind::BudgetExhausted;
  double residual = 0.0;  ///< vi_residual at `point`
  std::int64_t iterations = 0;
  std::uint64_t value_queries = 0;
  std::uint64_t jac_queries = 0;
  std::vector<TraceRecord> trace;
  /// Push-back steps that increased ||K|| (counted, not hidden).
  std::int64_t pushback_monotonicity_violations = 0;
  /// Number of perturbation trials attempted (worst-case entry point only).
  std::int64_t worst_case_trials = 0;
};

/// Contraction-mapping initialization: r = min(1, ||F(0)|| / (5 L1_eff)),
/// then t = ceil(log2(1/eps_init)) + 1 iterations of x <- r F(x)/||F(x)||.
/// The output has norm exactly r and lies within eps_init of the path.
Vector initialize(const VectorField& f, double l1_eff, double eps_init);

/// Derive a parameter bundle. Theoretical mode evaluates the closed-form
/// budget pipeline (delta -> theta -> steps -> iteration budget) and exists
/// to expose those formulas; adaptive mode (the practical default) seeds
/// placeholders that follow_path refreshes online from the observed spectral
/// gap. `max_iters` overrides the iteration budget in adaptive mode.
SolverParams derive_params(const LipschitzBounds& bounds,
                           const DerivedBounds& sampled, double sigma, double p,
                           double eps, Mode mode,
                           std::optional<std::int64_t> max_iters = std::nullopt);

/// Algorithm core: predictor steps along the near-kernel direction of J_K
/// with gradient-descent correction of ||K||^2, until the stopping rule
/// leaves Run or the budget is exhausted.
SolveResult follow_path(const VectorField& f, const SolverParams& params,
                        const Vector& x0, const Vector& v0);

/// Smoothed entry point: perturbs f0 with entry deviation sigma/sqrt(n),
/// short-circuits if ||F~(0)|| <= eps, otherwise initializes and follows the
/// path. The residual is measured on the perturbed field.
SolveResult solve_smoothed(const VectorField& f0, double sigma, double p,
                           double eps, std::uint64_t seed, Mode mode,
                           std::optional<std::int64_t> max_iters = std::nullopt);

/// Worst-case entry point: ceil(log2(1/p)) independent smoothed trials with a
/// small perturbation (sigma = eps/16) and a per-trial iteration stopwatch;
/// returns the first output whose residual on the *original* field is <= eps.
SolveResult solve_worst_case(const VectorField& f, double eps, double p,
                             std::uint64_t seed,
                             std::optional<std::int64_t> max_iters = std::nullopt);

}  // namespace pathvi::solver
