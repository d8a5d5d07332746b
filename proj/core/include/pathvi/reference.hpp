#pragma once

#include "pathvi/fields.hpp"
#include "pathvi/numerics.hpp"

namespace pathvi::reference {

using fields::VectorField;
using numerics::Matrix;
using numerics::Vector;

/// Three-valued stopping rule state.
enum class PredicateState { Run, Stop, Project };

const char* to_string(PredicateState s);

/// Diagnostics bundled with every tangent computation so the solver can
/// observe the spectral gap online.
struct PathPointDiagnostics {
  double k_norm = 0.0;
  double sigma_min = 0.0;
  double sigma_second = 0.0;
  Vector tangent;  ///< unit
};

struct TangentResult {
  Vector direction;  ///< unit, oriented so <v_prev, direction> >= 0
  PathPointDiagnostics diag;
  /// |<v_prev, v_min>| < 1e-10: the caller decides how to proceed.
  bool orientation_degenerate = false;
  /// sigma_min ~= sigma_second: the minimizer is not unique.
  bool gap_degenerate = false;
};

/// K(x) = (x^T x) F(x) - x (x^T F(x)). One value query.
Vector eval_K(const VectorField& f, const Vector& x);

/// J_K(x) = (x^T x I - x x^T) J_F(x) - (x^T F(x) I + x F(x)^T - 2 F(x) x^T).
/// One value query and one Jacobian query.
Matrix eval_JK(const VectorField& f, const Vector& x);

/// grad ||K||^2 (x) = 2 J_K(x)^T K(x). One value query and one Jacobian query
/// (F(x) is shared between the K and J_K factors).
Vector grad_K_sq(const VectorField& f, const Vector& x);

/// sup_{y in ball} <F(x), y - x> = max(0, ||F(x)|| - <F(x), x>).
double vi_residual(const VectorField& f, const Vector& x);

/// Same closed form applied to an already-evaluated value.
double vi_residual_of(const Vector& fx, const Vector& x);

/// Minimizing right singular direction of J_K(x), oriented along v_prev.
TangentResult tangent_direction(const VectorField& f, const Vector& x,
                                const Vector& v_prev);

/// Stop  iff ||F(x)|| <= eps/2;
/// Project iff vi_residual <= eps/2 and ||x|| >= 1 - 2 xi and <x, F(x)> >= 0;
/// Run otherwise.
PredicateState predicate(const VectorField& f, const Vector& x, double eps,
                         double xi);

/// Predicate applied to an already-evaluated value.
PredicateState predicate_of(const Vector& fx, const Vector& x, double eps,
                            double xi);

namespace detail {
/// One value + one jacobian query; shares F(x) across K and J_K.
struct KEval {
  Vector f;
  Vector k;
  Matrix jk;
};
KEval eval_k_and_jk(const VectorField& f, const Vector& x);
Vector k_of(const Vector& fx, const Vector& x);
Matrix jk_of(const Vector& fx, const Matrix& jf, const Vector& x);
}  // namespace detail

}  // namespace pathvi::reference
