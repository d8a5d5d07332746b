#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "pathvi/numerics.hpp"

namespace pathvi::fields {

using numerics::Matrix;
using numerics::Vector;

/// User-declared bounds: ||F|| <= L0, ||J_F||_op <= L1, J_F is L2-Lipschitz.
/// They are taken on trust; the validation module only spot-checks them.
struct LipschitzBounds {
  double L0 = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
};

/// A vector field F : B(0,1) -> R^n with value and Jacobian access.
///
/// value() and jacobian() enforce the domain (||x|| <= 1 + 1e-9) and bump
/// atomic query counters, so oracle-complexity experiments and solver
/// benchmarks share one counting mechanism. Fields without an analytic
/// Jacobian fall back to a central difference of step 1e-6 * (1 + ||x||);
/// the difference stencil evaluates the raw field, off-domain by up to the
/// stencil width, and counts as a single Jacobian query.
class VectorField {
 public:
  virtual ~VectorField() = default;

  int dim() const { return dim_; }
  const LipschitzBounds& bounds() const { return bounds_; }
  bool has_analytic_jacobian() const { return analytic_jacobian_; }

  Vector value(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;

  std::uint64_t value_queries() const { return value_queries_.load(); }
  std::uint64_t jac_queries() const { return jac_queries_.load(); }
  void reset_counters() const;

  /// Independent copy with fresh counters.
  virtual std::unique_ptr<VectorField> clone() const = 0;

  /// A short JSON-ish description used in run-config echoes.
  virtual std::string describe() const = 0;

 protected:
  VectorField(int dim, LipschitzBounds bounds, bool analytic_jacobian)
      : dim_(dim), bounds_(bounds), analytic_jacobian_(analytic_jacobian) {}
  VectorField(const VectorField& other)
      : dim_(other.dim_), bounds_(other.bounds_),
        analytic_jacobian_(other.analytic_jacobian_) {}

  virtual Vector value_impl(const Vector& x) const = 0;
  /// Default implementation: central finite differences of value_impl.
  virtual Matrix jacobian_impl(const Vector& x) const;

 private:
  int dim_;
  LipschitzBounds bounds_;
  bool analytic_jacobian_;
  mutable std::atomic<std::uint64_t> value_queries_{0};
  mutable std::atomic<std::uint64_t> jac_queries_{0};
};

using FieldPtr = std::unique_ptr<VectorField>;

/// F(x) = base(x) + A x + b with A, b drawn once and cached for the whole
/// solve. The identities value = base + Ax + b and jac = base_jac + A hold
/// exactly (same floating-point additions every call).
class PerturbedField final : public VectorField {
 public:
  PerturbedField(FieldPtr base, Matrix a, Vector b, double sigma,
                 std::uint64_t seed);

  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  const VectorField& base() const { return *base_; }

  std::unique_ptr<VectorField> clone() const override;
  std::string describe() const override;

 protected:
  Vector value_impl(const Vector& x) const override;
  Matrix jacobian_impl(const Vector& x) const override;

 private:
  FieldPtr base_;
  Matrix a_;
  Vector b_;
  double sigma_;
  std::uint64_t seed_;
};

/// Samples A, b with entry variance sigma^2/n (seeded, cached) around `f`.
std::unique_ptr<PerturbedField> perturb(const VectorField& f, double sigma,
                                        std::uint64_t seed);

// Builtin catalog -----------------------------------------------------------

FieldPtr make_zero_field(int dim);
FieldPtr make_constant_field(Vector c);
/// F(x) = M x + c. Bounds default to L0 = ||M|| + ||c||, L1 = ||M||, L2 = 0.
FieldPtr make_affine_field(Matrix m, Vector c);
FieldPtr make_affine_field(Matrix m, Vector c, LipschitzBounds bounds);
/// Displacement of the 2-D map (3x+y-1, x-2y+1): F(x,y) = (2x+y-1, x-3y+1).
/// Its unique zero is (2/7, 3/7).
FieldPtr make_fig1_displacement();
/// Displacement of the radial contraction G(x) = c x: F(x) = (c-1) x.
FieldPtr make_radial_contraction(int dim, double c);
/// Seeded random cubic field, coordinatewise
///   F_i(x) = a_i + sum_j B_ij x_j + sum_j C_ij x_j^2 + sum_j D_ij x_j^3,
/// with declared bounds that hold on the unit ball by construction.
FieldPtr make_polynomial_field(int dim, std::uint64_t seed, double scale = 0.5);

/// Wrap a plain callable as a field. No analytic Jacobian: jacobian() falls
/// back to central differences of the callable.
FieldPtr make_callable_field(int dim, std::function<Vector(const Vector&)> fn,
                             LipschitzBounds bounds,
                             std::string description = "{\"kind\":\"callable\"}");

/// Resolve a builtin by name ("zero", "fig1-displacement",
/// "radial-contraction", "polynomial"). `dim` is used by builtins that need
/// one; fig1-displacement ignores it.
FieldPtr builtin_field(const std::string& name, int dim = 2,
                       std::uint64_t seed = 0);

/// Parse a field spec document (JSON). Schema:
///   {"kind": "affine"|"builtin"|"polynomial",
///    "dim": n, "M": [[...]], "c": [...], "name": "...",
///    "coeffs": {...}, "bounds": {"L0":, "L1":, "L2":}}
/// Unknown keys are rejected. Errors carry the offending location.
FieldPtr parse_field_spec(const std::string& text);

}  // namespace pathvi::fields
