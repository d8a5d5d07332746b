#include "pathvi/reference.hpp"

#include <cmath>

namespace pathvi::reference {

const char* to_string(PredicateState s) {
  switch (s) {
    case PredicateState::Run: return "Run";
    case PredicateState::Stop: return "Stop";
    case PredicateState::Project: return "Project";
  }
  return "?";
}

namespace detail {

Vector k_of(const Vector& fx, const Vector& x) {
  return x.squaredNorm() * fx - x * x.dot(fx);
}

Matrix jk_of(const Vector& fx, const Matrix& jf, const Vector& x) {
  const int n = static_cast<int>(x.size());
  const double xx = x.squaredNorm();
  Matrix jk = xx * jf - x * (x.transpose() * jf);
  jk -= x.dot(fx) * Matrix::Identity(n, n);
  jk -= x * fx.transpose();
  jk += 2.0 * fx * x.transpose();
  return jk;
}

KEval eval_k_and_jk(const VectorField& f, const Vector& x) {
  KEval e;
  e.f = f.value(x);
  const Matrix jf = f.jacobian(x);
  e.k = k_of(e.f, x);
  e.jk = jk_of(e.f, jf, x);
  return e;
}

}  // namespace detail

Vector eval_K(const VectorField& f, const Vector& x) {
  return detail::k_of(f.value(x), x);
}

Matrix eval_JK(const VectorField& f, const Vector& x) {
  const Vector fx = f.value(x);
  const Matrix jf = f.jacobian(x);
  return detail::jk_of(fx, jf, x);
}

Vector grad_K_sq(const VectorField& f, const Vector& x) {
  const auto e = detail::eval_k_and_jk(f, x);
  return 2.0 * e.jk.transpose() * e.k;
}

double vi_residual_of(const Vector& fx, const Vector& x) {
  return std::max(0.0, fx.norm() - fx.dot(x));
}

double vi_residual(const VectorField& f, const Vector& x) {
  return vi_residual_of(f.value(x), x);
}

TangentResult tangent_direction(const VectorField& f, const Vector& x,
                                const Vector& v_prev) {
  if (std::abs(v_prev.norm() - 1.0) > 1e-6) {
    throw InvalidInputError("tangent_direction: v_prev must be a unit vector");
  }
  const auto e = detail::eval_k_and_jk(f, x);
  const auto trip = numerics::smallest_singular_pair(e.jk);

  TangentResult out;
  out.diag.k_norm = e.k.norm();
  out.diag.sigma_min = trip.sigma_min;
  out.diag.sigma_second = trip.sigma_second;
  out.gap_degenerate = trip.degenerate;

  const double align = v_prev.dot(trip.v_min);
  out.orientation_degenerate = std::abs(align) < 1e-10;
  out.direction = (align < 0.0) ? Vector(-trip.v_min) : trip.v_min;
  out.diag.tangent = out.direction;
  return out;
}

PredicateState predicate_of(const Vector& fx, const Vector& x, double eps,
                            double xi) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw InvalidInputError("predicate: eps must be positive");
  }
  if (!(xi > 0.0) || !(xi < 0.5)) {
    throw InvalidInputError("predicate: xi must lie in (0, 1/2)");
  }
  if (fx.norm() <= eps / 2.0) return PredicateState::Stop;
  const bool near_boundary = x.norm() >= 1.0 - 2.0 * xi;
  const bool aligned = x.dot(fx) >= 0.0;
  if (near_boundary && aligned && vi_residual_of(fx, x) <= eps / 2.0) {
    return PredicateState::Project;
  }
  return PredicateState::Run;
}

PredicateState predicate(const VectorField& f, const Vector& x, double eps,
                         double xi) {
  return predicate_of(f.value(x), x, eps, xi);
}

}  // namespace pathvi::reference
