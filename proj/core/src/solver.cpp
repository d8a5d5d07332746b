#include "pathvi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace pathvi::solver {

const char* to_string(Mode m) {
  return m == Mode::Theoretical ? "theoretical" : "adaptive";
}

const char* to_string(TerminationKind k) {
  switch (k) {
    case TerminationKind::Stop: return "Stop";
    case TerminationKind::Project: return "Project";
    case TerminationKind::BudgetExhausted: return "BudgetExhausted";
  }
  return "?";
}

DerivedBounds DerivedBounds::from_sampled(const LipschitzBounds& bounds,
                                          double la, double lb, double rb) {
  DerivedBounds d;
  d.L_A = la;
  d.L_B = lb;
  d.r_B = rb;
  d.L_K = formulas::lipschitz_K(la, lb, bounds.L0, bounds.L1);
  d.L_J = formulas::lipschitz_JK(la, lb, bounds.L0, bounds.L1, bounds.L2);
  d.L1_eff = bounds.L1 + la;
  return d;
}

namespace {

std::int64_t saturate_count(double v) {
  if (!(v < 9.2e18)) return std::numeric_limits<std::int64_t>::max();
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(v));
}

double positive_floor(double v) {
  return std::max(v, std::numeric_limits<double>::denorm_min());
}

}  // namespace

void SolverParams::validate() const {
  if (!(eps > 0.0) || !(xi > 0.0) || !(xi < 0.5) || !(eta1 > 0.0) ||
      !(eta2 > 0.0) || pushback_count < 1 || !(eps_init > 0.0) ||
      !(eps_init < 1.0) || max_iterations < 1) {
    throw InvalidInputError("SolverParams: parameters must be positive (xi < 1/2, eps_init < 1)");
  }
  if (mode == Mode::Theoretical) {
    const double e1 = positive_floor(formulas::eta1(theta, derived.L_K, derived.L_J, xi));
    const double e2 = positive_floor(formulas::eta2(theta, derived.L_K));
    const std::int64_t pb = saturate_count(formulas::pushback_count(theta, derived.L_K));
    const double ei = positive_floor(formulas::init_error(theta, derived.L_K, derived.L_J, xi));
    if (eta1 != e1 || eta2 != e2 || pushback_count != pb || eps_init != ei) {
      throw InvalidInputError("SolverParams: theoretical-mode step sizes do not match the formulas");
    }
  }
}

Vector initialize(const VectorField& f, double l1_eff, double eps_init) {
  if (!(l1_eff > 0.0)) throw InvalidInputError("initialize: L1_eff must be > 0");
  if (!(eps_init > 0.0) || !(eps_init < 1.0)) {
    throw InvalidInputError("initialize: eps_init must lie in (0, 1)");
  }
  const int n = f.dim();
  Vector x = Vector::Zero(n);
  Vector fx = f.value(x);
  double fn = fx.norm();
  if (fn <= 0.0) {
    throw DegenerateFieldError("initialize: F(0) = 0, nothing to normalize");
  }
  const double r = std::min(1.0, fn / (5.0 * l1_eff));
  const auto t = static_cast<std::int64_t>(std::ceil(std::log2(1.0 / eps_init))) + 1;
  for (std::int64_t i = 0; i < t; ++i) {
    x = (r / fn) * fx;
    if (i + 1 < t) {
      fx = f.value(x);
      fn = fx.norm();
      if (fn <= 0.0) {
        throw DegenerateFieldError("initialize: F vanished mid-iteration");
      }
    }
  }
  return x;
}

SolverParams derive_params(const LipschitzBounds& bounds,
                           const DerivedBounds& sampled, double sigma, double p,
                           double eps, Mode mode,
                           std::optional<std::int64_t> max_iters) {
  if (!(p > 0.0) || !(p < 1.0)) throw InvalidInputError("derive_params: p must lie in (0, 1)");
  if (!(eps > 0.0)) throw InvalidInputError("derive_params: eps must be > 0");

  SolverParams sp;
  sp.eps = eps;
  sp.mode = mode;
  sp.derived = sampled;
  sp.xi = formulas::xi(eps, bounds.L0, bounds.L1, sampled.L_A, sampled.L_B);
  sp.xi = std::min(sp.xi, 0.25);  // predicate precondition: xi < 1/2
  sp.zeta = formulas::zeta(sampled.r_B, bounds.L1, sampled.L_A);

  if (mode == Mode::Theoretical) {
    const int n = sampled.dim;
    if (n < 1) throw InvalidInputError("derive_params: theoretical mode needs sampled.dim");
    sp.theta = std::max(formulas::theta(n, sigma, sampled.L_J, p), 1e-300);
    sp.eta1 = positive_floor(formulas::eta1(sp.theta, sampled.L_K, sampled.L_J, sp.xi));
    sp.eta2 = positive_floor(formulas::eta2(sp.theta, sampled.L_K));
    const double pb = formulas::pushback_count(sp.theta, sampled.L_K);
    sp.pushback_count = saturate_count(pb);
    sp.eps_init = positive_floor(
        formulas::init_error(sp.theta, sampled.L_K, sampled.L_J, sp.xi));
    sp.derived.T_budget = formulas::path_length_budget(n, sigma, sampled.L_K, p);
    sp.max_iterations = saturate_count(std::ceil(pb * sp.derived.T_budget / (sp.eta1 / 6.0)));
  } else {
    // Placeholders; follow_path re-derives the working step sizes online from
    // the observed spectral gap.
    sp.theta = 1e-3;
    sp.eta1 = formulas::eta1(sp.theta, sampled.L_K, sampled.L_J, sp.xi);
    sp.eta2 = formulas::eta2(sp.theta, sampled.L_K);
    sp.pushback_count = 120;
    sp.eps_init = std::min(sp.xi / 2.0, 1e-9);
    sp.max_iterations = max_iters.value_or(200000);
    sp.derived.T_budget = static_cast<double>(sp.max_iterations);
  }
  sp.validate();
  return sp;
}

namespace {

using reference::detail::eval_k_and_jk;
using reference::detail::KEval;

struct PointState {
  Vector x;
  Vector fx;
  double k_norm = 0.0;
  numerics::SingularTriple trip;
  PredicateState pred = PredicateState::Run;
  double resid = 0.0;
  Matrix jk;
  Vector k;
};

PointState make_state(const VectorField& f, const Vector& x, double eps,
                      double xi) {
  PointState st;
  st.x = x;
  const KEval e = eval_k_and_jk(f, x);
  st.fx = e.f;
  st.k = e.k;
  st.jk = e.jk;
  st.k_norm = e.k.norm();
  st.trip = numerics::smallest_singular_pair(e.jk);
  st.pred = reference::predicate_of(e.f, x, eps, xi);
  st.resid = reference::vi_residual_of(e.f, x);
  return st;
}

TraceRecord record_of(std::int64_t iteration, const PointState& st,
                      double eta1_used, std::int64_t pushbacks,
                      double k_norm_forward) {
  TraceRecord r;
  r.iteration = iteration;
  r.x = st.x;
  r.k_norm = st.k_norm;
  r.sigma_min = st.trip.sigma_min;
  r.sigma_second = st.trip.sigma_second;
  r.predicate = st.pred;
  r.eta1_used = eta1_used;
  r.pushback_steps_used = pushbacks;
  r.k_norm_forward = k_norm_forward;
  return r;
}

double k_norm_at(const VectorField& f, const Vector& x) {
  return reference::eval_K(f, x).norm();
}

/// One monotone push-back pass: gradient steps on ||K||^2 with a Cauchy step
/// and backtracking, until ||K|| <= target or the step budget runs out.
struct PushbackOutcome {
  Vector y;
  double k_norm;
  std::int64_t steps = 0;
  std::int64_t violations = 0;
};

PushbackOutcome pushback_adaptive(const VectorField& f, Vector y, double ky,
                                  double target, std::int64_t max_steps) {
  PushbackOutcome out;
  for (; out.steps < max_steps && ky > target;) {
    const KEval e = eval_k_and_jk(f, y);
    const Vector g = 2.0 * e.jk.transpose() * e.k;
    const double gn2 = g.squaredNorm();
    if (gn2 < 1e-280) break;
    const Vector jg = e.jk * g;
    const double denom = jg.squaredNorm();
    if (denom < 1e-280) break;
    double s = e.k.dot(jg) / denom;
    bool accepted = false;
    for (int bt = 0; bt < 25; ++bt) {
      Vector y2 = y - s * g;
      const double n2 = y2.norm();
      if (n2 > 1.0) y2 /= n2;
      const double k2 = k_norm_at(f, y2);
      if (k2 < ky) {
        y = std::move(y2);
        ky = k2;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    ++out.steps;
    if (!accepted) break;  // stalled; the tracker carries on from here
  }
  out.y = std::move(y);
  out.k_norm = ky;
  return out;
}

PushbackOutcome pushback_theoretical(const VectorField& f, Vector y, double ky,
                                     double eta2, std::int64_t count) {
  PushbackOutcome out;
  for (std::int64_t j = 0; j < count; ++j) {
    const KEval e = eval_k_and_jk(f, y);
    const Vector g = 2.0 * e.jk.transpose() * e.k;
    Vector y2 = y - eta2 * g;
    const double n2 = y2.norm();
    if (n2 > 1.0) y2 /= n2;
    const double k2 = k_norm_at(f, y2);
    if (k2 > ky + 1e-12) ++out.violations;
    y = std::move(y2);
    ky = k2;
    ++out.steps;
  }
  out.y = std::move(y);
  out.k_norm = ky;
  return out;
}

}  // namespace

SolveResult follow_path(const VectorField& f, const SolverParams& params,
                        const Vector& x0, const Vector& v0) {
  params.validate();
  if (x0.norm() > 1.0 + 1e-9) throw InvalidInputError("follow_path: ||x0|| > 1");
  if (std::abs(v0.norm() - 1.0) > 1e-6) {
    throw InvalidInputError("follow_path: v0 must be a unit vector");
  }

  const double lj = std::max(params.derived.L_J, 1e-12);
  const double l1_eff = std::max(params.derived.L1_eff, 1e-12);
  const bool adaptive = params.mode == Mode::Adaptive;

  SolveResult res;
  const std::uint64_t v_before = f.value_queries();
  const std::uint64_t j_before = f.jac_queries();

  PointState st = make_state(f, x0, params.eps, params.xi);
  res.trace.push_back(record_of(0, st, 0.0, 0, st.k_norm));

  Vector v = v0;
  Vector best_point = st.x;
  double best_resid = st.resid;

  std::deque<double> gap_window;
  auto theta_hat = [&]() {
    double m = std::numeric_limits<double>::infinity();
    for (double g : gap_window) m = std::min(m, g);
    if (!std::isfinite(m)) m = params.theta;
    return std::max(0.5 * m, 1e-12);
  };

  int consecutive_degenerate = 0;
  int consecutive_clamped = 0;

  for (std::int64_t iter = 1;; ++iter) {
    if (st.pred == PredicateState::Stop) {
      res.point = st.x;
      res.kind = TerminationKind::Stop;
      res.residual = st.resid;
      break;
    }
    if (st.pred == PredicateState::Project) {
      res.point = st.x / st.x.norm();
      res.kind = TerminationKind::Project;
      res.residual = reference::vi_residual(f, res.point);
      break;
    }
    if (iter > params.max_iterations) {
      res.point = best_point;
      res.kind = TerminationKind::BudgetExhausted;
      res.residual = best_resid;
      break;
    }

    gap_window.push_back(st.trip.sigma_second);
    if (gap_window.size() > 10) gap_window.pop_front();
    const double th = adaptive ? theta_hat() : params.theta;

    // Tangent, oriented by the previous direction.
    const double align = v.dot(st.trip.v_min);
    const bool orientation_degenerate = std::abs(align) < 1e-10;
    Vector dir = (align < 0.0) ? Vector(-st.trip.v_min) : st.trip.v_min;
    if (orientation_degenerate) {
      if (++consecutive_degenerate >= 10) {
        throw PathDegenerateError(
            "follow_path: tangent orientation degenerate for 10 consecutive iterations");
      }
    } else {
      consecutive_degenerate = 0;
    }

    // Step size.
    double eta1;
    if (adaptive) {
      const double boundary_room = std::max(params.xi / 4.0, (1.0 - st.x.norm()) / 4.0);
      const double zero_room = st.fx.norm() / (4.0 * l1_eff);
      eta1 = std::min({th / (8.0 * lj), boundary_room, zero_room, 0.05});
    } else {
      eta1 = params.eta1;
    }
    if (orientation_degenerate) eta1 *= 0.5;
    eta1 = std::max(eta1, 1e-14);

    // Forward step with back-off when ||K|| blows past the correction basin.
    const double basin = th * th / (8.0 * lj);
    Vector y;
    double ky = 0.0;
    for (int attempt = 0;; ++attempt) {
      y = st.x + eta1 * dir;
      const double yn = y.norm();
      if (yn > 1.0) y /= yn;
      ky = k_norm_at(f, y);
      if (!adaptive) break;
      if (ky <= std::max(10.0 * st.k_norm, basin) || eta1 <= 1e-14 ||
          attempt >= 40) {
        break;
      }
      eta1 *= 0.5;
    }

    // Push back toward the path.
    PushbackOutcome pb;
    if (adaptive) {
      const double target = std::max(th * th / (64.0 * lj), 1e-300);
      pb = pushback_adaptive(f, std::move(y), ky, target, params.pushback_count);
    } else {
      pb = pushback_theoretical(f, std::move(y), ky, params.eta2,
                                params.pushback_count);
    }
    res.pushback_monotonicity_violations += pb.violations;

    Vector xn = std::move(pb.y);
    const double xnorm = xn.norm();
    if (xnorm > 1.0) {
      xn /= xnorm;
      ++consecutive_clamped;
      if (consecutive_clamped > 100) {
        throw PathDegenerateError(
            "follow_path: iterate pinned to the boundary for 100 iterations without stopping");
      }
    } else {
      consecutive_clamped = 0;
    }

    st = make_state(f, xn, params.eps, params.xi);
    v = dir;
    res.trace.push_back(record_of(iter, st, eta1, pb.steps, ky));
    if (st.resid < best_resid) {
      best_resid = st.resid;
      best_point = st.x;
    }
  }

  res.iterations = static_cast<std::int64_t>(res.trace.size()) - 1;
  res.value_queries = f.value_queries() - v_before;
  res.jac_queries = f.jac_queries() - j_before;
  return res;
}

SolveResult solve_smoothed(const VectorField& f0, double sigma, double p,
                           double eps, std::uint64_t seed, Mode mode,
                           std::optional<std::int64_t> max_iters) {
  if (!(eps > 0.0)) throw InvalidInputError("solve_smoothed: eps must be > 0");
  auto pf = fields::perturb(f0, sigma, seed);
  const std::uint64_t v0q = pf->value_queries();
  const std::uint64_t j0q = pf->jac_queries();

  const int n = pf->dim();
  const Vector origin = Vector::Zero(n);
  const Vector f_at_0 = pf->value(origin);

  if (f_at_0.norm() <= eps) {
    SolveResult res;
    res.point = origin;
    res.kind = TerminationKind::Stop;
    res.residual = reference::vi_residual_of(f_at_0, origin);
    res.iterations = 0;
    TraceRecord r;
    r.iteration = 0;
    r.x = origin;
    r.k_norm = 0.0;
    r.predicate = PredicateState::Stop;
    res.trace.push_back(std::move(r));
    res.value_queries = pf->value_queries() - v0q;
    res.jac_queries = pf->jac_queries() - j0q;
    return res;
  }

  DerivedBounds derived = DerivedBounds::from_sampled(
      f0.bounds(), numerics::operator_norm(pf->a()), pf->b().norm(),
      f_at_0.norm());
  derived.dim = n;
  SolverParams params =
      derive_params(f0.bounds(), derived, sigma, p, eps, mode, max_iters);

  const Vector x0 = initialize(*pf, derived.L1_eff, params.eps_init);
  const Vector v0 = x0 / x0.norm();
  SolveResult res = follow_path(*pf, params, x0, v0);
  res.value_queries = pf->value_queries() - v0q;
  res.jac_queries = pf->jac_queries() - j0q;
  return res;
}

SolveResult solve_worst_case(const VectorField& f, double eps, double p,
                             std::uint64_t seed,
                             std::optional<std::int64_t> max_iters) {
  if (!(p > 0.0) || !(p < 1.0)) throw InvalidInputError("solve_worst_case: p must lie in (0, 1)");
  if (!(eps > 0.0)) throw InvalidInputError("solve_worst_case: eps must be > 0");

  const int n = f.dim();
  const Vector origin = Vector::Zero(n);
  const std::uint64_t v0q = f.value_queries();
  const std::uint64_t j0q = f.jac_queries();

  const Vector f_at_0 = f.value(origin);
  if (f_at_0.norm() <= eps) {
    SolveResult res;
    res.point = origin;
    res.kind = TerminationKind::Stop;
    res.residual = reference::vi_residual_of(f_at_0, origin);
    res.iterations = 0;
    TraceRecord r;
    r.iteration = 0;
    r.x = origin;
    r.predicate = PredicateState::Stop;
    res.trace.push_back(std::move(r));
    res.value_queries = f.value_queries() - v0q;
    res.jac_queries = f.jac_queries() - j0q;
    return res;
  }

  const auto trials = static_cast<std::int64_t>(std::ceil(std::log2(1.0 / p)));
  const double sigma = eps / 16.0;

  std::uint64_t value_q = f.value_queries() - v0q;
  std::uint64_t jac_q = f.jac_queries() - j0q;
  SolveResult best;
  best.kind = TerminationKind::BudgetExhausted;
  best.residual = std::numeric_limits<double>::infinity();

  std::int64_t attempted = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    ++attempted;
    SolveResult trial = solve_smoothed(f, sigma, 0.5, eps / 2.0,
                                       numerics::derive_seed(seed, t),
                                       Mode::Adaptive, max_iters);
    value_q += trial.value_queries;
    jac_q += trial.jac_queries;

    const std::uint64_t vb = f.value_queries();
    const double orig_resid = reference::vi_residual(f, trial.point);
    value_q += f.value_queries() - vb;

    trial.residual = orig_resid;
    if (orig_resid <= eps) {
      trial.value_queries = value_q;
      trial.jac_queries = jac_q;
      trial.worst_case_trials = attempted;
      if (trial.kind == TerminationKind::BudgetExhausted) {
        trial.kind = TerminationKind::Stop;  // certified by the residual check
      }
      return trial;
    }
    if (orig_resid < best.residual) {
      best = std::move(trial);
      best.kind = TerminationKind::BudgetExhausted;
    }
  }
  best.value_queries = value_q;
  best.jac_queries = jac_q;
  best.worst_case_trials = attempted;
  return best;
}

}  // namespace pathvi::solver
