#include "pathvi/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "pathvi/fields.hpp"
#include "pathvi/validation.hpp"

namespace {

namespace fields = pathvi::fields;
namespace solver = pathvi::solver;
using pathvi::numerics::Matrix;
using pathvi::numerics::Rng;
using pathvi::numerics::Vector;
using solver::Mode;
using solver::TerminationKind;

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

TEST(Formulas, Algorithm2StepSizes) {
  // theta = 1, L_K = 1: eta2 = 1/1024 and 20 push-back steps.
  EXPECT_DOUBLE_EQ(solver::formulas::eta2(1.0, 1.0), 1.0 / 1024.0);
  EXPECT_DOUBLE_EQ(solver::formulas::pushback_count(1.0, 1.0), 20.0);
}

TEST(Formulas, LipschitzBudgets) {
  EXPECT_DOUBLE_EQ(solver::formulas::lipschitz_K(0, 0, 1, 1), 6.0);
  EXPECT_DOUBLE_EQ(solver::formulas::lipschitz_JK(0, 0, 1, 1, 1), 17.0);
}

TEST(Initialize, ConstantFieldConvergesInOneStep) {
  const auto f = fields::make_constant_field(vec2(0.6, -0.8));
  const Vector x1 = solver::initialize(*f, 1.0, 0.5);
  const Vector x2 = solver::initialize(*f, 1.0, 1e-9);
  EXPECT_LE((x1 - x2).norm(), 1e-15);
  const double r = std::min(1.0, 1.0 / 5.0);
  EXPECT_NEAR(x1.norm(), r, 8 * std::numeric_limits<double>::epsilon());
  EXPECT_NEAR(x1[0], r * 0.6, 1e-15);
}

TEST(Initialize, OutputNormIsExactlyR) {
  const auto f = fields::make_fig1_displacement();
  const double l1 = f->bounds().L1;
  const Vector x = solver::initialize(*f, l1, 1e-6);
  const double r = std::min(1.0, std::sqrt(2.0) / (5.0 * l1));
  EXPECT_NEAR(x.norm(), r, 8 * std::numeric_limits<double>::epsilon() * (1 + r));
}

TEST(Initialize, SuccessiveDistancesHalve) {
  // Iterate manually and check the contraction ratio <= 1/2 + 1e-12 in the
  // r = ||F(0)||/(5 L) regime.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto base = fields::make_polynomial_field(3, 300 + seed, 0.5);
    const auto pf = fields::perturb(*base, seed % 2 ? 1.0 : 0.1, seed);
    const Vector f0 = pf->value(Vector::Zero(3));
    if (f0.norm() < 1e-9) continue;
    const double l1 = pf->bounds().L1 + pathvi::numerics::operator_norm(pf->a());
    const double r = std::min(1.0, f0.norm() / (5.0 * l1));
    if (r >= 1.0) continue;  // contraction guarantee needs the F(0)/(5L) regime
    Vector x = Vector::Zero(3);
    Vector prev_x;
    double prev_gap = -1.0;
    for (int i = 0; i < 20; ++i) {
      const Vector fx = pf->value(x);
      ASSERT_GT(fx.norm(), 0.0);
      const Vector next = (r / fx.norm()) * fx;
      if (i >= 1) {
        const double gap = (next - x).norm();
        if (prev_gap > 1e-14) {
          EXPECT_LE(gap, 0.5 * prev_gap + 1e-12);
        }
        prev_gap = gap;
      } else {
        prev_gap = -1.0;
      }
      prev_x = x;
      x = next;
      if (i >= 1 && prev_gap >= 0 && prev_gap < 1e-15) break;
    }
  }
}

TEST(Initialize, ErrorsOnDegenerateField) {
  const auto f = fields::make_zero_field(2);
  EXPECT_THROW(solver::initialize(*f, 1.0, 0.5), pathvi::DegenerateFieldError);
  const auto g = fields::make_fig1_displacement();
  EXPECT_THROW(solver::initialize(*g, 0.0, 0.5), pathvi::InvalidInputError);
  EXPECT_THROW(solver::initialize(*g, 1.0, 2.0), pathvi::InvalidInputError);
}

solver::DerivedBounds sample_bounds(const fields::LipschitzBounds& b, int dim,
                                    double la, double lb, double rb) {
  auto d = solver::DerivedBounds::from_sampled(b, la, lb, rb);
  d.dim = dim;
  return d;
}

TEST(DeriveParams, TheoreticalModeSatisfiesTheFormulas) {
  fields::LipschitzBounds b{2.0, 1.5, 1.0};
  const auto d = sample_bounds(b, 2, 0.3, 0.2, 0.8);
  const auto sp = solver::derive_params(b, d, 0.5, 0.25, 1e-2, Mode::Theoretical);
  EXPECT_EQ(sp.mode, Mode::Theoretical);
  EXPECT_GT(sp.theta, 0.0);
  EXPECT_DOUBLE_EQ(sp.eta2,
                   std::max(solver::formulas::eta2(sp.theta, d.L_K),
                            std::numeric_limits<double>::denorm_min()));
  const double pb = solver::formulas::pushback_count(sp.theta, d.L_K);
  if (pb < 9.2e18) {
    EXPECT_DOUBLE_EQ(static_cast<double>(sp.pushback_count), pb);
  } else {
    EXPECT_EQ(sp.pushback_count, std::numeric_limits<std::int64_t>::max());
  }
  EXPECT_DOUBLE_EQ(sp.xi, solver::formulas::xi(1e-2, b.L0, b.L1, d.L_A, d.L_B));
  EXPECT_DOUBLE_EQ(sp.zeta, solver::formulas::zeta(d.r_B, b.L1, d.L_A));
  EXPECT_NO_THROW(sp.validate());
}

TEST(DeriveParams, RejectsBadInputs) {
  fields::LipschitzBounds b{1.0, 1.0, 0.0};
  const auto d = sample_bounds(b, 2, 0.0, 0.0, 0.5);
  EXPECT_THROW(solver::derive_params(b, d, 0.5, 0.0, 1e-2, Mode::Adaptive),
               pathvi::InvalidInputError);
  EXPECT_THROW(solver::derive_params(b, d, 0.5, 1.5, 1e-2, Mode::Adaptive),
               pathvi::InvalidInputError);
  EXPECT_THROW(solver::derive_params(b, d, 0.5, 0.5, -1.0, Mode::Adaptive),
               pathvi::InvalidInputError);
}

TEST(FollowPath, ConstantFieldProjectsToE1) {
  // F = e1: the path is the segment from 0 to e1; at the boundary F(x) = x.
  // A synthetic L_A makes the effective Lipschitz constant positive so the
  // initialization lands at radius 0.1 and the tracker has to walk.
  const auto f = fields::make_constant_field(vec2(1, 0));
  const auto d = sample_bounds(f->bounds(), 2, 2.0, 0.0, 1.0);
  const auto sp = solver::derive_params(f->bounds(), d, 0.0, 0.5, 1e-3, Mode::Adaptive);
  const Vector x0 = solver::initialize(*f, d.L1_eff, sp.eps_init);
  const auto res = solver::follow_path(*f, sp, x0, x0 / x0.norm());
  EXPECT_EQ(res.kind, TerminationKind::Project);
  EXPECT_LE((res.point - vec2(1, 0)).norm(), 1e-2);
  EXPECT_LE(res.residual, 1e-3);
  EXPECT_EQ(res.pushback_monotonicity_violations, 0);
  EXPECT_EQ(static_cast<std::int64_t>(res.trace.size()), res.iterations + 1);
}

TEST(FollowPath, ForwardProgressOnConstantField) {
  // On the analytic straight path, each cycle advances along e1 by at least
  // eta1/6 for at least 95% of iterations.
  const auto f = fields::make_constant_field(vec2(1, 0));
  const auto d = sample_bounds(f->bounds(), 2, 2.0, 0.0, 1.0);
  const auto sp = solver::derive_params(f->bounds(), d, 0.0, 0.5, 1e-3, Mode::Adaptive);
  const Vector x0 = solver::initialize(*f, d.L1_eff, sp.eps_init);
  const auto res = solver::follow_path(*f, sp, x0, x0 / x0.norm());
  ASSERT_GE(res.trace.size(), 3u);
  std::int64_t good = 0, total = 0;
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    const double adv = res.trace[i].x[0] - res.trace[i - 1].x[0];
    ++total;
    if (adv >= res.trace[i].eta1_used / 6.0 - 1e-9) ++good;
  }
  EXPECT_GE(static_cast<double>(good), 0.95 * static_cast<double>(total));
}

TEST(FollowPath, BudgetExhaustedReturnsBestResidualIterate) {
  const auto f0 = fields::make_polynomial_field(2, 5, 0.5);
  const auto res = solver::solve_smoothed(*f0, 0.5, 0.1, 1e-9, 3, Mode::Adaptive, 5);
  EXPECT_EQ(res.kind, TerminationKind::BudgetExhausted);
  double best = std::numeric_limits<double>::infinity();
  // best over the trace of the smoothed residual; recompute on the field
  const auto pf = fields::perturb(*f0, 0.5, 3);
  for (const auto& r : res.trace) {
    best = std::min(best, pathvi::reference::vi_residual(*pf, r.x));
  }
  EXPECT_NEAR(res.residual, best, 1e-12);
}

TEST(SolveSmoothed, ShortCircuitsWhenFAtOriginIsSmall) {
  // The radial contraction displacement has F(0) = 0.
  const auto f = fields::make_radial_contraction(3, 0.5);
  const auto res = solver::solve_smoothed(*f, 0.0, 0.5, 1e-3, 1, Mode::Adaptive);
  EXPECT_EQ(res.kind, TerminationKind::Stop);
  EXPECT_EQ(res.point.norm(), 0.0);
  EXPECT_EQ(res.residual, 0.0);
  EXPECT_EQ(res.iterations, 0);
  EXPECT_EQ(res.trace.size(), 1u);
}

std::string serialize(const solver::SolveResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << solver::to_string(r.kind) << ";" << r.residual << ";" << r.iterations
     << ";" << r.value_queries << ";" << r.jac_queries << ";";
  for (int i = 0; i < r.point.size(); ++i) os << r.point[i] << ",";
  os << "|";
  for (const auto& t : r.trace) {
    os << t.iteration << ":" << t.k_norm << ":" << t.sigma_min << ":"
       << t.sigma_second << ":" << t.eta1_used << ":" << t.pushback_steps_used
       << ";";
    for (int i = 0; i < t.x.size(); ++i) os << t.x[i] << ",";
  }
  return os.str();
}

TEST(SolveSmoothed, SeedDeterminismIncludingTrace) {
  const auto f = fields::make_fig1_displacement();
  const auto r1 = solver::solve_smoothed(*f, 0.05, 0.1, 1e-3, 77, Mode::Adaptive);
  const auto r2 = solver::solve_smoothed(*f, 0.05, 0.1, 1e-3, 77, Mode::Adaptive);
  EXPECT_EQ(serialize(r1), serialize(r2));
}

TEST(SolveSmoothed, TerminatesWithValidResidualOnFig1) {
  // The origin component of the K-locus of this field exits the ball near
  // (-1, 0); the solver lands there (a legitimate exact VI solution). The
  // interior zero (2/7, 3/7) lies on the other branch of the conic and is
  // not reachable from the origin along the path.
  const auto f = fields::make_fig1_displacement();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto res = solver::solve_smoothed(*f, 0.05, 0.1, 1e-3, seed, Mode::Adaptive);
    ASSERT_NE(res.kind, TerminationKind::BudgetExhausted);
    EXPECT_LE(res.residual, 1e-3);
    EXPECT_LE((res.point - vec2(-1, 0)).norm(), 0.2);
  }
}

TEST(SolveSmoothed, QueryAccountingMatchesCounters) {
  const auto f0 = fields::make_polynomial_field(2, 9, 0.5);
  const auto res = solver::solve_smoothed(*f0, 0.5, 0.1, 1e-2, 5, Mode::Adaptive);
  EXPECT_GT(res.value_queries, 0u);
  EXPECT_GT(res.jac_queries, 0u);
  // One SVD-bearing state evaluation per trace row at minimum.
  EXPECT_GE(res.value_queries, res.trace.size());
}

TEST(SolveWorstCase, TrialCountsFollowLogP) {
  // A hopeless budget makes every trial fail, so the trial count is exactly
  // ceil(log2(1/p)).
  const auto f = fields::make_fig1_displacement();
  const auto r1 = solver::solve_worst_case(*f, 1e-6, 0.5, 4, 3);
  EXPECT_EQ(r1.worst_case_trials, 1);
  const auto r2 = solver::solve_worst_case(*f, 1e-6, 1.0 / 16.0, 4, 3);
  EXPECT_EQ(r2.worst_case_trials, 4);
  EXPECT_EQ(r2.kind, TerminationKind::BudgetExhausted);
}

TEST(SolveWorstCase, ResidualOnOriginalField) {
  const auto f = fields::make_fig1_displacement();
  const auto res = solver::solve_worst_case(*f, 1e-2, 1e-3, 9);
  EXPECT_NE(res.kind, TerminationKind::BudgetExhausted);
  EXPECT_LE(res.residual, 1e-2);
  EXPECT_LE(pathvi::reference::vi_residual(*f, res.point), 1e-2);
}

TEST(SolveWorstCase, ShortCircuitAtOrigin) {
  const auto f = fields::make_radial_contraction(2, 0.9);
  const auto res = solver::solve_worst_case(*f, 1e-3, 0.25, 1);
  EXPECT_EQ(res.point.norm(), 0.0);
  EXPECT_EQ(res.kind, TerminationKind::Stop);
}

TEST(TraceRecords, KNormNeverWorseThanForwardStep) {
  // Correction never ends worse than the forward step left it: the recorded
  // k_norm of each iterate is below the post-forward-step value implied by
  // monotone push-back (violations counter must stay 0).
  const auto f0 = fields::make_polynomial_field(3, 77, 0.5);
  const auto res = solver::solve_smoothed(*f0, 0.5, 0.1, 1e-2, 6, Mode::Adaptive);
  EXPECT_EQ(res.pushback_monotonicity_violations, 0);
  EXPECT_NE(res.kind, TerminationKind::BudgetExhausted);
}

}  // namespace

namespace {

TEST(FollowPath, TheoreticalModeRunsTheLiteralLoop) {
  // Hand-built theoretical bundle with theta = 1 and L_K = L_J = 1: the step
  // sizes must equal the closed-form values and the fixed 20-step push-back
  // loop must still track the straight path of a constant field.
  const auto f = fields::make_constant_field(vec2(1, 0));
  solver::SolverParams sp;
  sp.mode = Mode::Theoretical;
  sp.eps = 1e-2;
  sp.theta = 1.0;
  sp.xi = 0.1;
  sp.zeta = 0.04;
  sp.derived.dim = 2;
  sp.derived.L_A = 0.0;
  sp.derived.L_B = 0.0;
  sp.derived.r_B = 1.0;
  sp.derived.L_K = 1.0;
  sp.derived.L_J = 1.0;
  sp.derived.L1_eff = 1.0;
  sp.eta1 = solver::formulas::eta1(sp.theta, 1.0, 1.0, sp.xi);
  sp.eta2 = solver::formulas::eta2(sp.theta, 1.0);
  sp.pushback_count =
      static_cast<std::int64_t>(solver::formulas::pushback_count(sp.theta, 1.0));
  EXPECT_EQ(sp.pushback_count, 20);
  sp.eps_init = solver::formulas::init_error(sp.theta, 1.0, 1.0, sp.xi);
  sp.max_iterations = 200000;
  ASSERT_NO_THROW(sp.validate());

  const Vector x0 = solver::initialize(*f, 1.0, sp.eps_init);
  const auto res = solver::follow_path(*f, sp, x0, x0 / x0.norm());
  EXPECT_EQ(res.kind, TerminationKind::Project);
  EXPECT_LE((res.point - vec2(1, 0)).norm(), 5e-2);
  EXPECT_LE(res.residual, 1e-2);
  // Every cycle ran the full literal push-back loop.
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    EXPECT_EQ(res.trace[i].pushback_steps_used, 20);
    EXPECT_DOUBLE_EQ(res.trace[i].eta1_used, sp.eta1);
  }
}

TEST(SolveSmoothed, FiftySeedSuccessRateAtSigmaPointOne) {
  const auto f = fields::make_fig1_displacement();
  int good = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto res = solver::solve_smoothed(*f, 0.1, 0.1, 1e-2, seed, Mode::Adaptive);
    if (res.kind != TerminationKind::BudgetExhausted && res.residual <= 1e-2) {
      ++good;
    }
  }
  EXPECT_GE(good, 45);
}

}  // namespace

namespace {

TEST(Concurrency, IndependentSolvesAgreeAcrossThreads) {
  // Worst-case trials / benchmark seeds may fan out over threads as long as
  // each solve owns its field handle; results must match the serial runs.
  const auto f0 = fields::make_polynomial_field(2, 99, 0.5);
  std::vector<std::string> serial(4), threaded(4);
  for (int i = 0; i < 4; ++i) {
    serial[i] = serialize(
        solver::solve_smoothed(*f0, 0.5, 0.1, 1e-2, 100 + i, Mode::Adaptive));
  }
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i) {
    workers.emplace_back([&, i] {
      const auto clone = f0->clone();
      threaded[i] = serialize(
          solver::solve_smoothed(*clone, 0.5, 0.1, 1e-2, 100 + i, Mode::Adaptive));
    });
  }
  for (auto& w : workers) w.join();
  for (int i = 0; i < 4; ++i) EXPECT_EQ(serial[i], threaded[i]);
}

}  // namespace
