#include "pathvi/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pathvi/reference.hpp"
#include "pathvi/solver.hpp"

namespace pathvi::validation {

namespace {

/// Visit every lattice point of spacing `res` inside the closed unit ball.
template <typename Fn>
void for_each_grid_point(int n, double res, Fn&& fn) {
  const int m = static_cast<int>(std::floor(1.0 / res));
  std::vector<int> idx(n, -m);
  Vector x(n);
  while (true) {
    for (int i = 0; i < n; ++i) x[i] = res * idx[i];
    if (x.norm() <= 1.0) fn(x);
    int c = n - 1;
    while (c >= 0) {
      if (++idx[c] <= m) break;
      idx[c] = -m;
      --c;
    }
    if (c < 0) break;
  }
}

void check_grid_budget(int n, double res, const char* op) {
  if (!(res > 0.0)) throw InvalidInputError(std::string(op) + ": resolution must be > 0");
  const double count = std::pow(2.0 / res, n);
  if (count > 1e8) {
    throw BudgetError(std::string(op) + ": grid too large",
                      static_cast<std::uint64_t>(std::min(count, 1.8e19)));
  }
}

}  // namespace

OracleResult grid_vi_oracle(const VectorField& f, double resolution) {
  const int n = f.dim();
  check_grid_budget(n, resolution, "grid_vi_oracle");

  OracleResult out;
  out.best_residual = std::numeric_limits<double>::infinity();
  for_each_grid_point(n, resolution, [&](const Vector& x) {
    const double r = reference::vi_residual(f, x);
    ++out.points_examined;
    if (r < out.best_residual) {
      out.best_residual = r;
      out.best_point = x;
    }
    const double xn = x.norm();
    if (xn > 0.0) {
      const Vector s = x / xn;
      const double rs = reference::vi_residual(f, s);
      ++out.points_examined;
      if (rs < out.best_residual) {
        out.best_residual = rs;
        out.best_point = s;
      }
    }
  });
  return out;
}

double sampled_vi_residual(const VectorField& f, const Vector& x,
                           std::int64_t samples, std::uint64_t seed) {
  if (samples < 1) throw InvalidInputError("sampled_vi_residual: samples must be >= 1");
  const Vector fx = f.value(x);
  numerics::Rng rng(seed);
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < samples; ++i) {
    const Vector y = rng.uniform_ball(f.dim());
    best = std::max(best, fx.dot(y - x));
  }
  return best;
}

FdCheckReport fd_check(const VectorField& f, std::int64_t points,
                       std::uint64_t seed) {
  if (points < 1) throw InvalidInputError("fd_check: points must be >= 1");
  const int n = f.dim();
  const double h = 1e-5;
  numerics::Rng rng(seed);
  FdCheckReport rep;
  rep.points = points;

  auto rel = [](double diff, double ref) { return diff / (1.0 + ref); };

  for (std::int64_t p = 0; p < points; ++p) {
    const Vector x = 0.99 * rng.uniform_ball(n);

    // J_F against differences of F.
    const numerics::Matrix jf = f.jacobian(x);
    numerics::Matrix jf_fd(n, n);
    Vector xp = x, xm = x;
    for (int c = 0; c < n; ++c) {
      xp[c] = x[c] + h;
      xm[c] = x[c] - h;
      jf_fd.col(c) = (f.value(xp) - f.value(xm)) / (2.0 * h);
      xp[c] = x[c];
      xm[c] = x[c];
    }
    rep.jacobian_rel_err =
        std::max(rep.jacobian_rel_err, rel((jf - jf_fd).norm(), jf_fd.norm()));

    // J_K against differences of K.
    const numerics::Matrix jk = reference::eval_JK(f, x);
    numerics::Matrix jk_fd(n, n);
    for (int c = 0; c < n; ++c) {
      xp[c] = x[c] + h;
      xm[c] = x[c] - h;
      jk_fd.col(c) =
          (reference::eval_K(f, xp) - reference::eval_K(f, xm)) / (2.0 * h);
      xp[c] = x[c];
      xm[c] = x[c];
    }
    rep.k_jacobian_rel_err =
        std::max(rep.k_jacobian_rel_err, rel((jk - jk_fd).norm(), jk_fd.norm()));

    // grad ||K||^2 against differences of ||K||^2.
    const Vector g = reference::grad_K_sq(f, x);
    Vector g_fd(n);
    for (int c = 0; c < n; ++c) {
      xp[c] = x[c] + h;
      xm[c] = x[c] - h;
      g_fd[c] = (reference::eval_K(f, xp).squaredNorm() -
                 reference::eval_K(f, xm).squaredNorm()) /
                (2.0 * h);
      xp[c] = x[c];
      xm[c] = x[c];
    }
    rep.k_grad_rel_err =
        std::max(rep.k_grad_rel_err, rel((g - g_fd).norm(), g_fd.norm()));
  }
  return rep;
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

GapStudyReport gap_study(const VectorField& f0, double sigma,
                         std::int64_t trials, double probe_grid,
                         std::uint64_t seed) {
  if (trials < 1) throw InvalidInputError("gap_study: trials must be >= 1");
  const int n = f0.dim();
  if (n > 6) throw InvalidInputError("gap_study: grid probing supports n <= 6");
  check_grid_budget(n, probe_grid, "gap_study");

  GapStudyReport rep;
  rep.sigma = sigma;
  rep.probe_grid = probe_grid;

  for (std::int64_t t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = numerics::derive_seed(seed, static_cast<std::uint64_t>(t));
    auto pf = fields::perturb(f0, sigma, trial_seed);
    const double la = numerics::operator_norm(pf->a());
    const double lb = pf->b().norm();
    const double lk =
        solver::formulas::lipschitz_K(la, lb, f0.bounds().L0, f0.bounds().L1);
    const double alpha = lk * probe_grid;
    // J_K vanishes identically at the origin, so the gap is only meaningful
    // on the solver's operation range ||x|| >= zeta (the inner exclusion
    // radius); cells inside it are skipped.
    const double rb = pf->value(Vector::Zero(n)).norm();
    const double zeta =
        solver::formulas::zeta(rb, f0.bounds().L1, la);

    GapTrialRecord rec;
    rec.seed = trial_seed;
    rec.zeta = zeta;
    rec.min_gap = std::numeric_limits<double>::infinity();
    for_each_grid_point(n, probe_grid, [&](const Vector& u) {
      if (u.norm() < zeta) return;
      const Vector k = reference::eval_K(*pf, u);
      if (k.norm() > alpha) return;
      ++rec.near_cells;
      const auto trip =
          numerics::smallest_singular_pair(reference::eval_JK(*pf, u));
      rec.min_gap = std::min(rec.min_gap, trip.sigma_second);
    });
    if (!std::isfinite(rec.min_gap)) rec.min_gap = 0.0;
    rep.trials.push_back(rec);
  }

  std::vector<double> gaps, cells;
  gaps.reserve(rep.trials.size());
  for (const auto& r : rep.trials) {
    gaps.push_back(r.min_gap);
    cells.push_back(static_cast<double>(r.near_cells));
  }
  rep.gap_min = quantile(gaps, 0.0);
  rep.gap_q25 = quantile(gaps, 0.25);
  rep.gap_median = quantile(gaps, 0.5);
  rep.gap_q75 = quantile(gaps, 0.75);
  rep.gap_max = quantile(gaps, 1.0);
  rep.cells_median = quantile(cells, 0.5);
  return rep;
}

std::string GapStudyReport::to_csv() const {
  std::ostringstream os;
  os << "trial,seed,min_gap,near_cells,zeta\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    char gap[64], zeta[64];
    std::snprintf(gap, sizeof(gap), "%.17g", trials[i].min_gap);
    std::snprintf(zeta, sizeof(zeta), "%.17g", trials[i].zeta);
    os << i << "," << trials[i].seed << "," << gap << "," << trials[i].near_cells
       << "," << zeta << "\n";
  }
  return os.str();
}

std::string GapStudyReport::summary_json() const {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "{\"sigma\":" << num(sigma) << ",\"probe_grid\":" << num(probe_grid)
     << ",\"trials\":" << trials.size() << ",\"gap_min\":" << num(gap_min)
     << ",\"gap_q25\":" << num(gap_q25) << ",\"gap_median\":" << num(gap_median)
     << ",\"gap_q75\":" << num(gap_q75) << ",\"gap_max\":" << num(gap_max)
     << ",\"cells_median\":" << num(cells_median) << "}";
  return os.str();
}

}  // namespace pathvi::validation
