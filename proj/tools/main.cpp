#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathvi/fields.hpp"
#include "pathvi/lowerbound.hpp"
#include "pathvi/reference.hpp"
#include "pathvi/solver.hpp"
#include "pathvi/validation.hpp"

namespace {

using nlohmann::json;
using pathvi::fields::FieldPtr;
using pathvi::numerics::Vector;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

void write_output(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pathvi::Error("cannot open output file " + path);
  out << body;
}

struct FieldArgs {
  std::string field;
  std::string field_file;
  int dim = 2;
  std::uint64_t field_seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--field", field, "builtin field name or inline JSON spec");
    cmd->add_option("--field-file", field_file, "path to a JSON field spec");
    cmd->add_option("--dim", dim, "dimension for builtins that need one");
    cmd->add_option("--field-seed", field_seed, "seed for seeded builtins");
  }

  FieldPtr resolve() const {
    if (!field_file.empty()) {
      std::ifstream in(field_file, std::ios::binary);
      if (!in) throw pathvi::Error("cannot read field file " + field_file);
      std::stringstream ss;
      ss << in.rdbuf();
      return pathvi::fields::parse_field_spec(ss.str());
    }
    if (field.empty()) throw pathvi::Error("no field given (use --field or --field-file)");
    if (!field.empty() && field.front() == '{') {
      return pathvi::fields::parse_field_spec(field);
    }
    return pathvi::fields::builtin_field(field, dim, field_seed);
  }

  json config() const {
    json c;
    c["field"] = field.empty() ? field_file : field;
    c["dim"] = dim;
    c["field_seed"] = field_seed;
    return c;
  }
};

std::string trace_csv(const pathvi::solver::SolveResult& res, int n) {
  std::ostringstream os;
  os << "iter";
  for (int i = 0; i < n; ++i) os << ",x_" << i;
  os << ",k_norm,sigma_min,sigma_second,predicate,eta1_used,pushbacks\n";
  for (const auto& r : res.trace) {
    os << r.iteration;
    for (int i = 0; i < n; ++i) os << "," << fmt(i < r.x.size() ? r.x[i] : 0.0);
    os << "," << fmt(r.k_norm) << "," << fmt(r.sigma_min) << ","
       << fmt(r.sigma_second) << "," << pathvi::reference::to_string(r.predicate)
       << "," << fmt(r.eta1_used) << "," << r.pushback_steps_used << "\n";
  }
  return os.str();
}

json result_json(const pathvi::solver::SolveResult& res, json config) {
  json j;
  j["point"] = vec_json(res.point);
  j["kind"] = pathvi::solver::to_string(res.kind);
  j["residual"] = res.residual;
  j["iterations"] = res.iterations;
  j["value_queries"] = res.value_queries;
  j["jac_queries"] = res.jac_queries;
  j["config"] = std::move(config);
  return j;
}

int run_solve(const FieldArgs& fargs, double eps, double sigma, double p,
              std::uint64_t seed, const std::string& mode_name, bool worst_case,
              std::optional<std::int64_t> max_iters, const std::string& out,
              const std::string& trace_out, const std::string& plot_out) {
  const FieldPtr f = fargs.resolve();
  const auto mode = mode_name == "theoretical"
                        ? pathvi::solver::Mode::Theoretical
                        : pathvi::solver::Mode::Adaptive;

  pathvi::solver::SolveResult res;
  if (worst_case) {
    res = pathvi::solver::solve_worst_case(*f, eps, p, seed, max_iters);
  } else {
    res = pathvi::solver::solve_smoothed(*f, sigma, p, eps, seed, mode, max_iters);
  }

  json config = fargs.config();
  config["command"] = worst_case ? "solve-worst-case" : "solve-smoothed";
  config["eps"] = eps;
  config["sigma"] = sigma;
  config["p"] = p;
  config["seed"] = seed;
  config["mode"] = mode_name;
  if (max_iters) config["max_iters"] = *max_iters;

  write_output(out, result_json(res, std::move(config)).dump(2));
  if (!trace_out.empty()) write_output(trace_out, trace_csv(res, f->dim()));
  if (!plot_out.empty() && f->dim() == 2) {
    std::ostringstream os;
    os << "iter,x,y\n";
    for (const auto& r : res.trace) {
      os << r.iteration << "," << fmt(r.x.size() > 0 ? r.x[0] : 0.0) << ","
         << fmt(r.x.size() > 1 ? r.x[1] : 0.0) << "\n";
    }
    write_output(plot_out, os.str());
  }
  return res.kind == pathvi::solver::TerminationKind::BudgetExhausted ? 2 : 0;
}

int run_oracle(const FieldArgs& fargs, double resolution, const std::string& out) {
  const FieldPtr f = fargs.resolve();
  const auto res = pathvi::validation::grid_vi_oracle(*f, resolution);
  json config = fargs.config();
  config["command"] = "oracle";
  config["resolution"] = resolution;
  json j;
  j["best_point"] = vec_json(res.best_point);
  j["best_residual"] = res.best_residual;
  j["points_examined"] = res.points_examined;
  j["config"] = std::move(config);
  write_output(out, j.dump(2));
  return 0;
}

int run_check(const FieldArgs& fargs, std::int64_t points, std::uint64_t seed,
              const std::string& out) {
  const FieldPtr f = fargs.resolve();
  const auto rep = pathvi::validation::fd_check(*f, points, seed);

  // Spot-check the algebraic identities of the reference function as well.
  pathvi::numerics::Rng rng(seed ^ 0x9e3779b9u);
  double worst_orth = 0.0, worst_proj = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector x = 0.999 * rng.uniform_ball(f->dim());
    const Vector k = pathvi::reference::eval_K(*f, x);
    worst_orth = std::max(worst_orth, std::abs(k.dot(x)));
    const double nx = x.norm();
    if (nx > 1e-6) {
      const Vector fx = f->value(x);
      const Vector proj = fx - (x.dot(fx) / (nx * nx)) * x;
      worst_proj = std::max(worst_proj, (k / (nx * nx) - proj).norm());
    }
  }

  json config = fargs.config();
  config["command"] = "check";
  config["points"] = points;
  config["seed"] = seed;
  json j;
  j["jacobian_rel_err"] = rep.jacobian_rel_err;
  j["k_jacobian_rel_err"] = rep.k_jacobian_rel_err;
  j["k_grad_rel_err"] = rep.k_grad_rel_err;
  j["k_orthogonality_max"] = worst_orth;
  j["k_projection_identity_max"] = worst_proj;
  j["config"] = std::move(config);
  write_output(out, j.dump(2));
  return 0;
}

int run_gap_study(const FieldArgs& fargs, double sigma, std::int64_t trials,
                  double resolution, std::uint64_t seed, const std::string& out,
                  const std::string& csv_out) {
  const FieldPtr f = fargs.resolve();
  const auto rep =
      pathvi::validation::gap_study(*f, sigma, trials, resolution, seed);
  json config = fargs.config();
  config["command"] = "gap-study";
  config["sigma"] = sigma;
  config["trials"] = trials;
  config["resolution"] = resolution;
  config["seed"] = seed;
  json j = json::parse(rep.summary_json());
  j["config"] = std::move(config);
  write_output(out, j.dump(2));
  if (!csv_out.empty()) write_output(csv_out, rep.to_csv());
  return 0;
}

std::shared_ptr<pathvi::lowerbound::HardInstance> build_instance(
    int k, const std::string& mode, std::uint64_t seed, double eps, double gamma) {
  using namespace pathvi::lowerbound;
  std::shared_ptr<EndOfLineOracle> oracle;
  if (mode == "adversarial") {
    oracle = std::make_shared<AdversarialOracle>(k);
  } else if (mode == "path") {
    oracle = std::make_shared<ExplicitOracle>(ExplicitOracle::path_graph(k));
  } else if (mode == "permuted") {
    oracle = std::make_shared<ExplicitOracle>(ExplicitOracle::permuted_path(k, seed));
  } else {
    throw pathvi::Error("unknown lowerbound mode '" + mode + "'");
  }
  HardInstanceConfig cfg;
  cfg.k = k;
  cfg.eps = eps;
  cfg.gamma = gamma;
  return HardInstance::make(cfg, std::move(oracle));
}

int run_lowerbound(const std::string& sub, int k, const std::string& mode,
                   std::uint64_t seed, double eps, double gamma,
                   std::int64_t budget, std::int64_t points,
                   const std::string& strategy_name, const std::string& out,
                   const std::string& csv_out) {
  using namespace pathvi::lowerbound;
  auto inst = build_instance(k, mode, seed, eps, gamma);

  json config;
  config["command"] = "lowerbound-" + sub;
  config["k"] = k;
  config["mode"] = mode;
  config["seed"] = seed;
  config["eps"] = eps;
  config["gamma"] = gamma;

  if (sub == "build") {
    json j;
    j["k"] = k;
    j["m"] = inst->m();
    j["n"] = inst->dim();
    j["codewords"] = inst->code().codewords.size();
    j["min_distance"] = inst->code().min_distance;
    j["alpha"] = inst->alpha();
    json first = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(4, inst->code().codewords.size()); ++i) {
      first.push_back(inst->code().codewords[i].to_string());
    }
    j["first_codewords"] = first;
    j["config"] = std::move(config);
    write_output(out, j.dump(2));
    return 0;
  }

  if (sub == "probe") {
    pathvi::numerics::Rng rng(seed);
    std::ostringstream os;
    os << "index,norm,region,u,v,g_norm\n";
    for (std::int64_t i = 0; i < points; ++i) {
      const Vector x = rng.uniform_ball(inst->dim());
      const Region r = inst->classify(x);
      const double g = inst->displacement(x).norm();
      os << i << "," << fmt(x.norm()) << "," << to_string(r.kind) << "," << r.u
         << "," << r.v << "," << fmt(g) << "\n";
    }
    json j;
    j["points"] = points;
    j["oracle_fresh_queries"] = inst->oracle().fresh_queries();
    j["config"] = std::move(config);
    write_output(out, j.dump(2));
    if (!csv_out.empty()) write_output(csv_out, os.str());
    return 0;
  }

  if (sub == "harness") {
    std::unique_ptr<QueryStrategy> strat;
    if (strategy_name == "null") {
      strat = make_null_strategy();
    } else if (strategy_name == "random-ball") {
      strat = make_random_ball_strategy();
    } else if (strategy_name == "vertex-sweep") {
      strat = make_vertex_sweep_strategy(inst);
    } else {
      throw pathvi::Error("unknown strategy '" + strategy_name + "'");
    }
    const auto hr = query_harness(*inst, *strat, budget, seed);
    std::ostringstream os;
    os << "strategy,seed,value_queries,oracle_queries,found\n";
    os << strat->name() << "," << seed << "," << hr.value_queries << ","
       << hr.oracle_queries << "," << (hr.found ? 1 : 0) << "\n";
    json j;
    j["strategy"] = strat->name();
    j["found"] = hr.found;
    j["value_queries"] = hr.value_queries;
    j["oracle_queries"] = hr.oracle_queries;
    j["budget"] = budget;
    j["config"] = std::move(config);
    write_output(out, j.dump(2));
    if (!csv_out.empty()) write_output(csv_out, os.str());
    return 0;
  }

  throw pathvi::Error("unknown lowerbound subcommand '" + sub + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"path-following variational-inequality solver and query-complexity experiments"};
  app.require_subcommand(1);

  // solve / trace share almost everything.
  FieldArgs solve_field, trace_field, oracle_field, check_field, gap_field;
  double eps = 1e-3, sigma = 0.05, p = 0.1, resolution = 0.01;
  std::uint64_t seed = 0;
  std::string mode = "adaptive";
  bool worst_case = false;
  std::int64_t max_iters = -1;
  std::string out, trace_out, plot_out;
  std::int64_t check_points = 100;
  std::int64_t trials = 20;

  auto add_solver_opts = [&](CLI::App* cmd, FieldArgs& fa) {
    fa.add_to(cmd);
    cmd->add_option("--eps", eps, "target accuracy");
    cmd->add_option("--sigma", sigma, "perturbation scale (entry variance sigma^2/n)");
    cmd->add_option("--p", p, "failure probability budget");
    cmd->add_option("--seed", seed, "perturbation seed");
    cmd->add_option("--mode", mode, "theoretical|adaptive")
        ->check(CLI::IsMember({"theoretical", "adaptive"}));
    cmd->add_flag("--worst-case", worst_case, "use the worst-case entry point");
    cmd->add_option("--max-iters", max_iters, "iteration budget override");
    cmd->add_option("--out", out, "result JSON path (stdout when omitted)");
    cmd->add_option("--trace-out", trace_out, "per-iteration CSV path");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve a field (smoothed or worst-case)");
  add_solver_opts(solve, solve_field);

  CLI::App* trace = app.add_subcommand("trace", "solve and emit the full trajectory");
  add_solver_opts(trace, trace_field);
  trace->add_option("--plot-out", plot_out, "n=2 path sample CSV for plotting");

  CLI::App* oracle = app.add_subcommand("oracle", "brute-force grid VI oracle");
  oracle_field.add_to(oracle);
  oracle->add_option("--resolution", resolution, "grid spacing");
  oracle->add_option("--out", out, "result JSON path");

  CLI::App* check = app.add_subcommand("check", "finite-difference and identity checks");
  check_field.add_to(check);
  check->add_option("--points", check_points, "number of sample points");
  check->add_option("--seed", seed, "sampling seed");
  check->add_option("--out", out, "result JSON path");

  CLI::App* gap = app.add_subcommand("gap-study", "Monte-Carlo spectral-gap study");
  gap_field.add_to(gap);
  gap->add_option("--sigma", sigma, "perturbation scale");
  gap->add_option("--trials", trials, "number of trials");
  gap->add_option("--resolution", resolution, "probe grid spacing");
  gap->add_option("--seed", seed, "master seed");
  gap->add_option("--out", out, "summary JSON path");
  gap->add_option("--trace-out", trace_out, "per-trial CSV path");

  CLI::App* lb = app.add_subcommand("lowerbound", "hard-instance experiments");
  lb->require_subcommand(1);
  int k = 4;
  double lb_eps = 0.05, lb_gamma = 1.0 / 32.0;
  bool paper_eps = false;
  std::string lb_mode = "adversarial", strategy = "random-ball";
  std::string lb_config;
  std::int64_t budget = 1000, probe_points = 1000;
  for (const char* name : {"build", "probe", "harness"}) {
    CLI::App* sub = lb->add_subcommand(name);
    sub->add_option("--config", lb_config,
                    "instance descriptor JSON ({k, mode, seed, eps, gamma}), inline or @file");
    sub->add_option("--k", k, "vertex bits");
    sub->add_option("--mode", lb_mode, "adversarial|path|permuted")
        ->check(CLI::IsMember({"adversarial", "path", "permuted"}));
    sub->add_option("--seed", seed, "seed");
    sub->add_option("--eps", lb_eps, "displacement scale");
    sub->add_flag("--paper-eps", paper_eps, "use the native displacement scale 1");
    sub->add_option("--gamma", lb_gamma, "tube radius");
    sub->add_option("--budget", budget, "query budget (harness)");
    sub->add_option("--points", probe_points, "sample count (probe)");
    sub->add_option("--strategy", strategy, "null|random-ball|vertex-sweep");
    sub->add_option("--out", out, "result JSON path");
    sub->add_option("--trace-out", trace_out, "CSV path");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints help/usage
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    const std::optional<std::int64_t> budget_opt =
        max_iters > 0 ? std::optional<std::int64_t>(max_iters) : std::nullopt;
    if (solve->parsed()) {
      return run_solve(solve_field, eps, sigma, p, seed, mode, worst_case,
                       budget_opt, out, trace_out, "");
    }
    if (trace->parsed()) {
      if (trace_out.empty()) trace_out = "trace.csv";
      return run_solve(trace_field, eps, sigma, p, seed, mode, worst_case,
                       budget_opt, out, trace_out, plot_out);
    }
    if (oracle->parsed()) return run_oracle(oracle_field, resolution, out);
    if (check->parsed()) return run_check(check_field, check_points, seed, out);
    if (gap->parsed()) {
      return run_gap_study(gap_field, sigma, trials, resolution, seed, out, trace_out);
    }
    if (lb->parsed()) {
      const std::string sub = lb->get_subcommands().front()->get_name();
      double eps_eff = paper_eps ? 1.0 : lb_eps;
      if (!lb_config.empty()) {
        std::string text = lb_config;
        if (text.front() == '@') {
          std::ifstream in(text.substr(1), std::ios::binary);
          if (!in) throw pathvi::Error("cannot read descriptor " + text.substr(1));
          std::stringstream ss;
          ss << in.rdbuf();
          text = ss.str();
        }
        const json desc = json::parse(text);
        for (auto it = desc.begin(); it != desc.end(); ++it) {
          if (it.key() != "k" && it.key() != "mode" && it.key() != "seed" &&
              it.key() != "eps" && it.key() != "gamma") {
            throw pathvi::Error("unknown descriptor key '" + it.key() + "'");
          }
        }
        k = desc.value("k", k);
        lb_mode = desc.value("mode", lb_mode);
        seed = desc.value("seed", seed);
        eps_eff = desc.value("eps", eps_eff);
        lb_gamma = desc.value("gamma", lb_gamma);
      }
      return run_lowerbound(sub, k, lb_mode, seed, eps_eff, lb_gamma, budget,
                            probe_points, strategy, out, trace_out);
    }
  } catch (const pathvi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
