//
// Project pnkhb - Copyright 2026 The pnkhb Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PNKHB_CLI_HPP
#define PNKHB_CLI_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pnkhb/config.hpp"
#include "pnkhb/problems/mlr.hpp"
#include "pnkhb/problems/quadratic.hpp"
#include "pnkhb/problems/spectral_ct.hpp"
#include "pnkhb/solver.hpp"

namespace pnkhb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1; // failed check or internal fault
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

class IoError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form.
inline std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, p) : std::string("nan");
}

/// Dense matrix file: a header line "rows cols" followed by rows * cols
/// whitespace-separated numbers in row-major order.
inline Matrix read_matrix_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
    throw IoError("'" + path + "': bad header, expected 'rows cols'");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j)))
        throw IoError("'" + path + "': expected " + std::to_string(rows * cols)
                      + " entries");
  std::string extra;
  if (in >> extra)
    throw IoError("'" + path + "': trailing data");
  return m;
}

inline Vector read_vector_file(const std::string &path, Index n) {
  const Matrix m = read_matrix_file(path);
  if (m.size() != n || (m.rows() != 1 && m.cols() != 1))
    throw IoError("'" + path + "': expected a vector of length "
                  + std::to_string(n));
  return Eigen::Map<const Vector>(m.data(), n);
}

struct ProblemInstance {
  std::string kind;
  ObjectiveProblem problem;
  Vector x0;
};

/// Builds the problem named by `problem` from its `problem.*` keys.
inline ProblemInstance build_problem(const Config &c,
                                     std::optional<std::uint64_t> seed) {
  ProblemInstance inst;
  inst.kind = c.get_string("problem");
  auto seed_or = [&](std::uint64_t fallback) -> std::uint64_t {
    if (seed)
      return *seed;
    const std::int64_t s = c.get_int("seed", static_cast<std::int64_t>(fallback));
    if (s < 0)
      c.fail("seed", "'seed' must be nonnegative");
    return static_cast<std::uint64_t>(s);
  };
  auto count = [&](const std::string &key, Index fallback) -> Index {
    const std::int64_t v = c.get_int(key, fallback);
    if (v < 1)
      c.fail(key, "'" + key + "' must be a positive integer");
    return static_cast<Index>(v);
  };

  try {
    if (inst.kind == "fig1") {
      const QuadraticBoxProblem q = make_fig1_problem();
      inst.problem = q.objective();
      inst.x0 = q.x0;
    } else if (inst.kind == "mlr") {
      MlrOptions o;
      o.n_classes = count("problem.n_classes", o.n_classes);
      o.n_f = count("problem.n_f", o.n_f);
      o.m_f = count("problem.m_f", o.m_f);
      o.n_samples = count("problem.n_samples", o.n_samples);
      o.bound = c.get_double("problem.bound", o.bound);
      o.class_separation =
          c.get_double("problem.class_separation", o.class_separation);
      o.input_scale = c.get_double("problem.input_scale", o.input_scale);
      o.seed = seed_or(o.seed);
      inst.problem = make_synthetic_mlr(o).objective();
      inst.x0 = Vector::Zero(inst.problem.n);
    } else if (inst.kind == "ct") {
      CtOptions o;
      o.image_side = count("problem.image_side", o.image_side);
      o.n_materials = count("problem.n_materials", o.n_materials);
      o.n_energies = count("problem.n_energies", o.n_energies);
      o.n_bins = count("problem.n_bins", o.n_bins);
      o.n_angles = count("problem.n_angles", o.n_angles);
      o.gamma1 = c.get_double("problem.gamma1", o.gamma1);
      o.gamma2 = c.get_double("problem.gamma2", o.gamma2);
      o.upper_bound = c.get_double("problem.upper_bound", o.upper_bound);
      o.noise = c.get_double("problem.noise", o.noise);
      o.intensity = c.get_double("problem.intensity", o.intensity);
      o.seed = seed_or(o.seed);
      inst.problem = make_toy_ct(o).objective();
      inst.x0 = Vector::Constant(inst.problem.n, 0.1);
    } else if (inst.kind == "random_qp") {
      const Index n = count("problem.n", 30);
      const double cond = c.get_double("problem.cond", 100);
      if (!(cond >= 1))
        c.fail("problem.cond", "'problem.cond' must be >= 1");
      std::mt19937_64 rng(seed_or(1));
      std::normal_distribution<double> normal;
      Eigen::HouseholderQR<Matrix> qr(Matrix::NullaryExpr(
          n, n, [&](Index, Index) { return normal(rng); }));
      const Matrix q = qr.householderQ();
      Vector ev(n);
      for (Index i = 0; i < n; ++i)
        ev[i] = std::pow(cond, n > 1 ? static_cast<double>(i) / (n - 1) : 0.0);
      QuadraticBoxProblem qp;
      qp.hessian = q * ev.asDiagonal() * q.transpose();
      qp.hessian = (0.5 * (qp.hessian + qp.hessian.transpose())).eval();
      qp.b = 3.0 * Vector::NullaryExpr(n, [&](Index) { return normal(rng); });
      qp.bounds = BoxBounds::uniform(n, -1, 1);
      inst.problem = qp.objective();
      inst.x0 = Vector::Zero(n);
    } else if (inst.kind == "quadratic") {
      QuadraticBoxProblem qp;
      qp.hessian = read_matrix_file(c.get_string("problem.hessian_file"));
      if (qp.hessian.rows() != qp.hessian.cols())
        throw IoError("'problem.hessian_file' must hold a square matrix");
      const Index n = qp.hessian.rows();
      qp.b = read_vector_file(c.get_string("problem.b_file"), n);
      Vector lo = Vector::Constant(n, c.get_double("problem.lower", -kInf));
      Vector hi = Vector::Constant(n, c.get_double("problem.upper", kInf));
      if (c.has("problem.lower_file"))
        lo = read_vector_file(c.get_string("problem.lower_file"), n);
      if (c.has("problem.upper_file"))
        hi = read_vector_file(c.get_string("problem.upper_file"), n);
      qp.bounds = BoxBounds(lo, hi);
      inst.problem = qp.objective();
      inst.x0 = qp.bounds.clamp(Vector::Zero(n));
    } else {
      c.fail("problem", "unknown problem '" + inst.kind
                            + "' (expected fig1, mlr, ct, random_qp or quadratic)");
    }
  } catch (const std::invalid_argument &e) {
    c.fail("problem", e.what());
  }

  if (c.has("problem.x0_file")) {
    inst.x0 = read_vector_file(c.get_string("problem.x0_file"), inst.problem.n);
    if (!inst.problem.bounds.contains(inst.x0))
      c.fail("problem.x0_file", "starting point is not feasible");
  } else if (c.has("problem.x0")) {
    inst.x0 = inst.problem.bounds.clamp(
        Vector::Constant(inst.problem.n, c.get_double("problem.x0")));
  }
  return inst;
}

inline std::optional<Method> parse_method(const std::string &s) {
  if (s == "pnkhb")
    return Method::pnkhb;
  if (s == "projected_gradient" || s == "pg")
    return Method::projected_gradient;
  if (s == "pncg")
    return Method::pncg;
  return std::nullopt;
}

inline std::optional<ActiveSetMode> parse_active_set(const std::string &s) {
  if (s == "none")
    return ActiveSetMode::none;
  if (s == "boundary")
    return ActiveSetMode::boundary;
  if (s == "augmented")
    return ActiveSetMode::augmented;
  return std::nullopt;
}

struct SolverSpec {
  std::string label;
  Method method = Method::pnkhb;
  SolverConfig cfg;
};

/// Reads solver settings; each key is looked up under `prefix` first and
/// then under `solver.`.
inline SolverSpec read_solver(const Config &c, const std::string &prefix,
                              std::string label) {
  auto key = [&](const std::string &k) {
    return c.has(prefix + k) ? prefix + k : "solver." + k;
  };
  SolverSpec s;
  SolverConfig &cfg = s.cfg;
  const std::string mk = key("method");
  const std::string method = c.get_string(mk, label);
  auto m = parse_method(method);
  if (!m)
    c.fail(mk, "unknown method '" + method
                   + "' (expected pnkhb, projected_gradient or pncg)");
  s.method = *m;
  s.label = std::move(label);

  auto count = [&](const std::string &k, int fallback) {
    const std::string kk = key(k);
    const std::int64_t v = c.get_int(kk, fallback);
    if (v < 1 || v > 100000000)
      c.fail(kk, "'" + kk + "' must be a positive integer");
    return static_cast<int>(v);
  };
  cfg.max_outer = count("max_outer", cfg.max_outer);
  cfg.max_linesearch = count("max_linesearch", cfg.max_linesearch);
  cfg.max_rank = count("max_rank", static_cast<int>(cfg.max_rank));
  cfg.alpha = c.get_double(key("alpha"), cfg.alpha);
  cfg.xtol = c.get_double(key("xtol"), cfg.xtol);
  cfg.gtol = c.get_double(key("gtol"), cfg.gtol);
  cfg.shift = c.get_double(key("shift"), cfg.shift);
  cfg.breakdown_tol = c.get_double(key("breakdown_tol"), cfg.breakdown_tol);
  const std::string ak = key("active_set");
  const std::string as = c.get_string(ak, "none");
  auto mode = parse_active_set(as);
  if (!mode)
    c.fail(ak, "unknown active_set '" + as + "' (expected none, boundary or augmented)");
  cfg.active_set = *mode;
  if (c.has(key("epsilon")))
    cfg.epsilon = c.get_double(key("epsilon"));
  cfg.strict_mu_reset = c.get_bool(key("strict_mu_reset"), cfg.strict_mu_reset);
  cfg.gradient_fallback =
      c.get_bool(key("gradient_fallback"), cfg.gradient_fallback);
  cfg.ipm.sigma = c.get_double(key("ipm.sigma"), cfg.ipm.sigma);
  cfg.ipm.tau = c.get_double(key("ipm.tau"), cfg.ipm.tau);
  cfg.ipm.tol = c.get_double(key("ipm.tol"), cfg.ipm.tol);
  cfg.ipm.max_iter = count("ipm.max_iter", cfg.ipm.max_iter);
  cfg.ipm.warm_start = c.get_bool(key("ipm.warm_start"), cfg.ipm.warm_start);
  cfg.ipm.polish = c.get_bool(key("ipm.polish"), cfg.ipm.polish);
  try {
    cfg.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(c.source(), 0, std::string("solver '") + s.label + "': " + e.what());
  }
  return s;
}

/// Solver list: one spec from `solver.*` for run, or one per label in
/// `compare` for compare mode.
inline std::vector<SolverSpec> read_solvers(const Config &c, bool compare) {
  std::vector<SolverSpec> out;
  if (!compare) {
    const std::string method = c.get_string("solver.method", "pnkhb");
    out.push_back(read_solver(c, "solver.", c.get_string("solver.label", method)));
    for (const auto &[k, e]: c.entries())
      if (k.rfind("compare", 0) == 0)
        c.mark_used(k);
    return out;
  }
  const std::vector<std::string> labels = c.get_list("compare");
  for (const std::string &label: labels) {
    const bool ok = std::all_of(label.begin(), label.end(), [](char ch) {
      return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
    });
    if (!ok)
      c.fail("compare", "invalid solver label '" + label + "'");
    for (const SolverSpec &s: out)
      if (s.label == label)
        c.fail("compare", "duplicate solver label '" + label + "'");
    out.push_back(read_solver(c, "compare." + label + ".", label));
  }
  c.mark_used("solver.label");
  return out;
}

inline const char *kCsvHeader =
    "iter,f,rel_f_reduction,proj_grad_norm,step_size,ls_trials,n_projections,"
    "ipm_iters_total,active_fraction,operator_applies,elapsed_seconds";

/// One row per outer iteration; row 0 is the starting point. rel_f_reduction
/// is f_k / f_0.
inline void write_history_csv(std::ostream &out, const SolverResult &r) {
  const double f0 = r.history.f_initial;
  auto rel = [f0](double f) { return f0 != 0 ? f / f0 : 0.0; };
  out << kCsvHeader << '\n';
  out << "0," << fmt(f0) << ",1," << fmt(r.history.proj_grad_norm_initial)
      << ",0,0,0,0,0,2,0\n";
  for (const IterationRecord &rec: r.history.records)
    out << rec.k + 1 << ',' << fmt(rec.f) << ',' << fmt(rel(rec.f)) << ','
        << fmt(rec.proj_grad_norm) << ',' << fmt(rec.step_size) << ','
        << rec.ls_trials << ',' << rec.n_projections << ',' << rec.ipm_iters_total
        << ',' << fmt(rec.active_fraction) << ',' << rec.operator_applies << ','
        << fmt(rec.elapsed_seconds) << '\n';
}

struct RunTotals {
  std::size_t iterations = 0;
  std::int64_t projections = 0;
  std::int64_t ipm_iterations = 0;
  double elapsed = 0;
};

inline RunTotals totals(const SolverResult &r) {
  RunTotals t;
  t.iterations = r.history.iterations();
  for (const IterationRecord &rec: r.history.records) {
    t.projections += rec.n_projections;
    t.ipm_iterations += rec.ipm_iters_total;
    t.elapsed = rec.elapsed_seconds;
  }
  return t;
}

inline std::string summary_line(const SolverSpec &s, const SolverResult &r) {
  const RunTotals t = totals(r);
  std::ostringstream os;
  os << s.label << ": method=" << to_string(s.method)
     << " active_set=" << to_string(s.cfg.active_set)
     << " status=" << to_string(r.status) << " iterations=" << t.iterations
     << " f=" << fmt(r.f) << " proj_grad_norm=" << fmt(r.proj_grad_norm)
     << " operator_applies=" << r.operator_applies
     << " projections=" << t.projections << " ipm_iters=" << t.ipm_iterations;
  if (r.x.size() <= 8) {
    os << " x=[";
    for (Index i = 0; i < r.x.size(); ++i)
      os << (i ? "," : "") << fmt(r.x[i]);
    os << ']';
  }
  return os.str();
}

enum class Mode { run, compare, check };

struct Options {
  Mode mode = Mode::run;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool quiet = false;
};

namespace internal {
  inline std::ofstream open_output(const std::filesystem::path &p) {
    std::ofstream f(p, std::ios::binary);
    if (!f)
      throw IoError("cannot write '" + p.string() + "'");
    return f;
  }

  inline int check_problem(const ProblemInstance &inst, std::uint64_t seed,
                           std::ostream &out, bool quiet) {
    std::mt19937_64 rng(seed);
    const BoxBounds &b = inst.problem.bounds;
    double worst = 0, worst_sym = 0;
    for (int k = 0; k < 5; ++k) {
      Vector x(inst.problem.n);
      for (Index i = 0; i < x.size(); ++i) {
        const double lo = std::isfinite(b.lower(i)) ? b.lower(i) : -1.0;
        const double hi = std::isfinite(b.upper(i)) ? b.upper(i) : lo + 2.0;
        x[i] = std::uniform_real_distribution<double>(lo, std::max(lo, hi))(rng);
      }
      x = b.clamp(x);
      GradientCheckOptions go;
      go.seed = seed + static_cast<std::uint64_t>(k);
      worst = std::max(worst, check_gradient(inst.problem, x, go));
      worst_sym = std::max(worst_sym,
                           symmetry_defect(inst.problem.hessian_at(x), 20,
                                           seed + static_cast<std::uint64_t>(k)));
    }
    const bool ok = worst <= 1e-5 && worst_sym <= 1e-10;
    if (!quiet)
      out << "check " << inst.kind << ": n=" << inst.problem.n
          << " gradient_error=" << fmt(worst)
          << " symmetry_defect=" << fmt(worst_sym) << (ok ? " ok" : " FAILED")
          << '\n';
    return ok ? kExitOk : kExitFailure;
  }
} // namespace internal

/// Executes one CLI invocation and returns the process exit code.
inline int run_cli(const Options &opt, std::ostream &out, std::ostream &err) {
  try {
    std::ifstream in(opt.config_path);
    if (!in)
      throw IoError("cannot open config '" + opt.config_path + "'");
    Config c = Config::parse(in, opt.config_path);
    const ProblemInstance inst = build_problem(c, opt.seed);
    const std::vector<SolverSpec> specs = read_solvers(c, opt.mode == Mode::compare);
    const auto cfg_seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    const std::uint64_t seed = opt.seed ? *opt.seed : cfg_seed;
    const std::string cfg_dir = c.get_string("output.dir", ".");
    const std::filesystem::path dir = opt.out_dir ? *opt.out_dir : cfg_dir;
    const std::string prefix = c.get_string("output.prefix", "pnkhb");
    c.check_all_used();

    if (opt.mode == Mode::check)
      return internal::check_problem(inst, seed, out, opt.quiet);

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
      throw IoError("cannot create output directory '" + dir.string()
                    + "': " + ec.message());

    std::vector<SolverResult> results;
    for (const SolverSpec &s: specs) {
      SolverResult r = solve(s.method, inst.problem, inst.x0, s.cfg);
      auto f = internal::open_output(dir / (prefix + "_" + s.label + ".csv"));
      write_history_csv(f, r);
      if (!f)
        throw IoError("write failed for solver '" + s.label + "'");
      if (!opt.quiet)
        out << summary_line(s, r) << '\n';
      results.push_back(std::move(r));
    }

    if (opt.mode == Mode::compare) {
      auto f = internal::open_output(dir / (prefix + "_summary.csv"));
      f << "label,method,active_set,status,iterations,f,proj_grad_norm,"
           "operator_applies,projections,ipm_iters\n";
      for (std::size_t i = 0; i < specs.size(); ++i) {
        const RunTotals t = totals(results[i]);
        f << specs[i].label << ',' << to_string(specs[i].method) << ','
          << to_string(specs[i].cfg.active_set) << ','
          << to_string(results[i].status) << ',' << t.iterations << ','
          << fmt(results[i].f) << ',' << fmt(results[i].proj_grad_norm) << ','
          << results[i].operator_applies << ',' << t.projections << ','
          << t.ipm_iterations << '\n';
      }
      if (!f)
        throw IoError("write failed for summary table");
    }
    return kExitOk;
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError &e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

} // namespace pnkhb::cli

#endif // PNKHB_CLI_HPP
