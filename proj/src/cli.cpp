#include "dmk/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dmk/expression.hpp"
#include "dmk/harness.hpp"

namespace dmk::cli {

namespace {

constexpr double kEquivalenceTol = 1e-8;
constexpr double kMinHSlack = 1e-6;

class UsageError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// One key=value line; strings containing spaces or quotes are quoted.
class Record {
 public:
  Record& kv(const std::string& key, const std::string& v) {
    sep();
    s_ << key << '=';
    if (v.empty() || v.find_first_of(" \t\"=") != std::string::npos) {
      s_ << '"';
      for (char c : v) {
        if (c == '"' || c == '\\') s_ << '\\';
        s_ << c;
      }
      s_ << '"';
    } else {
      s_ << v;
    }
    return *this;
  }
  Record& kv(const std::string& key, const char* v) { return kv(key, std::string(v)); }
  Record& kv(const std::string& key, double v) {
    sep();
    s_ << key << '=' << format_double(v);
    return *this;
  }
  Record& kv(const std::string& key, int v) {
    sep();
    s_ << key << '=' << v;
    return *this;
  }
  Record& kv(const std::string& key, std::uint64_t v) {
    sep();
    s_ << key << '=' << v;
    return *this;
  }
  Record& flag(const std::string& key, bool v) { return kv(key, v ? 1 : 0); }
  std::string str() const { return s_.str() + "\n"; }

 private:
  void sep() {
    if (!first_) s_ << ' ';
    first_ = false;
  }
  std::ostringstream s_;
  bool first_ = true;
};

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Stream routing; every file has a single writer.
class Outputs {
 public:
  Outputs(const RunConfig& c, std::ostream& out, std::ostream& err) : records_(&out), summary_(&err), err_(&err) {
    if (!c.records.empty()) {
      rec_file_.open(c.records);
      if (!rec_file_) throw UsageError("cannot write records file " + c.records);
      records_ = &rec_file_;
    }
    if (!c.summary.empty()) {
      sum_file_.open(c.summary);
      if (!sum_file_) throw UsageError("cannot write summary file " + c.summary);
      summary_ = &sum_file_;
    }
    if (!c.plot.empty()) {
      plot_file_.open(c.plot);
      if (!plot_file_) throw UsageError("cannot write plot file " + c.plot);
    }
    *records_ << "# dmk " << c.command << " time=" << utc_timestamp() << "\n";
  }
  std::ostream& records() { return *records_; }
  std::ostream& summary() { return *summary_; }
  std::ostream* plot() { return plot_file_.is_open() ? &plot_file_ : nullptr; }
  void error(const std::string& record) {
    *err_ << record;
    if (records_ != err_) *records_ << record;
  }

 private:
  std::ostream* records_;
  std::ostream* summary_;
  std::ostream* err_;
  std::ofstream rec_file_, sum_file_, plot_file_;
};

int default_res(int n) { return n == 2 ? 256 : 24; }

GridPtr grid_for(const RunConfig& c) {
  if (c.n != 2 && c.n != 3) throw UsageError("n must be 2 or 3");
  return build_grid(c.n, c.res > 0 ? c.res : default_res(c.n));
}

ScalarField positive_field(const std::string& text, const GridPtr& g, const char* what) {
  const ScalarField v = parse_expression(text).sample(g);
  if (!(v.min() > 0.0)) throw UsageError(std::string(what) + " must be positive on the grid");
  return v;
}

ConvexBody load(const std::string& path, const GridPtr& g) {
  ConvexBody K = [&] {
    try {
      return load_body(path);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  }();
  if (K.dimension() != g->dimension() || K.grid()->resolution() != g->resolution())
    throw UsageError("body file " + path + " does not match --n/--res");
  // Rebuild on the shared grid so pairs compare node by node.
  return ConvexBody::from_support(ScalarField(g, K.support().vector()));
}

void save(const std::string& path, const ConvexBody& K) {
  try {
    save_body(path, K);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::uint64_t> seeds_or_default(const RunConfig& c) {
  if (!c.seeds.empty()) return c.seeds;
  std::vector<std::uint64_t> s;
  for (std::uint64_t i = 1; i <= 10; ++i) s.push_back(i);
  return s;
}

void emit(Outputs& o, const InequalityReport& r) {
  write_records(o.records(), r);
  write_summary(o.summary(), r);
  if (auto* p = o.plot()) write_plot(*p, r);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_solve(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  const ProblemParams P = ProblemParams::make(c.n, c.p, c.q);
  P.validate_for_solver();
  SolverConfig sc = c.solver;
  if (!c.init.empty()) sc.initialization = positive_field(c.init, g, "--init");
  const ScalarField f = positive_field(c.f, g, "--f");
  const SolveResult res = solve_lp_dual_minkowski(f, P, sc);
  save(c.body_out, res.body);
  int iters = 0;
  for (int k : res.report.iterations) iters += k;
  double min_margin = std::numeric_limits<double>::infinity();
  for (double m : res.report.convexity_margin) min_margin = std::min(min_margin, m);
  o.records() << Record()
                     .kv("solve", "lp_dual_minkowski")
                     .kv("n", c.n)
                     .kv("p", c.p)
                     .kv("q", c.q)
                     .kv("res", g->resolution())
                     .flag("converged", res.report.converged)
                     .kv("final_residual", res.report.final_residual)
                     .kv("density_error", res.report.density_error)
                     .kv("newton_iterations", iters)
                     .kv("steps", static_cast<int>(res.report.iterations.size()))
                     .kv("min_convexity_margin", min_margin)
                     .flag("ill_conditioned", res.report.ill_conditioned)
                     .kv("h_min", res.body.support().min())
                     .kv("h_max", res.body.support().max())
                     .kv("body", c.body_out)
                     .kv("message", res.report.message.empty() ? "ok" : res.report.message)
                     .str();
  o.summary() << "solve: " << (res.report.converged ? "converged" : "not converged") << ", residual "
              << format_double(res.report.final_residual) << ", " << iters << " Newton iterations, "
              << format_double(res.report.wall_seconds) << " s\n";
  return res.report.converged ? kOk : kSolverFailure;
}

int cmd_check_bm(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  InequalityReport r;
  if (!c.body_k.empty() || !c.body_l.empty()) {
    if (c.body_k.empty() || c.body_l.empty()) throw UsageError("--k and --l must be given together");
    const ConvexBody K = load(c.body_k, g), L = load(c.body_l, g);
    r = check_bm(K, L, c.p, c.q, c.lambdas);
    const auto K2 = refine(K), L2 = refine(L);
    for (const auto& inst : r.instances)
      if (inst.margin < -kMarginTol && K2 && L2 &&
          confirm_violation(inst.margin, check_bm(*K2, *L2, c.p, c.q, {inst.lambda}).min_margin))
        ++r.confirmed_violations;
  } else {
    r = bm_batch(g, c.p, c.q, seeds_or_default(c), c.lambdas, c.threads);
  }
  emit(o, r);
  return r.confirmed_violations > 0 ? kViolation : kOk;
}

int cmd_check_mink(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  InequalityReport r;
  if (!c.body_k.empty() || !c.body_l.empty()) {
    if (c.body_k.empty() || c.body_l.empty()) throw UsageError("--k and --l must be given together");
    const ConvexBody K = load(c.body_k, g), L = load(c.body_l, g);
    r = check_minkowski(K, L, c.p, c.q);
    const auto K2 = refine(K), L2 = refine(L);
    if (r.min_margin < -kMarginTol && K2 && L2 &&
        confirm_violation(r.min_margin, check_minkowski(*K2, *L2, c.p, c.q).min_margin))
      ++r.confirmed_violations;
  } else {
    r = minkowski_batch(g, c.p, c.q, seeds_or_default(c), c.threads);
  }
  emit(o, r);
  return r.confirmed_violations > 0 ? kViolation : kOk;
}

int cmd_equiv(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  struct Pair {
    ConvexBody K, L;
    std::uint64_t seed;
  };
  std::vector<Pair> pairs;
  if (!c.body_k.empty() || !c.body_l.empty()) {
    if (c.body_k.empty() || c.body_l.empty()) throw UsageError("--k and --l must be given together");
    pairs.push_back({load(c.body_k, g), load(c.body_l, g), 0});
  } else {
    for (std::uint64_t s : seeds_or_default(c))
      pairs.push_back({near_ball_body(g, 2 * s, 0.05), corpus_body(g, 2 * s + 1), s});
  }
  std::function<EquivalenceReport(std::size_t)> task = [&](std::size_t i) {
    return equivalence_probe(pairs[i].K, pairs[i].L, c.p, c.q, pairs[i].seed);
  };
  const auto probes = run_pool<EquivalenceReport>(pairs.size(), c.threads, task);
  InequalityReport all;
  all.id = Inequality::kEquivalence;
  all.n = c.n;
  all.p = c.p;
  all.q = c.q;
  double worst_rel = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& e = probes[i];
    all.merge(e.report);
    worst_rel = std::max(worst_rel, e.fprime_relative_error);
    const double worst = std::min(e.concavity_margin, e.derivative_gap);
    if (worst < -kEquivalenceTol) {
      // Re-check on the 2× grid; only a persistent negative value counts.
      const auto K2 = refine(pairs[i].K), L2 = refine(pairs[i].L);
      if (K2 && L2) {
        const auto e2 = equivalence_probe(*K2, *L2, c.p, c.q, pairs[i].seed);
        if (std::min(e2.concavity_margin, e2.derivative_gap) < -kEquivalenceTol &&
            worst < -10.0 * std::abs(std::min(e2.concavity_margin, e2.derivative_gap) - worst))
          ++all.confirmed_violations;
      }
    }
    o.records() << Record()
                       .kv("probe", "equivalence")
                       .kv("seed", e.report.instances.front().seed)
                       .kv("concavity_margin", e.concavity_margin)
                       .kv("fprime_analytic", e.fprime_analytic)
                       .kv("fprime_numeric", e.fprime_numeric)
                       .kv("fprime_relative_error", e.fprime_relative_error)
                       .kv("derivative_gap", e.derivative_gap)
                       .str();
  }
  all.sort();
  emit(o, all);
  o.summary() << std::left << std::setw(22) << "max f'(0) rel. error" << format_double(worst_rel) << "\n";
  return all.confirmed_violations > 0 ? kViolation : kOk;
}

int cmd_uniq(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  const ProblemParams P = ProblemParams::make(c.n, c.p, c.q);
  const ScalarField f = positive_field(c.f, g, "--f");
  const UniquenessReport r = uniqueness_probe(f, P, c.inits, c.solver, c.seed);
  for (std::size_t i = 0; i < r.solves.size(); ++i) {
    int iters = 0;
    for (int k : r.solves[i].iterations) iters += k;
    o.records() << Record()
                       .kv("uniq", r.initializations[i])
                       .kv("n", c.n)
                       .kv("p", c.p)
                       .kv("q", c.q)
                       .flag("converged", r.solves[i].converged)
                       .kv("final_residual", r.solves[i].final_residual)
                       .kv("newton_iterations", iters)
                       .str();
  }
  o.records() << Record()
                     .kv("uniq", "summary")
                     .kv("max_distance", r.max_distance)
                     .flag("unique", r.unique)
                     .flag("inconclusive", r.inconclusive)
                     .str();
  o.summary() << std::left << std::setw(22) << "initializations" << r.solves.size() << "\n"
              << std::setw(22) << "max distance" << format_double(r.max_distance) << "\n"
              << std::setw(22) << "unique" << (r.unique ? "yes" : "no") << "\n"
              << std::setw(22) << "inconclusive" << (r.inconclusive ? "yes" : "no") << "\n";
  if (r.inconclusive) return kSolverFailure;
  return r.unique ? kOk : kViolation;
}

int cmd_audit(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  const ProblemParams P = ProblemParams::make(c.n, c.p, c.q);
  const AuditReport r = c0_audit(g, c.lambda, P, c.instances, c.seed, c.solver, c.threads);
  write_records(o.records(), r);
  write_summary(o.summary(), r);
  const double bound = std::pow(c.lambda, 1.0 / (c.q - c.p)) + kMinHSlack;
  int above = 0;
  for (const auto& a : r.instances)
    if (a.converged && a.min_h > bound) ++above;
  o.summary() << std::left << std::setw(22) << "min h above bound" << above << "\n";
  if (above > 0) return kViolation;
  return r.failures > 0 ? kSolverFailure : kOk;
}

int cmd_search(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  const SearchResult r = counterexample_search(g, c.p, c.q, c.budget, c.seed, c.near_ball);
  write_records(o.records(), r.report);
  if (auto* p = o.plot()) write_plot(*p, r.report);
  std::string wk, wl;
  if (r.witness_k && r.witness_l) {
    std::filesystem::create_directories(c.out_dir);
    wk = (std::filesystem::path(c.out_dir) / "witness_K.body").string();
    wl = (std::filesystem::path(c.out_dir) / "witness_L.body").string();
    save(wk, *r.witness_k);
    save(wl, *r.witness_l);
  }
  o.records() << Record()
                     .kv("search", "summary")
                     .kv("worst_margin", r.worst_margin)
                     .kv("worst_trial", r.worst_seed)
                     .kv("worst_lambda", r.worst_lambda)
                     .kv("refined_margin", r.refined_margin)
                     .kv("discretization_error", r.discretization_error)
                     .flag("violation_confirmed", r.violation_confirmed)
                     .kv("witness_k", wk.empty() ? "none" : wk)
                     .kv("witness_l", wl.empty() ? "none" : wl)
                     .str();
  write_summary(o.summary(), r.report);
  o.summary() << std::left << std::setw(22) << "refined margin" << format_double(r.refined_margin) << "\n"
              << std::setw(22) << "violation confirmed" << (r.violation_confirmed ? "yes" : "no") << "\n";
  return r.violation_confirmed ? kViolation : kOk;
}

int cmd_gen(const RunConfig& c, Outputs& o) {
  const GridPtr g = grid_for(c);
  std::filesystem::create_directories(c.out_dir);
  auto emit_body = [&](const ConvexBody& K, const std::string& label, std::uint64_t seed) {
    const std::string path = (std::filesystem::path(c.out_dir) / (label + ".body")).string();
    save(path, K);
    o.records() << Record()
                       .kv("gen", c.kind)
                       .kv("seed", seed)
                       .kv("path", path)
                       .flag("smooth", K.smooth())
                       .flag("symmetric", K.symmetric())
                       .kv("h_min", K.support().min())
                       .kv("h_max", K.support().max())
                       .kv("volume", volume(K))
                       .str();
  };
  if (c.kind == "expression") {
    if (c.h.empty()) throw UsageError("gen --kind expression needs --support");
    const ScalarField h = positive_field(c.h, g, "--support");
    emit_body(ConvexBody::from_support(h), "body", 0);
    return kOk;
  }
  const auto seeds = seeds_or_default(c);
  for (std::uint64_t s : seeds) {
    if (c.kind == "corpus") {
      emit_body(corpus_body(g, s), "body_" + std::to_string(s), s);
    } else if (c.kind == "near-ball") {
      emit_body(near_ball_body(g, s, c.amplitude), "body_" + std::to_string(s), s);
    } else if (c.kind == "symmetric") {
      emit_body(random_symmetric_body(g, s, c.amplitude, c.band), "body_" + std::to_string(s), s);
    } else if (c.kind == "random") {
      emit_body(random_body(g, s, c.amplitude, c.band), "body_" + std::to_string(s), s);
    } else {
      throw UsageError("unknown --kind '" + c.kind + "' (corpus, near-ball, symmetric, random, expression)");
    }
  }
  o.summary() << "gen: " << seeds.size() << " bodies written to " << c.out_dir << "\n";
  return kOk;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto number = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("bad seed '" + s + "' in '" + text + "'");
    return std::stoull(s);
  };
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(item));
      continue;
    }
    const std::uint64_t a = number(item.substr(0, dots)), b = number(item.substr(dots + 2));
    if (b < a) throw std::invalid_argument("empty seed range '" + item + "'");
    if (b - a > 10000000) throw std::invalid_argument("seed range too large '" + item + "'");
    for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("no seeds in '" + text + "'");
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw std::invalid_argument("bad number '" + item + "' in '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list '" + text + "'");
  return out;
}

std::vector<std::string> apply_config(const std::vector<std::string>& args, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config file " + path);
  std::vector<std::string> out = args;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
    const std::string flag = "--" + key;
    bool present = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
    if (present) continue;
    if (value == "true" || value == "false") {
      if (value == "true") out.push_back(flag);
      continue;
    }
    out.push_back(flag);
    out.push_back(value);
  }
  return out;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Outputs> o;
  auto fail = [&](const char* kind, const std::string& msg, int code) {
    const std::string r = Record().kv("status", "error").kv("kind", kind).kv("exit", code).kv("message", msg).str();
    if (o) {
      o->error(r);
    } else {
      err << r;
    }
    return code;
  };
  try {
    o = std::make_unique<Outputs>(config, out, err);
    const std::string& cmd = config.command;
    if (cmd == "solve") return cmd_solve(config, *o);
    if (cmd == "check-bm") return cmd_check_bm(config, *o);
    if (cmd == "check-mink") return cmd_check_mink(config, *o);
    if (cmd == "equiv") return cmd_equiv(config, *o);
    if (cmd == "uniq") return cmd_uniq(config, *o);
    if (cmd == "audit-c0") return cmd_audit(config, *o);
    if (cmd == "search") return cmd_search(config, *o);
    if (cmd == "gen") return cmd_gen(config, *o);
    return fail("usage", "unknown command '" + cmd + "'", kUsage);
  } catch (const ExpressionError& e) {
    return fail("expression", e.what(), kUsage);
  } catch (const std::invalid_argument& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const std::exception& e) {
    return fail("failure", e.what(), kSolverFailure);
  }
}

int main(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::string seeds, lambdas;
  CLI::App app{"L_p dual Minkowski problem: solver and inequality harness", "dmk"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  auto common = [&](CLI::App* s) {
    s->add_option("--n", c.n, "Ambient dimension (2 or 3)");
    s->add_option("--p", c.p, "Exponent p");
    s->add_option("--q", c.q, "Exponent q");
    s->add_option("--res", c.res, "Nodes on S^1 or harmonic band on S^2 (default 256 / 24)");
    s->add_option("--records", c.records, "Records file (default stdout)");
    s->add_option("--summary", c.summary, "Summary file (default stderr)");
    s->add_option("--threads", c.threads, "Worker threads");
    s->add_option("--config", "Config file of key = value lines (flags win)");
  };
  auto solver_opts = [&](CLI::App* s) {
    s->add_option("--tol", c.solver.residual_tol, "Residual tolerance");
    s->add_option("--max-iters", c.solver.max_newton_iters, "Newton iterations per continuation step");
    s->add_option("--steps", c.solver.continuity_steps, "Continuation steps");
  };
  auto pairs = [&](CLI::App* s) {
    s->add_option("--seeds", seeds, "Corpus seeds, e.g. 1..100 or 1,4,9 (default 1..10)");
    s->add_option("--k", c.body_k, "Body file K (single-pair check)");
    s->add_option("--l", c.body_l, "Body file L (single-pair check)");
  };

  auto* solve = app.add_subcommand("solve", "Solve the L_p dual Minkowski equation for f");
  common(solve);
  solver_opts(solve);
  solve->add_option("--f", c.f, "Density expression in theta or x,y,z");
  solve->add_option("--init", c.init, "Initial support function expression");
  solve->add_option("--body", c.body_out, "Output body file");

  auto* bm = app.add_subcommand("check-bm", "Check the L_p dual Brunn-Minkowski inequality");
  common(bm);
  pairs(bm);
  bm->add_option("--lambdas", lambdas, "Comma-separated lambdas (default 0.25,0.5,0.75)");
  bm->add_option("--plot", c.plot, "Plot data file (lambda, margin)");

  auto* mink = app.add_subcommand("check-mink", "Check the L_p dual Minkowski inequality");
  common(mink);
  pairs(mink);

  auto* equiv = app.add_subcommand("equiv", "Probe concavity of f(lambda) and f'(0) >= f(1) - f(0)");
  common(equiv);
  pairs(equiv);
  equiv->add_option("--plot", c.plot, "Plot data file (lambda, margin)");

  auto* uniq = app.add_subcommand("uniq", "Multistart uniqueness probe near the ball");
  common(uniq);
  solver_opts(uniq);
  uniq->add_option("--f", c.f, "Density expression");
  uniq->add_option("--inits", c.inits, "Number of initializations");
  uniq->add_option("--seed", c.seed, "Seed of the random initializations");

  auto* audit = app.add_subcommand("audit-c0", "Empirical a priori bounds for lambda-pinched data");
  common(audit);
  solver_opts(audit);
  audit->add_option("--lambda", c.lambda, "Pinching constant lambda >= 1");
  audit->add_option("--instances", c.instances, "Number of densities");
  audit->add_option("--seed", c.seed, "First seed");

  auto* search = app.add_subcommand("search", "Search for Brunn-Minkowski counterexamples");
  common(search);
  search->add_option("--budget", c.budget, "Number of margin evaluations");
  search->add_option("--seed", c.seed, "Search seed");
  search->add_flag("--near-ball", c.near_ball, "Keep bodies within 0.05 of the unit ball");
  search->add_option("--out-dir", c.out_dir, "Directory for the witness bodies");
  search->add_option("--plot", c.plot, "Plot data file (lambda, margin)");

  auto* gen = app.add_subcommand("gen", "Write corpus bodies to files");
  common(gen);
  gen->add_option("--seeds", seeds, "Seeds (default 1..10)");
  gen->add_option("--kind", c.kind, "corpus, near-ball, symmetric, random or expression");
  gen->add_option("--amplitude", c.amplitude, "Perturbation amplitude");
  gen->add_option("--band", c.band, "Highest perturbed degree");
  gen->add_option("--support", c.h, "Support function expression (--kind expression)");
  gen->add_option("--out-dir", c.out_dir, "Output directory");

  std::vector<std::string> args = raw_args;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        args = apply_config(args, args[i + 1]);
        break;
      }
      if (args[i].rfind("--config=", 0) == 0) {
        args = apply_config(args, args[i].substr(9));
        break;
      }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (!seeds.empty()) c.seeds = parse_seeds(seeds);
    if (!lambdas.empty()) c.lambdas = parse_list(lambdas);
    c.solver.validate();
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << Record().kv("status", "error").kv("kind", "usage").kv("exit", static_cast<int>(kUsage)).kv("message", e.what()).str();
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << Record().kv("status", "error").kv("kind", "usage").kv("exit", static_cast<int>(kUsage)).kv("message", e.what()).str();
    return kUsage;
  }
  for (auto* s : app.get_subcommands()) c.command = s->get_name();
  return run(c, out, err);
}

}  // namespace dmk::cli
