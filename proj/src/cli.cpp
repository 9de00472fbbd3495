#include "fracsing/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "fracsing/bifurcation.hpp"
#include "fracsing/error.hpp"
#include "fracsing/persistence.hpp"
#include "fracsing/validate.hpp"

namespace fracsing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  RunConfig cfg;
  std::string cache;
  fs::path dir;
  RunManifest manifest;

  void save_json(const std::string& name, const json& j) {
    const fs::path p = dir / name;
    write_atomic(p, j.dump(2) + "\n");
    manifest.files.push_back(p);
  }
  void save_text(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_atomic(p, text);
    manifest.files.push_back(p);
  }
  void add(const std::vector<fs::path>& files) {
    manifest.files.insert(manifest.files.end(), files.begin(), files.end());
  }
};

StiffnessSystem load_system(const Context& ctx) {
  const Grid grid = ctx.cfg.grid();
  if (!ctx.cache.empty()) {
    if (auto sys = read_system_cache(ctx.cache, grid, ctx.cfg.s)) return std::move(*sys);
  }
  StiffnessSystem sys = assemble_stiffness(grid, ctx.cfg.params());
  if (!ctx.cache.empty()) write_system_cache(ctx.cache, sys);
  return sys;
}

int finish(Context& ctx, int code) {
  ctx.manifest.finished = utc_timestamp();
  ctx.manifest.reports["exit_code"] = code;
  ctx.manifest.write(ctx.dir);
  return code;
}

int cmd_pure_singular(Context& ctx) {
  const StiffnessSystem sys = load_system(ctx);
  const ProblemParams p = ctx.cfg.params().with_lambda(0.0);
  const Solution w = solve_pure_singular(sys, p);
  ctx.save_json("pure_singular.json", solution_json(sys.grid, p, w));
  ctx.manifest.reports["pure-singular"] = to_json(w.report);
  std::cout << "pure singular: max w = " << w.u.maxCoeff() << ", residual = " << w.report.residual << '\n';
  if (!w.report.converged) return kNonConvergence;
  const HolderFit fit = holder_fit(w.u, sys.grid, p, ctx.cfg.fit_width);
  ctx.save_json("pure_singular_holder.json", to_json(fit));
  ctx.add(emit_plot_data(fit, ctx.dir, "pure_singular_holder"));
  ctx.manifest.reports["holder"] = to_json(fit);
  std::cout << "boundary exponent: fit " << fit.alpha_fit << ", theory " << fit.alpha_theory << ", rsq " << fit.rsq
            << '\n';
  return kOk;
}

// w and the minimal solution at cfg.lambda
std::pair<Solution, Feasibility> minimal_at(const StiffnessSystem& sys, const ProblemParams& p) {
  Solution w = solve_pure_singular(sys, p.with_lambda(0.0));
  if (!w.report.converged) throw SolverError("pure singular solve did not converge");
  Feasibility f = check_feasible(sys, p, w.u);
  return {std::move(w), std::move(f)};
}

int cmd_solve(Context& ctx) {
  const StiffnessSystem sys = load_system(ctx);
  const ProblemParams p = ctx.cfg.params();
  auto [w, f] = minimal_at(sys, p);
  const bool ok = f.status == IterationStatus::converged && f.minimal.report.residual <= ctx.cfg.residual_tol;
  json report = {{"status", to_string(f.status)},
                 {"feasible", f.feasible},
                 {"supersolution", f.supersolution},
                 {"newton_rescue", f.newton_rescue}};
  ctx.manifest.reports["solve"] = report;
  if (f.status == IterationStatus::converged) {
    ctx.save_json("solution.json", solution_json(sys.grid, p, f.minimal));
    std::cout << "minimal solution at lambda = " << p.lambda << ": max u = " << f.minimal.u.maxCoeff()
              << ", residual = " << f.minimal.report.residual << '\n';
  } else {
    std::cout << "monotone iteration " << to_string(f.status) << " at lambda = " << p.lambda << '\n';
  }
  return ok ? kOk : kNonConvergence;
}

int cmd_lambda_star(Context& ctx) {
  const StiffnessSystem sys = load_system(ctx);
  const ProblemParams p = ctx.cfg.params();
  const Solution w = solve_pure_singular(sys, p.with_lambda(0.0));
  if (!w.report.converged) return kNonConvergence;
  const SpectralData eig = principal_eigenpair(sys);
  const double cert = lambda_certificate(p, eig.lam1);
  const LambdaStar ls = estimate_lambda_star(sys, p, w.u, cert, ctx.cfg.bisection_tol);
  json steps = json::array();
  for (const auto& s : ls.steps)
    steps.push_back({{"lambda", s.lambda}, {"feasible", s.feasible}, {"status", s.status}, {"iterations", s.iterations}});
  const json out = {{"lam1", eig.lam1},         {"lambda_cert", cert}, {"estimate", ls.estimate},
                    {"lo", ls.lo},               {"hi", ls.hi},         {"relative_width", ls.relative_width()},
                    {"flagged", ls.flagged},     {"steps", steps}};
  ctx.save_json("lambda_star.json", out);
  ctx.manifest.reports["lambda-star"] = {{"estimate", ls.estimate}, {"lambda_cert", cert}, {"flagged", ls.flagged}};
  std::cout << "lambda_1 = " << eig.lam1 << ", certificate = " << cert << ", Lambda in [" << ls.lo << ", " << ls.hi
            << "]\n";
  return kOk;
}

int cmd_sweep(Context& ctx) {
  const StiffnessSystem sys = load_system(ctx);
  const ProblemParams p = ctx.cfg.params();
  const Solution w = solve_pure_singular(sys, p.with_lambda(0.0));
  if (!w.report.converged) return kNonConvergence;
  std::vector<double> lambdas = ctx.cfg.lambdas;
  double lambda_star = 0.0, width = 0.0;
  if (lambdas.empty()) {
    const double cert = lambda_certificate(p, principal_eigenpair(sys).lam1);
    const LambdaStar ls = estimate_lambda_star(sys, p, w.u, cert, ctx.cfg.bisection_tol);
    lambda_star = ls.estimate;
    width = ls.hi - ls.lo;
    for (int k = 1; k <= 9; ++k) lambdas.push_back(0.1 * k * ls.estimate);
  }
  std::sort(lambdas.begin(), lambdas.end());
  SweepOptions opts;
  opts.mountain_pass = ctx.cfg.mountain_pass;
  opts.mp.nu = ctx.cfg.nu;
  BifurcationDiagram d = sweep_lambda(sys, p, w.u, lambdas, opts);
  d.lambda_star = lambda_star;
  d.bracket_width = width;
  ctx.save_text("diagram.csv", diagram_csv(d));
  ctx.save_json("diagram.json", to_json(d));
  ctx.add(emit_plot_data(d, ctx.dir, "diagram"));
  const auto converged = std::count_if(d.entries.begin(), d.entries.end(), [](const auto& e) { return e.converged; });
  ctx.manifest.reports["sweep"] = {{"entries", d.entries.size()}, {"converged", converged}};
  std::cout << "sweep: " << converged << " of " << d.entries.size() << " entries converged\n";
  return converged > 0 ? kOk : kNonConvergence;
}

int cmd_mountain_pass(Context& ctx) {
  const StiffnessSystem sys = load_system(ctx);
  const ProblemParams p = ctx.cfg.params();
  auto [w0, f] = minimal_at(sys, p);
  if (f.status != IterationStatus::converged) {
    std::cout << "no minimal solution at lambda = " << p.lambda << '\n';
    return kNonConvergence;
  }
  MountainPassOptions opts;
  opts.nu = ctx.cfg.nu;
  if (!ctx.cfg.eps_ladder.empty()) opts.eps = *std::min_element(ctx.cfg.eps_ladder.begin(), ctx.cfg.eps_ladder.end());
  std::ofstream trace;
  if (ctx.cfg.trace) {
    fs::create_directories(ctx.dir);
    trace.open(ctx.dir / "mountain_pass_trace.jsonl");
    opts.trace = &trace;
  }
  const MountainPassResult r = mountain_pass_search(sys, p, f.minimal.u, opts);
  if (ctx.cfg.trace) {
    trace.close();
    ctx.manifest.files.push_back(ctx.dir / "mountain_pass_trace.jsonl");
  }
  ctx.save_json("minimal.json", solution_json(sys.grid, p, f.minimal));
  ctx.save_json("mountain_pass.json", solution_json(sys.grid, p, r.v));
  const double sep = (r.v.u - f.minimal.u).cwiseAbs().maxCoeff() / f.minimal.u.cwiseAbs().maxCoeff();
  ctx.manifest.reports["mountain-pass"] = {{"route", r.route},
                                           {"message", r.message},
                                           {"R0", r.R0},
                                           {"sweeps", r.sweeps},
                                           {"separation", sep},
                                           {"level_bound", r.level_bound},
                                           {"level_bound_without_lambda", r.level_bound_without_lambda},
                                           {"min_above_floor", r.min_above_floor}};
  std::cout << r.route << ": residual " << r.v.report.residual << ", I(v) - I(w) = "
            << r.v.report.energy - f.minimal.report.energy << ", separation " << sep << '\n';
  return r.v.report.converged ? kOk : kNonConvergence;
}

int cmd_regularity(Context& ctx) {
  const StiffnessSystem sys = load_system(ctx);
  const ProblemParams p = ctx.cfg.params();
  Solution u;
  if (p.lambda == 0.0) {
    u = solve_pure_singular(sys, p);
  } else {
    auto [w, f] = minimal_at(sys, p);
    if (f.status != IterationStatus::converged) return kNonConvergence;
    u = std::move(f.minimal);
  }
  if (!u.report.converged) return kNonConvergence;
  const HolderFit fit = holder_fit(u.u, sys.grid, p, ctx.cfg.fit_width);
  const Sandwich sw = phi_q_sandwich(u.u, principal_eigenpair(sys).phi1, sys.grid, p.q, fit.fit_width);
  json j = to_json(fit);
  j["sandwich"] = {{"k1", sw.k1}, {"k2", sw.k2}, {"ok", sw.ok}};
  ctx.save_json("regularity.json", j);
  ctx.add(emit_plot_data(fit, ctx.dir, "regularity"));
  ctx.manifest.reports["regularity"] = j;
  std::cout << "boundary exponent: fit " << fit.alpha_fit << ", theory " << fit.alpha_theory << ", rsq " << fit.rsq
            << '\n';
  return kOk;
}

int cmd_validate(Context& ctx) {
  const ValidationReport rep = run_validation(ctx.cfg);
  ctx.save_text("validate_report.json", rep.to_json().dump(2) + "\n");
  for (const auto& c : rep.checks) std::cout << (c.passed ? "ok   " : "FAIL ") << c.name << '\n';
  return rep.all_passed() ? kOk : kNonConvergence;
}

void add_options(CLI::App& app, RunConfig& c, std::string& cache) {
  app.add_option("--s", c.s, "fractional order, 0 < s < 1/2");
  app.add_option("--q", c.q, "singular exponent q > 0");
  app.add_option("--lambda", c.lambda, "bifurcation parameter");
  app.add_option("--lambdas", c.lambdas, "lambda list for sweep")->delimiter(',');
  app.add_option("--N", c.N, "interior nodes");
  app.add_option("--a", c.a, "left endpoint");
  app.add_option("--b", c.b, "right endpoint");
  app.add_option("--grading", c.grading, "boundary grading exponent (1 = uniform)");
  app.add_option("--residual-tol", c.residual_tol, "weak residual tolerance");
  app.add_option("--bisection-tol", c.bisection_tol, "relative bracket width for Lambda");
  app.add_option("--fit-width", c.fit_width, "Holder fit window (0 = 10% of the domain)");
  app.add_option("--nu", c.nu, "bubble cut-off radius");
  app.add_option("--eps-ladder", c.eps_ladder, "bubble scales")->delimiter(',');
  app.add_option("--seed", c.seed, "seed for randomized suites");
  app.add_option("--output-dir", c.output_dir, "output directory")->envname("FRACSING_OUTPUT_DIR");
  app.add_flag("--trace", c.trace, "write a JSON-lines trace of the mountain-pass search");
  app.add_flag("--mountain-pass", c.mountain_pass, "sweep: also compute the mountain-pass branch");
  app.add_option("--cache", cache, "stiffness cache file (read if it matches, written otherwise)");
}

}  // namespace

int run_command(const std::vector<std::string>& argv) {
  CLI::App app{"Singular critical problems for the fractional Laplacian on an interval"};
  app.name(argv.empty() ? "fracsing" : fs::path(argv[0]).filename().string());
  app.set_config("--config", "", "config file (key = value, one per flag)");
  app.fallthrough();
  app.require_subcommand(1, 1);
  Context ctx;
  add_options(app, ctx.cfg, ctx.cache);

  using Handler = int (*)(Context&);
  const std::vector<std::pair<std::string, std::pair<std::string, Handler>>> commands = {
      {"solve", {"minimal solution at --lambda", cmd_solve}},
      {"pure-singular", {"solution of the purely singular problem", cmd_pure_singular}},
      {"sweep", {"bifurcation diagram over --lambdas", cmd_sweep}},
      {"lambda-star", {"certificate and bisection estimate of Lambda", cmd_lambda_star}},
      {"mountain-pass", {"second solution at --lambda", cmd_mountain_pass}},
      {"regularity", {"boundary exponent fit", cmd_regularity}},
      {"validate", {"seeded invariant suite", cmd_validate}},
  };
  for (const auto& [name, info] : commands) app.add_subcommand(name, info.first);

  std::vector<std::string> args(argv.begin() + std::min<std::size_t>(1, argv.size()), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Handler handler = nullptr;
  for (const auto& [n, info] : commands)
    if (n == name) handler = info.second;

  try {
    ctx.cfg.validate();
    ctx.dir = ctx.cfg.output_dir;
    ctx.manifest.started = utc_timestamp();
    ctx.manifest.config = to_json(ctx.cfg);
    ctx.manifest.reports["command"] = name;
    return finish(ctx, handler(ctx));
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return finish(ctx, kNonConvergence);
  }
}

}  // namespace fracsing
