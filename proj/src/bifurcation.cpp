#include "fracsing/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "fracsing/error.hpp"

namespace fracsing {

double lambda_certificate(const ProblemParams& params, double lam1) {
  params.validate();
  if (!(lam1 > 0.0)) throw ParameterError("principal eigenvalue must be positive");
  const double q = params.q;
  const double p = params.power();
  // objective in x = log t
  auto f = [&](double x) {
    const double t = std::exp(x);
    return (2.0 * lam1 * t - std::pow(t, -q)) * std::pow(t, -p);
  };
  constexpr int kScan = 4000;
  const double x0 = std::log(1e-8), x1 = std::log(1e8);
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double v = f(x0 + (x1 - x0) * k / kScan);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  if (best == 0 || best == kScan || !(best_val > 0.0)) throw SolverError("lambda certificate: maximum not bracketed");
  double lo = x0 + (x1 - x0) * (best - 1) / kScan, hi = x0 + (x1 - x0) * (best + 1) / kScan;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + r * (hi - lo);
      fb = f(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - r * (hi - lo);
      fa = f(a);
    }
  }
  return std::max({fa, fb, best_val});
}

Feasibility check_feasible(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                           const Eigen::VectorXd* start, const std::vector<double>& ladder) {
  Feasibility out;
  const std::optional<Supersolution> ladder_sup = search_supersolution(sys, params, w, ladder);
  IterationOptions io;
  io.start = start;
  IterationResult it = monotone_iteration(sys, params, w, ladder_sup ? &ladder_sup->ubar : nullptr, io);
  out.status = it.status;
  Eigen::VectorXd u = std::move(it.u);
  if (it.status == IterationStatus::indeterminate) {
    // the last iterate is a subsolution below u_lambda
    Solution nw = minimal_newton(sys, params, u);
    if (nw.report.converged && (nw.u - u).minCoeff() >= -1e-8) {
      out.status = IterationStatus::converged;
      out.newton_rescue = true;
      u = std::move(nw.u);
    }
  }
  if (out.status != IterationStatus::converged) {
    out.minimal.report = it.report;
    return out;
  }

  Solution polished = minimal_newton(sys, params, u);
  if (polished.report.converged) {
    out.minimal = std::move(polished);
  } else {
    out.minimal.u = std::move(u);
    out.minimal.report = it.report;
    out.minimal.report.residual = weak_residual(sys, params, out.minimal.u);
    out.minimal.report.energy = energy(sys, params, out.minimal.u);
  }
  out.minimal.report.iterations += it.report.iterations;
  out.minimal.report.branch = Branch::minimal;

  if (ladder_sup) {
    std::ostringstream s;
    s << "ladder M=" << ladder_sup->M;
    out.supersolution = s.str();
  } else if (supersolution_defect(sys, params, out.minimal.u) >= -1e-8) {
    out.supersolution = "limit";
  }
  out.feasible = !out.supersolution.empty();
  return out;
}

LambdaStar estimate_lambda_star(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                double lambda_cert, double rel_tol) {
  if (!(lambda_cert > 0.0)) throw ParameterError("certificate must be positive");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("bisection tolerance must lie in (0, 1)");
  LambdaStar out;
  out.lo = 0.0;
  out.hi = lambda_cert;  // nonexistence above the certificate
  out.lo_solution = w;
  while (out.hi - out.lo > rel_tol * out.hi) {
    const double mid = 0.5 * (out.lo + out.hi);
    Feasibility f = check_feasible(sys, params.with_lambda(mid), w, &out.lo_solution);
    out.steps.push_back({mid, f.feasible, to_string(f.status), f.minimal.report.iterations});
    if (f.feasible) {
      out.lo = mid;
      out.lo_solution = std::move(f.minimal.u);
    } else {
      if (f.status == IterationStatus::indeterminate) out.flagged = true;
      out.hi = mid;
    }
  }
  out.estimate = 0.5 * (out.lo + out.hi);
  return out;
}

std::vector<DiagramEntry> BifurcationDiagram::branch(Branch b) const {
  std::vector<DiagramEntry> out;
  for (const auto& e : entries)
    if (e.branch == b) out.push_back(e);
  return out;
}

BifurcationDiagram sweep_lambda(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                const std::vector<double>& lambdas, const SweepOptions& opts) {
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw ParameterError("sweep needs sorted lambdas");
  BifurcationDiagram out;
  out.lambda_cert = lambda_certificate(params, principal_eigenpair(sys).lam1);
  MountainPassOptions mp = opts.mp;
  if (opts.mountain_pass && !(mp.Ss > 0.0)) mp.Ss = sobolev_constant(sys, params).value;

  Eigen::VectorXd prev = w;
  for (double lam : lambdas) {
    const ProblemParams p = params.with_lambda(lam);
    Feasibility f = check_feasible(sys, p, w, &prev);
    DiagramEntry e;
    e.lambda = lam;
    e.branch = Branch::minimal;
    e.converged = f.status == IterationStatus::converged;
    if (e.converged) {
      e.supnorm = f.minimal.u.maxCoeff();
      e.energy = f.minimal.report.energy;
      e.residual = f.minimal.report.residual;
      prev = f.minimal.u;
    }
    out.entries.push_back(e);
    if (!e.converged) continue;
    if (opts.mountain_pass && lam > 0.0) {
      MountainPassResult r = mountain_pass_search(sys, p, f.minimal.u, mp);
      DiagramEntry m;
      m.lambda = lam;
      m.branch = Branch::mountain_pass;
      m.converged = r.v.report.converged;
      m.supnorm = r.v.u.maxCoeff();
      m.energy = r.v.report.energy;
      m.residual = r.v.report.residual;
      out.entries.push_back(m);
    }
  }
  return out;
}

ExtremalResult extremal_solution(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                 double lambda_est, const std::vector<double>& extra_rungs, double tol) {
  if (!(lambda_est > 0.0)) throw ParameterError("extremal ladder needs a positive estimate");
  ExtremalResult out;
  for (int m = 1; m <= 8; ++m) out.rungs.push_back(lambda_est * (1.0 - std::ldexp(1.0, -m)));
  std::vector<double> extra = extra_rungs;
  std::sort(extra.begin(), extra.end());
  for (double r : extra)
    if (r > out.rungs.back() && r <= lambda_est) out.rungs.push_back(r);

  Eigen::VectorXd prev = w;
  for (std::size_t k = 0; k < out.rungs.size(); ++k) {
    Feasibility f = check_feasible(sys, params.with_lambda(out.rungs[k]), w, &prev);
    const bool ok = f.status == IterationStatus::converged;
    out.converged.push_back(ok);
    if (!ok) continue;
    if ((f.minimal.u - prev).minCoeff() < -1e-8) out.monotone = false;
    if ((f.minimal.u - w).minCoeff() < -1e-8) out.above_w = false;
    prev = f.minimal.u;
    out.solutions.push_back(f.minimal.u);
    out.deepest = static_cast<int>(k);
    out.u = std::move(f.minimal);
  }
  if (out.deepest < 0) {
    out.u.u = w;
    out.u.report.converged = false;
    out.residual_at_estimate = weak_residual(sys, params.with_lambda(lambda_est), w);
    out.u.report.residual = out.residual_at_estimate;
    out.u.report.branch = Branch::extremal;
    return out;
  }
  const ProblemParams at = params.with_lambda(lambda_est);
  out.residual_at_estimate = weak_residual(sys, at, out.u.u);
  out.u.report.residual = out.residual_at_estimate;
  out.u.report.energy = energy(sys, at, out.u.u);
  out.u.report.branch = Branch::extremal;
  out.u.report.converged = out.residual_at_estimate <= tol;
  return out;
}

double holder_exponent(double q, double s) { return q > 1.0 ? 2.0 * s / (q + 1.0) : s; }

HolderFit holder_fit(const Eigen::VectorXd& u, const Grid& grid, const ProblemParams& params, double fit_width) {
  if (u.size() != grid.size()) throw ParameterError("field does not match the grid");
  if (!(u.minCoeff() > 0.0)) throw ParameterError("Holder fit needs u > 0 at every node");
  const double s = params.s;
  HolderFit out;
  out.log_correction = params.q == 1.0;
  out.alpha_theory = holder_exponent(params.q, s);
  out.fit_width = fit_width > 0.0 ? fit_width : 0.1 * (grid.b() - grid.a());
  const Eigen::VectorXd delta = boundary_distance(grid).values;

  auto regressor = [&](double d) {
    if (!out.log_correction) return std::log(d);
    const double ds = std::pow(d, s);
    return std::log(ds * std::sqrt(std::log(2.0 / ds)));
  };
  auto usable = [&](double d) { return !out.log_correction || std::pow(d, s) < 2.0; };
  auto count = [&] {
    int c = 0;
    for (int i = 0; i < u.size(); ++i) c += delta[i] <= out.fit_width && usable(delta[i]);
    return c;
  };
  const double half = 0.5 * (grid.b() - grid.a());
  while (count() < 6 && out.fit_width < half) {
    out.fit_width = std::min(2.0 * out.fit_width, half);
    out.widened = true;
  }
  if (out.widened) std::cerr << "holder_fit: window widened to " << out.fit_width << '\n';

  for (int i = 0; i < u.size(); ++i) {
    if (delta[i] > out.fit_width || !usable(delta[i])) continue;
    out.x.push_back(regressor(delta[i]));
    out.y.push_back(std::log(u[i]));
  }
  const std::size_t m = out.x.size();
  if (m < 2) throw ParameterError("Holder fit needs at least two nodes");
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += out.x[k];
    my += out.y[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += (out.x[k] - mx) * (out.x[k] - mx);
    sxy += (out.x[k] - mx) * (out.y[k] - my);
    syy += (out.y[k] - my) * (out.y[k] - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ssr = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = out.y[k] - (out.intercept + out.slope * out.x[k]);
    ssr += e * e;
  }
  out.rsq = syy > 0 ? 1.0 - ssr / syy : 1.0;
  out.alpha_fit = out.log_correction ? s * out.slope : out.slope;
  return out;
}

Eigen::VectorXd phi_q(const Eigen::VectorXd& phi1, double q) {
  if (!(phi1.minCoeff() > 0.0)) throw ParameterError("phi_1 must be positive");
  if (q < 1.0) return phi1;
  if (q == 1.0) return phi1.cwiseProduct((2.0 / phi1.array()).log().sqrt().matrix());
  return phi1.array().pow(2.0 / (q + 1.0)).matrix();
}

Sandwich phi_q_sandwich(const Eigen::VectorXd& u, const Eigen::VectorXd& phi1, const Grid& grid, double q,
                        double fit_width) {
  const Eigen::VectorXd prof = phi_q(phi1, q);
  const Eigen::VectorXd delta = boundary_distance(grid).values;
  Sandwich out;
  out.k1 = std::numeric_limits<double>::infinity();
  out.k2 = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    if (delta[i] > fit_width) continue;
    const double r = u[i] / prof[i];
    out.k1 = std::min(out.k1, r);
    out.k2 = std::max(out.k2, r);
  }
  out.ok = out.k1 > 0.0 && std::isfinite(out.k2) && out.k1 <= out.k2;
  return out;
}

}  // namespace fracsing
