#include "fracsing/variational.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include "fracsing/error.hpp"
#include "json.hpp"

namespace fracsing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// Dimension-dependent constants of the energy-level bound.
double level_gap(const ProblemParams& p, double Ss, bool with_lambda) {
  const double n = p.n;
  double gap = (p.s / n) * std::pow(Ss, n / (2.0 * p.s));
  if (with_lambda) gap *= std::pow(p.lambda, -(n - 2.0 * p.s) / (2.0 * p.s));
  return gap;
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double* arg) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
  }
  if (f1 >= f2) {
    *arg = x1;
    return f1;
  }
  *arg = x2;
  return f2;
}

}  // namespace

double energy(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u) {
  if (u.size() != sys.size()) throw ParameterError("field does not match the grid");
  const double umin = u.minCoeff();
  if (umin < 0.0 || (params.q >= 1.0 && umin <= 0.0) || !u.allFinite()) return kInf;
  const double quad = 0.5 * sys.form(u);
  double sing;
  if (log_energy(params)) {
    sing = sys.massw.dot(u.array().log().matrix());
  } else {
    sing = sys.massw.dot(u.array().pow(1.0 - params.q).matrix()) / (1.0 - params.q);
  }
  const double crit = params.crit();
  const double top = params.lambda == 0.0 ? 0.0 : params.lambda / crit * sys.massw.dot(u.array().pow(crit).matrix());
  return quad - sing - top;
}

double gateaux_derivative(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& phi) {
  if (!(u.minCoeff() > 0.0)) throw ParameterError("Gateaux derivative needs u > 0 at every node");
  return phi.dot(weak_defect(sys, params, u));
}

double sobolev_quotient(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u) {
  const double P = params.crit();
  const double top = sys.form(u) / params.cns();
  const double bottom = sys.massw.dot(u.cwiseAbs().array().pow(P).matrix());
  return top / std::pow(bottom, 2.0 / P);
}

SobolevEstimate sobolev_constant(const StiffnessSystem& sys, const ProblemParams& params, int max_iterations,
                                 double gradient_tol) {
  const double P = params.crit();
  const double C = params.cns();
  SobolevEstimate out;
  Eigen::VectorXd u = principal_eigenpair(sys).phi1;
  u /= sys.norm(u);
  double Q = sobolev_quotient(sys, params, u);
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Eigen::VectorXd au = sys.A * u;
    const double a = u.dot(au);
    const Eigen::VectorXd pw = u.cwiseAbs().array().pow(P - 1.0).matrix().cwiseProduct(u.cwiseSign());
    const double b = sys.massw.dot(u.cwiseAbs().array().pow(P).matrix());
    const Eigen::VectorXd grad = (2.0 / (C * std::pow(b, 2.0 / P))) * (au - (a / b) * sys.massw.cwiseProduct(pw));
    const Eigen::VectorXd g = sys.factor.solve(grad);
    out.gradient_norm = sys.norm(g);
    if (out.gradient_norm <= gradient_tol * Q) break;
    const Eigen::VectorXd dir = g / out.gradient_norm;  // unit A-length, u has unit A-length
    double tau = 1.0;
    bool moved = false;
    for (; tau > 1e-14; tau *= 0.5) {
      Eigen::VectorXd cand = u - tau * dir;
      cand /= sys.norm(cand);
      const double Qc = sobolev_quotient(sys, params, cand);
      if (Qc < Q) {
        u = std::move(cand);
        Q = Qc;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // below ~sqrt(eps) relative gradient no step can lower Q in floating point
      out.stagnated = out.gradient_norm > std::max(gradient_tol, 1e-7) * Q;
      break;
    }
  }
  if (it == max_iterations) out.stagnated = true;
  out.iterations = it;
  out.value = Q;
  out.minimizer = u;
  return out;
}

Bubble make_bubble(const Grid& grid, const ProblemParams& params, double eps, double nu, double Ss, double alpha,
                   double beta) {
  if (!(eps > 0.0)) throw ParameterError("bubble scale eps must be positive");
  if (!(nu > 0.0) || 8.0 * nu > grid.b() - grid.a()) throw ParameterError("bubble radius: need B_{4 nu} inside the domain");
  if (!(Ss > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) throw ParameterError("bubble constants must be positive");
  const double n = params.n;
  const double P = params.crit();
  const double decay = (n - 2.0 * params.s) / 2.0;
  // |alpha (beta^2 + y^2)^{-decay}|_{L^P(R)}: with n = 1 the integrand is alpha^P/(beta^2 + y^2)
  const double norm = alpha * std::pow(std::numbers::pi / beta, 1.0 / P);
  const double stretch = std::pow(Ss, 1.0 / (2.0 * params.s));

  Bubble out;
  out.eps = eps;
  out.nu = nu;
  out.alpha = alpha;
  out.beta = beta;
  out.Ss = Ss;
  out.center = 0.5 * (grid.a() + grid.b());
  out.values.resize(grid.size());
  out.profile.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i) - out.center;
    const double y = x / eps / stretch;
    const double U = std::pow(eps, -decay) * alpha * std::pow(beta * beta + y * y, -decay) / norm;
    const double t = std::clamp((std::abs(x) - nu) / nu, 0.0, 1.0);
    const double zeta = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    out.profile[i] = U;
    out.values[i] = zeta * U;
  }
  return out;
}

RayMax maximize_along_ray(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& base,
                          const Eigen::VectorXd& direction) {
  auto f = [&](double t) { return energy(sys, params, base + t * direction); };
  constexpr int kSamples = 400;
  std::vector<double> ts(kSamples + 1, 0.0);
  for (int k = 1; k <= kSamples; ++k) ts[k] = 1e-3 * std::pow(1e6, double(k - 1) / (kSamples - 1));
  int best = 0;
  double best_val = f(0.0);
  for (int k = 1; k <= kSamples; ++k) {
    const double v = f(ts[k]);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  RayMax out{ts[best], best_val};
  if (best == 0 || best == kSamples) return out;
  double arg;
  const double v = golden_max(f, ts[best - 1], ts[best + 1], &arg);
  if (v > out.value) out = {arg, v};
  return out;
}

EnergyGapReport energy_gap_check(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                 const std::vector<double>& eps_ladder, double nu, double Ss) {
  if (eps_ladder.empty()) throw ParameterError("energy gap check needs at least one eps");
  EnergyGapReport out;
  out.base_energy = energy(sys, params, w);
  out.threshold = out.base_energy + level_gap(params, Ss, true);
  out.threshold_without_lambda = out.base_energy + level_gap(params, Ss, false);
  for (double eps : eps_ladder) {
    const Bubble bubble = make_bubble(sys.grid, params, eps, nu, Ss);
    const RayMax m = maximize_along_ray(sys, params, w, bubble.values);
    out.entries.push_back({eps, m.t, m.value});
  }
  // ladder order is arbitrary: compare along decreasing eps
  std::vector<GapEntry> sorted = out.entries;
  std::sort(sorted.begin(), sorted.end(), [](const GapEntry& x, const GapEntry& y) { return x.eps > y.eps; });
  out.decreasing = true;
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (!(sorted[k].sup_energy < sorted[k - 1].sup_energy)) out.decreasing = false;
  out.below_threshold = sorted.back().sup_energy < out.threshold;
  return out;
}

namespace {

class PathSearch {
 public:
  PathSearch(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w)
      : sys_(sys), params_(params), cone_{w} {}

  double I(const Eigen::VectorXd& u) const { return energy(sys_, params_, u); }
  Eigen::VectorXd R(const Eigen::VectorXd& u) const { return weak_defect(sys_, params_, u); }

  // Gradient in the metric of the convex part's Hessian, A + m q u^{-q-1}.
  Eigen::VectorXd preconditioned_gradient(const Eigen::VectorXd& u) const {
    Eigen::MatrixXd P = sys_.A;
    P.diagonal() += sys_.massw.cwiseProduct((params_.q * u.array().pow(-params_.q - 1.0)).matrix());
    return P.llt().solve(R(u));
  }

  // Minimizes I on {w + d : d >= 0, ||d||_A = sigma}.
  Eigen::VectorXd shell_minimum(double sigma, const Eigen::VectorXd& start, int iterations) const {
    const Eigen::VectorXd& w = cone_.floor;
    Eigen::VectorXd d = sigma * start / sys_.norm(start);
    double e = I(w + d);
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXd g = sys_.factor.solve(R(w + d));
      g -= (g.dot(sys_.A * d) / (sigma * sigma)) * d;
      const double gn = sys_.norm(g);
      if (gn <= 1e-14) break;
      g *= sigma / gn;
      bool moved = false;
      for (double st = 1.0; st > 1e-10; st *= 0.5) {
        Eigen::VectorXd cand = (d - st * g).cwiseMax(0.0);
        const double cn = sys_.norm(cand);
        if (cn <= 0.0) continue;
        cand *= sigma / cn;
        const double ec = I(w + cand);
        if (ec < e) {
          d = std::move(cand);
          e = ec;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    return w + d;
  }

  void reparametrize(PathState& path) const {
    const int K = static_cast<int>(path.samples.size());
    std::vector<double> c(K, 0.0);
    for (int k = 1; k < K; ++k) c[k] = c[k - 1] + sys_.norm(path.samples[k] - path.samples[k - 1]);
    if (!(c.back() > 0.0)) return;
    for (double& v : c) v /= c.back();
    std::vector<Eigen::VectorXd> fresh(K);
    fresh.front() = path.samples.front();
    fresh.back() = path.samples.back();
    int seg = 0;
    for (int k = 1; k < K - 1; ++k) {
      const double t = path.t[k];
      while (seg < K - 2 && c[seg + 1] < t) ++seg;
      const double span = c[seg + 1] - c[seg];
      const double theta = span > 0.0 ? (t - c[seg]) / span : 0.0;
      fresh[k] = (1.0 - theta) * path.samples[seg] + theta * path.samples[seg + 1];
    }
    path.samples = std::move(fresh);
  }

  const ConeConstraint& cone() const { return cone_; }

 private:
  const StiffnessSystem& sys_;
  const ProblemParams& params_;
  ConeConstraint cone_;
};

void emit(std::ostream* trace, const nlohmann::json& j) {
  if (trace) *trace << j.dump() << '\n';
}

}  // namespace

MountainPassResult mountain_pass_search(const StiffnessSystem& sys, const ProblemParams& params,
                                        const Eigen::VectorXd& w, const MountainPassOptions& opts) {
  params.validate();
  if (!(w.minCoeff() > 0.0)) throw ParameterError("mountain pass needs a positive first solution");
  if (opts.samples < 3) throw ParameterError("mountain pass path needs at least 3 samples");
  PathSearch search(sys, params, w);
  MountainPassResult out;
  const double Iw = search.I(w);
  const double Ss = opts.Ss > 0.0 ? opts.Ss : sobolev_constant(sys, params).value;
  out.level_bound = Iw + level_gap(params, Ss, true);
  out.level_bound_without_lambda = Iw + level_gap(params, Ss, false);

  auto finish = [&](Eigen::VectorXd v, const std::string& route) {
    out.route = route;
    out.v.u = std::move(v);
    out.v.report.branch = Branch::mountain_pass;
    out.v.report.residual = weak_residual(sys, params, out.v.u);
    out.v.report.energy = search.I(out.v.u);
    out.v.report.converged = out.v.report.residual <= opts.tol;
    out.min_above_floor = (out.v.u - w).minCoeff();
  };

  // zero altitude: a critical point on a small shell around w at level <= I(w)
  const Eigen::VectorXd phi1 = principal_eigenpair(sys).phi1;
  const double wn = sys.norm(w);
  for (double frac : opts.sigma_ladder) {
    const Eigen::VectorXd v = search.shell_minimum(frac * wn, phi1, opts.shell_iterations);
    const double e = search.I(v);
    const double res = weak_residual(sys, params, v);
    emit(opts.trace, {{"stage", "shell"}, {"sigma", frac * wn}, {"energy", e - Iw}, {"residual", res}});
    if (e <= Iw + 1e-8 && res <= opts.tol) {
      finish(v, "zero-altitude");
      out.message = "critical point on the shell";
      return out;
    }
  }

  const Bubble bubble = make_bubble(sys.grid, params, opts.eps, opts.nu, Ss);
  double R0 = 1.0;
  while (search.I(w + R0 * bubble.values) >= Iw) {
    R0 *= 2.0;
    if (R0 > 1e9) {
      out.route = "mountain-pass";
      out.v.u = w;
      out.message = "energy never drops below I(w) along the bubble ray";
      return out;
    }
  }
  out.R0 = R0;

  const int K = opts.samples;
  PathState path;
  for (int k = 0; k < K; ++k) {
    path.t.push_back(double(k) / (K - 1));
    path.samples.push_back(w + path.t.back() * R0 * bubble.values);
  }
  std::vector<double> E(K);
  auto refresh = [&] {
    for (int k = 0; k < K; ++k) E[k] = search.I(path.samples[k]);
    path.max_index = static_cast<int>(std::max_element(E.begin(), E.end()) - E.begin());
    path.level = E[path.max_index];
  };
  refresh();

  int sweep = 0;
  double gm = kInf;
  std::vector<double> step(K, 1.0);
  for (; sweep < opts.max_sweeps; ++sweep) {
    // samples never sink below the end point: past the saddle I is unbounded below
    const double bottom = E[K - 1];
    for (int j = 1; j < K - 1; ++j) {
      if (E[j] <= bottom) continue;
      // move across the path only; sliding along it would empty the saddle region
      Eigen::VectorXd tau = path.samples[j + 1] - path.samples[j - 1];
      tau /= sys.norm(tau);
      Eigen::VectorXd g = search.preconditioned_gradient(path.samples[j]);
      g -= g.dot(sys.A * tau) * tau;
      for (; step[j] > 1e-10; step[j] *= 0.5) {
        Eigen::VectorXd cand = search.cone().project(path.samples[j] - step[j] * g);
        const double ec = search.I(cand);
        if (ec < E[j] && ec >= bottom) {
          path.samples[j] = std::move(cand);
          E[j] = ec;
          step[j] = std::min(1.0, 1.5 * step[j]);
          break;
        }
      }
      if (step[j] <= 1e-10) step[j] = 1e-6;
    }
    const double before = *std::max_element(E.begin(), E.end());
    if ((sweep + 1) % opts.reparametrize_every == 0) {
      // chords can rise above their end points; keep the old spacing if the level would go up
      PathState trial = path;
      search.reparametrize(trial);
      double top = -kInf;
      for (int k = 0; k < K; ++k) top = std::max(top, search.I(trial.samples[k]));
      if (top <= before) path.samples = std::move(trial.samples);
    }
    refresh();
    gm = sup(search.R(path.samples[path.max_index]));
    out.level_history.push_back(path.level);
    emit(opts.trace, {{"stage", "path"}, {"sweep", sweep}, {"max_index", path.max_index},
                      {"level", path.level - Iw}, {"residual", gm}, {"levels", E}});
    if (gm < opts.switch_residual) break;
    const int lag = 2 * opts.reparametrize_every;
    if (sweep >= lag) {
      const double old = out.level_history[out.level_history.size() - 1 - lag];
      if (old - path.level <= 1e-10 * std::max(1.0, std::abs(path.level))) break;
    }
  }
  out.sweeps = std::min(sweep + 1, opts.max_sweeps);

  NewtonOptions nopt;
  nopt.include_lambda = true;
  nopt.tol = 1e-12;
  // polish from the top sample, then its neighbours; reject anything that falls back to w or leaves the cone
  const double wmax = w.maxCoeff();
  std::vector<int> order{path.max_index};
  for (int d = 1; d < K; ++d) {
    if (path.max_index + d < K - 1) order.push_back(path.max_index + d);
    if (path.max_index - d > 0) order.push_back(path.max_index - d);
  }
  NewtonResult polished;
  bool accepted = false;
  int tries = 0;
  for (int j : order) {
    if (++tries > 6) break;
    NewtonResult r = damped_newton(sys, params, Eigen::VectorXd::Zero(sys.size()), path.samples[j], 0.0, nopt);
    const bool ok = r.u.minCoeff() > 0.0 && (r.u - w).cwiseAbs().maxCoeff() > 1e-6 * wmax &&
                    (r.u - w).minCoeff() >= -1e-8 && weak_residual(sys, params, r.u) <= opts.tol &&
                    search.I(r.u) > Iw;
    if (tries == 1 || ok) polished = std::move(r);
    if (ok) {
      accepted = true;
      break;
    }
  }
  finish(std::move(polished.u), "mountain-pass");
  out.v.report.iterations = out.sweeps + polished.iterations;
  if (!accepted) {
    out.v.report.converged = false;
    out.message = "Newton polish did not reach a second solution; path level " + std::to_string(path.level - Iw) +
                  " above I(w)";
  } else {
    out.message = gm < opts.switch_residual ? "saddle located" : "saddle located after the path level stagnated";
  }
  emit(opts.trace, {{"stage", "newton"}, {"iterations", polished.iterations}, {"residual", out.v.report.residual},
                    {"level", out.v.report.energy - Iw}});
  return out;
}

}  // namespace fracsing
