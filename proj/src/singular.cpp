#include "fracsing/singular.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "fracsing/error.hpp"
#include "fracsing/variational.hpp"

namespace fracsing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// (u + eps)^{-q} + g [+ lambda u^p], and its derivative in u.
struct Source {
  const ProblemParams& params;
  const Eigen::VectorXd& g;
  double eps;
  bool with_lambda;

  Eigen::VectorXd value(const Eigen::VectorXd& u) const {
    Eigen::VectorXd f = (u.array() + eps).pow(-params.q).matrix() + g;
    if (with_lambda && params.lambda != 0.0) f.array() += params.lambda * u.array().pow(params.power());
    return f;
  }
  Eigen::VectorXd slope(const Eigen::VectorXd& u) const {
    Eigen::VectorXd d = -params.q * (u.array() + eps).pow(-params.q - 1.0);
    if (with_lambda && params.lambda != 0.0)
      d.array() += params.lambda * params.power() * u.array().pow(params.power() - 1.0);
    return d;
  }
};

}  // namespace

RegularizationSchedule RegularizationSchedule::standard() { return geometric(0.1, 0.25, 13); }

RegularizationSchedule RegularizationSchedule::geometric(double first, double ratio, int count) {
  RegularizationSchedule s;
  double e = first;
  for (int k = 0; k < count; ++k, e *= ratio) s.eps_list.push_back(e);
  s.validate();
  return s;
}

void RegularizationSchedule::validate() const {
  if (eps_list.empty()) throw ParameterError("regularization schedule is empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) throw ParameterError("regularization parameters must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
      throw ParameterError("regularization schedule must be strictly decreasing");
  }
  if (eps_list.back() > 1e-6 * eps_list.front())
    throw ParameterError("regularization schedule must reach 1e-6 times its first value");
  if (!(floor > 0.0)) throw ParameterError("positivity floor must be positive");
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::minimal: return "minimal";
    case Branch::mountain_pass: return "mountain-pass";
    case Branch::extremal: return "extremal";
    case Branch::pure_singular: return "pure-singular";
  }
  return "unknown";
}

std::string to_string(IterationStatus s) {
  switch (s) {
    case IterationStatus::converged: return "converged";
    case IterationStatus::diverged: return "diverged";
    case IterationStatus::indeterminate: return "indeterminate";
  }
  return "unknown";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "unknown";
}

Eigen::VectorXd weak_defect(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                            const Eigen::VectorXd* g) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(u.size());
  const Source src{params, g ? *g : zero, 0.0, true};
  return sys.A * u - sys.massw.cwiseProduct(src.value(u));
}

double weak_residual(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                     const Eigen::VectorXd* g) {
  if (u.size() != sys.size()) throw ParameterError("field does not match the grid");
  if (!(u.minCoeff() > 0.0)) return kInf;
  return sup(weak_defect(sys, params, u, g));
}

NewtonResult damped_newton(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& g,
                           Eigen::VectorXd u0, double eps, const NewtonOptions& opts) {
  const Source src{params, g, eps, opts.include_lambda};
  auto defect = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return sys.A * u - sys.massw.cwiseProduct(src.value(u));
  };
  auto admissible = [&](const Eigen::VectorXd& u) {
    return u.allFinite() && (u.array() + eps).minCoeff() > opts.floor && (!opts.include_lambda || u.minCoeff() > 0.0);
  };

  NewtonResult out;
  out.u = std::move(u0);
  if (!admissible(out.u)) throw ParameterError("Newton start must be positive");
  Eigen::VectorXd r = defect(out.u);
  double rn = sup(r);
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int it = 0; it < opts.max_iterations && rn > opts.tol; ++it) {
    Eigen::MatrixXd J = sys.A;
    J.diagonal() -= sys.massw.cwiseProduct(src.slope(out.u));
    Eigen::VectorXd d;
    llt.compute(J);
    if (llt.info() == Eigen::Success) {
      d = llt.solve(-r);
    } else {
      d = J.partialPivLu().solve(-r);
    }
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial, rt;
    for (int k = 0; k <= opts.max_halvings; ++k, t *= 0.5) {
      trial = out.u + t * d;
      if (!admissible(trial)) continue;
      rt = defect(trial);
      if (sup(rt) <= (1.0 - 1e-4 * t) * rn) {
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!accepted) break;  // stagnation, usually at round-off
    out.u = std::move(trial);
    r = std::move(rt);
    rn = sup(r);
  }
  out.residual = rn;
  out.converged = rn <= opts.tol;
  return out;
}

Solution solve_singular_semilinear(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& g,
                                   const SemilinearOptions& opts) {
  params.validate();
  opts.schedule.validate();
  if (g.size() != sys.size()) throw ParameterError("source does not match the grid");
  if (!g.allFinite()) throw ParameterError("source has non-finite entries");
  if (g.minCoeff() < 0.0) throw ParameterError("source g must be nonnegative");

  const ProblemParams p0 = params.with_lambda(0.0);
  NewtonOptions nopt;
  nopt.floor = opts.schedule.floor;

  Eigen::VectorXd u;
  int total = 0;
  bool done = false;
  if (opts.warm_start && opts.warm_start->size() == sys.size() && opts.warm_start->minCoeff() > 0.0) {
    NewtonResult r = damped_newton(sys, p0, g, *opts.warm_start, 0.0, nopt);
    total += r.iterations;
    if (r.residual <= opts.tol) {
      u = std::move(r.u);
      done = true;
    }
  }
  if (!done) {
    u = solve_dirichlet(sys, Eigen::VectorXd::Ones(sys.size()) + g);
    for (double eps : opts.schedule.eps_list) {
      NewtonResult r = damped_newton(sys, p0, g, std::move(u), eps, nopt);
      total += r.iterations;
      u = std::move(r.u);
      if (opts.stages) opts.stages->push_back(u);
    }
    NewtonResult r = damped_newton(sys, p0, g, std::move(u), 0.0, nopt);
    total += r.iterations;
    u = std::move(r.u);
  }

  Solution sol;
  sol.report.residual = weak_residual(sys, p0, u, &g);
  sol.report.iterations = total;
  sol.report.energy = energy(sys, p0, u) - sys.massw.dot(g.cwiseProduct(u));
  sol.report.branch = Branch::minimal;
  sol.report.converged = sol.report.residual <= opts.tol;
  sol.u = std::move(u);
  return sol;
}

Solution solve_pure_singular(const StiffnessSystem& sys, const ProblemParams& params, const SemilinearOptions& opts) {
  Solution sol = solve_singular_semilinear(sys, params, Eigen::VectorXd::Zero(sys.size()), opts);
  sol.report.branch = Branch::pure_singular;
  return sol;
}

double supersolution_defect(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& v) {
  if (!(v.minCoeff() > 0.0)) return -kInf;
  return weak_defect(sys, params, v).cwiseQuotient(sys.massw).minCoeff();
}

Supersolution build_supersolution(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                  double M, const Eigen::VectorXd& z) {
  if (!(M >= 0.0)) throw ParameterError("supersolution multiple M must be nonnegative");
  Supersolution out;
  out.M = M;
  out.ubar = w + M * z;
  out.min_defect = supersolution_defect(sys, params, out.ubar);
  out.valid = out.min_defect >= -1e-8;
  return out;
}

Supersolution build_supersolution(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                  double M) {
  return build_supersolution(sys, params, w, M, solve_dirichlet(sys, Eigen::VectorXd::Ones(sys.size())));
}

std::vector<double> power_ladder(int lo, int hi) {
  std::vector<double> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

std::optional<Supersolution> search_supersolution(const StiffnessSystem& sys, const ProblemParams& params,
                                                  const Eigen::VectorXd& w, const std::vector<double>& ladder) {
  const Eigen::VectorXd z = solve_dirichlet(sys, Eigen::VectorXd::Ones(sys.size()));
  for (double M : ladder) {
    Supersolution s = build_supersolution(sys, params, w, M, z);
    if (s.valid) return s;
  }
  return std::nullopt;
}

IterationResult monotone_iteration(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                   const Eigen::VectorXd* ubar, const IterationOptions& opts) {
  params.validate();
  if (w.size() != sys.size()) throw ParameterError("w does not match the grid");
  const ProblemParams p0 = params.with_lambda(0.0);

  IterationResult out;
  out.min_increment = kInf;
  out.max_above_bound = ubar ? sup((w - *ubar).cwiseMax(0.0)) : 0.0;
  Eigen::VectorXd u = opts.start ? *opts.start : w;
  IterationStatus status = IterationStatus::indeterminate;
  int k = 0;
  while (k < opts.cap) {
    ++k;
    const Eigen::VectorXd g = params.lambda * u.array().pow(params.power()).matrix();
    SemilinearOptions sopt;
    sopt.warm_start = &u;
    Solution next = solve_singular_semilinear(sys, p0, g, sopt);
    if (!next.report.converged) {
      status = IterationStatus::diverged;
      break;
    }
    const Eigen::VectorXd inc = next.u - u;
    out.min_increment = std::min(out.min_increment, inc.minCoeff());
    if (ubar) out.max_above_bound = std::max(out.max_above_bound, (next.u - *ubar).maxCoeff());
    u = std::move(next.u);
    if (opts.keep_trace) out.sup_trace.push_back(u.maxCoeff());
    if (u.maxCoeff() > opts.blowup) {
      status = IterationStatus::diverged;
      break;
    }
    if (sup(inc) <= opts.step_tol) {
      status = IterationStatus::converged;
      break;
    }
  }
  out.status = status;
  out.report.iterations = k;
  out.report.branch = Branch::minimal;
  out.report.residual = weak_residual(sys, params, u);
  out.report.energy = std::isfinite(out.report.residual) ? energy(sys, params, u) : kInf;
  out.report.converged = status == IterationStatus::converged;
  out.u = std::move(u);
  return out;
}

Solution minimal_newton(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& sub,
                        double tol, int max_iterations) {
  params.validate();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.size());
  const Source src{params, zero, 0.0, true};
  Solution out;
  out.u = sub;
  out.report.branch = Branch::minimal;
  double rn = kInf;
  Eigen::LLT<Eigen::MatrixXd> llt;
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (!(out.u.minCoeff() > 0.0) || !out.u.allFinite() || out.u.maxCoeff() > 1e6) break;
    const Eigen::VectorXd r = weak_defect(sys, params, out.u);
    const double prev = rn;
    rn = sup(r);
    if (rn <= tol || (rn <= 1e-10 && rn >= prev)) break;
    Eigen::MatrixXd J = sys.A;
    J.diagonal() -= sys.massw.cwiseProduct(src.slope(out.u));
    llt.compute(J);
    if (llt.info() != Eigen::Success) break;  // past the fold: no minimal solution above sub
    out.u -= llt.solve(r);
  }
  out.report.iterations = it;
  out.report.residual = weak_residual(sys, params, out.u);
  out.report.converged = out.report.residual <= std::max(tol, 1e-10);
  out.report.energy = std::isfinite(out.report.residual) ? energy(sys, params, out.u) : kInf;
  return out;
}

ComparisonResult comparison_check(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u1,
                                  const Eigen::VectorXd& u2, const Eigen::VectorXd& g1, const Eigen::VectorXd& g2,
                                  double residual_tol) {
  const ProblemParams p0 = params.with_lambda(0.0);
  ComparisonResult out;
  const Eigen::VectorXd gap = u1 - u2;
  out.worst_gap = gap.maxCoeff(&out.worst_node);
  if (weak_residual(sys, p0, u1, &g1) > residual_tol || weak_residual(sys, p0, u2, &g2) > residual_tol) {
    out.verdict = Verdict::indeterminate;
    return out;
  }
  if ((g1 - g2).maxCoeff() > 0.0) {
    out.verdict = Verdict::holds;  // data not ordered: nothing to check
    return out;
  }
  out.verdict = out.worst_gap <= 1e-8 ? Verdict::holds : Verdict::violated;
  return out;
}

EnvelopeReport envelope_check(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& w) {
  EnvelopeReport out;
  out.max_u = u.maxCoeff();
  const double c = params.lambda * std::pow(out.max_u, params.power());
  Solution z = solve_singular_semilinear(sys, params.with_lambda(0.0), Eigen::VectorXd::Constant(sys.size(), c));
  out.z_lambda = std::move(z.u);

  int lo_node = 0, hi_node = 0;
  const double lo = (w - u).maxCoeff(&lo_node);
  const double hi = (u - out.z_lambda).maxCoeff(&hi_node);
  out.lower_ok = lo <= 1e-8;
  out.upper_ok = hi <= 1e-8;
  if (lo >= hi) {
    out.worst_node = lo_node;
    out.worst_violation = lo;
  } else {
    out.worst_node = hi_node;
    out.worst_violation = hi;
  }
  return out;
}

}  // namespace fracsing
