#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fracsing/params.hpp"
#include "fracsing/stiffness.hpp"

namespace fracsing {

/// eps_k replaces u^{-q} by (u + eps_k)^{-q}; the final solve uses eps = 0.
struct RegularizationSchedule {
  std::vector<double> eps_list;
  double floor = 1e-14;  // smallest value a trial iterate (plus eps) may take

  /// 0.1 * 4^{-k}, k = 0..12
  static RegularizationSchedule standard();
  static RegularizationSchedule geometric(double first, double ratio, int count);
  void validate() const;
};

enum class Branch { minimal, mountain_pass, extremal, pure_singular };
std::string to_string(Branch b);

struct SolveReport {
  double residual = 0.0;
  int iterations = 0;
  double energy = 0.0;
  Branch branch = Branch::minimal;
  bool converged = false;
};

struct Solution {
  Eigen::VectorXd u;
  SolveReport report;
};

/// A u - massw .* (u^{-q} + lambda u^{2*-1} + g), the defect tested against every hat function.
Eigen::VectorXd weak_defect(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                            const Eigen::VectorXd* g = nullptr);

/// Sup norm of weak_defect; +inf if u has a non-positive entry.
double weak_residual(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                     const Eigen::VectorXd* g = nullptr);

struct NewtonOptions {
  double tol = 1e-12;  // target sup norm of the defect
  int max_iterations = 100;
  int max_halvings = 40;
  double floor = 1e-14;
  bool include_lambda = false;
};

struct NewtonResult {
  Eigen::VectorXd u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton for A u = massw .* ((u + eps)^{-q} + g [+ lambda u^{2*-1}]).
NewtonResult damped_newton(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& g,
                           Eigen::VectorXd u0, double eps, const NewtonOptions& opts = {});

struct SemilinearOptions {
  RegularizationSchedule schedule = RegularizationSchedule::standard();
  double tol = 1e-8;
  const Eigen::VectorXd* warm_start = nullptr;  // skip the schedule when Newton converges from here
  std::vector<Eigen::VectorXd>* stages = nullptr;  // regularized solutions, one per eps
};

/// L(u) = A u - massw .* u^{-q} = massw .* g with g >= 0.
Solution solve_singular_semilinear(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& g,
                                   const SemilinearOptions& opts = {});

/// w: the solution of L(w) = 0.
Solution solve_pure_singular(const StiffnessSystem& sys, const ProblemParams& params,
                             const SemilinearOptions& opts = {});

struct Supersolution {
  Eigen::VectorXd ubar;
  double M = 0.0;
  double min_defect = 0.0;  // min_i (A ubar - massw .* f(ubar))_i / massw_i
  bool valid = false;
};

/// Pointwise defect min_i (A v - massw .* (v^{-q} + lambda v^{2*-1}))_i / massw_i.
double supersolution_defect(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& v);

/// ubar = w + M z with z = solve_dirichlet(1); valid iff the defect is >= -1e-8.
Supersolution build_supersolution(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                  double M, const Eigen::VectorXd& z);
Supersolution build_supersolution(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                  double M);

/// 2^k for k = lo..hi.
std::vector<double> power_ladder(int lo = -20, int hi = 20);

/// First valid M along the ladder, if any.
std::optional<Supersolution> search_supersolution(const StiffnessSystem& sys, const ProblemParams& params,
                                                  const Eigen::VectorXd& w, const std::vector<double>& ladder);

enum class IterationStatus { converged, diverged, indeterminate };
std::string to_string(IterationStatus s);

struct IterationOptions {
  int cap = 500;
  double step_tol = 1e-9;   // ||u_k - u_{k-1}||_inf
  double blowup = 1e6;      // max u_k above this is divergence
  bool keep_trace = false;
  const Eigen::VectorXd* start = nullptr;  // any subsolution in [w, u_lambda]; defaults to w
};

struct IterationResult {
  Eigen::VectorXd u;  // limit, or the last iterate
  SolveReport report;
  IterationStatus status = IterationStatus::diverged;
  double min_increment = 0.0;   // min over k, i of u_{k+1} - u_k
  double max_above_bound = 0.0;  // max over k, i of u_k - ubar (when a bound is given)
  std::vector<double> sup_trace;  // max u_k per step
};

/// u_k solves L(u_k) = lambda u_{k-1}^{2*-1}, u_0 = w (or opts.start).
IterationResult monotone_iteration(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                   const Eigen::VectorXd* ubar = nullptr, const IterationOptions& opts = {});

/// Newton for (P_lambda) started from a subsolution. Each step stays below the
/// minimal solution while the Jacobian is inverse-positive, so the iterates
/// increase to it; a Jacobian that stops being positive definite, or blow-up,
/// means no solution was found.
Solution minimal_newton(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& sub,
                        double tol = 1e-12, int max_iterations = 200);

enum class Verdict { holds, violated, indeterminate };
std::string to_string(Verdict v);

struct ComparisonResult {
  Verdict verdict = Verdict::indeterminate;
  int worst_node = -1;
  double worst_gap = 0.0;  // max_i (u1 - u2)_i
};

/// Checks u1 <= u2 + 1e-8 for solutions of L(u_i) = g_i with g1 <= g2.
ComparisonResult comparison_check(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u1,
                                  const Eigen::VectorXd& u2, const Eigen::VectorXd& g1, const Eigen::VectorXd& g2,
                                  double residual_tol = 1e-8);

struct EnvelopeReport {
  bool lower_ok = false;
  bool upper_ok = false;
  int worst_node = -1;        // node with the largest violation (either bound)
  double worst_violation = 0.0;
  double max_u = 0.0;
  Eigen::VectorXd z_lambda;

  bool ok() const { return lower_ok && upper_ok; }
};

/// w <= u <= z_lambda, z_lambda solving L(z) = lambda max(u)^{2*-1}.
EnvelopeReport envelope_check(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& w);

}  // namespace fracsing
