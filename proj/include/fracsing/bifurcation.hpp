#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fracsing/grid.hpp"
#include "fracsing/params.hpp"
#include "fracsing/singular.hpp"
#include "fracsing/stiffness.hpp"
#include "fracsing/variational.hpp"

namespace fracsing {

/// max over t > 0 of (2 lam1 t - t^{-q}) / t^{2*-1}. No solution exists above it.
double lambda_certificate(const ProblemParams& params, double lam1);

struct Feasibility {
  bool feasible = false;
  IterationStatus status = IterationStatus::diverged;
  std::string supersolution;  // "ladder M=..", "limit", or empty
  bool newton_rescue = false;  // the iteration hit its cap and Newton finished it
  Solution minimal;           // valid when status == converged
};

/// lambda is feasible when the monotone iteration (finished by minimal_newton
/// if it stalls at the cap) converges and a supersolution is validated: w + M z
/// from the ladder, or else the converged limit itself.
Feasibility check_feasible(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                           const Eigen::VectorXd* start = nullptr, const std::vector<double>& ladder = power_ladder());

struct BisectionStep {
  double lambda = 0.0;
  bool feasible = false;
  std::string status;
  int iterations = 0;
};

struct LambdaStar {
  double estimate = 0.0;
  double lo = 0.0;  // feasible
  double hi = 0.0;  // infeasible (or the certificate)
  bool flagged = false;  // an indeterminate verdict was met
  std::vector<BisectionStep> steps;
  Eigen::VectorXd lo_solution;  // minimal solution at lo

  double relative_width() const { return hi > 0.0 ? (hi - lo) / hi : 0.0; }
};

/// Bisection on [0, lambda_cert] until (hi - lo) <= rel_tol * hi.
LambdaStar estimate_lambda_star(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                double lambda_cert, double rel_tol = 1e-3);

struct DiagramEntry {
  double lambda = 0.0;
  Branch branch = Branch::minimal;
  double supnorm = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  bool converged = false;
};

struct BifurcationDiagram {
  std::vector<DiagramEntry> entries;
  double lambda_cert = 0.0;
  double lambda_star = 0.0;
  double bracket_width = 0.0;

  std::vector<DiagramEntry> branch(Branch b) const;
};

struct SweepOptions {
  bool mountain_pass = false;
  MountainPassOptions mp;
};

/// Minimal branch along sorted lambdas, warm-started from the previous one.
BifurcationDiagram sweep_lambda(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                const std::vector<double>& lambdas, const SweepOptions& opts = {});

struct ExtremalResult {
  Solution u;                      // last convergent rung, reported at lambda = Lambda_est
  std::vector<double> rungs;
  std::vector<bool> converged;
  std::vector<Eigen::VectorXd> solutions;  // convergent rungs only
  int deepest = -1;                // index into rungs
  bool monotone = true;            // nodewise nondecreasing across convergent rungs
  bool above_w = true;
  double residual_at_estimate = 0.0;
};

/// Minimal branch along Lambda_est (1 - 2^{-m}), m = 1..8, followed by any
/// extra rungs in (last rung, Lambda_est].
ExtremalResult extremal_solution(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                 double lambda_est, const std::vector<double>& extra_rungs = {}, double tol = 1e-5);

struct HolderFit {
  double alpha_fit = 0.0;
  double alpha_theory = 0.0;
  bool log_correction = false;
  double rsq = 0.0;
  double fit_width = 0.0;
  bool widened = false;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> x;  // regressor (log delta, or the log-corrected profile)
  std::vector<double> y;  // log u

  bool trusted() const { return rsq >= 0.99; }
};

/// alpha by the q-trichotomy: s for q < 1, s (with log) for q = 1, 2s/(q+1) for q > 1.
double holder_exponent(double q, double s);

/// Least squares of log u against log delta over nodes with delta <= fit_width
/// (default 0.1 (b - a)); q = 1 uses the log-corrected profile.
HolderFit holder_fit(const Eigen::VectorXd& u, const Grid& grid, const ProblemParams& params, double fit_width = 0.0);

/// phi_1, phi_1 (ln(2/phi_1))^{1/2}, or phi_1^{2/(q+1)} for q <, =, > 1.
Eigen::VectorXd phi_q(const Eigen::VectorXd& phi1, double q);

struct Sandwich {
  double k1 = 0.0;
  double k2 = 0.0;
  bool ok = false;
};

/// k1 phi_q <= u <= k2 phi_q on nodes with delta <= fit_width.
Sandwich phi_q_sandwich(const Eigen::VectorXd& u, const Eigen::VectorXd& phi1, const Grid& grid, double q,
                        double fit_width);

}  // namespace fracsing
