#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fracsing/grid.hpp"
#include "fracsing/params.hpp"
#include "fracsing/singular.hpp"
#include "fracsing/stiffness.hpp"

namespace fracsing {

/// I(u) = 1/2 u^T A u - 1/(1-q) sum m u^{1-q} - lambda/2* sum m u^{2*}.
/// At q = 1 the middle term is sum m log u. Returns +inf outside the domain
/// (a negative entry, or a zero entry when q >= 1).
double energy(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u);

/// True when energy() uses the logarithmic term.
inline bool log_energy(const ProblemParams& params) { return params.q == 1.0; }

/// phi^T (A u - m (u^{-q} + lambda u^{2*-1})). u must be positive.
double gateaux_derivative(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& phi);

/// (u^T A u / C^1_s) / (sum m |u|^{2*})^{2/2*}
double sobolev_quotient(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& u);

struct SobolevEstimate {
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool stagnated = false;
  Eigen::VectorXd minimizer;  // ||.||_A = 1
};

/// Preconditioned gradient descent on the unit A-sphere, started from phi_1.
SobolevEstimate sobolev_constant(const StiffnessSystem& sys, const ProblemParams& params, int max_iterations = 20000,
                                 double gradient_tol = 1e-9);

struct Bubble {
  double eps = 0.0;
  double nu = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  double Ss = 0.0;
  double center = 0.0;
  Eigen::VectorXd values;  // zeta * U_eps at the nodes
  Eigen::VectorXd profile;  // U_eps at the nodes
};

/// Cut-off concentrating profile centred at the midpoint of the grid.
/// Needs 4 nu <= (b - a)/2 and eps > 0.
Bubble make_bubble(const Grid& grid, const ProblemParams& params, double eps, double nu, double Ss,
                   double alpha = 1.0, double beta = 1.0);

/// max over t >= 0 of f, sampled on {0} and a geometric grid then refined by golden section.
struct RayMax {
  double t = 0.0;
  double value = 0.0;
};
RayMax maximize_along_ray(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& base,
                          const Eigen::VectorXd& direction);

struct GapEntry {
  double eps = 0.0;
  double t_max = 0.0;
  double sup_energy = 0.0;
};

struct EnergyGapReport {
  double base_energy = 0.0;  // I(w)
  double threshold = 0.0;    // I(w) + (s/n) lambda^{-(n-2s)/(2s)} Ss^{n/(2s)}
  double threshold_without_lambda = 0.0;  // I(w) + (s/n) Ss^{n/(2s)}
  std::vector<GapEntry> entries;
  bool decreasing = false;
  bool below_threshold = false;  // at the smallest eps

  bool passed() const { return below_threshold; }
};

EnergyGapReport energy_gap_check(const StiffnessSystem& sys, const ProblemParams& params, const Eigen::VectorXd& w,
                                 const std::vector<double>& eps_ladder, double nu, double Ss);

/// Admissible set {u >= w}.
struct ConeConstraint {
  Eigen::VectorXd floor;

  bool admits(const Eigen::VectorXd& u, double slack = 1e-10) const { return (u - floor).minCoeff() >= -slack; }
  Eigen::VectorXd project(const Eigen::VectorXd& u) const { return u.cwiseMax(floor); }
};

struct PathState {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> samples;
  double level = 0.0;
  int max_index = 0;
};

struct MountainPassOptions {
  std::vector<double> sigma_ladder = {0.05, 0.1, 0.2};
  int shell_iterations = 300;
  double eps = 0.02;
  double nu = 0.2;
  double Ss = 0.0;  // <= 0: estimate with sobolev_constant
  int samples = 33;
  int reparametrize_every = 20;
  int max_sweeps = 400;
  double switch_residual = 1e-3;  // hand over to Newton below this weak residual
  double tol = 1e-6;
  std::ostream* trace = nullptr;  // JSON lines
};

struct MountainPassResult {
  Solution v;
  std::string route;  // "zero-altitude" or "mountain-pass"
  double R0 = 0.0;
  int sweeps = 0;
  std::vector<double> level_history;
  double level_bound = 0.0;            // I(w) + (s/n) Ss^{n/(2s)} lambda^{-(n-2s)/(2s)}
  double level_bound_without_lambda = 0.0;
  double min_above_floor = 0.0;        // min_i (v - w)_i
  std::string message;
};

MountainPassResult mountain_pass_search(const StiffnessSystem& sys, const ProblemParams& params,
                                        const Eigen::VectorXd& w, const MountainPassOptions& opts = {});

}  // namespace fracsing
