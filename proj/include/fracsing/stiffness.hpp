#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fracsing/grid.hpp"
#include "fracsing/params.hpp"

namespace fracsing {

/// Discrete Gagliardo form on P1 hat functions plus lumped mass weights.
///
/// A_ij = C^1_s * \int\int_{R^2} (phi_i(x)-phi_i(y)) (phi_j(x)-phi_j(y)) |x-y|^{-1-2s},
/// so u^T A u is C^1_s [u]_X^2 for the piecewise-linear interpolant of u. The
/// exterior contribution is part of the R^2 integral.
struct StiffnessSystem {
  Grid grid;
  double s = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd massw;
  Eigen::LLT<Eigen::MatrixXd> factor;

  int size() const { return grid.size(); }
  /// v^T A v
  double form(const Eigen::VectorXd& v) const { return v.dot(A * v); }
  /// (v^T A v)^{1/2}, the discrete X_0 norm.
  double norm(const Eigen::VectorXd& v) const;
};

/// Builds A and the lumped weights. Requires 0 < s < 1/2. Throws
/// QuadratureError if an entry is not finite, SolverError if A is not
/// positive definite.
StiffnessSystem assemble_stiffness(const Grid& grid, const ProblemParams& params);

/// Same, from the raw matrix (used when loading a cache).
StiffnessSystem make_system(const Grid& grid, double s, Eigen::MatrixXd A);

/// Solves A u = massw .* f.
Eigen::VectorXd solve_dirichlet(const StiffnessSystem& sys, const Eigen::VectorXd& f);

struct SpectralData {
  double lam1 = 0.0;
  Eigen::VectorXd phi1;  // positive, max = 1
};

/// Smallest eigenpair of A phi = lam diag(massw) phi by inverse iteration.
SpectralData principal_eigenpair(const StiffnessSystem& sys, int max_iterations = 5000);

/// Largest off-diagonal entry of A (<= 0 when the sign structure holds).
double max_off_diagonal(const StiffnessSystem& sys);

}  // namespace fracsing
