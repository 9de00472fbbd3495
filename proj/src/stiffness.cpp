#include "fracsing/stiffness.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "fracsing/error.hpp"

namespace fracsing {

namespace {

using Real = long double;

// Gauss-Legendre nodes/weights on [-1, 1], 8 points.
constexpr std::array<double, 8> kGaussX = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                           -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                           0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussW = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                           0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                           0.2223810344533745, 0.1012285362903763};

// Loss of digits in the closed form grows like r^2/(w_e w_f).
constexpr Real kClosedFormLimit = 1e8L;

/// Integral of |x - y|^p over [x0, x1] x [y0, y1], p = 1 - 2s in (0, 1).
class PairIntegral {
 public:
  explicit PairIntegral(double p) : p_(p), scale_(1.0L / ((p_ + 1) * (p_ + 2))) {}

  Real operator()(Real x0, Real x1, Real y0, Real y1) const {
    const Real wx = x1 - x0;
    const Real wy = y1 - y0;
    const Real r = std::fabs(0.5L * (x0 + x1) - 0.5L * (y0 + y1));
    if (r * r <= kClosedFormLimit * wx * wy) {
      return prim(x1 - y0) + prim(x0 - y1) - prim(x1 - y1) - prim(x0 - y0);
    }
    // well separated: the kernel is smooth on the rectangle
    Real sum = 0;
    for (std::size_t i = 0; i < kGaussX.size(); ++i) {
      const Real x = 0.5L * (x0 + x1) + 0.5L * wx * kGaussX[i];
      for (std::size_t j = 0; j < kGaussX.size(); ++j) {
        const Real y = 0.5L * (y0 + y1) + 0.5L * wy * kGaussX[j];
        sum += Real(kGaussW[i]) * kGaussW[j] * std::pow(std::fabs(x - y), p_);
      }
    }
    return 0.25L * wx * wy * sum;
  }

 private:
  Real prim(Real r) const { return std::pow(std::fabs(r), p_ + 2) * scale_; }

  Real p_;
  Real scale_;
};

}  // namespace

double StiffnessSystem::norm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(0.0, form(v))); }

StiffnessSystem assemble_stiffness(const Grid& grid, const ProblemParams& params) {
  const double s = params.s;
  if (!(s > 0.0 && s < 0.5)) throw ParameterError("stiffness assembly needs 0 < s < 1/2");

  // C (u,v)_{R^2} = -C/(s(1-2s)) \int\int u'(x) v'(y) |x-y|^{1-2s}: integrate by
  // parts twice against psi(r) = -|r|^{1-2s}/(2s(1-2s)), psi'' = |r|^{-1-2s}.
  const double p = 1.0 - 2.0 * s;
  const Real coef = -Real(normalization_constant(1, s)) / (Real(s) * (1 - 2 * Real(s)));
  const PairIntegral pair(p);

  const int n = grid.size();
  const int ne = grid.elements();
  const auto pts = grid.breakpoints();

  // element-pair table
  std::vector<Real> T(static_cast<std::size_t>(ne) * ne);
  auto t_at = [&](int e, int f) -> Real& { return T[static_cast<std::size_t>(e) * ne + f]; };
  if (grid.uniform()) {
    // Toeplitz: T_ef depends on |e - f| only
    std::vector<Real> row(ne);
    const Real h = grid.h();
    for (int k = 0; k < ne; ++k) row[k] = pair(0, h, k * h, (k + 1) * h);
    for (int e = 0; e < ne; ++e)
      for (int f = 0; f < ne; ++f) t_at(e, f) = row[std::abs(e - f)];
  } else {
    for (int e = 0; e < ne; ++e) {
      for (int f = e; f < ne; ++f) {
        const Real v = pair(pts[e], pts[e + 1], pts[f], pts[f + 1]);
        t_at(e, f) = v;
        t_at(f, e) = v;
      }
    }
  }

  // hat j rises on element j (slope 1/w_j) and falls on element j+1
  std::vector<Real> inv_w(ne);
  for (int e = 0; e < ne; ++e) inv_w[e] = 1 / (Real(pts[e + 1]) - pts[e]);

  // B = T D, then A = coef * D^T B
  std::vector<Real> B(static_cast<std::size_t>(ne) * n);
  for (int e = 0; e < ne; ++e)
    for (int j = 0; j < n; ++j)
      B[static_cast<std::size_t>(e) * n + j] = t_at(e, j) * inv_w[j] - t_at(e, j + 1) * inv_w[j + 1];

  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Real v = coef * (B[static_cast<std::size_t>(i) * n + j] * inv_w[i] -
                             B[static_cast<std::size_t>(i + 1) * n + j] * inv_w[i + 1]);
      A(i, j) = static_cast<double>(v);
      if (!std::isfinite(A(i, j))) throw QuadratureError(i, j);
    }
  }
  return make_system(grid, s, std::move(A));
}

StiffnessSystem make_system(const Grid& grid, double s, Eigen::MatrixXd A) {
  const int n = grid.size();
  if (A.rows() != n || A.cols() != n) throw ParameterError("stiffness matrix does not match the grid");
  StiffnessSystem sys{grid, s, Eigen::MatrixXd(), Eigen::VectorXd(n), {}};
  sys.A = 0.5 * (A + A.transpose());
  for (int i = 0; i < n; ++i) sys.massw[i] = 0.5 * (grid.element_width(i) + grid.element_width(i + 1));
  sys.factor.compute(sys.A);
  if (sys.factor.info() != Eigen::Success) throw SolverError("stiffness matrix is not positive definite");
  return sys;
}

Eigen::VectorXd solve_dirichlet(const StiffnessSystem& sys, const Eigen::VectorXd& f) {
  if (f.size() != sys.size()) throw ParameterError("right-hand side does not match the grid");
  if (!f.allFinite()) throw ParameterError("right-hand side has non-finite entries");
  const Eigen::VectorXd rhs = sys.massw.cwiseProduct(f);
  Eigen::VectorXd u = sys.factor.solve(rhs);
  // one step of refinement keeps the relative residual near round-off
  u += sys.factor.solve(rhs - sys.A * u);
  const double scale = sys.A.cwiseAbs().rowwise().sum().maxCoeff() * u.cwiseAbs().maxCoeff() +
                       rhs.cwiseAbs().maxCoeff();
  if (scale > 0.0 && (sys.A * u - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw SolverError("Dirichlet solve lost accuracy");
  return u;
}

SpectralData principal_eigenpair(const StiffnessSystem& sys, int max_iterations) {
  const int n = sys.size();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  double lam = sys.form(v) / v.dot(sys.massw.cwiseProduct(v));
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = sys.factor.solve(sys.massw.cwiseProduct(v));
    next /= std::sqrt(next.dot(sys.massw.cwiseProduct(next)));
    const double lam_next = sys.form(next);  // M-normalized Rayleigh quotient
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (std::abs(lam_next - lam) <= 1e-15 * lam_next && change <= 1e-12) {
      SpectralData out;
      out.lam1 = lam_next;
      if (v.sum() < 0) v = -v;
      out.phi1 = v / v.maxCoeff();
      return out;
    }
    lam = lam_next;
  }
  throw SolverError("principal eigenpair: inverse iteration hit the iteration cap");
}

double max_off_diagonal(const StiffnessSystem& sys) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < sys.size(); ++i)
    for (int j = 0; j < sys.size(); ++j)
      if (i != j) m = std::max(m, sys.A(i, j));
  return m;
}

}  // namespace fracsing
