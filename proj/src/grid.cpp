#include "fracsing/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracsing/error.hpp"

namespace fracsing {

Grid::Grid(double a, double b, int n, double grading)
    : a_(a), b_(b), n_(n), grading_(grading), h_(0.0) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    std::ostringstream msg;
    msg << "grid endpoints must satisfy a < b (got a = " << a << ", b = " << b << ")";
    throw ParameterError(msg.str());
  }
  if (n < 2) throw ParameterError("grid needs at least 2 interior nodes (got " + std::to_string(n) + ")");
  if (!(grading >= 1.0) || !std::isfinite(grading)) throw ParameterError("grid grading must be >= 1");

  const int m = n + 1;
  h_ = (b - a) / m;
  points_.resize(m + 1);
  if (uniform()) {
    for (int i = 0; i <= m; ++i) points_[i] = a + i * h_;
  } else {
    const double half = 0.5 * (b - a);
    for (int i = 0; i <= m; ++i) {
      // mirror so the mesh is exactly symmetric
      const int j = std::min(i, m - i);
      const double t = 2.0 * j / m;
      const double offset = half * std::pow(t, grading);
      points_[i] = (j == i) ? a + offset : b - offset;
    }
  }
  points_.front() = a;
  points_.back() = b;
}

Eigen::VectorXd Grid::coordinates() const {
  Eigen::VectorXd x(n_);
  for (int i = 0; i < n_; ++i) x[i] = node(i);
  return x;
}

Grid build_grid(double a, double b, int n) { return Grid(a, b, n); }

Grid build_graded_grid(double a, double b, int n, double grading) { return Grid(a, b, n, grading); }

DistanceField boundary_distance(const Grid& grid) {
  DistanceField d{Eigen::VectorXd(grid.size())};
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    d.values[i] = std::min(x - grid.a(), grid.b() - x);
  }
  return d;
}

}  // namespace fracsing
