#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace fracsing {

/// Mesh of the interval (a, b) by N interior nodes.
///
/// Nodes exclude the endpoints: every field living on a Grid is zero at and
/// outside {a, b}. With grading 1 the mesh is uniform, node_i = a + i*h.
/// A grading g > 1 clusters nodes symmetrically towards both endpoints,
///   x(t) = a + (b - a)/2 * (2t)^g  for t in [0, 1/2], mirrored for t > 1/2,
/// evaluated at t = i/(N+1).
class Grid {
 public:
  Grid(double a, double b, int n, double grading = 1.0);

  double a() const { return a_; }
  double b() const { return b_; }
  int size() const { return n_; }
  double grading() const { return grading_; }
  bool uniform() const { return grading_ == 1.0; }

  /// Nominal spacing (b - a)/(N + 1); the actual spacing when uniform.
  double h() const { return h_; }

  double node(int i) const { return points_[i + 1]; }
  std::span<const double> nodes() const { return {points_.data() + 1, points_.size() - 2}; }

  /// a, node_0, ..., node_{N-1}, b.  Element e is [points[e], points[e+1]].
  std::span<const double> breakpoints() const { return points_; }
  int elements() const { return n_ + 1; }
  double element_width(int e) const { return points_[e + 1] - points_[e]; }

  Eigen::VectorXd coordinates() const;

 private:
  double a_;
  double b_;
  int n_;
  double grading_;
  double h_;
  std::vector<double> points_;
};

/// build_grid: uniform mesh of (a, b) with n interior nodes. Requires a < b, n >= 2.
Grid build_grid(double a, double b, int n);

/// Same, with boundary grading exponent >= 1.
Grid build_graded_grid(double a, double b, int n, double grading);

/// delta(x_i) = min(x_i - a, b - x_i).
struct DistanceField {
  Eigen::VectorXd values;
};

DistanceField boundary_distance(const Grid& grid);

}  // namespace fracsing
