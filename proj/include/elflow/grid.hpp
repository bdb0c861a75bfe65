#pragma once

#include <Eigen/Core>
#include <array>

namespace elflow {

/// Periodic cubic box [0, L)^dim sampled at n points per axis.
///
/// Collocation points are x_j = j * L / n. Fields are stored row-major with the
/// first axis slowest, i.e. flat = (i1 * n + i2) * n + i3.
class Grid {
 public:
  Grid(int dim, int n, double L);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double length() const { return L_; }
  double spacing() const { return L_ / n_; }
  Eigen::Index points() const { return points_; }
  double volume() const;
  double cell_volume() const;

  /// Index of the largest retained mode under the 2/3 rule: 3 * K < n.
  int dealias_cutoff() const { return (n_ - 1) / 3; }

  std::array<int, 3> coords(Eigen::Index flat) const;
  std::array<double, 3> position(Eigen::Index flat) const;

  bool operator==(const Grid& other) const = default;

 private:
  int dim_;
  int n_;
  double L_;
  Eigen::Index points_;
};

}  // namespace elflow
