#include "elflow/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace elflow {

Grid::Grid(int dim, int n, double L) : dim_(dim), n_(n), L_(L) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dim must be 2 or 3, got " + std::to_string(dim));
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("grid n must be even and >= 8, got " + std::to_string(n));
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("grid period L must be positive");
  points_ = 1;
  for (int d = 0; d < dim; ++d) points_ *= n;
}

double Grid::volume() const { return std::pow(L_, dim_); }

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }

std::array<int, 3> Grid::coords(Eigen::Index flat) const {
  std::array<int, 3> c{0, 0, 0};
  for (int d = dim_ - 1; d >= 0; --d) {
    c[d] = static_cast<int>(flat % n_);
    flat /= n_;
  }
  return c;
}

std::array<double, 3> Grid::position(Eigen::Index flat) const {
  const auto c = coords(flat);
  const double h = spacing();
  return {c[0] * h, c[1] * h, c[2] * h};
}

}  // namespace elflow
