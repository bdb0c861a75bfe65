#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <vector>

#include "elflow/grid.hpp"

namespace elflow {

/// A periodic field of tensor rank 0..3 sampled on a Grid.
///
/// Each of the dim^Rank components is a flat Eigen array over the collocation
/// points. Multi-indices flatten row-major: (i, j, k) -> (i * dim + j) * dim + k.
template <int Rank>
class TensorField {
  static_assert(Rank >= 0 && Rank <= 3);

 public:
  static constexpr int rank = Rank;

  explicit TensorField(const Grid& grid) : grid_(grid) {
    int count = 1;
    for (int r = 0; r < Rank; ++r) count *= grid.dim();
    comps_.assign(count, Eigen::ArrayXd::Zero(grid.points()));
  }

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  int size() const { return static_cast<int>(comps_.size()); }

  Eigen::ArrayXd& operator[](int flat) { return comps_[flat]; }
  const Eigen::ArrayXd& operator[](int flat) const { return comps_[flat]; }

  Eigen::ArrayXd& values() requires(Rank == 0) { return comps_[0]; }
  const Eigen::ArrayXd& values() const requires(Rank == 0) { return comps_[0]; }

  Eigen::ArrayXd& operator()(int i) requires(Rank == 1) { return comps_[i]; }
  const Eigen::ArrayXd& operator()(int i) const requires(Rank == 1) { return comps_[i]; }

  Eigen::ArrayXd& operator()(int i, int j) requires(Rank == 2) { return comps_[i * dim() + j]; }
  const Eigen::ArrayXd& operator()(int i, int j) const requires(Rank == 2) { return comps_[i * dim() + j]; }

  Eigen::ArrayXd& operator()(int i, int j, int k) requires(Rank == 3) {
    return comps_[(i * dim() + j) * dim() + k];
  }
  const Eigen::ArrayXd& operator()(int i, int j, int k) const requires(Rank == 3) {
    return comps_[(i * dim() + j) * dim() + k];
  }

  TensorField& operator+=(const TensorField& o) {
    assert(o.grid_ == grid_);
    for (int c = 0; c < size(); ++c) comps_[c] += o.comps_[c];
    return *this;
  }
  TensorField& operator-=(const TensorField& o) {
    assert(o.grid_ == grid_);
    for (int c = 0; c < size(); ++c) comps_[c] -= o.comps_[c];
    return *this;
  }
  TensorField& operator*=(double a) {
    for (auto& c : comps_) c *= a;
    return *this;
  }

  friend TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
  friend TensorField operator-(TensorField a, const TensorField& b) { return a -= b; }
  friend TensorField operator*(double s, TensorField a) { return a *= s; }
  friend TensorField operator*(TensorField a, double s) { return a *= s; }
  friend TensorField operator-(TensorField a) { return a *= -1.0; }
  /// Pointwise product of scalar fields.
  friend TensorField operator*(TensorField a, const TensorField& b) requires(Rank == 0) {
    a.comps_[0] *= b.comps_[0];
    return a;
  }

  bool all_finite() const {
    return std::all_of(comps_.begin(), comps_.end(), [](const Eigen::ArrayXd& c) { return c.allFinite(); });
  }

 private:
  Grid grid_;
  std::vector<Eigen::ArrayXd> comps_;
};

using ScalarField = TensorField<0>;
using VectorField = TensorField<1>;
using Tensor2Field = TensorField<2>;
using Tensor3Field = TensorField<3>;

/// Samples fn(x) at every collocation point.
inline ScalarField sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& fn) {
  ScalarField s(g);
  for (Eigen::Index p = 0; p < g.points(); ++p) s.values()[p] = fn(g.position(p));
  return s;
}

inline VectorField sample_vector(const Grid& g,
                                 const std::function<std::array<double, 3>(const std::array<double, 3>&)>& fn) {
  VectorField v(g);
  for (Eigen::Index p = 0; p < g.points(); ++p) {
    const auto val = fn(g.position(p));
    for (int i = 0; i < g.dim(); ++i) v(i)[p] = val[i];
  }
  return v;
}

/// Collocation coordinate x_axis as a field.
inline ScalarField coordinate(const Grid& g, int axis) {
  return sample(g, [axis](const auto& x) { return x[axis]; });
}

inline Tensor2Field identity_tensor(const Grid& g) {
  Tensor2Field t(g);
  for (int i = 0; i < g.dim(); ++i) t(i, i).setOnes();
  return t;
}

// Pointwise algebra.

inline ScalarField dot(const VectorField& a, const VectorField& b) {
  ScalarField s(a.grid());
  for (int i = 0; i < a.dim(); ++i) s.values() += a(i) * b(i);
  return s;
}

/// (T v)_i = T(i, m) v_m
inline VectorField matvec(const Tensor2Field& t, const VectorField& v) {
  VectorField r(v.grid());
  for (int i = 0; i < v.dim(); ++i)
    for (int m = 0; m < v.dim(); ++m) r(i) += t(i, m) * v(m);
  return r;
}

/// (T^T v)_m = T(i, m) v_i
inline VectorField matvec_transposed(const Tensor2Field& t, const VectorField& v) {
  VectorField r(v.grid());
  for (int m = 0; m < v.dim(); ++m)
    for (int i = 0; i < v.dim(); ++i) r(m) += t(i, m) * v(i);
  return r;
}

inline Tensor2Field matmul(const Tensor2Field& a, const Tensor2Field& b) {
  Tensor2Field r(a.grid());
  const int d = a.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) r(i, j) += a(i, k) * b(k, j);
  return r;
}

/// Pointwise Euclidean (Frobenius) magnitude over all components.
template <int Rank>
Eigen::ArrayXd magnitude(const TensorField<Rank>& f) {
  Eigen::ArrayXd s = Eigen::ArrayXd::Zero(f.grid().points());
  for (int c = 0; c < f.size(); ++c) s += f[c].square();
  return s.sqrt();
}

// Quadratures on the collocation grid. For band-limited integrands these are exact.

inline double integral(const ScalarField& s) { return s.values().sum() * s.grid().cell_volume(); }

inline double mean(const ScalarField& s) { return s.values().mean(); }

/// ∫ |f|^2 dx summed over components.
template <int Rank>
double l2_squared(const TensorField<Rank>& f) {
  double acc = 0.0;
  for (int c = 0; c < f.size(); ++c) acc += f[c].square().sum();
  return acc * f.grid().cell_volume();
}

template <int Rank>
double l2_norm(const TensorField<Rank>& f) {
  return std::sqrt(l2_squared(f));
}

/// sqrt of the box-averaged |f|^2.
template <int Rank>
double rms(const TensorField<Rank>& f) {
  return std::sqrt(l2_squared(f) / f.grid().volume());
}

/// max over points of the pointwise magnitude.
template <int Rank>
double sup_norm(const TensorField<Rank>& f) {
  return magnitude(f).maxCoeff();
}

/// max over points and components of |f|.
template <int Rank>
double max_abs(const TensorField<Rank>& f) {
  double m = 0.0;
  for (int c = 0; c < f.size(); ++c) m = std::max(m, f[c].abs().maxCoeff());
  return m;
}

/// (∫ |f|^p dx)^(1/p) with |f| the pointwise magnitude.
template <int Rank>
double lp_norm(const TensorField<Rank>& f, double p) {
  return std::pow(magnitude(f).pow(p).sum() * f.grid().cell_volume(), 1.0 / p);
}

}  // namespace elflow
