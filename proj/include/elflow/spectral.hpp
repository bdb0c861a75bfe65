#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>

#include "elflow/field.hpp"

namespace elflow {

using Spectrum = Eigen::ArrayXcd;

/// Wavenumber tables and FFT plans for one grid.
///
/// Spectra use the real-to-complex half layout: the last axis keeps modes
/// 0..n/2, the others are stored in FFT order. Forward transforms are
/// unnormalized, inverse transforms divide by the number of points.
class SpectralContext {
 public:
  explicit SpectralContext(const Grid& grid);
  ~SpectralContext();
  SpectralContext(const SpectralContext&) = delete;
  SpectralContext& operator=(const SpectralContext&) = delete;

  const Grid& grid() const { return grid_; }
  Eigen::Index modes() const { return modes_; }

  Spectrum forward(const Eigen::ArrayXd& values) const;
  Eigen::ArrayXd inverse(const Spectrum& coeffs) const;

  /// Physical wavenumber along an axis.
  const Eigen::ArrayXd& k(int axis) const { return k_[axis]; }
  /// Wavenumber with the Nyquist index zeroed; used by odd derivatives.
  const Eigen::ArrayXd& k_odd(int axis) const { return k_odd_[axis]; }
  /// |k|^2 including Nyquist modes.
  const Eigen::ArrayXd& k2() const { return k2_; }
  /// |k_odd|^2.
  const Eigen::ArrayXd& k2_odd() const { return k2_odd_; }
  /// 1 on modes kept by the 2/3 rule, 0 elsewhere.
  const Eigen::ArrayXd& dealias_mask() const { return mask_; }
  /// Hermitian multiplicity of each stored mode (1 or 2).
  const Eigen::ArrayXd& hermitian_weight() const { return weight_; }

 private:
  Grid grid_;
  Eigen::Index modes_;
  Eigen::ArrayXd k_[3];
  Eigen::ArrayXd k_odd_[3];
  Eigen::ArrayXd k2_, k2_odd_, mask_, weight_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Shared, thread-safe cache of contexts keyed by grid.
std::shared_ptr<const SpectralContext> spectral_context(const Grid& grid);

// Differential operators. All derivatives are spectral; odd derivatives drop
// the Nyquist mode.

ScalarField partial(const ScalarField& s, int axis);
VectorField gradient(const ScalarField& s);
/// J(i, m) = ∂_i v_m.
Tensor2Field jacobian(const VectorField& v);
ScalarField divergence(const VectorField& v);
/// H(j, k) = ∂_j ∂_k s, built from odd-derivative wavenumbers on both axes.
Tensor2Field hessian(const ScalarField& s);
/// 3D: vector curl. 2D: single-component field holding ∂_1 v_2 - ∂_2 v_1.
VectorField curl(const VectorField& v);

template <int Rank>
TensorField<Rank> laplacian(const TensorField<Rank>& f);

/// Zero-mean solution of Δx = s. Throws IncompatibleDataError when s has a mean
/// above 1e-10 of its RMS.
ScalarField inverse_laplacian(const ScalarField& s);

/// (-Δ)^(-1/2) applied to each component, mean mode dropped.
template <int Rank>
TensorField<Rank> inverse_sqrt_laplacian(const TensorField<Rank>& f);

/// Leray-Hodge projection onto divergence-free fields.
VectorField leray_project(const VectorField& v);

/// p = R_i R_j (u^i u^j) + c, the zero-mean kinematic pressure of a
/// divergence-free u shifted by c.
ScalarField riesz_pressure(const VectorField& u, double c = 0.0);

/// 2/3-rule truncation of every component.
template <int Rank>
TensorField<Rank> dealias(const TensorField<Rank>& f);

/// Heat semigroup exp(nu_t Δ) applied per component. nu_t may be negative for
/// short backward steps of smooth data.
template <int Rank>
TensorField<Rank> heat(const TensorField<Rank>& f, double nu_t);

/// ∫ |(-Δ)^(s/2) f|^2 dx by Parseval; for s < 0 the mean mode is dropped.
template <int Rank>
double sobolev_seminorm_sq(const TensorField<Rank>& f, double s);

/// Σ |f̂|^2 with Hermitian weights, scaled to equal ∫|f|^2 dx.
template <int Rank>
double spectral_l2_squared(const TensorField<Rank>& f);

/// Largest |f̂| over modes outside the 2/3-rule band, relative to the largest overall.
template <int Rank>
double spectral_tail(const TensorField<Rank>& f);

/// Keeps modes with integer wavenumber magnitude |m| <= band, removes the mean.
template <int Rank>
TensorField<Rank> band_limit(const TensorField<Rank>& f, double band);

/// Random field with independent complex Gaussian coefficients on 0 < |m| <= band.
/// Each coefficient is keyed by (seed, component, m), so any grid that resolves
/// the band samples the same field.
template <int Rank>
TensorField<Rank> band_limited_noise(const Grid& grid, double band, std::uint64_t seed);

}  // namespace elflow
