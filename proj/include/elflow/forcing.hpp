#pragma once

#include <string>

#include "elflow/field.hpp"

namespace elflow {

/// Closed-form, steady, divergence-free, band-limited body forces.
///
/// With kappa = 2*pi*wavenumber/L:
///   zero        f = 0
///   single_mode f = a (sin kappa x2, 0[, 0])
///   multi_mode  3D: f = a [(sin k x2, sin k x3, sin k x1) + 1/2 (cos 2k x3, cos 2k x1, cos 2k x2)]
///               2D: f = a [(sin k x2, sin k x1) + 1/2 (cos 2k x2, cos 2k x1)]
struct ForcingSpec {
  enum class Kind { Zero, SingleMode, MultiMode };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  int wavenumber = 1;

  static ForcingSpec zero() { return {}; }
  static ForcingSpec single_mode(double amplitude, int wavenumber = 1) {
    return {Kind::SingleMode, amplitude, wavenumber};
  }
  static ForcingSpec multi_mode(double amplitude, int wavenumber = 1) {
    return {Kind::MultiMode, amplitude, wavenumber};
  }

  bool is_zero() const { return kind == Kind::Zero || amplitude == 0.0; }

  VectorField evaluate(const Grid& grid, double t) const;

  /// Box average of |f|^2.
  double mean_square(int dim) const;
  /// Box average of |(-Δ)^(-1/2) f|^2.
  double mean_square_inverse_gradient(int dim, double L) const;
  /// L_f^2 = G^2 / F^2; zero for zero forcing.
  double length_scale_sq(int dim, double L) const;
};

std::string to_string(ForcingSpec::Kind kind);
ForcingSpec::Kind forcing_kind_from_string(const std::string& s);

}  // namespace elflow
