#include "elflow/forcing.hpp"

#include <cmath>
#include <numbers>

#include "elflow/errors.hpp"

namespace elflow {

VectorField ForcingSpec::evaluate(const Grid& grid, double /*t*/) const {
  VectorField f(grid);
  if (is_zero()) return f;
  const double k = 2.0 * std::numbers::pi * wavenumber / grid.length();
  const double a = amplitude;
  const int d = grid.dim();
  if (kind == Kind::SingleMode) {
    return sample_vector(grid, [=](const auto& x) { return std::array<double, 3>{a * std::sin(k * x[1]), 0.0, 0.0}; });
  }
  if (d == 3) {
    return sample_vector(grid, [=](const auto& x) {
      return std::array<double, 3>{a * (std::sin(k * x[1]) + 0.5 * std::cos(2 * k * x[2])),
                                   a * (std::sin(k * x[2]) + 0.5 * std::cos(2 * k * x[0])),
                                   a * (std::sin(k * x[0]) + 0.5 * std::cos(2 * k * x[1]))};
    });
  }
  return sample_vector(grid, [=](const auto& x) {
    return std::array<double, 3>{a * (std::sin(k * x[1]) + 0.5 * std::cos(2 * k * x[1])),
                                 a * (std::sin(k * x[0]) + 0.5 * std::cos(2 * k * x[0])), 0.0};
  });
}

double ForcingSpec::mean_square(int dim) const {
  if (is_zero()) return 0.0;
  const double a2 = amplitude * amplitude;
  if (kind == Kind::SingleMode) return 0.5 * a2;
  // each component: <sin^2> + 1/4 <cos^2> = 1/2 + 1/8
  return dim * a2 * 0.625;
}

double ForcingSpec::mean_square_inverse_gradient(int dim, double L) const {
  if (is_zero()) return 0.0;
  const double k = 2.0 * std::numbers::pi * wavenumber / L;
  const double a2 = amplitude * amplitude;
  if (kind == Kind::SingleMode) return 0.5 * a2 / (k * k);
  return dim * a2 * (0.5 / (k * k) + 0.125 / (4.0 * k * k));
}

double ForcingSpec::length_scale_sq(int dim, double L) const {
  const double f2 = mean_square(dim);
  return f2 > 0.0 ? mean_square_inverse_gradient(dim, L) / f2 : 0.0;
}

std::string to_string(ForcingSpec::Kind kind) {
  switch (kind) {
    case ForcingSpec::Kind::Zero: return "zero";
    case ForcingSpec::Kind::SingleMode: return "single_mode";
    case ForcingSpec::Kind::MultiMode: return "multi_mode";
  }
  return "zero";
}

ForcingSpec::Kind forcing_kind_from_string(const std::string& s) {
  if (s == "zero") return ForcingSpec::Kind::Zero;
  if (s == "single_mode") return ForcingSpec::Kind::SingleMode;
  if (s == "multi_mode") return ForcingSpec::Kind::MultiMode;
  throw ConfigError("unknown forcing kind: " + s);
}

}  // namespace elflow
