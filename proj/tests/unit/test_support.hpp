#pragma once

// Analytic trigonometric polynomials used as independent oracles: values and
// derivatives are evaluated in closed form, never through the spectral code.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "elflow/field.hpp"

namespace elflow::testing {

struct TrigMode {
  std::array<int, 3> m{0, 0, 0};
  double amp = 0.0;
  double phase = 0.0;
};

/// s(x) = Σ amp sin(kappa m·x + phase), kappa = 2π/L.
struct TrigPoly {
  int dim = 3;
  double L = 2.0 * std::numbers::pi;
  std::vector<TrigMode> modes;

  double kappa() const { return 2.0 * std::numbers::pi / L; }

  double arg(const TrigMode& md, const std::array<double, 3>& x) const {
    double a = md.phase;
    for (int i = 0; i < dim; ++i) a += kappa() * md.m[i] * x[i];
    return a;
  }

  double value(const std::array<double, 3>& x) const {
    double s = 0.0;
    for (const auto& md : modes) s += md.amp * std::sin(arg(md, x));
    return s;
  }
  double d1(const std::array<double, 3>& x, int j) const {
    double s = 0.0;
    for (const auto& md : modes) s += md.amp * kappa() * md.m[j] * std::cos(arg(md, x));
    return s;
  }
  double d2(const std::array<double, 3>& x, int j, int k) const {
    double s = 0.0;
    for (const auto& md : modes) s -= md.amp * kappa() * kappa() * md.m[j] * md.m[k] * std::sin(arg(md, x));
    return s;
  }
  TrigPoly scaled(double a) const {
    TrigPoly p = *this;
    for (auto& md : p.modes) md.amp *= a;
    return p;
  }

  ScalarField sample_on(const Grid& g) const {
    return elflow::sample(g, [this](const auto& x) { return value(x); });
  }
  ScalarField sample_d1(const Grid& g, int j) const {
    return elflow::sample(g, [this, j](const auto& x) { return d1(x, j); });
  }
  ScalarField sample_d2(const Grid& g, int j, int k) const {
    return elflow::sample(g, [this, j, k](const auto& x) { return d2(x, j, k); });
  }
};

inline TrigPoly random_trig(int dim, double L, int band, unsigned seed, int count = 6) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> mode(-band, band);
  std::uniform_real_distribution<double> amp(0.2, 1.0), phase(0.0, 2.0 * std::numbers::pi);
  TrigPoly p{dim, L, {}};
  while (static_cast<int>(p.modes.size()) < count) {
    TrigMode md;
    bool nonzero = false;
    for (int i = 0; i < dim; ++i) {
      md.m[i] = mode(rng);
      nonzero |= md.m[i] != 0;
    }
    if (!nonzero) continue;
    md.amp = amp(rng);
    md.phase = phase(rng);
    p.modes.push_back(md);
  }
  return p;
}

struct TrigVector {
  std::vector<TrigPoly> comps;

  VectorField sample_on(const Grid& g) const {
    VectorField v(g);
    for (int i = 0; i < g.dim(); ++i) v(i) = comps[i].sample_on(g).values();
    return v;
  }
  TrigVector scaled(double a) const {
    TrigVector t;
    for (const auto& c : comps) t.comps.push_back(c.scaled(a));
    return t;
  }
  /// max over sampled points of |∂_i v_m|, evaluated analytically.
  double max_gradient(const Grid& g) const {
    double m = 0.0;
    for (Eigen::Index p = 0; p < g.points(); ++p) {
      const auto x = g.position(p);
      for (int c = 0; c < g.dim(); ++c)
        for (int j = 0; j < g.dim(); ++j) m = std::max(m, std::abs(comps[c].d1(x, j)));
    }
    return m;
  }
};

inline TrigVector random_trig_vector(int dim, double L, int band, unsigned seed, int count = 6) {
  TrigVector t;
  for (int i = 0; i < dim; ++i) t.comps.push_back(random_trig(dim, L, band, seed * 31u + i, count));
  return t;
}

/// Trig vector field rescaled so that max |∂_i v_m| equals target on g.
inline TrigVector displacement_with_strain(const Grid& g, int band, unsigned seed, double target, int count = 6) {
  TrigVector t = random_trig_vector(g.dim(), g.length(), band, seed, count);
  return t.scaled(target / t.max_gradient(g));
}

}  // namespace elflow::testing
