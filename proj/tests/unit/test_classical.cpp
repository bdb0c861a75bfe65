#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "elflow/classical.hpp"
#include "elflow/errors.hpp"
#include "elflow/spectral.hpp"
#include "test_support.hpp"

using namespace elflow;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

VectorField taylor_green_2d(const Grid& g, double U = 1.0) {
  const double k = kTwoPi / g.length();
  return sample_vector(g, [=](const auto& x) {
    return std::array<double, 3>{U * std::sin(k * x[0]) * std::cos(k * x[1]),
                                 -U * std::cos(k * x[0]) * std::sin(k * x[1]), 0.0};
  });
}

VectorField random_solenoidal(const Grid& g, int band, unsigned seed, double amplitude) {
  VectorField u = dealias(leray_project(testing::random_trig_vector(g.dim(), g.length(), band, seed).sample_on(g)));
  return (amplitude / rms(u)) * u;
}

NSState advance(NSState s, const FlowParams& p, double dt, int steps) {
  for (int i = 0; i < steps; ++i) s = ns_step(s, p, dt);
  return s;
}

}  // namespace

TEST_CASE("ns_rhs") {
  const Grid g(2, 32, kTwoPi);
  CHECK(max_abs(ns_rhs(VectorField(g), VectorField(g))) == 0.0);

  SUBCASE("steady Taylor-Green balanced by a force cancels the viscous term") {
    const double nu = 0.05;
    const VectorField u = taylor_green_2d(g);
    const VectorField f = -nu * laplacian(u);
    CHECK(max_abs(ns_rhs(u, f) + nu * laplacian(u)) < 1e-10);
  }
  SUBCASE("advection conserves energy") {
    for (int dim : {2, 3}) {
      const Grid gd(dim, dim == 2 ? 32 : 16, kTwoPi);
      const VectorField u = random_solenoidal(gd, 3, 7, 1.0);
      const double power = integral(dot(u, ns_rhs(u, VectorField(gd))));
      CHECK(std::abs(power) < 1e-10 * l2_squared(u));
    }
  }
}

TEST_CASE("ns_step: decaying Taylor-Green matches the closed form") {
  const Grid g(2, 64, kTwoPi);
  const double nu = 0.01, dt = 0.01;
  const FlowParams p{nu, ForcingSpec::zero()};
  NSState s{0.0, taylor_green_2d(g)};
  const VectorField u0 = s.u;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    s = ns_step(s, p, dt);
    const VectorField exact = std::exp(-2.0 * nu * s.t) * u0;
    worst = std::max(worst, max_abs(s.u - exact));
    CHECK(rms(divergence(s.u)) < 1e-10 * rms(s.u));
  }
  CHECK(s.t == doctest::Approx(1.0));
  CHECK(worst < 1e-6);
}

TEST_CASE("ns_step: energy decreases monotonically without forcing") {
  const Grid g(2, 32, kTwoPi);
  const FlowParams p{0.5, ForcingSpec::zero()};
  NSState s{0.0, random_solenoidal(g, 3, 3, 1.0)};
  double e = l2_squared(s.u);
  for (int i = 0; i < 20; ++i) {
    s = ns_step(s, p, 0.01);
    const double e1 = l2_squared(s.u);
    CHECK(e1 < e);
    e = e1;
  }
}

TEST_CASE("ns_step: fourth-order convergence under step halving") {
  const Grid g(2, 32, kTwoPi);
  const FlowParams p{0.01, ForcingSpec::single_mode(0.3)};
  const NSState s0{0.0, random_solenoidal(g, 3, 12, 1.0)};
  const double T = 0.6;
  const NSState ref = advance(s0, p, T / 240, 240);
  const NSState a = advance(s0, p, T / 20, 20);
  const NSState b = advance(s0, p, T / 40, 40);
  const double ratio = max_abs(a.u - ref.u) / max_abs(b.u - ref.u);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("energy balance: dE/dt + nu |grad u|^2 = f.u") {
  const Grid g(2, 32, kTwoPi);
  const double nu = 0.02, dt = 1e-3;
  const FlowParams p{nu, ForcingSpec::multi_mode(0.5)};
  const NSState s0{0.0, random_solenoidal(g, 3, 5, 1.0)};
  const NSState sp = ns_step(s0, p, dt);
  const NSState sm = ns_step(s0, p, -dt);
  const double dEdt = 0.5 * (l2_squared(sp.u) - l2_squared(sm.u)) / (2 * dt);
  const double diss = nu * sobolev_seminorm_sq(s0.u, 1.0);
  const double power = integral(dot(p.forcing.evaluate(g, 0.0), s0.u));
  CHECK(std::abs(dEdt + diss - power) < 1e-6 * (diss + std::abs(power)));
}

TEST_CASE("pressure consistency with the momentum equation") {
  const Grid g(2, 32, kTwoPi);
  const double nu = 0.02, dt = 1e-3;
  const FlowParams p{nu, ForcingSpec::single_mode(0.4)};
  const NSState s0{0.0, random_solenoidal(g, 3, 6, 1.0)};
  const VectorField dudt = (0.5 / dt) * (ns_step(s0, p, dt).u - ns_step(s0, p, -dt).u);
  const VectorField adv = matvec_transposed(jacobian(s0.u), s0.u);
  const VectorField residual =
      dudt + adv + gradient(riesz_pressure(s0.u)) - p.forcing.evaluate(g, 0.0) - nu * laplacian(s0.u);
  CHECK(rms(residual) < 1e-5);
}

TEST_CASE("ns_step failure modes") {
  const Grid g(2, 16, kTwoPi);
  const FlowParams p{0.01, ForcingSpec::zero()};
  NSState s{0.0, taylor_green_2d(g, 10.0)};
  CHECK_THROWS_AS(ns_step(s, p, 0.1), CflError);

  NSState bad{0.0, taylor_green_2d(g)};
  bad.u(0)[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ns_step(bad, p, 1e-3, StepLimits{1e9, 1e6, 0.0}), BlowUpError);

  NSState big{0.0, taylor_green_2d(g)};
  CHECK_THROWS_AS(ns_step(big, p, 1e-3, StepLimits{0.4, 10.0, 1e-3}), BlowUpError);
}
