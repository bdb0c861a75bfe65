#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "elflow/el.hpp"
#include "elflow/errors.hpp"
#include "elflow/integrator.hpp"
#include "elflow/spectral.hpp"
#include "test_support.hpp"

using namespace elflow;
using elflow::testing::displacement_with_strain;
using elflow::testing::random_trig;
using elflow::testing::random_trig_vector;

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
  VectorField u = dealias(leray_project(random_trig_vector(g.dim(), g.length(), band, seed).sample_on(g)));
  return (amplitude / rms(u)) * u;
}

/// Generic state: smooth displacement with the given strain and a smooth virtual velocity.
ELState random_state(const Grid& g, unsigned seed, double strain, PotentialMode mode = PotentialMode::Static) {
  ELState s = make_el_state(random_solenoidal(g, 2, seed, 1.0), mode);
  s.ell = displacement_with_strain(g, 2, seed + 100, strain).sample_on(g);
  s.v += 0.3 * random_trig_vector(g.dim(), g.length(), 2, seed + 200).sample_on(g);
  if (mode == PotentialMode::Static) s.n_pot = reconstruct_u(s.ell, s.v).n;
  return s;
}

ELState advance(ELState s, const FlowParams& p, double dt, int steps, const ELStepOptions& o) {
  for (int i = 0; i < steps; ++i) s = el_step(s, p, dt, o);
  return s;
}

ELStepOptions no_reset() {
  ELStepOptions o;
  o.reset_enabled = false;
  return o;
}

}  // namespace

TEST_CASE("compute_Q") {
  const Grid g(3, 16, kTwoPi);
  SUBCASE("zero displacement gives the identity") {
    const Tensor2Field q = compute_Q(label_gradient(VectorField(g)));
    CHECK(max_abs(q - identity_tensor(g)) == 0.0);
  }
  SUBCASE("nilpotent shear inverts exactly") {
    VectorField ell(g);
    ell(0) = sample(g, [](const auto& x) { return 0.3 * std::sin(x[1]); }).values();
    const Tensor2Field gradA = label_gradient(ell);
    const Tensor2Field N = gradA - identity_tensor(g);
    CHECK(max_abs(compute_Q(gradA) - (identity_tensor(g) - N)) < 1e-15);
  }
  SUBCASE("random small gradient agrees with a pivoted LU inverse") {
    const VectorField ell = displacement_with_strain(g, 3, 5, 0.05).sample_on(g);
    const Tensor2Field gradA = label_gradient(ell);
    const Tensor2Field q = compute_Q(gradA);
    CHECK(max_abs(matmul(gradA, q) - identity_tensor(g)) < 1e-12);
    double worst = 0.0;
    for (Eigen::Index p = 0; p < g.points(); p += 37) {
      Eigen::Matrix3d a;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = gradA(i, j)[p];
      const Eigen::Matrix3d inv = a.fullPivLu().inverse();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(inv(i, j) - q(i, j)[p]));
    }
    CHECK(worst < 1e-13);
  }
  SUBCASE("near-singular gradient reports the worst point") {
    Tensor2Field a = identity_tensor(g);
    a(0, 0)[123] = 0.05;
    try {
      compute_Q(a);
      FAIL("expected SingularMapError");
    } catch (const SingularMapError& e) {
      CHECK(e.point() == 123);
      CHECK(e.det() == doctest::Approx(0.05));
    }
  }
}

TEST_CASE("compute_C") {
  const Grid g(3, 16, kTwoPi);
  CHECK(max_abs(compute_C(VectorField(g), identity_tensor(g))) == 0.0);

  SUBCASE("single-mode displacement matches symbolic differentiation") {
    // ℓ = ε (sin(x2 + x3), 0.5 cos(2 x1), sin(x1 - x2))
    const double eps = 0.1;
    testing::TrigVector tv;
    tv.comps = {testing::TrigPoly{3, kTwoPi, {{{0, 1, 1}, eps, 0.0}}},
                testing::TrigPoly{3, kTwoPi, {{{2, 0, 0}, 0.5 * eps, std::numbers::pi / 2}}},
                testing::TrigPoly{3, kTwoPi, {{{1, -1, 0}, eps, 0.0}}}};
    const VectorField ell = tv.sample_on(g);
    const Tensor2Field Q = compute_Q(label_gradient(ell));
    const Tensor3Field C = compute_C(ell, Q);
    std::mt19937 rng(4);
    std::uniform_int_distribution<Eigen::Index> pick(0, g.points() - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Index p = pick(rng);
      const auto x = g.position(p);
      Eigen::Matrix3d gradA;
      for (int i = 0; i < 3; ++i)
        for (int m = 0; m < 3; ++m) gradA(i, m) = (i == m) + tv.comps[m].d1(x, i);
      const Eigen::Matrix3d q = gradA.inverse();
      for (int m = 0; m < 3; ++m)
        for (int k = 0; k < 3; ++k)
          for (int i = 0; i < 3; ++i) {
            double c = 0.0;
            for (int j = 0; j < 3; ++j) c += q(i, j) * tv.comps[m].d2(x, j, k);
            worst = std::max(worst, std::abs(c - C(m, k, i)[p]));
          }
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("braces identity (d_i A_m) C(r,q,m) = d_q d_i A_r") {
    const VectorField ell = displacement_with_strain(g, 2, 8, 0.2).sample_on(g);
    const Tensor2Field gradA = label_gradient(ell);
    const Tensor3Field C = compute_C(ell, compute_Q(gradA));
    double worst = 0.0;
    for (int r = 0; r < 3; ++r) {
      ScalarField lr(g);
      lr.values() = ell(r);
      const Tensor2Field h = hessian(lr);
      for (int i = 0; i < 3; ++i)
        for (int q = 0; q < 3; ++q) {
          Eigen::ArrayXd lhs = Eigen::ArrayXd::Zero(g.points());
          for (int m = 0; m < 3; ++m) lhs += gradA(i, m) * C(r, q, m);
          worst = std::max(worst, (lhs - h(q, i)).abs().maxCoeff());
        }
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("reconstruct_u and compute_w") {
  const Grid g(3, 16, kTwoPi);
  const VectorField u0 = random_solenoidal(g, 2, 3, 1.0);
  const VectorField zero(g);

  const Reconstruction r0 = reconstruct_u(zero, u0);
  CHECK(max_abs(r0.n) < 1e-14);
  CHECK(max_abs(r0.u - u0) < 1e-13);

  const ScalarField phi = random_trig(3, kTwoPi, 2, 5).sample_on(g);
  CHECK(max_abs(reconstruct_u(zero, gradient(phi)).u) < 1e-12);

  CHECK(max_abs(compute_w(zero, u0) - u0) == 0.0);
  CHECK(max_abs(compute_w(u0, zero)) == 0.0);

  const VectorField ell = displacement_with_strain(g, 2, 7, 0.1).sample_on(g);
  const VectorField v = random_trig_vector(3, kTwoPi, 2, 9).sample_on(g);
  const Reconstruction r = reconstruct_u(ell, v);
  const VectorField projected = leray_project(compute_w(ell, v));
  CHECK(max_abs(r.u - projected) < 1e-12 * max_abs(projected));
  CHECK(rms(divergence(r.u)) < 1e-10 * rms(r.u));
  CHECK(std::abs(mean(r.n)) < 1e-14);
}

TEST_CASE("el_rhs at t = 0") {
  const Grid g(2, 32, kTwoPi);
  const VectorField u0 = random_solenoidal(g, 3, 2, 1.0);
  const FlowParams p{0.05, ForcingSpec::multi_mode(0.3)};
  const VectorField f = p.forcing.evaluate(g, 0.0);
  const ELState s = make_el_state(u0);
  const ELDerived d = el_derive(s);
  const ELVariables r = el_rhs(s, d, p, f);
  CHECK(max_abs(r.ell + u0) < 1e-13);
  const VectorField expect = dealias(f - matvec_transposed(jacobian(u0), u0));
  CHECK(max_abs(r.v - expect) < 1e-12);
  CHECK(max_abs(r.n) == 0.0);
}

TEST_CASE("el_rhs: velocity tendency matches the Navier-Stokes right-hand side") {
  const Grid g(2, 64, kTwoPi);
  const FlowParams p{0.05, ForcingSpec::single_mode(0.4)};
  const ELState s = random_state(g, 4, 0.1);
  const double dt = 2e-4;
  const ELState sp = el_step(s, p, dt, no_reset());
  const VectorField up = reconstruct_u(sp.ell, sp.v).u;
  const ELState sm = el_step(s, p, -dt, no_reset());
  const VectorField um = reconstruct_u(sm.ell, sm.v).u;
  const VectorField dudt = (0.5 / dt) * (up - um);
  const VectorField u = reconstruct_u(s.ell, s.v).u;
  const VectorField expect = ns_rhs(u, p.forcing.evaluate(g, 0.0)) + p.nu * laplacian(u);
  CHECK(max_abs(dudt - expect) < 1e-6 * max_abs(expect));
}

TEST_CASE("el_step") {
  SUBCASE("Euler mode rearranges v without changing its maximum") {
    const Grid g(2, 128, kTwoPi);
    const FlowParams p{0.0, ForcingSpec::zero()};
    ELState s = make_el_state(taylor_green_2d(g));
    const double v0 = sup_norm(s.v);
    for (int i = 0; i < 50; ++i) {
      s = el_step(s, p, 2e-3, no_reset());
      CHECK(std::abs(sup_norm(s.v) - v0) < 1e-3 * v0);
    }
  }
  SUBCASE("short Taylor-Green run matches the classical solver") {
    const Grid g(2, 32, kTwoPi);
    const FlowParams p{0.01, ForcingSpec::zero()};
    ELState s = make_el_state(taylor_green_2d(g));
    NSState ns{0.0, taylor_green_2d(g)};
    ELStepOptions o;
    o.reset_threshold = 0.05;
    for (int i = 0; i < 100; ++i) {
      s = el_step(s, p, 2e-3, o);
      ns = ns_step(ns, p, 2e-3);
    }
    CHECK(s.reset_count > 0);
    const VectorField u = reconstruct_u(s.ell, s.v).u;
    CHECK(l2_norm(u - ns.u) / l2_norm(ns.u) < 1e-8);
  }
  SUBCASE("fourth-order convergence of reconstructed u under step halving") {
    const Grid g(2, 32, kTwoPi);
    const FlowParams p{0.02, ForcingSpec::single_mode(0.3)};
    const ELState s0 = make_el_state(random_solenoidal(g, 3, 8, 1.0));
    const double T = 0.3;
    auto u_at = [&](int steps) {
      const ELState s = advance(s0, p, T / steps, steps, no_reset());
      return reconstruct_u(s.ell, s.v).u;
    };
    const VectorField ref = u_at(160);
    const double ratio = max_abs(u_at(10) - ref) / max_abs(u_at(20) - ref);
    CHECK(ratio == doctest::Approx(16.0).epsilon(0.2));
  }
  SUBCASE("loss of invertibility without reset is an error") {
    const Grid g(2, 16, kTwoPi);
    ELState s = make_el_state(taylor_green_2d(g));
    s.ell(0) = sample(g, [](const auto& x) { return -0.95 * std::sin(x[0]); }).values();
    ELStepOptions o = no_reset();
    o.min_det = 0.1;
    CHECK_THROWS_AS(el_step(s, FlowParams{0.01, ForcingSpec::zero()}, 0.05, o), SingularMapError);
  }
  SUBCASE("automatic reset keeps the displacement gradient under the threshold") {
    const Grid g(2, 32, kTwoPi);
    ELState s = make_el_state(taylor_green_2d(g));
    ELStepOptions o;
    o.reset_threshold = 0.1;
    for (int i = 0; i < 60; ++i) {
      s = el_step(s, FlowParams{0.01, ForcingSpec::zero()}, 5e-3, o);
      CHECK(label_strain(s.ell) <= 0.1);
    }
    CHECK(s.reset_count >= 2);
  }
}

TEST_CASE("reset_labels") {
  const Grid g(3, 16, kTwoPi);
  const ELState fresh = make_el_state(random_solenoidal(g, 2, 1, 1.0));
  const ELState same = reset_labels(fresh);
  CHECK(max_abs(same.v - fresh.v) == 0.0);
  CHECK(same.reset_count == 1);

  const ELState s = random_state(g, 6, 0.2);
  const ELState r = reset_labels(s);
  const VectorField before = reconstruct_u(s.ell, s.v).u;
  const VectorField after = reconstruct_u(r.ell, r.v).u;
  CHECK(max_abs(before - after) < 1e-12);
  const ELDerived d = el_derive(r);
  CHECK(max_abs(d.C) == 0.0);
  CHECK(max_abs(d.Q - identity_tensor(g)) == 0.0);
  CHECK(max_abs(r.n_pot - reconstruct_u(s.ell, s.v).n) < 1e-12);
}

TEST_CASE("gauge_transform leaves u unchanged") {
  const Grid g(3, 16, kTwoPi);
  ScalarField c(g);
  c.values().setConstant(2.5);
  const ELState s0 = make_el_state(random_solenoidal(g, 2, 2, 1.0));
  const ELState sc = gauge_transform(s0, c);
  CHECK(max_abs(sc.v - s0.v) < 1e-13);
  CHECK(max_abs(sc.n_pot - s0.n_pot - c) < 1e-15);

  const ScalarField phi = random_trig(3, kTwoPi, 2, 11).sample_on(g);
  const ELState s1 = gauge_transform(s0, phi);
  CHECK(max_abs(s1.v - s0.v - gradient(phi)) < 1e-12);
  CHECK(max_abs(reconstruct_u(s1.ell, s1.v).u - s0.v) < 1e-12);

  const ELState s = random_state(g, 12, 0.15);
  const ELState t = gauge_transform(s, phi);
  CHECK(max_abs(reconstruct_u(t.ell, t.v).u - reconstruct_u(s.ell, s.v).u) < 1e-12);
}

TEST_CASE("cotangent dynamics") {
  SUBCASE("steady shear: stretching term balances in closed form") {
    const Grid g(2, 32, kTwoPi);
    const VectorField u = sample_vector(g, [](const auto& x) { return std::array<double, 3>{std::sin(x[1]), 0, 0}; });
    const VectorField r = cotangent_rhs(u, VectorField(g));
    const ScalarField expect = sample(g, [](const auto& x) { return -std::sin(x[1]) * std::cos(x[1]); });
    CHECK(r(0).abs().maxCoeff() < 1e-13);
    CHECK((r(1) - expect.values()).abs().maxCoeff() < 1e-13);
    CotangentState cs{0.0, u};
    for (int i = 0; i < 10; ++i) cs = cotangent_step(cs, FlowParams{0.0, ForcingSpec::zero()}, 0.01);
    CHECK(max_abs(leray_project(cs.w) - u) < 1e-12);
  }
  SUBCASE("velocity trajectory matches the classical solver, w matches (grad A)^T v") {
    const Grid g(2, 64, kTwoPi);
    const FlowParams p{0.02, ForcingSpec::single_mode(0.2)};
    const VectorField u0 = random_solenoidal(g, 2, 15, 1.0);
    CotangentState cs{0.0, u0};
    NSState ns{0.0, u0};
    ELState el = make_el_state(u0);
    for (int i = 0; i < 50; ++i) {
      cs = cotangent_step(cs, p, 4e-3);
      ns = ns_step(ns, p, 4e-3);
      el = el_step(el, p, 4e-3, no_reset());
    }
    CHECK(l2_norm(leray_project(cs.w) - ns.u) / l2_norm(ns.u) < 1e-7);
    CHECK(l2_norm(compute_w(el.ell, el.v) - cs.w) / l2_norm(cs.w) < 1e-7);
  }
}

TEST_CASE("static and dynamic potentials agree; pressure is recovered from the potential") {
  const Grid g(2, 128, kTwoPi);
  const FlowParams p{0.03, ForcingSpec::single_mode(0.3)};
  const VectorField u0 = random_solenoidal(g, 2, 21, 1.0);
  ELState st = make_el_state(u0, PotentialMode::Static);
  ELState dy = make_el_state(u0, PotentialMode::Dynamic);
  const double dt = 2e-3;
  for (int i = 0; i < 100; ++i) {
    st = el_step(st, p, dt, no_reset());
    dy = el_step(dy, p, dt, no_reset());
  }
  ScalarField nd = dy.n_pot;
  nd.values() -= nd.values().mean();
  CHECK(max_abs(st.n_pot - nd) < 1e-8 * max_abs(st.n_pot));
  CHECK(max_abs(reconstruct_u(st.ell, st.v).u - el_derive(dy).u) < 1e-8);

  // Γn + |u|^2/2 = p + c, with ∂_t n by centred differencing of the static potential.
  const double h = 5e-4;
  const ELState sp = el_step(st, p, h, no_reset());
  const ELState sm = el_step(st, p, -h, no_reset());
  const ScalarField dndt = (0.5 / h) * (sp.n_pot - sm.n_pot);
  const VectorField u = reconstruct_u(st.ell, st.v).u;
  ScalarField gamma_n = dndt + dot(u, gradient(st.n_pot)) - p.nu * laplacian(st.n_pot);
  ScalarField lhs = gamma_n + 0.5 * dot(u, u);
  lhs.values() -= lhs.values().mean();
  const ScalarField pressure = riesz_pressure(u);
  CHECK(max_abs(lhs - pressure) < 1e-5 * max_abs(pressure));
}

TEST_CASE("passive scalar obeys the maximum principle") {
  const Grid g(2, 64, kTwoPi);
  const FlowParams p{0.05, ForcingSpec::zero()};
  const VectorField u = taylor_green_2d(g);
  ScalarField phi = sample(g, [](const auto& x) { return std::exp(std::cos(x[0]) + 0.5 * std::sin(x[1])); });
  auto rhs = [&](const ScalarField& s, double) { return dealias(-1.0 * dot(u, gradient(s))); };
  auto prop = [&](const ScalarField& s, double tau) { return heat(s, p.nu * tau); };
  double hi = phi.values().maxCoeff(), lo = phi.values().minCoeff();
  for (int i = 0; i < 50; ++i) {
    phi = lawson_rk4(phi, 0.0, 5e-3, rhs, prop);
    CHECK(phi.values().maxCoeff() <= hi + 1e-10);
    CHECK(phi.values().minCoeff() >= lo - 1e-10);
    hi = phi.values().maxCoeff();
    lo = phi.values().minCoeff();
  }
}
