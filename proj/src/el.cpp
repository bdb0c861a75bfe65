#include "elflow/el.hpp"

#include "elflow/errors.hpp"
#include "elflow/integrator.hpp"
#include "elflow/spectral.hpp"

namespace elflow {

ELState make_el_state(const VectorField& u0, PotentialMode mode, double t) {
  return ELState{t, VectorField(u0.grid()), u0, ScalarField(u0.grid()), mode, 0};
}

Tensor2Field label_gradient(const VectorField& ell) { return jacobian(ell) + identity_tensor(ell.grid()); }

ScalarField determinant(const Tensor2Field& a) {
  ScalarField det(a.grid());
  if (a.dim() == 2) {
    det.values() = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  } else {
    det.values() = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                   a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                   a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
  return det;
}

Tensor2Field compute_Q(const Tensor2Field& a, double min_det) {
  const ScalarField det = determinant(a);
  Eigen::Index worst = 0;
  const double smallest = det.values().abs().minCoeff(&worst);
  if (!(smallest > min_det)) throw SingularMapError(worst, det.values()[worst]);

  const Eigen::ArrayXd inv = det.values().inverse();
  Tensor2Field q(a.grid());
  if (a.dim() == 2) {
    q(0, 0) = a(1, 1) * inv;
    q(0, 1) = -a(0, 1) * inv;
    q(1, 0) = -a(1, 0) * inv;
    q(1, 1) = a(0, 0) * inv;
    return q;
  }
  // Q(i, j) = cofactor(j, i) / det
  q(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) * inv;
  q(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) * inv;
  q(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) * inv;
  q(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) * inv;
  q(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) * inv;
  q(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) * inv;
  q(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) * inv;
  q(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) * inv;
  q(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) * inv;
  return q;
}

Tensor3Field compute_C(const VectorField& ell, const Tensor2Field& Q) {
  const int d = ell.dim();
  Tensor3Field c(ell.grid());
  for (int m = 0; m < d; ++m) {
    ScalarField lm(ell.grid());
    lm.values() = ell(m);
    const Tensor2Field h = hessian(lm);
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c(m, k, i) += Q(i, j) * h(j, k);
  }
  return c;
}

VectorField el_gradient(const Tensor2Field& Q, const ScalarField& g) { return matvec(Q, gradient(g)); }

ScalarField commutator_magnitude_sq(const Tensor3Field& C) {
  ScalarField s(C.grid());
  for (int c = 0; c < C.size(); ++c) s.values() += C[c].square();
  return s;
}

VectorField compute_w(const VectorField& ell, const VectorField& v) { return matvec(label_gradient(ell), v); }

Reconstruction reconstruct_u(const VectorField& ell, const VectorField& v) {
  VectorField w = compute_w(ell, v);
  ScalarField div = divergence(w);
  div.values() -= div.values().mean();  // spectral divergence has zero mean up to rounding
  ScalarField n = inverse_laplacian(div);
  return {w - gradient(n), std::move(n)};
}

ELDerived el_derive(const ELState& s, double min_det) {
  const Grid& g = s.ell.grid();
  Tensor2Field grad_ell = jacobian(s.ell);
  Tensor2Field gradA = grad_ell + identity_tensor(g);
  Tensor2Field Q = compute_Q(gradA, min_det);
  ScalarField det = determinant(gradA);
  Tensor3Field C = compute_C(s.ell, Q);
  VectorField w = matvec(gradA, s.v);
  ScalarField n(g);
  if (s.potential_mode == PotentialMode::Static) {
    ScalarField div = divergence(w);
    div.values() -= div.values().mean();
    n = inverse_laplacian(div);
  } else {
    n = s.n_pot;
  }
  VectorField u = w - gradient(n);
  VectorField A = s.ell;
  for (int i = 0; i < g.dim(); ++i) A(i) += coordinate(g, i).values();
  return ELDerived{std::move(A), std::move(grad_ell), std::move(gradA), std::move(Q), std::move(det),
                   std::move(C),  std::move(w),        std::move(n),     std::move(u)};
}

ELVariables el_rhs(const ELState& s, const ELDerived& d, const FlowParams& params, const VectorField& f) {
  const Grid& g = s.ell.grid();
  const int dim = g.dim();
  const VectorField& u = d.u;

  VectorField dell = -(matvec_transposed(d.grad_ell, u) + u);

  const Tensor2Field grad_v = jacobian(s.v);  // grad_v(k, m) = ∂_k v_m
  VectorField dv = matvec(d.Q, f) - matvec_transposed(grad_v, u);
  if (params.nu != 0.0) {
    const double two_nu = 2.0 * params.nu;
    for (int i = 0; i < dim; ++i)
      for (int m = 0; m < dim; ++m)
        for (int k = 0; k < dim; ++k) dv(i) += two_nu * d.C(m, k, i) * grad_v(k, m);
  }

  ScalarField dn(g);
  if (s.potential_mode == PotentialMode::Dynamic) {
    const ScalarField p = riesz_pressure(u, 0.0);
    dn.values() = p.values() - 0.5 * dot(u, u).values() - dot(u, gradient(s.n_pot)).values();
    dn.values() -= dn.values().mean();
    dn = dealias(dn);
  }
  return ELVariables{dealias(dell), dealias(dv), std::move(dn)};
}

double label_strain(const VectorField& ell) { return max_abs(jacobian(ell)); }

ELState el_step(const ELState& s, const FlowParams& params, double dt, const ELStepOptions& opts) {
  const Grid& g = s.ell.grid();
  const VectorField f = params.forcing.evaluate(g, s.t);  // steady catalog
  bool first = true;
  auto rhs = [&](const ELVariables& y, double t) {
    ELState stage{t, y.ell, y.v, y.n, s.potential_mode, s.reset_count};
    const ELDerived d = el_derive(stage, opts.min_det);
    if (first) {
      check_cfl(d.u, dt, opts.limits);
      first = false;
    }
    return el_rhs(stage, d, params, f);
  };
  auto propagate = [&](const ELVariables& y, double tau) {
    const double nt = params.nu * tau;
    return ELVariables{heat(y.ell, nt), heat(y.v, nt), heat(y.n, nt)};
  };

  ELVariables y0{s.ell, s.v, s.n_pot};
  ELVariables y1 = lawson_rk4(y0, s.t, dt, rhs, propagate);

  ELState out{s.t + dt, std::move(y1.ell), std::move(y1.v), std::move(y1.n), s.potential_mode, s.reset_count};
  check_blowup(out.v, out.t, opts.limits);
  check_blowup(out.ell, out.t, StepLimits{opts.limits.cfl, opts.limits.blowup_factor, 0.0});

  const Tensor2Field grad_ell = jacobian(out.ell);
  const ScalarField det = determinant(grad_ell + identity_tensor(g));
  Eigen::Index worst = 0;
  if (!(det.values().abs().minCoeff(&worst) > opts.min_det)) throw SingularMapError(worst, det.values()[worst]);

  if (out.potential_mode == PotentialMode::Static) out.n_pot = reconstruct_u(out.ell, out.v).n;
  if (opts.reset_enabled && max_abs(grad_ell) > opts.reset_threshold) out = reset_labels(out);
  return out;
}

ELState reset_labels(const ELState& s) {
  ELState out = s;
  out.v = compute_w(s.ell, s.v);
  out.ell = VectorField(s.ell.grid());
  if (s.potential_mode == PotentialMode::Static) out.n_pot = reconstruct_u(out.ell, out.v).n;
  out.reset_count = s.reset_count + 1;
  return out;
}

ELState gauge_transform(const ELState& s, const ScalarField& phi) {
  ELState out = s;
  const Tensor2Field Q = compute_Q(label_gradient(s.ell));
  out.v += el_gradient(Q, phi);
  out.n_pot += phi;
  return out;
}

VectorField cotangent_rhs(const VectorField& w, const VectorField& f) {
  const VectorField u = leray_project(w);
  const Tensor2Field grad_w = jacobian(w);
  const Tensor2Field grad_u = jacobian(u);
  return dealias(f - matvec_transposed(grad_w, u) - matvec(grad_u, w));
}

CotangentState cotangent_step(const CotangentState& s, const FlowParams& params, double dt,
                              const StepLimits& limits) {
  const Grid& g = s.w.grid();
  check_cfl(leray_project(s.w), dt, limits);
  const VectorField f = params.forcing.evaluate(g, s.t);
  auto rhs = [&](const VectorField& w, double) { return cotangent_rhs(w, f); };
  auto propagate = [&](const VectorField& w, double tau) { return heat(w, params.nu * tau); };
  CotangentState out{s.t + dt, lawson_rk4(s.w, s.t, dt, rhs, propagate)};
  check_blowup(out.w, out.t, limits);
  return out;
}

}  // namespace elflow
