#include "elflow/identities.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "elflow/integrator.hpp"
#include "elflow/spectral.hpp"

namespace elflow {

namespace {

ScalarField component(const Grid& g, const Eigen::ArrayXd& values) {
  ScalarField s(g);
  s.values() = values;
  return s;
}

double safe_scale(double s) { return s > 0.0 ? s : 1.0; }

/// (u·∇)T applied to every component of T.
template <int Rank>
TensorField<Rank> advect(const VectorField& u, const TensorField<Rank>& f) {
  const Grid& g = f.grid();
  TensorField<Rank> out(g);
  for (int c = 0; c < f.size(); ++c) {
    const VectorField grad = gradient(component(g, f[c]));
    for (int l = 0; l < g.dim(); ++l) out[c] += u(l) * grad(l);
  }
  return out;
}

struct Joint {
  ELVariables y;
  ScalarField g;

  Joint& operator+=(const Joint& o) {
    y += o.y;
    g += o.g;
    return *this;
  }
  Joint& operator*=(double a) {
    y *= a;
    g *= a;
    return *this;
  }
  friend Joint operator+(Joint a, const Joint& b) { return a += b; }
  friend Joint operator*(double a, Joint b) { return b *= a; }
};

/// One Lawson step of the EL variables together with a scalar obeying Γg = 0.
Joint joint_step(const ELState& s, const ScalarField& g, const FlowParams& params, double dt) {
  const VectorField f = params.forcing.evaluate(g.grid(), s.t);
  auto rhs = [&](const Joint& j, double t) {
    const ELState stage{t, j.y.ell, j.y.v, j.y.n, s.potential_mode, s.reset_count};
    const ELDerived d = el_derive(stage);
    ScalarField dg = dealias(-1.0 * dot(d.u, gradient(j.g)));
    return Joint{el_rhs(stage, d, params, f), std::move(dg)};
  };
  auto propagate = [&](const Joint& j, double tau) {
    const double nt = params.nu * tau;
    return Joint{ELVariables{heat(j.y.ell, nt), heat(j.y.v, nt), heat(j.y.n, nt)}, heat(j.g, nt)};
  };
  return lawson_rk4(Joint{ELVariables{s.ell, s.v, s.n_pot}, g}, s.t, dt, rhs, propagate);
}

VectorField el_gradient_of(const VectorField& ell, const ScalarField& g) {
  return el_gradient(compute_Q(label_gradient(ell)), g);
}

}  // namespace

IdentityReport make_report(std::string name, double raw, double scale, double tolerance) {
  IdentityReport r;
  r.name = std::move(name);
  r.scale = safe_scale(scale);
  r.residual = raw / r.scale;
  r.tolerance = tolerance;
  r.pass = r.residual < tolerance;
  return r;
}

void to_json(nlohmann::json& j, const IdentityReport& r) {
  j = nlohmann::json{{"identity", r.name},
                     {"residual", r.residual},
                     {"tolerance", r.tolerance},
                     {"scale", r.scale},
                     {"pass", r.pass}};
  for (const auto& [k, v] : r.extra) j[k] = v;
}

IdentityReport check_el_derivative_roundtrip(const ScalarField& g, const VectorField& ell, double tolerance) {
  const Tensor2Field gradA = label_gradient(ell);
  const VectorField grad = gradient(g);
  const VectorField back = matvec(gradA, el_gradient(compute_Q(gradA), g));
  return make_report("el_derivative_roundtrip", max_abs(grad - back), max_abs(grad), tolerance);
}

IdentityReport check_commutator(const ScalarField& g, const Tensor2Field& Q, const Tensor3Field& C,
                                double tolerance) {
  const Grid& grid = g.grid();
  const int d = grid.dim();
  const Tensor2Field h = hessian(g);
  const VectorField ga = el_gradient(Q, g);
  const Tensor2Field d_ga = jacobian(ga);  // d_ga(k, i) = ∂_k ∇_A^i g
  double worst = 0.0;
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      // ∇_A^i ∂_k g - ∂_k ∇_A^i g
      Eigen::ArrayXd res = -d_ga(k, i);
      for (int j = 0; j < d; ++j) res += Q(i, j) * h(j, k);
      for (int m = 0; m < d; ++m) res -= C(m, k, i) * ga(m);
      worst = std::max(worst, res.abs().maxCoeff());
    }
  return make_report("commutator", worst, max_abs(h), tolerance);
}

IdentityReport check_product_rule(const ScalarField& f, const ScalarField& g, const VectorField& u, double nu,
                                  double tolerance) {
  auto L = [&](const ScalarField& s) { return dot(u, gradient(s)) - nu * laplacian(s); };
  const ScalarField fg = f * g;
  const ScalarField Lfg = L(fg);
  const ScalarField Lf_g = L(f) * g;
  const ScalarField f_Lg = f * L(g);
  const ScalarField defect = (2.0 * nu) * dot(gradient(f), gradient(g));
  const ScalarField res = Lfg - Lf_g - f_Lg + defect;
  const double scale = max_abs(Lfg) + max_abs(Lf_g) + max_abs(f_Lg) + max_abs(defect);
  return make_report("product_rule", max_abs(res), scale, tolerance);
}

IdentityReport check_adjoint(const ScalarField& f, const ScalarField& g, const Tensor2Field& Q, const Tensor3Field& C,
                             double tolerance) {
  const Grid& grid = f.grid();
  const int d = grid.dim();
  const VectorField af = el_gradient(Q, f);
  const VectorField ag = el_gradient(Q, g);
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    Eigen::ArrayXd source = Eigen::ArrayXd::Zero(grid.points());
    for (int j = 0; j < d; ++j)
      for (int p = 0; p < d; ++p) source += Q(i, j) * C(p, j, p);
    const double lhs = integral(component(grid, af(i) * g.values()));
    const double rhs = integral(component(grid, f.values() * (-ag(i) + source * g.values())));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  const double scale = l2_norm(af) * l2_norm(g) + l2_norm(f) * l2_norm(ag);
  return make_report("adjoint", worst, scale, tolerance);
}

IdentityReport check_braces(const VectorField& ell, double tolerance) {
  const Grid& grid = ell.grid();
  const int d = grid.dim();
  const Tensor2Field gradA = label_gradient(ell);
  const Tensor3Field C = compute_C(ell, compute_Q(gradA));
  double worst = 0.0, scale = 0.0;
  for (int r = 0; r < d; ++r) {
    const Tensor2Field h = hessian(component(grid, ell(r)));
    scale = std::max(scale, max_abs(h));
    for (int i = 0; i < d; ++i)
      for (int q = 0; q < d; ++q) {
        Eigen::ArrayXd res = -h(q, i);
        for (int m = 0; m < d; ++m) res += gradA(i, m) * C(r, q, m);
        worst = std::max(worst, res.abs().maxCoeff());
      }
  }
  return make_report("braces", worst, scale, tolerance);
}

IdentityReport check_gamma_commutation(const ELState& s, const ScalarField& g, const FlowParams& params, double dt,
                                       double tolerance_coeff) {
  const Grid& grid = g.grid();
  const int d = grid.dim();
  const Joint plus = joint_step(s, g, params, dt);
  const Joint minus = joint_step(s, g, params, -dt);
  const ELDerived now = el_derive(s);

  const VectorField h = el_gradient(now.Q, g);
  const VectorField dhdt = (0.5 / dt) * (el_gradient_of(plus.y.ell, plus.g) - el_gradient_of(minus.y.ell, minus.g));
  const VectorField gamma_h = dhdt + advect(now.u, h) - params.nu * laplacian(h);

  const Tensor2Field dh = jacobian(h);  // dh(k, m) = ∂_k ∇_A^m g
  VectorField expect(grid);
  for (int i = 0; i < d; ++i)
    for (int m = 0; m < d; ++m)
      for (int k = 0; k < d; ++k) expect(i) += (2.0 * params.nu) * now.C(m, k, i) * dh(k, m);

  IdentityReport r =
      make_report("gamma_commutation", max_abs(gamma_h - expect), max_abs(dhdt), tolerance_coeff * dt * dt);
  r.extra["dt"] = dt;
  r.extra["source"] = max_abs(expect) / r.scale;
  return r;
}

IdentityReport check_C_evolution(const ELState& s, const FlowParams& params, double dt, double tolerance_coeff) {
  const Grid& grid = s.ell.grid();
  const int d = grid.dim();
  ELStepOptions opts;
  opts.reset_enabled = false;
  const ELDerived now = el_derive(s);
  const ELState next = el_step(s, params, dt, opts);
  const Tensor3Field C1 = compute_C(next.ell, compute_Q(label_gradient(next.ell)));
  const Tensor3Field dCdt = (1.0 / dt) * (C1 - now.C);

  Tensor3Field res = dCdt + advect(now.u, now.C) - params.nu * laplacian(now.C);
  const Tensor2Field grad_u = jacobian(now.u);  // grad_u(k, l) = ∂_k u_l
  std::vector<Tensor2Field> hess_u;
  for (int l = 0; l < d; ++l) hess_u.push_back(hessian(component(grid, now.u(l))));
  std::vector<VectorField> grad_C;  // indexed by flat component of C
  for (int c = 0; c < now.C.size(); ++c) grad_C.push_back(gradient(component(grid, now.C[c])));
  auto flat = [d](int m, int k, int i) { return (m * d + k) * d + i; };

  Tensor3Field viscous(grid);
  for (int m = 0; m < d; ++m)
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < d; ++i) {
        Eigen::ArrayXd& r = res(m, k, i);
        for (int l = 0; l < d; ++l) {
          for (int j = 0; j < d; ++j) r += now.gradA(l, m) * now.Q(i, j) * hess_u[l](j, k);
          r += grad_u(k, l) * now.C(m, l, i);
          for (int j = 0; j < d; ++j) viscous(m, k, i) += (2.0 * params.nu) * now.C(j, l, i) * grad_C[flat(m, k, j)](l);
        }
      }
  res -= viscous;
  IdentityReport r = make_report("C_evolution", max_abs(res), max_abs(dCdt), tolerance_coeff * dt);
  r.extra["dt"] = dt;
  r.extra["viscous_source"] = max_abs(viscous) / r.scale;
  return r;
}

ZSample z_sample(const ELState& s) {
  const Tensor2Field gradA = label_gradient(s.ell);
  const Tensor2Field Q = compute_Q(gradA, 0.0);
  const ScalarField det = determinant(gradA);
  return ZSample{s.t, max_abs(matmul(gradA, Q) - identity_tensor(s.ell.grid())), det.values().minCoeff(),
                 det.values().maxCoeff()};
}

IdentityReport check_Z_stability(std::span<const ZSample> history, double tolerance) {
  double worst = 0.0, lo = 1.0, hi = 1.0;
  for (const ZSample& z : history) {
    worst = std::max(worst, z.z_residual);
    lo = std::min(lo, z.det_min);
    hi = std::max(hi, z.det_max);
  }
  IdentityReport r = make_report("Z_stability", worst, 1.0, tolerance);
  r.extra["det_min"] = lo;
  r.extra["det_max"] = hi;
  r.extra["delta"] = std::max(1.0 - lo, hi - 1.0);
  return r;
}

double observed_order(std::span<const double> dts, std::span<const double> residuals) {
  const std::size_t n = dts.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(dts[i]), y = std::log(residuals[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

template <class Check>
ConvergenceStudy study(std::string name, double nominal, std::span<const double> dts, Check&& check) {
  ConvergenceStudy c;
  c.name = std::move(name);
  c.nominal_order = nominal;
  for (double dt : dts) {
    c.dts.push_back(dt);
    c.residuals.push_back(check(dt).residual);
  }
  c.observed_order = observed_order(c.dts, c.residuals);
  c.pass = std::abs(c.observed_order - nominal) <= 0.3;
  return c;
}

}  // namespace

ConvergenceStudy gamma_commutation_study(const ELState& s, const ScalarField& g, const FlowParams& params,
                                         std::span<const double> dts) {
  return study("gamma_commutation", 2.0, dts,
               [&](double dt) { return check_gamma_commutation(s, g, params, dt); });
}

ConvergenceStudy C_evolution_study(const ELState& s, const FlowParams& params, std::span<const double> dts) {
  return study("C_evolution", 1.0, dts, [&](double dt) { return check_C_evolution(s, params, dt); });
}

void to_json(nlohmann::json& j, const ConvergenceStudy& c) {
  j = nlohmann::json{{"identity", c.name},
                     {"dts", c.dts},
                     {"residuals", c.residuals},
                     {"nominal_order", c.nominal_order},
                     {"observed_order", c.observed_order},
                     {"pass", c.pass}};
}

std::vector<IdentityCase> identity_corpus(const Grid& grid, double band, std::uint64_t seed) {
  std::vector<IdentityCase> cases;
  const VectorField shape = band_limited_noise<1>(grid, band, seed);
  ScalarField f = band_limited_noise<0>(grid, band, seed + 1);
  ScalarField g = band_limited_noise<0>(grid, band, seed + 2);
  VectorField u = leray_project(band_limited_noise<1>(grid, band, seed + 3));
  f = (1.0 / rms(f)) * f;
  g = (1.0 / rms(g)) * g;
  u = (1.0 / rms(u)) * u;
  const double strain = label_strain(shape);
  for (double target : kCorpusStrains) {
    std::ostringstream label;
    label << "strain=" << target;
    cases.push_back(IdentityCase{label.str(), target, (target / strain) * shape, f, g, u});
  }
  return cases;
}

std::vector<IdentityReport> run_identity_suite(const Grid& grid, double band, std::uint64_t seed) {
  std::vector<IdentityReport> out;
  auto tag = [](IdentityReport r, const IdentityCase& c) {
    r.name += "[" + c.label + "]";
    return r;
  };
  for (const IdentityCase& c : identity_corpus(grid, band, seed)) {
    const Tensor2Field Q = compute_Q(label_gradient(c.ell));
    const Tensor3Field C = compute_C(c.ell, Q);
    out.push_back(tag(check_el_derivative_roundtrip(c.g, c.ell), c));
    out.push_back(tag(check_commutator(c.g, Q, C), c));
    out.push_back(tag(check_product_rule(c.f, c.g, c.u, 0.1), c));
    out.push_back(tag(check_adjoint(c.f, c.g, Q, C), c));
    out.push_back(tag(check_braces(c.ell), c));
  }
  return out;
}

}  // namespace elflow
