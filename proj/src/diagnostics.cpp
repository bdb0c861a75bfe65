#include "elflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>

#include "elflow/errors.hpp"
#include "elflow/identities.hpp"
#include "elflow/spectral.hpp"

namespace elflow {

namespace {

double box_volume(const History& h) { return std::pow(h.L, h.dim); }

const TimeSeriesRecord& first(const History& h) {
  if (h.records.empty()) throw IncompleteHistoryError("empty history");
  return h.records.front();
}

const ELMetrics& el_of(const TimeSeriesRecord& r) {
  if (!r.el) throw IncompleteHistoryError("record at t = " + std::to_string(r.t) + " has no displacement data");
  return *r.el;
}

double eps_b(const BoundsConfig& c, int dim, double L) {
  if (!(c.nu > 0.0)) throw ConfigError("bounds require nu > 0");
  return c.forcing.mean_square_inverse_gradient(dim, L) / c.nu;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

}  // namespace

TimeSeriesRecord record(const VectorField& u, double t, double nu) {
  const double volume = u.grid().volume();
  TimeSeriesRecord r;
  r.t = t;
  r.energy = 0.5 * spectral_l2_squared(u) / volume;
  r.dissipation = nu * sobolev_seminorm_sq(u, 1.0) / volume;
  r.u_max = sup_norm(u);
  return r;
}

TimeSeriesRecord record(const ELState& s, const FlowParams& params, const std::vector<int>& m_values) {
  const Grid& g = s.ell.grid();
  const double volume = g.volume();
  const ELDerived d = el_derive(s, 0.0);
  TimeSeriesRecord r = record(d.u, s.t, params.nu);

  ELMetrics e;
  e.ell_max = sup_norm(s.ell);
  e.ell_sq = spectral_l2_squared(s.ell) / volume;
  e.grad_ell_sq = sobolev_seminorm_sq(s.ell, 1.0) / volume;
  e.lap_ell_sq = sobolev_seminorm_sq(s.ell, 2.0) / volume;
  e.grad_lap_ell_sq = sobolev_seminorm_sq(s.ell, 3.0) / volume;
  e.c_cubed = magnitude(d.C).cube().sum() * g.cell_volume();
  const VectorField gq = matvec(d.Q, params.forcing.evaluate(g, s.t));
  for (int m : m_values) {
    e.v_norm[m] = lp_norm(s.v, 2.0 * m);
    e.g_norm[m] = lp_norm(gq, 2.0 * m);
  }
  e.helicity = helicity(d.w, d.u);
  e.det_min = d.det.values().minCoeff();
  e.det_max = d.det.values().maxCoeff();
  e.z_residual = max_abs(matmul(d.gradA, d.Q) - identity_tensor(g));
  e.reset_count = s.reset_count;
  r.el = std::move(e);
  return r;
}

void write_csv(std::ostream& os, const History& h) {
  os << "t,energy,dissipation,u_max,ell_max,ell_sq,grad_ell_sq,lap_ell_sq,grad_lap_ell_sq,c_cubed,helicity,"
        "det_min,det_max,z_residual,reset_count";
  for (int m : h.m_values) os << ",v_norm_m" << m << ",g_norm_m" << m;
  os << '\n' << std::setprecision(17);
  for (const TimeSeriesRecord& r : h.records) {
    os << r.t << ',' << r.energy << ',' << r.dissipation << ',' << r.u_max;
    if (r.el) {
      const ELMetrics& e = *r.el;
      os << ',' << e.ell_max << ',' << e.ell_sq << ',' << e.grad_ell_sq << ',' << e.lap_ell_sq << ','
         << e.grad_lap_ell_sq << ',' << e.c_cubed << ',';
      if (e.helicity) os << *e.helicity;
      os << ',' << e.det_min << ',' << e.det_max << ',' << e.z_residual << ',' << e.reset_count;
      for (int m : h.m_values) os << ',' << e.v_norm.at(m) << ',' << e.g_norm.at(m);
    } else {
      os << ",,,,,,,,,,,";
      for (std::size_t i = 0; i < h.m_values.size(); ++i) os << ",,";
    }
    os << '\n';
  }
}

double time_integral(const History& h, const std::function<double(const TimeSeriesRecord&)>& value, double t0,
                     double t) {
  if (same_time(t, t0)) return 0.0;
  const double slack = 1e-9 * std::max(1.0, std::abs(t));
  double acc = 0.0;
  const TimeSeriesRecord* prev = nullptr;
  bool covered_start = false, covered_end = false;
  for (const TimeSeriesRecord& r : h.records) {
    if (r.t < t0 - slack || r.t > t + slack) continue;
    if (!prev) {
      covered_start = same_time(r.t, t0);
    } else {
      acc += 0.5 * (r.t - prev->t) * (value(*prev) + value(r));
    }
    covered_end = same_time(r.t, t);
    prev = &r;
  }
  if (!covered_start || !covered_end)
    throw IncompleteHistoryError("history does not cover [" + std::to_string(t0) + ", " + std::to_string(t) + "]");
  return acc;
}

BoundCheck make_check(std::string name, double t, double lhs, double rhs, bool asserted) {
  BoundCheck b;
  b.name = std::move(name);
  b.t = t;
  b.lhs = lhs;
  b.rhs = rhs;
  b.margin = lhs > 0.0 ? rhs / lhs : std::numeric_limits<double>::infinity();
  b.asserted = asserted;
  b.pass = lhs <= rhs;
  return b;
}

void to_json(nlohmann::json& j, const BoundCheck& b) {
  j = nlohmann::json{{"name", b.name},         {"t", b.t},
                     {"lhs", b.lhs},           {"rhs", b.rhs},
                     {"margin", b.margin},     {"asserted", b.asserted},
                     {"pass", b.pass}};
  if (!std::isfinite(b.margin)) j["margin"] = nullptr;
}

KInfty k_infty(double K0, double nu, double t0, double t, double f_l2_sq_integral, double C_K) {
  if (!(t > t0)) throw ConfigError("k_infty requires t > t0");
  const double tau = t - t0;
  KInfty k;
  const double gamma2 = std::sqrt(nu * nu * nu / tau);
  k.r[0] = K0 / (nu * nu);
  k.r[1] = nu * nu / gamma2;
  k.r[2] = tau * gamma2 / nu;
  k.r[3] = std::pow(std::sqrt(gamma2) * tau, 2.0 / 3.0);
  k.r[4] = tau / (nu * nu) * f_l2_sq_integral;
  k.r[5] = std::sqrt(nu * tau);
  k.value = C_K * (k.r[0] + k.r[4] + k.r[5]);
  return k;
}

KBoundsReport k_bounds(const History& h, const BoundsConfig& c, double t0, double t) {
  const double V = box_volume(h);
  KBoundsReport k;
  k.t0 = t0;
  k.t = t;
  k.F2 = c.forcing.mean_square(h.dim);
  k.G2 = c.forcing.mean_square_inverse_gradient(h.dim, h.L);
  k.Lf2 = c.forcing.length_scale_sq(h.dim, h.L);
  k.eps_B = eps_b(c, h.dim, h.L);

  const TimeSeriesRecord* r0 = nullptr;
  const TimeSeriesRecord* rt = nullptr;
  for (const TimeSeriesRecord& r : h.records) {
    if (same_time(r.t, t0)) r0 = &r;
    if (same_time(r.t, t)) rt = &r;
  }
  if (!r0 || !rt) throw IncompleteHistoryError("no record at the requested interval ends");
  const double tau = t - t0;
  const double u0_sq = 2.0 * V * r0->energy;
  const double f_sq_integral = tau * V * k.F2;  // steady forcing
  k.k0 = 2.0 * u0_sq + 3.0 * tau * f_sq_integral;
  k.k1 = u0_sq + tau * V * k.G2 / c.nu;
  k.K0 = std::min(k.k0, k.k1);
  k.B = 4.0 * r0->energy + tau * k.eps_B;
  if (tau > 0.0) k.k_inf = k_infty(k.K0, c.nu, t0, t, f_sq_integral, c.C_K);

  const double eps_integral = time_integral(h, [](const TimeSeriesRecord& r) { return r.dissipation; }, t0, t);
  k.checks.push_back(make_check("en", t, 2.0 * V * rt->energy + V * eps_integral, k.K0, true));
  k.checks.push_back(make_check("energyb", t, rt->energy + eps_integral, k.B, true));
  const double cap = std::min(k.Lf2 / c.nu, 3.0 * tau);
  k.checks.push_back(make_check("epsbound", t, 2.0 * rt->energy + eps_integral, 4.0 * r0->energy + tau * k.F2 * cap,
                                true));
  return k;
}

void to_json(nlohmann::json& j, const RatioSeries& r) {
  j = nlohmann::json{{"name", r.name}, {"log10", r.log10}, {"t", r.t}, {"value", r.value}};
}

DisplacementBounds displacement_bounds(const History& h, const BoundsConfig& c) {
  const TimeSeriesRecord& r0 = first(h);
  const double t0 = r0.t;
  const double V = box_volume(h);
  const double eb = eps_b(c, h.dim, h.L);
  const double E0 = r0.energy;
  const ELMetrics& e0 = el_of(r0);

  DisplacementBounds out;
  out.preconditions_met = t0 == 0.0 && e0.ell_sq == 0.0;
  for (const TimeSeriesRecord& r : h.records) out.preconditions_met &= el_of(r).reset_count == e0.reset_count;
  const bool three_d = h.dim == 3;
  out.deltaltwo.name = "deltaltwo";
  out.kif.name = "kif";

  for (std::size_t i = 1; i < h.records.size(); ++i) {
    const TimeSeriesRecord& r = h.records[i];
    const ELMetrics& e = el_of(r);
    const double t = r.t;
    const double tau = t - t0;
    const KBoundsReport k = k_bounds(h, c, t0, t);
    const double B = 4.0 * E0 + tau * eb;
    const double u_max_integral = time_integral(h, [](const TimeSeriesRecord& q) { return q.u_max; }, t0, t);
    const double grad_integral =
        time_integral(h, [](const TimeSeriesRecord& q) { return el_of(q).grad_ell_sq; }, t0, t);
    const double lap_integral = time_integral(h, [](const TimeSeriesRecord& q) { return el_of(q).lap_ell_sq; }, t0, t);
    const bool pre = out.preconditions_met;

    out.checks.push_back(make_check("maxdel", t, e.ell_max, u_max_integral, pre));
    out.checks.push_back(make_check("elltwo", t, std::sqrt(V * e.ell_sq), tau * std::sqrt(k.K0), pre));
    out.checks.push_back(make_check("ltwo", t, e.ell_sq, (4.0 * E0 + tau * eb) * tau * tau, pre && three_d));
    out.checks.push_back(make_check("nablaeltwo", t, grad_integral / tau, B * tau / (2.0 * c.nu), pre && three_d));

    const double K_inf = k.k_inf.value / c.C_K;
    out.deltaltwo.t.push_back(t);
    out.deltaltwo.value.push_back((e.grad_ell_sq + c.nu * lap_integral) /
                                  (B * tau / c.nu + K_inf * K_inf * B / (c.nu * c.nu)));
    out.kif.t.push_back(t);
    out.kif.value.push_back(u_max_integral / K_inf);
  }
  return out;
}

std::vector<EpsilonBoundSample> epsilon_bound(const History& h, const BoundsConfig& c) {
  const TimeSeriesRecord& r0 = first(h);
  const double eb = eps_b(c, h.dim, h.L);
  const double scale = std::pow(h.L, 2 * h.dim) / std::pow(c.nu, 5);
  std::vector<EpsilonBoundSample> out;
  for (std::size_t i = 1; i < h.records.size(); ++i) {
    const TimeSeriesRecord& r = h.records[i];
    const double tau = r.t - r0.t;
    EpsilonBoundSample s;
    s.t = r.t;
    s.lhs = el_of(r).lap_ell_sq;
    s.exponent =
        scale * time_integral(h, [](const TimeSeriesRecord& q) { return q.dissipation * q.dissipation; }, r0.t, r.t);
    const double B = 4.0 * r0.energy + tau * eb;
    s.log10_rhs = std::log10(B / (c.nu * c.nu)) + s.exponent / std::numbers::ln10;
    s.log10_ratio = s.lhs > 0.0 ? std::log10(s.lhs) - s.log10_rhs : -std::numeric_limits<double>::infinity();
    s.grad_lap_integral =
        time_integral(h, [](const TimeSeriesRecord& q) { return el_of(q).grad_lap_ell_sq; }, r0.t, r.t);
    out.push_back(s);
  }
  return out;
}

RatioSeries ug_ratio(const std::vector<EpsilonBoundSample>& samples) {
  RatioSeries r{"ug", true, {}, {}};
  for (const EpsilonBoundSample& s : samples) {
    r.t.push_back(s.t);
    r.value.push_back(s.log10_ratio);
  }
  return r;
}

VGrowthReport v_growth(const History& h, const BoundsConfig& c, int m) {
  if (m < 2) throw ConfigError("v_growth requires m >= 2");
  if (!(c.C0 > 0.0)) throw ConfigError("v_growth requires C0 > 0");
  const TimeSeriesRecord& r0 = first(h);
  const ELMetrics& e0 = el_of(r0);
  if (!e0.v_norm.contains(m)) throw IncompleteHistoryError("history has no L^" + std::to_string(2 * m) + " norms");

  VGrowthReport out;
  out.m = m;
  out.threshold = std::sqrt(2.0 * (m - 1) / (c.C0 * m * m));
  const double rate = c.nu * (m - 1) / (2.0 * m * m * h.L * h.L);
  const double v0 = e0.v_norm.at(m);
  bool valid = true;
  bool no_reset = true;
  for (const TimeSeriesRecord& r : h.records) {
    const ELMetrics& e = el_of(r);
    no_reset &= e.reset_count == e0.reset_count;
    const double c_norm = std::cbrt(e.c_cubed);
    out.ccond.push_back(make_check("Ccond[m=" + std::to_string(m) + "]", r.t, c_norm, out.threshold, false));
    valid = valid && c_norm <= out.threshold && no_reset;
    if (valid) out.valid_until = r.t;
    if (&r == &r0) continue;
    const double g_integral =
        time_integral(h, [m](const TimeSeriesRecord& q) { return el_of(q).g_norm.at(m); }, r0.t, r.t);
    const double rhs = v0 * std::exp(rate * (r.t - r0.t)) + g_integral;
    out.vbound.push_back(
        make_check("vbound[m=" + std::to_string(m) + "]", r.t, e.v_norm.at(m), rhs, valid && h.dim == 3));
  }
  return out;
}

void to_json(nlohmann::json& j, const DispersionReport& r) {
  j = nlohmann::json{{"delta0", r.delta0},
                     {"samples", r.samples},
                     {"estimate", r.estimate},
                     {"std_error", r.std_error},
                     {"t", r.t},
                     {"term_delta0", r.term_delta0},
                     {"term_energy", r.term_energy},
                     {"term_eps", r.term_eps},
                     {"bound", r.bound},
                     {"pass", r.pass},
                     {"bound_form", "3 delta0^2 + 24 E0 t^2 + 6 eps_B t^3"}};
  if (r.warning) j["warning"] = *r.warning;
}

DispersionReport pair_dispersion(const VectorField& ell, double delta0, std::int64_t samples, std::uint64_t seed,
                                 double E0, double eps_B, double t) {
  if (samples < 2) throw ConfigError("pair_dispersion needs at least two samples");
  const Grid& g = ell.grid();
  const int d = g.dim();
  const double L = g.length();
  auto wrap = [L](double x) { return x - L * std::round(x / L); };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, g.points() - 1);
  const double d02 = delta0 * delta0;
  double mean = 0.0, m2 = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    const Eigen::Index p = pick(rng), q = pick(rng);
    const auto x = g.position(p), y = g.position(q);
    double sep2 = 0.0, label2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double dx = wrap(x[i] - y[i]);
      const double da = wrap(dx + ell(i)[p] - ell(i)[q]);
      sep2 += dx * dx;
      label2 += da * da;
    }
    const double value = label2 <= d02 ? sep2 : 0.0;
    const double delta = value - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (value - mean);
  }

  DispersionReport r;
  r.delta0 = delta0;
  r.samples = samples;
  r.estimate = mean;
  r.std_error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  r.t = t;
  r.term_delta0 = 3.0 * d02;
  r.term_energy = 24.0 * E0 * t * t;
  r.term_eps = 6.0 * eps_B * t * t * t;
  r.bound = r.term_delta0 + r.term_energy + r.term_eps;
  r.pass = r.estimate <= r.bound + 3.0 * r.std_error;
  if (samples < kMinDispersionSamples)
    r.warning = "only " + std::to_string(samples) + " samples; standard error is large";
  return r;
}

std::optional<double> helicity(const VectorField& w, const VectorField& u) {
  if (u.dim() != 3) return std::nullopt;
  return integral(dot(w, curl(u)));
}

BoundSuite run_bound_suite(const History& h, const BoundsConfig& c) {
  BoundSuite s;
  const double t0 = first(h).t;
  s.k = k_bounds(h, c, t0, h.records.back().t);
  for (std::size_t i = 1; i < h.records.size(); ++i) {
    const KBoundsReport k = k_bounds(h, c, t0, h.records[i].t);
    s.energy_checks.insert(s.energy_checks.end(), k.checks.begin(), k.checks.end());
  }
  s.displacement = displacement_bounds(h, c);
  s.epsilon = epsilon_bound(h, c);
  for (int m : h.m_values)
    if (m >= 2) s.v_growth.push_back(v_growth(h, c, m));

  auto collect = [&](const std::vector<BoundCheck>& checks) {
    for (const BoundCheck& b : checks)
      if (b.asserted && !b.pass) {
        s.pass = false;
        s.failures.push_back(b.name + "@t=" + std::to_string(b.t));
      }
  };
  collect(s.energy_checks);
  collect(s.displacement.checks);
  for (const VGrowthReport& v : s.v_growth) collect(v.vbound);
  return s;
}

namespace {

/// Worst (smallest-margin) asserted record per bound name, falling back to the
/// last record for reported-only bounds.
nlohmann::json summarize(const std::vector<BoundCheck>& checks) {
  std::map<std::string, const BoundCheck*> worst;
  for (const BoundCheck& b : checks) {
    const BoundCheck*& w = worst[b.name];
    if (!w || (b.margin < w->margin)) w = &b;
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, b] : worst) out.push_back(*b);
  return out;
}

}  // namespace

void to_json(nlohmann::json& j, const BoundSuite& s) {
  nlohmann::json k{{"t0", s.k.t0},   {"t", s.k.t},       {"k0", s.k.k0},       {"k1", s.k.k1},
                   {"K0", s.k.K0},   {"F2", s.k.F2},     {"G2", s.k.G2},       {"Lf2", s.k.Lf2},
                   {"eps_B", s.k.eps_B}, {"B", s.k.B},   {"K_infty", s.k.k_inf.value},
                   {"r", std::vector<double>(std::begin(s.k.k_inf.r), std::end(s.k.k_inf.r))}};
  nlohmann::json eps = nlohmann::json::array();
  for (const EpsilonBoundSample& e : s.epsilon)
    eps.push_back({{"t", e.t},
                   {"lhs", e.lhs},
                   {"log10_rhs", e.log10_rhs},
                   {"log10_ratio", std::isfinite(e.log10_ratio) ? nlohmann::json(e.log10_ratio) : nlohmann::json()},
                   {"exponent", e.exponent},
                   {"grad_lap_integral", e.grad_lap_integral}});
  nlohmann::json vg = nlohmann::json::array();
  for (const VGrowthReport& v : s.v_growth)
    vg.push_back({{"m", v.m},
                  {"threshold", v.threshold},
                  {"valid_until", v.valid_until},
                  {"ccond", summarize(v.ccond)},
                  {"vbound", summarize(v.vbound)}});
  j = nlohmann::json{{"pass", s.pass},
                     {"failures", s.failures},
                     {"k_bounds", k},
                     {"energy", summarize(s.energy_checks)},
                     {"displacement",
                      {{"preconditions_met", s.displacement.preconditions_met},
                       {"checks", summarize(s.displacement.checks)},
                       {"deltaltwo", s.displacement.deltaltwo},
                       {"kif", s.displacement.kif}}},
                     {"epsilon", eps},
                     {"v_growth", vg}};
}

}  // namespace elflow
