#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "elflow/el.hpp"

namespace elflow {

// Box averages use L^{-dim}; integrals without a prefactor are over the box.

/// Quantities that only exist for an Eulerian-Lagrangian state.
struct ELMetrics {
  double ell_max = 0.0;        ///< ‖ℓ‖_∞
  double ell_sq = 0.0;         ///< L^{-d} ∫|ℓ|²
  double grad_ell_sq = 0.0;    ///< L^{-d} ∫|∇ℓ|²
  double lap_ell_sq = 0.0;     ///< L^{-d} ∫|Δℓ|²
  double grad_lap_ell_sq = 0.0;  ///< L^{-d} ∫|∇Δℓ|²
  double c_cubed = 0.0;        ///< ∫|C|³
  std::map<int, double> v_norm;  ///< m -> ‖v‖_{L^{2m}}
  std::map<int, double> g_norm;  ///< m -> ‖g‖_{L^{2m}}, g = Q f
  std::optional<double> helicity;  ///< ∫ w·ω, 3D only
  double det_min = 1.0;
  double det_max = 1.0;
  double z_residual = 0.0;
  int reset_count = 0;
};

struct TimeSeriesRecord {
  double t = 0.0;
  double energy = 0.0;       ///< E = (1/2) L^{-d} ∫|u|²
  double dissipation = 0.0;  ///< ε = ν L^{-d} ∫|∇u|²
  double u_max = 0.0;        ///< ‖u‖_∞
  std::optional<ELMetrics> el;
};

struct History {
  int dim = 3;
  double L = 0.0;
  std::vector<int> m_values;
  std::vector<TimeSeriesRecord> records;
};

TimeSeriesRecord record(const VectorField& u, double t, double nu);
TimeSeriesRecord record(const ELState& s, const FlowParams& params, const std::vector<int>& m_values);

/// CSV with a fixed header; EL columns are empty for classical records.
void write_csv(std::ostream& os, const History& h);

/// Trapezoid ∫_{t0}^{t} value(rec) dt over records in [t0, t]. Throws
/// IncompleteHistoryError when the records do not reach both ends.
double time_integral(const History& h, const std::function<double(const TimeSeriesRecord&)>& value, double t0,
                     double t);

/// {name, t, lhs, rhs, margin, asserted, pass}; margin = rhs / lhs.
struct BoundCheck {
  std::string name;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool asserted = true;
  bool pass = true;
};

BoundCheck make_check(std::string name, double t, double lhs, double rhs, bool asserted);
void to_json(nlohmann::json& j, const BoundCheck& b);

/// Physical inputs shared by the bound evaluators.
struct BoundsConfig {
  double nu = 0.0;
  ForcingSpec forcing;
  double C_K = 1.0;  ///< prefactor of K∞, reported only
  double C0 = 1.0;   ///< Morrey-Sobolev constant of the smallness condition
};

/// Six-length-scale form of the sup-norm bound after the γ choice that makes
/// r1 = r2 = r3 = r5.
struct KInfty {
  double r[6] = {0, 0, 0, 0, 0, 0};
  double value = 0.0;  ///< C_K (r0 + r4 + r5)
};

/// r0 = K0/ν², r4 = ((t-t0)/ν²) ∫‖f‖²_{L²} ds, r5 = √(ν(t-t0)).
KInfty k_infty(double K0, double nu, double t0, double t, double f_l2_sq_integral, double C_K = 1.0);

struct KBoundsReport {
  double t0 = 0.0, t = 0.0;
  double k0 = 0.0, k1 = 0.0, K0 = 0.0;
  double F2 = 0.0, G2 = 0.0, Lf2 = 0.0;
  double eps_B = 0.0;
  double B = 0.0;
  KInfty k_inf;
  std::vector<BoundCheck> checks;  ///< en, energyb, epsbound
};

/// Energy-balance bounds on [t0, t] from a recorded history.
KBoundsReport k_bounds(const History& h, const BoundsConfig& c, double t0, double t);

/// Generic-constant bound monitored as lhs / rhs with the constant set to 1.
struct RatioSeries {
  std::string name;
  bool log10 = false;  ///< values hold log10 of the ratio
  std::vector<double> t;
  std::vector<double> value;
};

void to_json(nlohmann::json& j, const RatioSeries& r);

struct DisplacementBounds {
  bool preconditions_met = false;  ///< ℓ(0) = 0 and no reset
  std::vector<BoundCheck> checks;  ///< maxdel, elltwo, ltwo, nablaeltwo per record
  RatioSeries deltaltwo;
  RatioSeries kif;  ///< ∫‖u‖_∞ / (r0 + r4 + r5)
};

DisplacementBounds displacement_bounds(const History& h, const BoundsConfig& c);

struct EpsilonBoundSample {
  double t = 0.0;
  double lhs = 0.0;          ///< L^{-3} ∫|Δℓ|²
  double log10_rhs = 0.0;    ///< log10[(B/ν²) exp(exponent)]
  double log10_ratio = 0.0;  ///< log10(lhs / rhs)
  double exponent = 0.0;     ///< (L⁶/ν⁵) ∫ε² ds
  double grad_lap_integral = 0.0;  ///< L^{-3} ∫∫|∇Δℓ|²
};

std::vector<EpsilonBoundSample> epsilon_bound(const History& h, const BoundsConfig& c);
RatioSeries ug_ratio(const std::vector<EpsilonBoundSample>& samples);

/// Smallness condition on C and the resulting L^{2m} growth bound for v.
struct VGrowthReport {
  int m = 2;
  double threshold = 0.0;  ///< √(2(m-1)/(C0 m²))
  double valid_until = 0.0;  ///< end of the initial interval where the condition holds
  std::vector<BoundCheck> ccond;  ///< reported
  std::vector<BoundCheck> vbound;  ///< asserted while the condition holds
};

VGrowthReport v_growth(const History& h, const BoundsConfig& c, int m);

struct DispersionReport {
  double delta0 = 0.0;
  std::int64_t samples = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double term_delta0 = 0.0;  ///< 3δ0²
  double term_energy = 0.0;  ///< 24 E0 t²
  double term_eps = 0.0;     ///< 6 ε_B t³
  double bound = 0.0;
  bool pass = true;
  std::optional<std::string> warning;
};

void to_json(nlohmann::json& j, const DispersionReport& r);

inline constexpr std::int64_t kMinDispersionSamples = 10000;

/// Monte-Carlo estimate of L^{-2d} ∬_{|A(x)-A(y)| ≤ δ0} |x-y|² over uniform
/// pairs of collocation points, minimal-image distances throughout. Passes when
/// the estimate is below the bound plus three standard errors.
DispersionReport pair_dispersion(const VectorField& ell, double delta0, std::int64_t samples, std::uint64_t seed,
                                 double E0, double eps_B, double t);

/// ∫ w·(∇×u); nullopt in 2D.
std::optional<double> helicity(const VectorField& w, const VectorField& u);

/// Every bound evaluator applied to a history; asserted checks decide pass.
struct BoundSuite {
  KBoundsReport k;
  std::vector<BoundCheck> energy_checks;  ///< en/energyb/epsbound at every record
  DisplacementBounds displacement;
  std::vector<EpsilonBoundSample> epsilon;
  std::vector<VGrowthReport> v_growth;
  bool pass = true;
  std::vector<std::string> failures;
};

BoundSuite run_bound_suite(const History& h, const BoundsConfig& c);
void to_json(nlohmann::json& j, const BoundSuite& s);

}  // namespace elflow
