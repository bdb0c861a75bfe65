#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "elflow/el.hpp"

namespace elflow {

/// Outcome of one numerical identity check. pass ⇔ residual < tolerance.
struct IdentityReport {
  std::string name;
  double residual = 0.0;   ///< max pointwise residual divided by scale
  double tolerance = 0.0;
  double scale = 1.0;      ///< normalization applied to the raw residual
  bool pass = false;
  std::map<std::string, double> extra;
};

IdentityReport make_report(std::string name, double raw, double scale, double tolerance);

void to_json(nlohmann::json& j, const IdentityReport& r);

// Default tolerances for the time-independent identities.
inline constexpr double kRoundtripTol = 1e-9;
inline constexpr double kCommutatorTol = 1e-8;
inline constexpr double kProductRuleTol = 1e-9;
inline constexpr double kAdjointTol = 1e-9;
inline constexpr double kBracesTol = 1e-10;
inline constexpr double kZTol = 1e-11;

/// ∇_E g = (∇A)(∇_A g), with ∇_A g = Q ∇g.
IdentityReport check_el_derivative_roundtrip(const ScalarField& g, const VectorField& ell,
                                             double tolerance = kRoundtripTol);

/// [∇_A^i, ∇_E^k] g = C(m,k,i) ∇_A^m g for all (i, k), relative to max |∇∇g|.
IdentityReport check_commutator(const ScalarField& g, const Tensor2Field& Q, const Tensor3Field& C,
                                double tolerance = kCommutatorTol);

/// Spatial part of the modified Leibniz rule of Γ = ∂_t + u·∇ - νΔ:
/// L(fg) - L(f)g - fL(g) + 2ν ∇f·∇g = 0 with L = u·∇ - νΔ.
IdentityReport check_product_rule(const ScalarField& f, const ScalarField& g, const VectorField& u, double nu,
                                  double tolerance = kProductRuleTol);

/// ∫(∇_A^i f) g = ∫ f (-∇_A^i g + Q(i,j) C(p,j,p) g) for each i.
IdentityReport check_adjoint(const ScalarField& f, const ScalarField& g, const Tensor2Field& Q,
                             const Tensor3Field& C, double tolerance = kAdjointTol);

/// (∂_i A_m) C(r,q,m) = ∂_q ∂_i ℓ_r.
IdentityReport check_braces(const VectorField& ell, double tolerance = kBracesTol);

/// Γ(∇_A^i g) = 2ν C(m,k,i) ∂_k ∇_A^m g for g transported by Γg = 0.
/// ∂_t is a centred difference over ±dt of a joint (state, g) integration, so
/// the residual is O(dt²). Residual is relative to max |∂_t ∇_A g|; the
/// tolerance is tolerance_coeff·dt². extra["source"] holds the relative size of
/// the 2νC term.
IdentityReport check_gamma_commutation(const ELState& s, const ScalarField& g, const FlowParams& params,
                                       double dt, double tolerance_coeff = 20.0);

/// ΓC(m,k,i) + (∂_l A_m) ∇_A^i ∂_k u_l + (∂_k u_l) C(m,l,i) - 2ν C(j,l,i) ∂_l C(m,k,j) = 0,
/// with ∂_t C a forward difference over one step of size dt (O(dt)).
/// Residual is relative to max |∂_t C|; tolerance is tolerance_coeff·dt.
IdentityReport check_C_evolution(const ELState& s, const FlowParams& params, double dt,
                                 double tolerance_coeff = 10.0);

/// Conditioning sample along a run.
struct ZSample {
  double t = 0.0;
  double z_residual = 0.0;  ///< max |(∇A) Q - I|
  double det_min = 1.0;
  double det_max = 1.0;
};

ZSample z_sample(const ELState& s);

/// Max Z residual over a run; det range and δ = max |det - 1| go to extra.
IdentityReport check_Z_stability(std::span<const ZSample> history, double tolerance = kZTol);

/// Residuals at several step sizes and the least-squares order in log-log.
struct ConvergenceStudy {
  std::string name;
  std::vector<double> dts;
  std::vector<double> residuals;
  double nominal_order = 0.0;
  double observed_order = 0.0;
  bool pass = false;  ///< |observed - nominal| <= 0.3
};

double observed_order(std::span<const double> dts, std::span<const double> residuals);

ConvergenceStudy gamma_commutation_study(const ELState& s, const ScalarField& g, const FlowParams& params,
                                         std::span<const double> dts);
ConvergenceStudy C_evolution_study(const ELState& s, const FlowParams& params, std::span<const double> dts);

void to_json(nlohmann::json& j, const ConvergenceStudy& c);

/// One fixed-seed test case: displacement scaled to a target max |∇ℓ| and
/// two smooth scalars.
struct IdentityCase {
  std::string label;
  double strain = 0.0;
  VectorField ell;
  ScalarField f;
  ScalarField g;
  VectorField u;
};

inline constexpr double kCorpusStrains[] = {0.01, 0.05, 0.2};

/// Corpus band relative to n: keeps the spectral tail of Q, and hence aliasing in
/// the products the identities differentiate, under the identity tolerances.
inline double corpus_band(int n) { return n / 16.0; }

/// Cases for every corpus strain, with fields band limited to |m| <= band.
std::vector<IdentityCase> identity_corpus(const Grid& grid, double band, std::uint64_t seed);

/// All time-independent identities on every corpus case.
std::vector<IdentityReport> run_identity_suite(const Grid& grid, double band, std::uint64_t seed);

}  // namespace elflow
