#pragma once

#include "elflow/classical.hpp"
#include "elflow/field.hpp"

namespace elflow {

// Index conventions, used everywhere in this library:
//   gradA(i, m) = ∂_i A_m            (A = x + ℓ, so gradA = I + jacobian(ℓ))
//   Q           = gradA^{-1}          as a pointwise matrix, gradA · Q = I
//   ∇_A^i g     = Q(i, j) ∂_j g       Eulerian-Lagrangian derivative
//   C(m, k, i)  = ∇_A^i ∂_k A_m = Q(i, j) ∂_j ∂_k ℓ_m
//   w_i         = gradA(i, m) v_m     and  u = w - ∇n = P(w)
// In component notation where Q_{ji} multiplies ∂_j, that Q_{ji} is our Q(i, j).

enum class PotentialMode { Static, Dynamic };

/// Dynamical state of the Eulerian-Lagrangian formulation.
struct ELState {
  double t = 0.0;
  VectorField ell;  ///< displacement A(x, t) - x
  VectorField v;    ///< virtual velocity
  ScalarField n_pot;
  PotentialMode potential_mode = PotentialMode::Static;
  int reset_count = 0;
};

/// Fresh state: ℓ = 0, v = u0, n = 0.
ELState make_el_state(const VectorField& u0, PotentialMode mode = PotentialMode::Static, double t = 0.0);

/// Quantities recomputed from an ELState; never cached across steps.
struct ELDerived {
  VectorField A;  ///< x + ℓ; not periodic, kept for output and pair statistics
  Tensor2Field grad_ell;
  Tensor2Field gradA;
  Tensor2Field Q;
  ScalarField det;  ///< det(gradA)
  Tensor3Field C;
  VectorField w;
  ScalarField n;  ///< potential used in u = w - ∇n
  VectorField u;
};

inline constexpr double kDefaultMinDet = 0.1;

ELDerived el_derive(const ELState& s, double min_det = kDefaultMinDet);

/// I + jacobian(ℓ).
Tensor2Field label_gradient(const VectorField& ell);
ScalarField determinant(const Tensor2Field& t);
/// Pointwise inverse by adjugate / determinant. Throws SingularMapError with the
/// worst point when |det| <= min_det anywhere.
Tensor2Field compute_Q(const Tensor2Field& gradA, double min_det = kDefaultMinDet);
/// Commutator coefficients from the displacement (∂∂A = ∂∂ℓ; A itself is not
/// periodic and cannot be differentiated spectrally).
Tensor3Field compute_C(const VectorField& ell, const Tensor2Field& Q);
/// ∇_A g = Q ∇g.
VectorField el_gradient(const Tensor2Field& Q, const ScalarField& g);
/// |C|^2 = Σ C(m,k,i)^2 pointwise.
ScalarField commutator_magnitude_sq(const Tensor3Field& C);

/// w_i = (∂_i A_m) v_m, pointwise.
VectorField compute_w(const VectorField& ell, const VectorField& v);

struct Reconstruction {
  VectorField u;
  ScalarField n;
};
/// n = Δ^{-1} ∇·w (zero mean), u = w - ∇n.
Reconstruction reconstruct_u(const VectorField& ell, const VectorField& v);

/// The integrated variables (ℓ, v, n); also used for their rates.
struct ELVariables {
  VectorField ell;
  VectorField v;
  ScalarField n;

  ELVariables& operator+=(const ELVariables& o) {
    ell += o.ell;
    v += o.v;
    n += o.n;
    return *this;
  }
  ELVariables& operator*=(double a) {
    ell *= a;
    v *= a;
    n *= a;
    return *this;
  }
  friend ELVariables operator+(ELVariables a, const ELVariables& b) { return a += b; }
  friend ELVariables operator*(double a, ELVariables b) { return b *= a; }
};

/// Explicit right-hand side (viscous terms excluded; they live in the integrating factor):
///   dℓ/dt = -u·∇ℓ - u
///   dv_i/dt = -u·∇v_i + 2ν C(m,k,i) ∂_k v_m + Q(i,j) f_j
///   dn/dt = -u·∇n + R_iR_j(u^i u^j) - |u|^2/2 + c   (dynamic mode; c gives zero mean)
/// In static mode the n rate is zero. All rates are dealiased.
ELVariables el_rhs(const ELState& s, const ELDerived& d, const FlowParams& params, const VectorField& f);

struct ELStepOptions {
  StepLimits limits;
  bool reset_enabled = true;
  double reset_threshold = 0.25;  ///< reset when max |∂_i ℓ_m| exceeds this
  double min_det = kDefaultMinDet;
};

/// Integrating-factor RK4 on (ℓ, v[, n]); u is rebuilt from (ℓ, v) at every stage.
/// Applies an automatic label reset after the step when enabled and the
/// displacement gradient exceeds the threshold.
ELState el_step(const ELState& s, const FlowParams& params, double dt, const ELStepOptions& opts = {});

/// max over points and entries of |∂_i ℓ_m|.
double label_strain(const VectorField& ell);

/// v' = (∇A)^T v, ℓ' = 0, n' consistent; u is unchanged.
ELState reset_labels(const ELState& s);

/// v' = v + ∇_A φ, n' = n + φ; u is unchanged.
ELState gauge_transform(const ELState& s, const ScalarField& phi);

// Cotangent dynamics: Γw + (∇u)^T w = f with u = P(w).

struct CotangentState {
  double t = 0.0;
  VectorField w;
};

/// -u·∇w - (∇u)^T w + f with u = P(w), dealiased.
VectorField cotangent_rhs(const VectorField& w, const VectorField& f);
CotangentState cotangent_step(const CotangentState& s, const FlowParams& params, double dt,
                              const StepLimits& limits = {});

}  // namespace elflow
