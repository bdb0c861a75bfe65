#pragma once

#include "elflow/field.hpp"
#include "elflow/forcing.hpp"

namespace elflow {

/// Physical parameters shared by every solver.
struct FlowParams {
  double nu = 0.0;
  ForcingSpec forcing;
};

/// Stability guards applied after each step.
struct StepLimits {
  double cfl = 0.4;             ///< max |u| dt / h
  double blowup_factor = 1e6;   ///< RMS growth over reference_rms that aborts
  double reference_rms = 0.0;   ///< 0 disables the growth check
};

/// Checks max|u| dt / h against limits.cfl; throws CflError.
void check_cfl(const VectorField& u, double dt, const StepLimits& limits);
/// Throws BlowUpError on non-finite values or runaway RMS.
template <int Rank>
void check_blowup(const TensorField<Rank>& f, double t, const StepLimits& limits);

struct NSState {
  double t = 0.0;
  VectorField u;
};

/// P(-u·∇u + f), dealiased. The viscous term is left to the integrating factor.
VectorField ns_rhs(const VectorField& u, const VectorField& f);

/// One integrating-factor RK4 step of the velocity-form Navier-Stokes system.
NSState ns_step(const NSState& s, const FlowParams& params, double dt, const StepLimits& limits = {});

}  // namespace elflow
