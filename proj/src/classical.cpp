#include "elflow/classical.hpp"

#include "elflow/errors.hpp"
#include "elflow/integrator.hpp"
#include "elflow/spectral.hpp"

namespace elflow {

void check_cfl(const VectorField& u, double dt, const StepLimits& limits) {
  const double courant = sup_norm(u) * std::abs(dt) / u.grid().spacing();
  if (courant > limits.cfl) throw CflError(courant, limits.cfl);
}

template <int Rank>
void check_blowup(const TensorField<Rank>& f, double t, const StepLimits& limits) {
  if (!f.all_finite()) throw BlowUpError("non-finite values at t = " + std::to_string(t), t);
  if (limits.reference_rms > 0.0 && rms(f) > limits.blowup_factor * limits.reference_rms)
    throw BlowUpError("RMS grew beyond " + std::to_string(limits.blowup_factor) + "x its initial value", t);
}

template void check_blowup<0>(const TensorField<0>&, double, const StepLimits&);
template void check_blowup<1>(const TensorField<1>&, double, const StepLimits&);

VectorField ns_rhs(const VectorField& u, const VectorField& f) {
  const Tensor2Field j = jacobian(u);
  VectorField adv = matvec_transposed(j, u);  // (u·∇u)_m = u_i ∂_i u_m
  return leray_project(dealias(f - adv));
}

NSState ns_step(const NSState& s, const FlowParams& params, double dt, const StepLimits& limits) {
  check_cfl(s.u, dt, limits);
  const Grid& g = s.u.grid();
  // Catalog forces are steady, so one evaluation serves all stages.
  const VectorField f = params.forcing.evaluate(g, s.t);
  auto rhs = [&](const VectorField& u, double) { return ns_rhs(u, f); };
  auto propagate = [&](const VectorField& u, double tau) { return heat(u, params.nu * tau); };
  NSState out{s.t + dt, lawson_rk4(s.u, s.t, dt, rhs, propagate)};
  check_blowup(out.u, out.t, limits);
  return out;
}

}  // namespace elflow
