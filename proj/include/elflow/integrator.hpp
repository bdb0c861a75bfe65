#pragma once

namespace elflow {

/// One step of integrating-factor (Lawson) RK4 for y' = νΔy + N(t, y).
///
/// `rhs(y, t)` evaluates the explicit part N; `propagate(y, tau)` applies the
/// exact linear flow exp(ν tau Δ). State must support `+` and scalar `*`.
template <class State, class Rhs, class Propagate>
State lawson_rk4(const State& y, double t, double h, Rhs&& rhs, Propagate&& propagate) {
  const double h2 = 0.5 * h;
  const State a = rhs(y, t);
  const State b = rhs(propagate(y + h2 * a, h2), t + h2);
  const State ey_half = propagate(y, h2);
  const State c = rhs(ey_half + h2 * b, t + h2);
  const State ey = propagate(ey_half, h2);
  const State d = rhs(ey + h * propagate(c, h2), t + h);
  return ey + (h / 6.0) * (propagate(a, h) + 2.0 * propagate(b + c, h2) + d);
}

}  // namespace elflow
