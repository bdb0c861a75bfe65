#include "elflow/spectral.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <tuple>

#include "elflow/errors.hpp"

namespace elflow {

namespace {

// FFTW's planner is not re-entrant; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int signed_index(int a, int n) { return a <= n / 2 ? a : a - n; }

}  // namespace

SpectralContext::SpectralContext(const Grid& grid) : grid_(grid) {
  const int d = grid.dim();
  const int n = grid.n();
  const int nh = n / 2 + 1;
  modes_ = nh;
  for (int a = 0; a < d - 1; ++a) modes_ *= n;

  const double base = 2.0 * std::numbers::pi / grid.length();
  const int cutoff = grid.dealias_cutoff();
  for (int a = 0; a < d; ++a) {
    k_[a].resize(modes_);
    k_odd_[a].resize(modes_);
  }
  mask_.resize(modes_);
  weight_.resize(modes_);

  for (Eigen::Index m = 0; m < modes_; ++m) {
    int idx[3] = {0, 0, 0};
    Eigen::Index rem = m;
    idx[d - 1] = static_cast<int>(rem % nh);
    rem /= nh;
    for (int a = d - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % n);
      rem /= n;
    }
    bool keep = true;
    for (int a = 0; a < d; ++a) {
      const int s = (a == d - 1) ? idx[a] : signed_index(idx[a], n);
      const bool nyquist = std::abs(s) == n / 2;
      k_[a][m] = base * s;
      k_odd_[a][m] = nyquist ? 0.0 : base * s;
      if (std::abs(s) > cutoff) keep = false;
    }
    mask_[m] = keep ? 1.0 : 0.0;
    const int last = idx[d - 1];
    weight_[m] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
  }
  k2_ = Eigen::ArrayXd::Zero(modes_);
  k2_odd_ = Eigen::ArrayXd::Zero(modes_);
  for (int a = 0; a < d; ++a) {
    k2_ += k_[a].square();
    k2_odd_ += k_odd_[a].square();
  }

  int dims[3] = {n, n, n};
  Eigen::ArrayXd real_buf(grid.points());
  Spectrum complex_buf(modes_);
  auto* rp = real_buf.data();
  auto* cp = reinterpret_cast<fftw_complex*>(complex_buf.data());
  std::lock_guard lock(planner_mutex());
  // FFTW_ESTIMATE keeps plan selection, and hence every output bit, deterministic.
  forward_plan_ = fftw_plan_dft_r2c(d, dims, rp, cp, FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft_c2r(d, dims, cp, rp, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!forward_plan_ || !inverse_plan_) throw Error("FFTW planning failed");
}

SpectralContext::~SpectralContext() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

Spectrum SpectralContext::forward(const Eigen::ArrayXd& values) const {
  Eigen::ArrayXd in = values;  // r2c may not preserve input under all plans
  Spectrum out(modes_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

Eigen::ArrayXd SpectralContext::inverse(const Spectrum& coeffs) const {
  Spectrum in = coeffs;  // c2r destroys its input
  Eigen::ArrayXd out(grid_.points());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  out /= static_cast<double>(grid_.points());
  return out;
}

std::shared_ptr<const SpectralContext> spectral_context(const Grid& grid) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const SpectralContext>> cache;
  std::lock_guard lock(m);
  auto key = std::make_tuple(grid.dim(), grid.n(), grid.length());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto ctx = std::make_shared<const SpectralContext>(grid);
  cache.emplace(key, ctx);
  return ctx;
}

namespace {

const std::complex<double> I(0.0, 1.0);

Eigen::ArrayXd derivative_from(const SpectralContext& ctx, const Spectrum& s, int axis) {
  return ctx.inverse(s * (I * ctx.k_odd(axis)));
}

template <int Rank, class Fn>
TensorField<Rank> map_spectral(const TensorField<Rank>& f, Fn&& fn) {
  auto ctx = spectral_context(f.grid());
  TensorField<Rank> out(f.grid());
  for (int c = 0; c < f.size(); ++c) out[c] = ctx->inverse(fn(*ctx, ctx->forward(f[c])));
  return out;
}

}  // namespace

ScalarField partial(const ScalarField& s, int axis) {
  auto ctx = spectral_context(s.grid());
  ScalarField out(s.grid());
  out.values() = derivative_from(*ctx, ctx->forward(s.values()), axis);
  return out;
}

VectorField gradient(const ScalarField& s) {
  auto ctx = spectral_context(s.grid());
  const Spectrum sh = ctx->forward(s.values());
  VectorField g(s.grid());
  for (int a = 0; a < s.dim(); ++a) g(a) = derivative_from(*ctx, sh, a);
  return g;
}

Tensor2Field jacobian(const VectorField& v) {
  auto ctx = spectral_context(v.grid());
  Tensor2Field j(v.grid());
  for (int m = 0; m < v.dim(); ++m) {
    const Spectrum vh = ctx->forward(v(m));
    for (int i = 0; i < v.dim(); ++i) j(i, m) = derivative_from(*ctx, vh, i);
  }
  return j;
}

ScalarField divergence(const VectorField& v) {
  auto ctx = spectral_context(v.grid());
  Spectrum acc = Spectrum::Zero(ctx->modes());
  for (int i = 0; i < v.dim(); ++i) acc += ctx->forward(v(i)) * (I * ctx->k_odd(i));
  ScalarField out(v.grid());
  out.values() = ctx->inverse(acc);
  return out;
}

Tensor2Field hessian(const ScalarField& s) {
  auto ctx = spectral_context(s.grid());
  const Spectrum sh = ctx->forward(s.values());
  Tensor2Field h(s.grid());
  const int d = s.dim();
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      h(j, k) = ctx->inverse(sh * (-ctx->k_odd(j) * ctx->k_odd(k)));
      if (k != j) h(k, j) = h(j, k);
    }
  return h;
}

VectorField curl(const VectorField& v) {
  const Tensor2Field j = jacobian(v);  // j(i, m) = ∂_i v_m
  if (v.dim() == 2) {
    VectorField w(v.grid());
    // Stored as a one-entry vector field in the first slot; second slot zero.
    w(0) = j(0, 1) - j(1, 0);
    return w;
  }
  VectorField w(v.grid());
  w(0) = j(1, 2) - j(2, 1);
  w(1) = j(2, 0) - j(0, 2);
  w(2) = j(0, 1) - j(1, 0);
  return w;
}

template <int Rank>
TensorField<Rank> laplacian(const TensorField<Rank>& f) {
  return map_spectral(f, [](const SpectralContext& c, Spectrum s) { return Spectrum(s * (-c.k2())); });
}

ScalarField inverse_laplacian(const ScalarField& s) {
  const double m = mean(s);
  const double scale = rms(s);
  if (std::abs(m) > 1e-10 * scale) {
    throw IncompatibleDataError("inverse_laplacian: input mean " + std::to_string(m) +
                                " is not small relative to RMS " + std::to_string(scale));
  }
  return map_spectral(s, [](const SpectralContext& c, Spectrum sh) {
    const Eigen::ArrayXd& k2 = c.k2();
    for (Eigen::Index i = 0; i < sh.size(); ++i) sh[i] = k2[i] > 0.0 ? -sh[i] / k2[i] : 0.0;
    return sh;
  });
}

template <int Rank>
TensorField<Rank> inverse_sqrt_laplacian(const TensorField<Rank>& f) {
  return map_spectral(f, [](const SpectralContext& c, Spectrum sh) {
    const Eigen::ArrayXd& k2 = c.k2();
    for (Eigen::Index i = 0; i < sh.size(); ++i) sh[i] = k2[i] > 0.0 ? sh[i] / std::sqrt(k2[i]) : 0.0;
    return sh;
  });
}

VectorField leray_project(const VectorField& v) {
  auto ctx = spectral_context(v.grid());
  const int d = v.dim();
  std::vector<Spectrum> vh(d);
  for (int i = 0; i < d; ++i) vh[i] = ctx->forward(v(i));
  Spectrum kdotv = Spectrum::Zero(ctx->modes());
  for (int i = 0; i < d; ++i) kdotv += ctx->k_odd(i) * vh[i];
  const Eigen::ArrayXd& k2 = ctx->k2_odd();
  for (Eigen::Index m = 0; m < kdotv.size(); ++m) kdotv[m] = k2[m] > 0.0 ? kdotv[m] / k2[m] : 0.0;
  VectorField out(v.grid());
  for (int i = 0; i < d; ++i) out(i) = ctx->inverse(vh[i] - ctx->k_odd(i) * kdotv);
  return out;
}

ScalarField riesz_pressure(const VectorField& u, double c) {
  auto ctx = spectral_context(u.grid());
  const int d = u.dim();
  // Δp = -∂_i∂_j(u_i u_j), so p̂ = -k_i k_j (u_i u_j)^ / |k|^2.
  Spectrum acc = Spectrum::Zero(ctx->modes());
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const double sym = (i == j) ? 1.0 : 2.0;
      acc += sym * ctx->k_odd(i) * ctx->k_odd(j) * ctx->forward(u(i) * u(j));
    }
  const Eigen::ArrayXd& k2 = ctx->k2();
  for (Eigen::Index m = 0; m < acc.size(); ++m) acc[m] = k2[m] > 0.0 ? -acc[m] / k2[m] : 0.0;
  ScalarField p(u.grid());
  p.values() = ctx->inverse(acc) + c;
  return p;
}

template <int Rank>
TensorField<Rank> dealias(const TensorField<Rank>& f) {
  return map_spectral(f, [](const SpectralContext& c, Spectrum s) { return Spectrum(s * c.dealias_mask()); });
}

template <int Rank>
TensorField<Rank> heat(const TensorField<Rank>& f, double nu_t) {
  if (nu_t == 0.0) return f;
  return map_spectral(f, [nu_t](const SpectralContext& c, Spectrum s) {
    return Spectrum(s * (-nu_t * c.k2()).exp());
  });
}

template <int Rank>
double sobolev_seminorm_sq(const TensorField<Rank>& f, double s) {
  auto ctx = spectral_context(f.grid());
  Eigen::ArrayXd factor = ctx->hermitian_weight();
  const Eigen::ArrayXd& k2 = ctx->k2();
  for (Eigen::Index m = 0; m < factor.size(); ++m) {
    if (k2[m] == 0.0)
      factor[m] = (s == 0.0) ? factor[m] : 0.0;
    else if (s != 0.0)
      factor[m] *= std::pow(k2[m], s);
  }
  double acc = 0.0;
  for (int c = 0; c < f.size(); ++c) acc += (factor * ctx->forward(f[c]).abs2()).sum();
  const double npts = static_cast<double>(f.grid().points());
  return acc / (npts * npts) * f.grid().volume();
}

template <int Rank>
double spectral_l2_squared(const TensorField<Rank>& f) {
  return sobolev_seminorm_sq(f, 0.0);
}

template <int Rank>
double spectral_tail(const TensorField<Rank>& f) {
  auto ctx = spectral_context(f.grid());
  double top = 0.0, tail = 0.0;
  for (int c = 0; c < f.size(); ++c) {
    const Eigen::ArrayXd a = ctx->forward(f[c]).abs();
    top = std::max(top, a.maxCoeff());
    tail = std::max(tail, (a * (1.0 - ctx->dealias_mask())).maxCoeff());
  }
  return top > 0.0 ? tail / top : 0.0;
}

template <int Rank>
TensorField<Rank> band_limit(const TensorField<Rank>& f, double band) {
  const double scale = f.grid().length() / (2.0 * std::numbers::pi);
  const double cut = band * band;
  return map_spectral(f, [&](const SpectralContext& c, Spectrum s) {
    for (Eigen::Index m = 0; m < s.size(); ++m) {
      const double mm = c.k2()[m] * scale * scale;
      if (mm == 0.0 || mm > cut + 1e-9) s[m] = 0.0;
    }
    return s;
  });
}

namespace {

/// Coefficient of e^{iκm·x} for one component. Drawn from a generator keyed by
/// (seed, component, m) so the field does not depend on the grid; c(-m) is the
/// conjugate of c(m).
std::complex<double> noise_coefficient(std::uint64_t seed, int component, std::array<int, 3> m) {
  const bool negative = m[0] < 0 || (m[0] == 0 && (m[1] < 0 || (m[1] == 0 && m[2] < 0)));
  if (negative) {
    for (int& x : m) x = -x;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(component), static_cast<std::uint32_t>(m[0] + (1 << 20)),
                    static_cast<std::uint32_t>(m[1] + (1 << 20)), static_cast<std::uint32_t>(m[2] + (1 << 20))};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  const double re = normal(rng);
  const double im = normal(rng);
  const std::complex<double> c(re / std::sqrt(2.0), im / std::sqrt(2.0));
  return negative ? std::conj(c) : c;
}

}  // namespace

template <int Rank>
TensorField<Rank> band_limited_noise(const Grid& grid, double band, std::uint64_t seed) {
  auto ctx = spectral_context(grid);
  const double scale = grid.length() / (2.0 * std::numbers::pi);
  const double cut = band * band + 1e-9;
  const double points = static_cast<double>(grid.points());
  TensorField<Rank> f(grid);
  for (int c = 0; c < f.size(); ++c) {
    Spectrum s = Spectrum::Zero(ctx->modes());
    for (Eigen::Index idx = 0; idx < s.size(); ++idx) {
      const double mm = ctx->k2()[idx] * scale * scale;
      if (mm == 0.0 || mm > cut) continue;
      std::array<int, 3> m{0, 0, 0};
      bool nyquist = false;
      for (int a = 0; a < grid.dim(); ++a) {
        m[a] = static_cast<int>(std::lround(ctx->k(a)[idx] * scale));
        nyquist |= ctx->k(a)[idx] != 0.0 && ctx->k_odd(a)[idx] == 0.0;
      }
      if (!nyquist) s[idx] = points * noise_coefficient(seed, c, m);
    }
    f[c] = ctx->inverse(s);
  }
  return f;
}

#define ELFLOW_INSTANTIATE(R)                                                      \
  template TensorField<R> laplacian<R>(const TensorField<R>&);                     \
  template TensorField<R> inverse_sqrt_laplacian<R>(const TensorField<R>&);        \
  template TensorField<R> dealias<R>(const TensorField<R>&);                       \
  template TensorField<R> heat<R>(const TensorField<R>&, double);                  \
  template double sobolev_seminorm_sq<R>(const TensorField<R>&, double);           \
  template double spectral_l2_squared<R>(const TensorField<R>&);                   \
  template double spectral_tail<R>(const TensorField<R>&);                          \
  template TensorField<R> band_limit<R>(const TensorField<R>&, double);            \
  template TensorField<R> band_limited_noise<R>(const Grid&, double, std::uint64_t);

ELFLOW_INSTANTIATE(0)
ELFLOW_INSTANTIATE(1)
ELFLOW_INSTANTIATE(2)
ELFLOW_INSTANTIATE(3)

#undef ELFLOW_INSTANTIATE

}  // namespace elflow
