#include "ibse/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

namespace ibse {

namespace {
// FFTW plan creation/destruction is not reentrant; executions are.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

GridSpec::GridSpec(int dim_, int n_) : dim(dim_), n(n_), dx(kTwoPi / n_) {
  if (dim != 1 && dim != 2) throw Error("GridSpec: dim must be 1 or 2");
  if (n < 4 || n % 2 != 0) throw Error("GridSpec: n must be even and >= 4");
}

std::size_t GridSpec::size() const {
  std::size_t s = std::size_t(n);
  return dim == 2 ? s * s : s;
}

GridField GridField::sample(GridSpec g, const std::function<double(Vec2)>& f) {
  GridField out(g);
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) out.v[i] = f({g.coord(i), 0.0});
  } else {
    std::size_t idx = 0;
    for (int ix = 0; ix < g.n; ++ix)
      for (int iy = 0; iy < g.n; ++iy) out.v[idx++] = f({g.coord(ix), g.coord(iy)});
  }
  return out;
}

double max_abs(const GridField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const GridField& a, const GridField& b) {
  if (a.grid != b.grid) throw Error("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

FourierTransform::FourierTransform(GridSpec spec) : spec_(spec) {
  if (spec_.n == 0) throw Error("FourierTransform: empty grid");
  std::lock_guard<std::mutex> lock(planner_mutex());
  const std::size_t N = spec_.size();
  fftw_complex* a = fftw_alloc_complex(N);
  fftw_complex* b = fftw_alloc_complex(N);
  // UNALIGNED lets the plans execute on arbitrary caller buffers later.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (spec_.dim == 1) {
    fwd_ = fftw_plan_dft_1d(spec_.n, a, b, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_1d(spec_.n, a, b, FFTW_BACKWARD, flags);
  } else {
    fwd_ = fftw_plan_dft_2d(spec_.n, spec_.n, a, b, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_2d(spec_.n, spec_.n, a, b, FFTW_BACKWARD, flags);
  }
  fftw_free(a);
  fftw_free(b);
  if (!fwd_ || !bwd_) throw Error("FourierTransform: planning failed");
}

FourierTransform::~FourierTransform() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void FourierTransform::forward(const GridField& in, Spectrum& out) const {
  if (in.grid != spec_) throw Error("forward: grid mismatch");
  const std::size_t N = spec_.size();
  Spectrum buf(N);
  for (std::size_t i = 0; i < N; ++i) buf[i] = {in.v[i], 0.0};
  out.resize(N);
  fftw_execute_dft(static_cast<fftw_plan>(fwd_),
                   reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

double FourierTransform::inverse(const Spectrum& in, GridField& out) const {
  const std::size_t N = spec_.size();
  if (in.size() != N) throw Error("inverse: spectrum size mismatch");
  Spectrum buf(N);
  fftw_execute_dft(static_cast<fftw_plan>(bwd_),
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(buf.data()));
  out.grid = spec_;
  out.v.resize(N);
  const double s = 1.0 / double(N);
  double max_imag = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    out.v[i] = buf[i].real() * s;
    max_imag = std::max(max_imag, std::abs(buf[i].imag()) * s);
  }
  return max_imag;
}

SpectralMultiplier make_multiplier(
    const GridSpec& g,
    const std::function<std::complex<double>(const std::array<int, 2>&)>& f) {
  SpectralMultiplier m;
  m.grid = g;
  m.sym.resize(g.size());
  if (g.dim == 1) {
    for (int i = 0; i < g.n; ++i) m.sym[i] = f({g.wavenumber(i), 0});
  } else {
    std::size_t idx = 0;
    for (int ix = 0; ix < g.n; ++ix) {
      const int kx = g.wavenumber(ix);
      for (int iy = 0; iy < g.n; ++iy) m.sym[idx++] = f({kx, g.wavenumber(iy)});
    }
  }
  return m;
}

namespace {
double ksq(const std::array<int, 2>& k) {
  return double(k[0]) * k[0] + double(k[1]) * k[1];
}
}  // namespace

SpectralMultiplier laplacian_multiplier(const GridSpec& g) {
  return make_multiplier(g, [](const std::array<int, 2>& k) {
    return std::complex<double>(-ksq(k), 0.0);
  });
}

SpectralMultiplier helmholtz_inverse_multiplier(const GridSpec& g, double c) {
  if (!(c > 0.0)) throw Error("helmholtz_inverse: c must be positive");
  return make_multiplier(g, [c](const std::array<int, 2>& k) {
    return std::complex<double>(1.0 / (1.0 + c * ksq(k)), 0.0);
  });
}

SpectralMultiplier poisson_pseudo_inverse_multiplier(const GridSpec& g, double mu) {
  return make_multiplier(g, [mu](const std::array<int, 2>& k) {
    const double k2 = ksq(k);
    return std::complex<double>(k2 == 0.0 ? mu : -1.0 / k2, 0.0);
  });
}

SpectralMultiplier extension_multiplier(const GridSpec& g, int k, double theta) {
  if (k < 1 || k > 3) throw Error("extension operator: k must be in 1..3");
  if (!(theta > 0.0)) throw Error("extension operator: theta must be positive");
  const double sign = (k % 2 == 0) ? -1.0 : 1.0;  // (-1)^(k+1)
  return make_multiplier(g, [=](const std::array<int, 2>& kv) {
    const double k2 = ksq(kv);
    double p = 1.0;
    for (int i = 0; i < k + 1; ++i) p *= k2;
    return std::complex<double>(sign * (p + theta), 0.0);
  });
}

SpectralMultiplier extension_inverse_multiplier(const GridSpec& g, int k, double theta) {
  SpectralMultiplier m = extension_multiplier(g, k, theta);
  for (auto& s : m.sym) s = 1.0 / s;
  return m;
}

SpectralMultiplier derivative_multiplier(const GridSpec& g, int axis) {
  if (axis < 0 || axis >= g.dim) throw Error("derivative_multiplier: bad axis");
  const int nyq = -g.n / 2;
  return make_multiplier(g, [=](const std::array<int, 2>& k) {
    const int ka = k[axis];
    // The Nyquist mode has no well-defined odd derivative on the real grid.
    if (ka == nyq) return std::complex<double>(0.0, 0.0);
    return std::complex<double>(0.0, double(ka));
  });
}

GridField apply_multiplier(const FourierTransform& ft, const SpectralMultiplier& m,
                           const GridField& f) {
  if (m.grid != f.grid) throw Error("apply_multiplier: grid mismatch");
  Spectrum s;
  ft.forward(f, s);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= m.sym[i];
  GridField out;
  ft.inverse(s, out);
  return out;
}

GridField fft_roundtrip(const FourierTransform& ft, const GridField& f) {
  for (double x : f.v)
    if (!std::isfinite(x)) throw Error("fft_roundtrip: non-finite input");
  Spectrum s;
  ft.forward(f, s);
  GridField out;
  ft.inverse(s, out);
  return out;
}

GridField apply_laplacian(const FourierTransform& ft, const GridField& f) {
  return apply_multiplier(ft, laplacian_multiplier(f.grid), f);
}

GridField apply_helmholtz_inverse(const FourierTransform& ft, const GridField& f, double c) {
  return apply_multiplier(ft, helmholtz_inverse_multiplier(f.grid, c), f);
}

GridField apply_poisson_pseudo_inverse(const FourierTransform& ft, const GridField& f,
                                       double mu) {
  return apply_multiplier(ft, poisson_pseudo_inverse_multiplier(f.grid, mu), f);
}

GridField apply_extension_inverse(const FourierTransform& ft, const GridField& f, int k,
                                  double theta) {
  return apply_multiplier(ft, extension_inverse_multiplier(f.grid, k, theta), f);
}

std::vector<GridField> gradient(const FourierTransform& ft, const GridField& f) {
  Spectrum s, tmp;
  ft.forward(f, s);
  std::vector<GridField> out(f.grid.dim);
  for (int axis = 0; axis < f.grid.dim; ++axis) {
    SpectralMultiplier m = derivative_multiplier(f.grid, axis);
    tmp = s;
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] *= m.sym[i];
    ft.inverse(tmp, out[axis]);
  }
  return out;
}

double integral(const GridField& f) {
  double acc = 0.0;
  for (double x : f.v) acc += x;
  double scale = f.grid.dx;
  if (f.grid.dim == 2) scale *= f.grid.dx;
  return acc * scale;
}

double mean(const GridField& f) {
  double vol = kTwoPi;
  if (f.grid.dim == 2) vol *= kTwoPi;
  return integral(f) / vol;
}

double fft_baseline_seconds(int n, int dim, int reps) {
  GridSpec g(dim, n);
  FourierTransform ft(g);
  GridField f = GridField::sample(g, [](Vec2 p) { return std::sin(p[0]) + std::cos(3 * p[1]); });
  Spectrum s;
  ft.forward(f, s);  // warm-up
  std::vector<double> times;
  times.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    ft.forward(f, s);
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace ibse
