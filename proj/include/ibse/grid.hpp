#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibse {

// All exceptional conditions in the library raise this type; the C API layer
// translates it into error codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec2 = std::array<double, 2>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Periodic tensor grid on [0,2pi)^dim with n points per axis, x_j = j*dx.
// Fields over it are stored row-major with axis 0 outermost.
struct GridSpec {
  int dim = 0;
  int n = 0;
  double dx = 0.0;

  GridSpec() = default;
  GridSpec(int dim_, int n_);

  std::size_t size() const;
  double coord(int j) const { return j * dx; }
  // Integer frequency for axis index j, in -n/2 .. n/2-1.
  int wavenumber(int j) const { return j <= n / 2 - 1 ? j : j - n; }

  bool operator==(const GridSpec&) const = default;
};

struct GridField {
  GridSpec grid;
  std::vector<double> v;

  GridField() = default;
  explicit GridField(GridSpec g) : grid(g), v(g.size(), 0.0) {}

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  double& at(int ix, int iy) { return v[std::size_t(ix) * grid.n + iy]; }
  double at(int ix, int iy) const { return v[std::size_t(ix) * grid.n + iy]; }

  static GridField zeros(GridSpec g) { return GridField(g); }
  // Fill from a pointwise function of the node coordinates (y = 0 in 1D).
  static GridField sample(GridSpec g, const std::function<double(Vec2)>& f);
};

double max_abs(const GridField& f);
double max_abs_diff(const GridField& a, const GridField& b);

using Spectrum = std::vector<std::complex<double>>;

// Thin wrapper over FFTW complex transforms for one grid. Forward is
// unnormalized; inverse carries the 1/n^dim factor and returns the real part.
// Plan creation is serialized internally; execution is reentrant.
class FourierTransform {
 public:
  explicit FourierTransform(GridSpec spec);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;

  const GridSpec& spec() const { return spec_; }

  void forward(const GridField& in, Spectrum& out) const;
  // Returns the largest |imaginary part| seen after normalization, which for
  // conjugate-symmetric spectra is roundoff noise.
  double inverse(const Spectrum& in, GridField& out) const;

 private:
  GridSpec spec_;
  void* fwd_ = nullptr;  // fftw_plan
  void* bwd_ = nullptr;
};

// Diagonal Fourier-space operator. Symbols are stored mode-by-mode in the
// same layout as spectra.
struct SpectralMultiplier {
  GridSpec grid;
  Spectrum sym;
};

SpectralMultiplier make_multiplier(
    const GridSpec& g,
    const std::function<std::complex<double>(const std::array<int, 2>&)>& f);

// symbol -|kvec|^2
SpectralMultiplier laplacian_multiplier(const GridSpec& g);
// symbol 1/(1 + c|kvec|^2), the inverse of I - c*Laplacian; requires c > 0
SpectralMultiplier helmholtz_inverse_multiplier(const GridSpec& g, double c);
// Pseudo-inverse of the periodic Laplacian: zero mode -> mu * mean, other
// modes -> -1/|kvec|^2.
SpectralMultiplier poisson_pseudo_inverse_multiplier(const GridSpec& g, double mu);
// symbol of the extension operator Delta^(k+1) + (-1)^(k+1)*theta, i.e.
// (-1)^(k+1) * (|kvec|^(2(k+1)) + theta); requires 1 <= k <= 3, theta > 0
SpectralMultiplier extension_multiplier(const GridSpec& g, int k, double theta);
SpectralMultiplier extension_inverse_multiplier(const GridSpec& g, int k, double theta);
// per-axis symbol i*k with the Nyquist mode zeroed
SpectralMultiplier derivative_multiplier(const GridSpec& g, int axis);

GridField apply_multiplier(const FourierTransform& ft, const SpectralMultiplier& m,
                           const GridField& f);

GridField fft_roundtrip(const FourierTransform& ft, const GridField& f);
GridField apply_laplacian(const FourierTransform& ft, const GridField& f);
GridField apply_helmholtz_inverse(const FourierTransform& ft, const GridField& f, double c);
GridField apply_poisson_pseudo_inverse(const FourierTransform& ft, const GridField& f, double mu);
GridField apply_extension_inverse(const FourierTransform& ft, const GridField& f, int k,
                                  double theta);
std::vector<GridField> gradient(const FourierTransform& ft, const GridField& f);

// Trapezoidal (= spectral) integral sum(v)*dx^dim and domain mean.
double integral(const GridField& f);
double mean(const GridField& f);

// Median wall-clock seconds for one forward transform of an n^dim field,
// over `reps` executions. The unit used by timing reports.
double fft_baseline_seconds(int n, int dim, int reps = 20);

}  // namespace ibse
