#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ibse/grid.hpp"

using namespace ibse;
using std::numbers::pi;

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS(GridSpec(3, 64), Error);
  CHECK_THROWS_AS(GridSpec(2, 63), Error);
  CHECK_THROWS_AS(GridSpec(2, 2), Error);
  GridSpec g(2, 64);
  CHECK(g.size() == 64 * 64);
  CHECK(g.dx == doctest::Approx(2.0 * pi / 64).epsilon(1e-15));
  CHECK(g.wavenumber(0) == 0);
  CHECK(g.wavenumber(31) == 31);
  CHECK(g.wavenumber(32) == -32);
  CHECK(g.wavenumber(63) == -1);
  GridSpec g1(1, 128);
  CHECK(g1.size() == 128);
}

TEST_CASE("transform roundtrip is exact to machine precision") {
  for (int dim : {1, 2}) {
    GridSpec g(dim, 32);
    FourierTransform ft(g);
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridField f(g);
    for (double& v : f.v) v = u(rng);
    GridField back = fft_roundtrip(ft, f);
    CHECK(max_abs_diff(f, back) < 1e-13);
  }
}

TEST_CASE("laplacian multiplier diagonalizes the second derivative") {
  GridSpec g(2, 64);
  FourierTransform ft(g);
  // f = sin(3x)cos(5y); lap f = -(9+25) f
  GridField f = GridField::sample(
      g, [](Vec2 x) { return std::sin(3.0 * x[0]) * std::cos(5.0 * x[1]); });
  GridField out = apply_laplacian(ft, f);
  double err = 0;
  for (std::size_t i = 0; i < f.v.size(); ++i)
    err = std::max(err, std::abs(out.v[i] + 34.0 * f.v[i]));
  CHECK(err < 1e-10);
}

TEST_CASE("helmholtz inverse inverts (I - c lap)") {
  GridSpec g(2, 32);
  FourierTransform ft(g);
  const double c = 0.37;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridField f(g);
  for (double& v : f.v) v = u(rng);
  GridField w = apply_helmholtz_inverse(ft, f, c);
  GridField lw = apply_laplacian(ft, w);
  double err = 0;
  for (std::size_t i = 0; i < f.v.size(); ++i)
    err = std::max(err, std::abs(w.v[i] - c * lw.v[i] - f.v[i]));
  CHECK(err < 1e-11);
  CHECK_THROWS_AS(apply_helmholtz_inverse(ft, f, -1.0), Error);
}

TEST_CASE("poisson pseudo-inverse pins the mean and inverts elsewhere") {
  GridSpec g(2, 32);
  FourierTransform ft(g);
  GridField f = GridField::sample(
      g, [](Vec2 x) { return std::cos(2.0 * x[0]) + std::sin(x[1]); });
  const double mu = 4.25;
  GridField u = apply_poisson_pseudo_inverse(ft, f, mu);
  // mean-free input: the output mean is mu * mean(f) = 0
  CHECK(std::abs(mean(u)) < 1e-13);
  GridField lu = apply_laplacian(ft, u);
  double err = 0;
  for (std::size_t i = 0; i < f.v.size(); ++i)
    err = std::max(err, std::abs(lu.v[i] - f.v[i]));
  CHECK(err < 1e-11);

  // constant input comes back scaled by mu
  GridField one(g);
  for (double& v : one.v) v = 1.0;
  GridField c = apply_poisson_pseudo_inverse(ft, one, mu);
  CHECK(max_abs(c) == doctest::Approx(mu).epsilon(1e-13));
  CHECK(mean(c) == doctest::Approx(mu).epsilon(1e-13));
}

TEST_CASE("derivative multiplier zeroes the unmatched mode") {
  GridSpec g(1, 16);
  FourierTransform ft(g);
  GridField f(g);
  // the mode-n/2 sawtooth cos(8x) has no well-defined odd derivative
  for (int i = 0; i < g.n; ++i) f.v[i] = std::cos(8.0 * i * g.dx);
  SpectralMultiplier d = derivative_multiplier(g, 0);
  GridField out = apply_multiplier(ft, d, f);
  CHECK(max_abs(out) < 1e-12);
  // smooth mode differentiates exactly
  for (int i = 0; i < g.n; ++i) f.v[i] = std::sin(3.0 * i * g.dx);
  out = apply_multiplier(ft, d, f);
  double err = 0;
  for (int i = 0; i < g.n; ++i)
    err = std::max(err, std::abs(out.v[i] - 3.0 * std::cos(3.0 * i * g.dx)));
  CHECK(err < 1e-12);
}

TEST_CASE("gradient returns one component per axis") {
  GridSpec g(2, 32);
  FourierTransform ft(g);
  GridField f = GridField::sample(
      g, [](Vec2 x) { return std::sin(2.0 * x[0]) * std::cos(x[1]); });
  auto grad = gradient(ft, f);
  REQUIRE(grad.size() == 2);
  GridField gx = GridField::sample(
      g, [](Vec2 x) { return 2.0 * std::cos(2.0 * x[0]) * std::cos(x[1]); });
  GridField gy = GridField::sample(
      g, [](Vec2 x) { return -std::sin(2.0 * x[0]) * std::sin(x[1]); });
  CHECK(max_abs_diff(grad[0], gx) < 1e-11);
  CHECK(max_abs_diff(grad[1], gy) < 1e-11);
}

TEST_CASE("extension operator symbol and inverse") {
  GridSpec g(1, 64);
  const int k = 3;
  const double theta = 17.0;
  SpectralMultiplier ext = extension_multiplier(g, k, theta);
  SpectralMultiplier inv = extension_inverse_multiplier(g, k, theta);
  // zero mode: symbol is (-1)^{k+1} theta = +theta for k=3
  CHECK(ext.sym[0].real() == doctest::Approx(theta).epsilon(1e-15));
  for (std::size_t i = 0; i < ext.sym.size(); ++i) {
    CHECK(ext.sym[i].imag() == 0.0);
    CHECK((ext.sym[i] * inv.sym[i]).real() == doctest::Approx(1.0).epsilon(1e-14));
  }
  // highest mode magnitude is (n/2)^{2(k+1)} + theta
  const double top = std::pow(32.0, 8) + theta;
  double maxmag = 0;
  for (auto& e : ext.sym) maxmag = std::max(maxmag, std::abs(e));
  CHECK(maxmag == doctest::Approx(top).epsilon(1e-13));
  // k = 2 flips the overall sign: zero mode (-1)^3 theta = -theta
  SpectralMultiplier ext2 = extension_multiplier(g, 2, theta);
  CHECK(ext2.sym[0].real() == doctest::Approx(-theta).epsilon(1e-15));
  CHECK_THROWS_AS(extension_multiplier(g, 4, theta), Error);
  CHECK_THROWS_AS(extension_multiplier(g, 3, 0.0), Error);
}

TEST_CASE("integral and mean use the uniform lattice weights") {
  GridSpec g(2, 48);
  GridField f = GridField::sample(g, [](Vec2 x) {
    return 2.5 + std::sin(x[0]) * std::cos(3.0 * x[1]);
  });
  // oscillatory part integrates to zero on the torus
  CHECK(integral(f) == doctest::Approx(2.5 * 4 * pi * pi).epsilon(1e-13));
  CHECK(mean(f) == doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("fft baseline timer returns a positive duration") {
  CHECK(fft_baseline_seconds(64, 2) > 0.0);
}
