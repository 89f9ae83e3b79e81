#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ibse/schur.hpp"

using namespace ibse;
using std::numbers::pi;

namespace {

SolverContext circle_context(int n, int k) {
  GridSpec g(2, n);
  return make_context(make_circle({pi, pi}, 1.0), DomainSide::interior, g, k);
}

std::vector<double> mat_vec(const SchurFactorization& f, const std::vector<double>& x) {
  std::vector<double> y(f.m, 0.0);
  for (int r = 0; r < f.m; ++r) {
    double s = 0;
    for (int c = 0; c < f.m; ++c) s += f.matrix[std::size_t(r) * f.m + c] * x[c];
    y[r] = s;
  }
  return y;
}

GridField sub(const GridField& a, const GridField& b) {
  GridField out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
  return out;
}

GridField masked(const GridField& mask, const GridField& f) {
  GridField out = f;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= mask.v[i];
  return out;
}

// Independent composition of the invertible-kind coupled action on (F, G):
// the matrix row blocks are the derivative-matching constraints on xi - u and
// the boundary-condition row on u, with u responding to both unknowns through
// the Helmholtz solve.
std::vector<double> invertible_action(const SolverContext& ctx, double c,
                                      BoundaryCondition bc, const std::vector<double>& x) {
  const int nb = ctx.n_bdy();
  const int kk = ctx.k;
  std::vector<double> F(x.begin(), x.begin() + std::size_t((kk + 1) * nb));
  std::vector<double> G(x.begin() + std::size_t((kk + 1) * nb), x.end());

  GridField w = ctx.coupling->spread_stacked(kk, F);
  Spectrum what(ctx.grid.size());
  ctx.ft->forward(w, what);
  Spectrum xihat(ctx.grid.size());
  for (std::size_t i = 0; i < xihat.size(); ++i) xihat[i] = -ctx.extension_inv[i] * what[i];
  GridField xi(ctx.grid);
  ctx.ft->inverse(xihat, xi);
  Spectrum lxihat(ctx.grid.size());
  for (std::size_t i = 0; i < lxihat.size(); ++i)
    lxihat[i] = (1.0 - c * ctx.laplacian[i]) * xihat[i];
  GridField lxi(ctx.grid);
  ctx.ft->inverse(lxihat, lxi);

  GridField field = masked(ctx.masks.chi_extension, lxi);
  GridField sg = ctx.bc_spread(bc, G);
  for (std::size_t i = 0; i < field.v.size(); ++i) field.v[i] -= sg.v[i];
  GridField u = apply_helmholtz_inverse(*ctx.ft, field, c);

  std::vector<double> out = ctx.coupling->interp_stacked(kk, sub(xi, u));
  std::vector<double> bot = ctx.bc_interp(bc, u);
  out.insert(out.end(), bot.begin(), bot.end());
  return out;
}

// Same for the augmented kind on (F, G, U): eta enters with a positive sign
// in the matrix and the projection row closes the zero-mean compatibility.
std::vector<double> augmented_action(const SolverContext& ctx, BoundaryCondition bc,
                                     double mu, double beta, const std::vector<double>& x) {
  const int nb = ctx.n_bdy();
  const int kk = ctx.k;
  std::vector<double> F(x.begin(), x.begin() + std::size_t((kk + 1) * nb));
  std::vector<double> G(x.begin() + std::size_t((kk + 1) * nb), x.end() - 1);
  const double U = x.back();

  GridField w = ctx.coupling->spread_stacked(kk, F);
  Spectrum what(ctx.grid.size());
  ctx.ft->forward(w, what);
  Spectrum etahat(ctx.grid.size());
  for (std::size_t i = 0; i < etahat.size(); ++i) etahat[i] = ctx.extension_inv[i] * what[i];
  GridField eta(ctx.grid);
  ctx.ft->inverse(etahat, eta);
  Spectrum zhat(ctx.grid.size());
  for (std::size_t i = 0; i < zhat.size(); ++i) zhat[i] = ctx.laplacian[i] * etahat[i];
  GridField lap_eta(ctx.grid);
  ctx.ft->inverse(zhat, lap_eta);
  GridField z = masked(ctx.masks.chi_extension, lap_eta);

  GridField field = z;
  GridField sg = ctx.bc_spread(bc, G);
  for (std::size_t i = 0; i < field.v.size(); ++i) field.v[i] += sg.v[i];
  GridField a0 = apply_poisson_pseudo_inverse(*ctx.ft, field, mu);

  std::vector<double> out = ctx.coupling->interp_stacked(kk, sub(a0, eta));
  for (int i = 0; i < nb; ++i) out[i] += U / beta;  // value block only
  std::vector<double> bot = ctx.bc_interp(bc, a0);
  if (bc == BoundaryCondition::dirichlet)
    for (double& v : bot) v += U / beta;
  out.insert(out.end(), bot.begin(), bot.end());
  out.push_back(mean(field));
  return out;
}

}  // namespace

TEST_CASE("default theta and condition number") {
  CHECK(default_theta(1, 64) == 1.0);
  // k = 3, n = 2^16: 1e-3 * 2^-52 * (2^15)^8 = 1e-3 * 2^68
  CHECK(default_theta(3, 1 << 16) ==
        doctest::Approx(1e-3 * std::ldexp(1.0, 68)).epsilon(1e-14));
  const double th = default_theta(3, 4096);
  CHECK(extension_condition(3, 4096, th) ==
        doctest::Approx(1.0 + std::pow(2048.0, 8) / th).epsilon(1e-14));
}

TEST_CASE("stepping theta binds only on fine grids") {
  CHECK(stepping_theta(3, 64) == default_theta(3, 64));
  CHECK(stepping_theta(1, 1024) == default_theta(1, 1024));
  // k = 3, n = 512: 10 * 2^-52 * (2^8)^8 = 10 * 2^12
  CHECK(stepping_theta(3, 512) == 40960.0);
  CHECK(stepping_theta(3, 256) > default_theta(3, 256));
}

TEST_CASE("context construction validates its inputs") {
  GridSpec g(2, 32);
  ParametricCurve c = make_circle({pi, pi}, 1.0);
  CHECK_THROWS_AS(make_context(c, DomainSide::interior, g, 0), Error);
  CHECK_THROWS_AS(make_context(c, DomainSide::interior, g, 4), Error);
  CHECK_THROWS_AS(make_context(c, DomainSide::interior, g, 2, -1.0), Error);
  SolverContext ctx = make_context(c, DomainSide::interior, g, 2);
  CHECK(ctx.k == 2);
  CHECK(ctx.theta == default_theta(2, 32));
  CHECK(ctx.n_bdy() == 16);
  CHECK(ctx.schur_order() == 4 * 16);
}

TEST_CASE("invertible schur matrix matches the operator composition") {
  for (int k : {1, 2}) {
    SolverContext ctx = circle_context(32, k);
    const double c = 0.031;
    for (BoundaryCondition bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
      SchurFactorization f = assemble_schur(ctx, c, bc);
      REQUIRE(f.m == ctx.schur_order());
      std::mt19937 rng(42 + k);
      std::uniform_real_distribution<double> uni(-1.0, 1.0);
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> x(f.m);
        for (double& v : x) v = uni(rng);
        std::vector<double> via_matrix = mat_vec(f, x);
        std::vector<double> via_ops = invertible_action(ctx, c, bc, x);
        double err = 0, scale = 1;
        for (int i = 0; i < f.m; ++i) {
          err = std::max(err, std::abs(via_matrix[i] - via_ops[i]));
          scale = std::max(scale, std::abs(via_ops[i]));
        }
        CHECK(err / scale <= 1e-11);
      }
    }
  }
}

TEST_CASE("augmented schur matrix matches the operator composition") {
  SolverContext ctx = circle_context(32, 2);
  const double mu = 0.0;
  for (BoundaryCondition bc : {BoundaryCondition::dirichlet, BoundaryCondition::neumann}) {
    SchurFactorization f = assemble_augmented_schur(ctx, bc, mu);
    REQUIRE(f.m == ctx.schur_order() + 1);
    const double beta = f.beta;
    CHECK(beta == double(ctx.n_bdy()));
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x(f.m);
      for (double& v : x) v = uni(rng);
      std::vector<double> via_matrix = mat_vec(f, x);
      std::vector<double> via_ops = augmented_action(ctx, bc, mu, beta, x);
      double err = 0, scale = 1;
      for (int i = 0; i < f.m; ++i) {
        err = std::max(err, std::abs(via_matrix[i] - via_ops[i]));
        scale = std::max(scale, std::abs(via_ops[i]));
      }
      CHECK(err / scale <= 1e-11);
    }
  }
}

TEST_CASE("solve agrees with the stored matrix") {
  SolverContext ctx = circle_context(32, 1);
  SchurFactorization f = assemble_schur(ctx, 0.05, BoundaryCondition::dirichlet);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> b(f.m);
  for (double& v : b) v = uni(rng);
  SchurSolveInfo info;
  std::vector<double> x = solve_schur(f, b, &info);
  CHECK(info.residual_ok);
  std::vector<double> back = mat_vec(f, x);
  double err = 0;
  for (int i = 0; i < f.m; ++i) err = std::max(err, std::abs(back[i] - b[i]));
  CHECK(err <= 1e-9);
  CHECK(info.residual == doctest::Approx(err).epsilon(1e-9));
}

TEST_CASE("factorization round trips through disk bit for bit") {
  namespace fs = std::filesystem;
  SolverContext ctx = circle_context(32, 1);
  SchurFactorization f = assemble_augmented_schur(ctx, BoundaryCondition::dirichlet);
  const std::string path = (fs::temp_directory_path() / "ibse_test_roundtrip.fac").string();
  save_factorization(f, path);

  SchurFactorization g = load_factorization(path);
  CHECK(g.kind == f.kind);
  CHECK(g.bc == f.bc);
  CHECK(g.k == f.k);
  CHECK(g.n == f.n);
  CHECK(g.dim == f.dim);
  CHECK(g.n_bdy == f.n_bdy);
  CHECK(std::isnan(g.c));  // augmented kind stores no Helmholtz coefficient
  CHECK(g.theta == f.theta);
  CHECK(g.mu == f.mu);
  CHECK(g.beta == f.beta);
  CHECK(g.geometry_digest == f.geometry_digest);
  REQUIRE(g.m == f.m);
  CHECK(g.matrix == f.matrix);
  CHECK(g.lu == f.lu);
  CHECK(g.pivots == f.pivots);

  std::string why;
  CHECK(factorization_matches(g, f, &why));

  // a factorization built for different geometry must be rejected by the
  // compatibility check, with the digest named in the reason
  SchurFactorization expect = f;
  expect.geometry_digest ^= 0x1;
  CHECK_FALSE(factorization_matches(g, expect, &why));
  CHECK(why.find("digest") != std::string::npos);

  // so must one built with a different extension regularization
  expect = f;
  expect.theta *= 2.0;
  CHECK_FALSE(factorization_matches(g, expect, &why));
  CHECK(why.find("regularization") != std::string::npos);

  // metadata summary mentions the shape without loading the payload
  std::string info = factorization_info(path);
  CHECK(info.find("augmented") != std::string::npos);
  CHECK(info.find("dirichlet") != std::string::npos);

  fs::remove(path);
}

TEST_CASE("corrupted or truncated files are refused") {
  namespace fs = std::filesystem;
  SolverContext ctx = circle_context(32, 1);
  SchurFactorization f = assemble_schur(ctx, 0.01, BoundaryCondition::dirichlet);
  const std::string path = (fs::temp_directory_path() / "ibse_test_corrupt.fac").string();
  save_factorization(f, path);

  // truncate: drop the last 8 bytes
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 8);
  CHECK_THROWS_AS(load_factorization(path), Error);

  // wrong magic
  {
    std::fstream s(path, std::ios::in | std::ios::out | std::ios::binary);
    s.seekp(0);
    s.write("XXXX", 4);
  }
  fs::resize_file(path, full);
  CHECK_THROWS_AS(load_factorization(path), Error);

  CHECK_THROWS_AS(load_factorization("/nonexistent/path/x.fac"), Error);
  fs::remove(path);
}

TEST_CASE("robin factorizations are runtime-only") {
  SolverContext ctx = circle_context(32, 1);
  RobinCoefficients rc{2.0, 0.5};
  SchurFactorization f = assemble_schur(ctx, 0.01, BoundaryCondition::robin, rc);
  CHECK(f.rc.a == 2.0);
  CHECK(f.rc.b == 0.5);
  CHECK_THROWS_AS(save_factorization(f, "/tmp/ibse_test_robin.fac"), Error);
}

TEST_CASE("geometry digest tracks the node set") {
  GridSpec g(2, 32);
  ParametricCurve c1 = make_circle({pi, pi}, 1.0);
  ParametricCurve c2 = make_circle({pi, pi}, 1.5);
  BoundaryDiscretization b1 = discretize(c1, DomainSide::interior, 16);
  BoundaryDiscretization b2 = discretize(c2, DomainSide::interior, 16);
  CHECK(geometry_digest(b1) != geometry_digest(b2));
  CHECK(geometry_digest(b1) == geometry_digest(b1));
}
