#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "ibse.h"

TEST_CASE("version and registry metadata") {
  CHECK(std::string(ibse_version()) == "1.0.0");
  REQUIRE(ibse_problem_count() == 7);
  for (int i = 0; i < ibse_problem_count(); ++i) CHECK(ibse_problem_name(i) != nullptr);
  CHECK(ibse_problem_name(-1) == nullptr);
  CHECK(ibse_problem_name(99) == nullptr);
}

TEST_CASE("invalid requests produce status codes and messages") {
  ibse_run* run = nullptr;
  CHECK(ibse_run_problem("no-such-problem", 3, 64, 0, 0, 0, 0, nullptr, &run) ==
        IBSE_ERR_INVALID);
  CHECK(run == nullptr);
  CHECK(std::strlen(ibse_last_error()) > 0);

  CHECK(ibse_run_problem("poisson-1d", 9, 64, 0, 0, 0, 0, nullptr, &run) ==
        IBSE_ERR_INVALID);
  CHECK(ibse_run_problem("poisson-1d", 3, 63, 0, 0, 0, 0, nullptr, &run) ==
        IBSE_ERR_INVALID);
  CHECK(ibse_run_problem(nullptr, 3, 64, 0, 0, 0, 0, nullptr, &run) == IBSE_ERR_INVALID);
  CHECK(ibse_run_problem("poisson-1d", 3, 64, 0, 0, 0, 0, nullptr, nullptr) ==
        IBSE_ERR_INVALID);
}

TEST_CASE("a complete run exposes its results") {
  ibse_run* run = nullptr;
  REQUIRE(ibse_run_problem("poisson-1d", 2, 256, 0, 0, 0, 0, nullptr, &run) == IBSE_OK);
  REQUIRE(run != nullptr);

  CHECK(ibse_run_linf_error(run) > 0);
  CHECK(ibse_run_linf_error(run) < 1e-4);
  CHECK(ibse_run_steps(run) == 0);
  CHECK(ibse_run_boundary_nodes(run) == 2);
  CHECK(ibse_run_dim(run) == 1);
  CHECK(ibse_run_grid_size(run) == 256);
  CHECK(ibse_run_components(run) == 1);
  CHECK(ibse_run_prep_seconds(run) > 0);
  CHECK(ibse_run_fft_seconds(run) > 0);
  CHECK(ibse_run_cached(run) == 0);
  CHECK(std::isnan(ibse_run_max_time_error(run)));

  std::vector<double> field(256);
  CHECK(ibse_run_field(run, 0, field.data(), field.size()) == IBSE_OK);
  double mx = 0;
  for (double v : field) mx = std::max(mx, std::abs(v));
  CHECK(mx > 0.1);

  CHECK(ibse_run_field(run, 1, field.data(), field.size()) == IBSE_ERR_INVALID);
  CHECK(ibse_run_field(run, 0, field.data(), 100) == IBSE_ERR_INVALID);

  std::vector<double> mask(256);
  CHECK(ibse_run_domain_mask(run, mask.data(), mask.size()) == IBSE_OK);
  int inside = 0;
  for (double v : mask) {
    CHECK((v == 0.0 || v == 1.0));
    inside += v == 1.0;
  }
  CHECK(inside > 128);

  ibse_run_free(run);
  ibse_run_free(nullptr);  // harmless
}

TEST_CASE("self difference requires nested compatible runs") {
  ibse_run *coarse = nullptr, *fine = nullptr;
  REQUIRE(ibse_run_problem("poisson-circle", 1, 32, 0, 0, 0, 0, nullptr, &coarse) ==
          IBSE_OK);
  REQUIRE(ibse_run_problem("poisson-circle", 1, 64, 0, 0, 0, 0, nullptr, &fine) ==
          IBSE_OK);
  double diff = -1;
  CHECK(ibse_self_difference(coarse, fine, 0, &diff) == IBSE_OK);
  CHECK(diff >= 0);
  CHECK(diff < 1e-2);
  CHECK(ibse_self_difference(coarse, fine, 3, &diff) == IBSE_ERR_INVALID);
  ibse_run_free(coarse);
  ibse_run_free(fine);
}

TEST_CASE("order fitting through the C boundary") {
  int ns[3] = {32, 64, 128};
  double errs[3] = {1.0, 0.25, 0.0625};
  double slope = 0;
  CHECK(ibse_fit_order(ns, errs, 3, &slope) == IBSE_OK);
  CHECK(slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ibse_fit_order(ns, errs, 1, &slope) == IBSE_ERR_INVALID);
  double bad[3] = {1.0, -1.0, 0.5};
  CHECK(ibse_fit_order(ns, bad, 3, &slope) == IBSE_ERR_INVALID);
}

TEST_CASE("kernel audit runs through the C boundary") {
  char buf[8192];
  int pass = -1;
  CHECK(ibse_delta_audit(0, buf, sizeof buf, &pass) == IBSE_OK);
  CHECK(pass == 1);
  CHECK(std::strlen(buf) > 50);
  CHECK(ibse_delta_audit(1, buf, sizeof buf, &pass) == IBSE_OK);
  CHECK(pass == 0);
}

TEST_CASE("miscellaneous entry points") {
  CHECK(ibse_set_threads(4) == 1);  // serial build
  double fft = 0;
  CHECK(ibse_fft_baseline_seconds(64, 2, &fft) == IBSE_OK);
  CHECK(fft > 0);
  char buf[256];
  CHECK(ibse_factorization_info("/nonexistent/file.fac", buf, sizeof buf) ==
        IBSE_ERR_RUNTIME);
  CHECK(std::strlen(ibse_last_error()) > 0);
}
