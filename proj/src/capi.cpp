#include "ibse.h"

#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "ibse/delta_kernel.hpp"
#include "ibse/problems.hpp"

using namespace ibse;

struct ibse_run {
  RunOutput out;
};

namespace {

thread_local std::string g_last_error;

void copy_string(const std::string& s, char* buf, size_t len) {
  if (!buf || len == 0) return;
  const size_t n = std::min(s.size(), len - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

template <typename F>
ibse_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return IBSE_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return IBSE_ERR_RUNTIME;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IBSE_ERR_NOMEM;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IBSE_ERR_RUNTIME;
  }
}

ibse_status invalid(const char* msg) {
  g_last_error = msg;
  return IBSE_ERR_INVALID;
}

}  // namespace

extern "C" {

const char* ibse_last_error(void) { return g_last_error.c_str(); }

const char* ibse_version(void) { return "1.0.0"; }

int ibse_problem_count(void) { return int(problem_names().size()); }

const char* ibse_problem_name(int index) {
  const auto& names = problem_names();
  if (index < 0 || index >= int(names.size())) return nullptr;
  return names[std::size_t(index)].c_str();
}

ibse_status ibse_run_problem(const char* problem, int k, int n, double theta, double dt,
                             double t_final, int direct_ib, const char* cache_dir,
                             ibse_run** out) {
  if (!problem || !out) return invalid("ibse_run_problem: null argument");
  *out = nullptr;
  {
    const auto& names = problem_names();
    bool known = false;
    for (const auto& s : names) known = known || s == problem;
    if (!known) return invalid("ibse_run_problem: unknown problem");
  }
  if (k > 3) return invalid("ibse_run_problem: extension order must be 1, 2 or 3");
  if (n > 0 && (n < 4 || n % 2 != 0))
    return invalid("ibse_run_problem: grid size must be even and at least 4");
  return guarded([&] {
    RunConfig cfg;
    cfg.problem = problem;
    if (k > 0) cfg.k = k;
    if (n > 0) cfg.n = n;
    if (theta > 0) cfg.theta = theta;
    if (dt > 0) cfg.dt = dt;
    if (t_final > 0) cfg.t_final = t_final;
    cfg.direct_ib = direct_ib != 0;
    if (cache_dir) cfg.cache_dir = cache_dir;
    auto* r = new ibse_run{run_problem(cfg)};
    *out = r;
  });
}

void ibse_run_free(ibse_run* run) { delete run; }

double ibse_run_linf_error(const ibse_run* run) {
  return run ? run->out.linf_error : std::numeric_limits<double>::quiet_NaN();
}
double ibse_run_max_time_error(const ibse_run* run) {
  return run ? run->out.max_time_error : std::numeric_limits<double>::quiet_NaN();
}
int ibse_run_steps(const ibse_run* run) { return run ? run->out.steps : 0; }
double ibse_run_dt(const ibse_run* run) { return run ? run->out.dt : 0.0; }
double ibse_run_t_final(const ibse_run* run) { return run ? run->out.t_final : 0.0; }
int ibse_run_boundary_nodes(const ibse_run* run) { return run ? run->out.n_bdy : 0; }
double ibse_run_prep_seconds(const ibse_run* run) { return run ? run->out.prep_seconds : 0.0; }
double ibse_run_run_seconds(const ibse_run* run) { return run ? run->out.run_seconds : 0.0; }
double ibse_run_fft_seconds(const ibse_run* run) { return run ? run->out.fft_seconds : 0.0; }
int ibse_run_cached(const ibse_run* run) {
  return run && run->out.factorization_cached ? 1 : 0;
}

int ibse_run_components(const ibse_run* run) {
  return run ? int(run->out.fields.size()) : 0;
}
int ibse_run_grid_size(const ibse_run* run) { return run ? run->out.grid.n : 0; }
int ibse_run_dim(const ibse_run* run) { return run ? run->out.grid.dim : 0; }

ibse_status ibse_run_field(const ibse_run* run, int component, double* buf, size_t len) {
  if (!run || !buf) return invalid("ibse_run_field: null argument");
  if (component < 0 || component >= int(run->out.fields.size()))
    return invalid("ibse_run_field: bad component");
  const auto& v = run->out.fields[std::size_t(component)].v;
  if (len < v.size()) return invalid("ibse_run_field: buffer too small");
  std::memcpy(buf, v.data(), v.size() * sizeof(double));
  return IBSE_OK;
}

ibse_status ibse_run_domain_mask(const ibse_run* run, double* buf, size_t len) {
  if (!run || !buf) return invalid("ibse_run_domain_mask: null argument");
  const auto& v = run->out.masks.chi_domain.v;
  if (len < v.size()) return invalid("ibse_run_domain_mask: buffer too small");
  std::memcpy(buf, v.data(), v.size() * sizeof(double));
  return IBSE_OK;
}

ibse_status ibse_self_difference(const ibse_run* coarse, const ibse_run* fine,
                                 int component, double* out) {
  if (!coarse || !fine || !out) return invalid("ibse_self_difference: null argument");
  if (component < 0 || component >= int(coarse->out.fields.size()) ||
      component >= int(fine->out.fields.size()))
    return invalid("ibse_self_difference: bad component");
  return guarded([&] {
    *out = self_convergence_error(coarse->out.fields[std::size_t(component)],
                                  coarse->out.masks,
                                  fine->out.fields[std::size_t(component)],
                                  fine->out.masks);
  });
}

ibse_status ibse_fit_order(const int* ns, const double* errors, int count, double* out) {
  if (!ns || !errors || !out) return invalid("ibse_fit_order: null argument");
  if (count < 2) return invalid("ibse_fit_order: need at least two points");
  for (int i = 0; i < count; ++i)
    if (!(errors[i] > 0)) return invalid("ibse_fit_order: errors must be positive");
  return guarded([&] {
    *out = fit_order(std::vector<int>(ns, ns + count),
                     std::vector<double>(errors, errors + count));
  });
}

ibse_status ibse_fft_baseline_seconds(int n, int dim, double* out) {
  if (!out) return invalid("ibse_fft_baseline_seconds: null argument");
  return guarded([&] { *out = fft_baseline_seconds(n, dim); });
}

ibse_status ibse_delta_audit(int perturb, char* buf, size_t len, int* pass) {
  if (!pass) return invalid("ibse_delta_audit: null argument");
  return guarded([&] {
    const DeltaAuditReport r = audit_smooth_delta(perturb != 0);
    *pass = r.pass() ? 1 : 0;
    if (buf) copy_string(r.text, buf, len);
  });
}

ibse_status ibse_factorization_info(const char* path, char* buf, size_t len) {
  if (!path || !buf) return invalid("ibse_factorization_info: null argument");
  return guarded([&] { copy_string(factorization_info(path), buf, len); });
}

int ibse_set_threads(int) { return 1; }

}  // extern "C"
