/* C interface to the smooth-extension spectral solver library.
 *
 * All functions are thread-compatible; error messages are thread-local.
 * Handles returned by ibse_run_problem are immutable and must be released
 * with ibse_run_free.
 */
#ifndef IBSE_H
#define IBSE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ibse_run ibse_run; /* one completed problem run */

typedef enum {
  IBSE_OK = 0,
  IBSE_ERR_INVALID = 1, /* bad arguments, unknown problem, size mismatch */
  IBSE_ERR_RUNTIME = 2, /* solver/io failure: divergence, singularity, bad file */
  IBSE_ERR_NOMEM = 3
} ibse_status;

/* Message for the most recent failure on this thread ("" if none). */
const char* ibse_last_error(void);

const char* ibse_version(void);

/* Problem registry. Names index the benchmark set. */
int ibse_problem_count(void);
const char* ibse_problem_name(int index); /* NULL when out of range */

/* Run one benchmark problem at regularity order k (1..3) and grid size n.
 * Pass theta/dt/t_final <= 0 for the built-in defaults. direct_ib nonzero
 * selects the first-order forcing baseline (1D problem only). cache_dir may
 * be NULL to disable the factorization cache. */
ibse_status ibse_run_problem(const char* problem, int k, int n, double theta, double dt,
                             double t_final, int direct_ib, const char* cache_dir,
                             ibse_run** out);
void ibse_run_free(ibse_run* run);

/* Scalar results. Errors are NaN where no analytic solution exists. */
double ibse_run_linf_error(const ibse_run* run);
double ibse_run_max_time_error(const ibse_run* run); /* parabolic: max over steps */
int ibse_run_steps(const ibse_run* run);
double ibse_run_dt(const ibse_run* run);
double ibse_run_t_final(const ibse_run* run);
int ibse_run_boundary_nodes(const ibse_run* run);
double ibse_run_prep_seconds(const ibse_run* run);
double ibse_run_run_seconds(const ibse_run* run);
double ibse_run_fft_seconds(const ibse_run* run); /* median one-FFT baseline */
int ibse_run_cached(const ibse_run* run);         /* factorization came from cache */

/* Field access. Fields are row-major with n^dim entries. */
int ibse_run_components(const ibse_run* run);
int ibse_run_grid_size(const ibse_run* run);
int ibse_run_dim(const ibse_run* run);
ibse_status ibse_run_field(const ibse_run* run, int component, double* buf, size_t len);
/* 1 on the physical domain, 0 on the extension region. */
ibse_status ibse_run_domain_mask(const ibse_run* run, double* buf, size_t len);

/* L-inf difference between runs of one problem at nested resolutions,
 * evaluated at the coarse run's in-domain grid locations. */
ibse_status ibse_self_difference(const ibse_run* coarse, const ibse_run* fine,
                                 int component, double* out);

/* Least-squares convergence order from (n, error) pairs. */
ibse_status ibse_fit_order(const int* ns, const double* errors, int count, double* out);

/* Median wall-clock seconds of one forward FFT on an n^dim grid. */
ibse_status ibse_fft_baseline_seconds(int n, int dim, double* out);

/* Audit of the boundary-coupling kernel table. Writes a printable report
 * (NUL-terminated, truncated to len) and sets *pass. perturb nonzero corrupts
 * one coefficient first; the audit must then fail. */
ibse_status ibse_delta_audit(int perturb, char* buf, size_t len, int* pass);

/* One-line metadata summary of a saved factorization file. */
ibse_status ibse_factorization_info(const char* path, char* buf, size_t len);

/* Worker thread cap. This build is serial: always returns 1. */
int ibse_set_threads(int n);

#ifdef __cplusplus
}
#endif

#endif /* IBSE_H */
