#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ibse/solver.hpp"

namespace ibse {

enum class ProblemKind { poisson, heat, burgers, fhn };

// One benchmark problem: geometry, data, analytic solution when known, and
// its time-step rule. Scalar elliptic/parabolic problems carry exact/forcing;
// the nonlinear systems carry an initial pulse instead.
struct ProblemSpec {
  std::string name;
  ProblemKind kind = ProblemKind::poisson;
  int dim = 2;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  DomainSide side = DomainSide::interior;

  ParametricCurve (*curve)() = nullptr;  // 2D geometry
  double interval_a = 0.0, interval_b = 0.0;  // 1D excluded interval

  SpaceTimeFn exact;    // u_a(x, t); null for the nonlinear systems
  SpaceTimeFn forcing;  // f(x, t); null for the nonlinear systems
  // Boundary data at a node with the given outward normal: the value
  // (Dirichlet) or normal derivative (Neumann).
  std::function<double(Vec2, Vec2, double)> boundary;
  std::function<double(Vec2)> initial;  // nonlinear initial pulse

  double nu = 1.0;
  double t_final = 0.0;  // 0 for elliptic problems
  double fhn_a = 0.0, fhn_gamma = 0.0, fhn_eps = 0.0;

  // dt is nominally dt_dx_factor * dx; heat problems round the step count up,
  // the nonlinear problems round to nearest. dt*steps == t_final exactly.
  double dt_dx_factor = 0.0;
  bool dt_ceil = false;
};

const ProblemSpec& get_problem(const std::string& name);
const std::vector<std::string>& problem_names();

// Step count and exact dt for the problem's rule at spacing dx; an explicit
// nominal dt overrides the rule. Elliptic problems report {0, 0}.
std::pair<int, double> time_steps(const ProblemSpec& p, double dx,
                                  std::optional<double> dt_nominal = std::nullopt);

// |PDE residual| of the analytic solution at one point, via high-order finite
// differences in space and time against the registered forcing.
double analytic_residual(const ProblemSpec& p, Vec2 x, double t);

// Explicit terms for the nonlinear systems.
ExplicitTerm burgers_term(std::shared_ptr<FourierTransform> ft);
ExplicitTerm fhn_term(double a, double gamma, double eps);

// ---------------------------------------------------------------------------
// Error metrics

// max |u - exact(., t)| over the domain-side nodes; `shift` subtracts the
// mean difference over those nodes first (Neumann convention).
double domain_error(const DomainMasks& masks, const GridField& u, const SpaceTimeFn& exact,
                    double t, bool shift = false);

// L-inf difference over the coarse run's grid locations that are inside the
// domain on both runs; fine.n must be an integer multiple of coarse.n.
double self_convergence_error(const GridField& coarse, const DomainMasks& coarse_masks,
                              const GridField& fine, const DomainMasks& fine_masks);

// Least-squares convergence order from (n, error) pairs: the negated slope of
// log2(error) against log2(n).
double fit_order(const std::vector<int>& ns, const std::vector<double>& errors);

// ---------------------------------------------------------------------------
// Single-run orchestration

struct RunConfig {
  std::string problem;
  int k = 3;
  int n = 64;
  std::optional<double> theta;
  std::optional<double> dt;       // nominal dt override
  std::optional<double> t_final;  // integration horizon override
  bool direct_ib = false;     // 1D baseline method instead of the extension solver
  std::string cache_dir;      // factorization cache; empty disables
};

struct RunOutput {
  std::string problem;
  int k = 0, n = 0, n_bdy = 0, steps = 0;
  double dt = 0.0, t_final = 0.0;
  double linf_error = 0.0;          // NaN when no analytic solution
  double max_time_error = 0.0;      // heat: max over observed times; else NaN
  double prep_seconds = 0.0, run_seconds = 0.0, fft_seconds = 0.0;
  bool factorization_cached = false;
  std::vector<GridField> fields;    // all components at t_final
  GridSpec grid;
  DomainMasks masks;

  double prep_fft_units() const { return prep_seconds / fft_seconds; }
  double step_fft_units() const {
    return run_seconds / fft_seconds / std::max(1, steps);
  }
};

RunOutput run_problem(const RunConfig& cfg);

// CSV row in the stable schema
// problem,k,n,n_bdy,dt,t_final,linf_error,slope,prep_fft_units,step_fft_units,steps
// with slope supplied by the caller (nan when not applicable).
std::string csv_header();
std::string csv_row(const RunOutput& r, double slope);

}  // namespace ibse
