#include "ibse/problems.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

namespace ibse {

namespace {

constexpr double kPi = kTwoPi / 2.0;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// --- 1D Poisson on T \ [3,4]: u'' = sin x, u(3) = u(4) = 0.
// On the unwrapped interval (4, 3+2pi) the solution is -sin x + Cx + D.
double interval_c() { return (std::sin(3.0) - std::sin(4.0)) / (kTwoPi - 1.0); }
double interval_exact(Vec2 p, double) {
  const double C = interval_c();
  const double D = std::sin(4.0) - 4.0 * C;
  const double x = p[0] <= 3.5 ? p[0] + kTwoPi : p[0];
  return -std::sin(x) + C * x + D;
}

// --- 2D circle problems about (pi, pi).
double esin_exact(Vec2 p, double) { return std::exp(std::sin(p[0])) + std::cos(p[1]); }
double esin_laplacian(Vec2 p, double) {
  const double cx = std::cos(p[0]);
  return std::exp(std::sin(p[0])) * (cx * cx - std::sin(p[0])) - std::cos(p[1]);
}
double esin_normal(Vec2 p, Vec2 n, double) {
  return n[0] * std::cos(p[0]) * std::exp(std::sin(p[0])) - n[1] * std::sin(p[1]);
}

double paraboloid_exact(Vec2 p, double) {
  const double x = p[0] - kPi, y = p[1] - kPi;
  return 4.0 - x * x - y * y;
}

// --- Heat outside the radius-1/4 obstacle: u_a = (e^{sin x} + cos y) cos t.
double obstacle_exact(Vec2 p, double t) { return esin_exact(p, 0.0) * std::cos(t); }
double obstacle_forcing(Vec2 p, double t) {
  return -esin_laplacian(p, 0.0) * std::cos(t) - esin_exact(p, 0.0) * std::sin(t);
}

// --- Heat inside the lobed parametric blob: u_a = sin(pi*phi).
double blob_phi(Vec2 p, double t) {
  const double q = (p[0] - kPi) / 4.0 + 1.0;
  const double r = (p[1] - kPi) / 4.0 + 1.0;
  return 9.0 * q * q + 4.0 * r * r + 2.0 * t;
}
double blob_exact(Vec2 p, double t) { return std::sin(kPi * blob_phi(p, t)); }
double blob_forcing(Vec2 p, double t) {
  const double phi = blob_phi(p, t);
  const double px = 4.5 * ((p[0] - kPi) / 4.0 + 1.0);
  const double py = 2.0 * ((p[1] - kPi) / 4.0 + 1.0);
  const double lap_phi = 13.0 / 8.0;
  return kPi * (2.0 - lap_phi) * std::cos(kPi * phi) +
         kPi * kPi * (px * px + py * py) * std::sin(kPi * phi);
}

double burgers_pulse(Vec2 p) {
  const double x = p[0] - 2.5, y = p[1] - 4.3;
  return 2.0 * std::exp(-40.0 * x * x) * std::exp(-40.0 * y * y);
}
double fhn_pulse(Vec2 p) {
  const double x = p[0] - 2.5, y = p[1] - 4.3;
  return 2.0 * std::exp(-100.0 * x * x) * std::exp(-10.0 * y * y);
}

ParametricCurve circle_r2() { return make_circle({kPi, kPi}, 2.0); }
ParametricCurve circle_r1() { return make_circle({kPi, kPi}, 1.0); }
ParametricCurve circle_quarter() { return make_circle({kPi, kPi}, 0.25); }

std::vector<ProblemSpec> build_registry() {
  std::vector<ProblemSpec> v;
  {
    ProblemSpec p;
    p.name = "poisson-1d";
    p.kind = ProblemKind::poisson;
    p.dim = 1;
    p.bc = BoundaryCondition::dirichlet;
    p.interval_a = 3.0;
    p.interval_b = 4.0;
    p.exact = interval_exact;
    p.forcing = [](Vec2 x, double) { return std::sin(x[0]); };
    p.boundary = [](Vec2, Vec2, double) { return 0.0; };
    v.push_back(std::move(p));
  }
  {
    ProblemSpec p;
    p.name = "poisson-circle";
    p.kind = ProblemKind::poisson;
    p.bc = BoundaryCondition::dirichlet;
    p.curve = circle_r2;
    p.exact = paraboloid_exact;
    p.forcing = [](Vec2, double) { return -4.0; };
    p.boundary = [](Vec2, Vec2, double) { return 0.0; };
    v.push_back(std::move(p));
  }
  {
    ProblemSpec p;
    p.name = "neumann-circle";
    p.kind = ProblemKind::poisson;
    p.bc = BoundaryCondition::neumann;
    p.curve = circle_r1;
    p.exact = esin_exact;
    p.forcing = esin_laplacian;
    p.boundary = esin_normal;
    v.push_back(std::move(p));
  }
  {
    ProblemSpec p;
    p.name = "heat-obstacle";
    p.kind = ProblemKind::heat;
    p.bc = BoundaryCondition::dirichlet;
    p.curve = circle_quarter;
    p.side = DomainSide::exterior;
    p.exact = obstacle_exact;
    p.forcing = obstacle_forcing;
    p.boundary = [](Vec2 x, Vec2, double t) { return obstacle_exact(x, t); };
    p.t_final = 0.1;
    p.dt_dx_factor = 0.5;
    p.dt_ceil = true;
    v.push_back(std::move(p));
  }
  {
    ProblemSpec p;
    p.name = "heat-blob";
    p.kind = ProblemKind::heat;
    p.bc = BoundaryCondition::dirichlet;
    p.curve = make_lobed_blob;
    p.exact = blob_exact;
    p.forcing = blob_forcing;
    p.boundary = [](Vec2 x, Vec2, double t) { return blob_exact(x, t); };
    p.t_final = 0.01;
    p.dt_dx_factor = 0.5;
    p.dt_ceil = true;
    v.push_back(std::move(p));
  }
  {
    ProblemSpec p;
    p.name = "burgers";
    p.kind = ProblemKind::burgers;
    p.bc = BoundaryCondition::dirichlet;
    p.curve = make_limacon_blob;
    p.side = DomainSide::exterior;
    p.initial = burgers_pulse;
    p.nu = 0.01;
    p.t_final = 2.0;
    p.dt_dx_factor = 1.0 / 20.0;
    v.push_back(std::move(p));
  }
  {
    ProblemSpec p;
    p.name = "fhn";
    p.kind = ProblemKind::fhn;
    p.bc = BoundaryCondition::neumann;
    p.curve = make_limacon_blob;
    p.side = DomainSide::exterior;
    p.initial = fhn_pulse;
    p.nu = 0.001;
    p.t_final = 200.0;
    p.fhn_a = 0.1;
    p.fhn_gamma = 2.0;
    p.fhn_eps = 0.005;
    p.dt_dx_factor = 0.5;
    v.push_back(std::move(p));
  }
  return v;
}

const std::vector<ProblemSpec>& registry() {
  static const std::vector<ProblemSpec> r = build_registry();
  return r;
}

}  // namespace

const ProblemSpec& get_problem(const std::string& name) {
  for (const ProblemSpec& p : registry())
    if (p.name == name) return p;
  throw Error("unknown problem: " + name);
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const ProblemSpec& p : registry()) v.push_back(p.name);
    return v;
  }();
  return names;
}

std::pair<int, double> time_steps(const ProblemSpec& p, double dx,
                                  std::optional<double> dt_nominal) {
  if (p.kind == ProblemKind::poisson) return {0, 0.0};
  const double nominal = dt_nominal.value_or(p.dt_dx_factor * dx);
  if (!(nominal > 0)) throw Error("time_steps: nonpositive dt");
  long steps = p.dt_ceil ? llround(std::ceil(p.t_final / nominal))
                         : llround(p.t_final / nominal);
  steps = std::max(steps, 1L);
  return {int(steps), p.t_final / double(steps)};
}

namespace {
// 6th-order central first and second derivative stencils.
double fd1(const std::function<double(double)>& f, double x, double h) {
  return (45.0 * (f(x + h) - f(x - h)) - 9.0 * (f(x + 2 * h) - f(x - 2 * h)) +
          (f(x + 3 * h) - f(x - 3 * h))) /
         (60.0 * h);
}
double fd2(const std::function<double(double)>& f, double x, double h) {
  return ((-49.0 / 18.0) * f(x) + 1.5 * (f(x + h) + f(x - h)) -
          (3.0 / 20.0) * (f(x + 2 * h) + f(x - 2 * h)) +
          (1.0 / 90.0) * (f(x + 3 * h) + f(x - 3 * h))) /
         (h * h);
}
}  // namespace

double analytic_residual(const ProblemSpec& p, Vec2 x, double t) {
  if (!p.exact || !p.forcing) throw Error("analytic_residual: no analytic solution");
  const double h = 1.5e-3;
  double lap = fd2([&](double s) { return p.exact({s, x[1]}, t); }, x[0], h);
  if (p.dim == 2) lap += fd2([&](double s) { return p.exact({x[0], s}, t); }, x[1], h);
  if (p.kind == ProblemKind::poisson) return std::abs(lap - p.forcing(x, t));
  const double ut = fd1([&](double s) { return p.exact(x, s); }, t, h);
  return std::abs(ut - p.nu * lap - p.forcing(x, t));
}

ExplicitTerm burgers_term(std::shared_ptr<FourierTransform> ft) {
  const GridSpec g = ft->spec();
  if (g.dim != 2) throw Error("burgers_term: needs a 2D grid");
  const Spectrum dx = derivative_multiplier(g, 0).sym;
  const Spectrum dy = derivative_multiplier(g, 1).sym;
  return [ft, dx, dy, g](const std::vector<GridField>& f, double,
                         std::vector<GridField>& out) {
    if (f.size() != 2) throw Error("burgers_term: two velocity components expected");
    const std::size_t N = g.size();
    Spectrum s[2], t(N);
    ft->forward(f[0], s[0]);
    ft->forward(f[1], s[1]);
    out.resize(2);
    GridField gx, gy;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < N; ++i) t[i] = s[c][i] * dx[i];
      ft->inverse(t, gx);
      for (std::size_t i = 0; i < N; ++i) t[i] = s[c][i] * dy[i];
      ft->inverse(t, gy);
      out[c] = GridField(g);
      for (std::size_t i = 0; i < N; ++i)
        out[c].v[i] = -(f[0].v[i] * gx.v[i] + f[1].v[i] * gy.v[i]);
    }
  };
}

ExplicitTerm fhn_term(double a, double gamma, double eps) {
  return [=](const std::vector<GridField>& f, double, std::vector<GridField>& out) {
    if (f.size() != 2) throw Error("fhn_term: (v, w) expected");
    const GridField& v = f[0];
    const GridField& w = f[1];
    out.resize(2);
    out[0] = GridField(v.grid);
    out[1] = GridField(v.grid);
    for (std::size_t i = 0; i < v.v.size(); ++i) {
      const double vv = v.v[i];
      out[0].v[i] = vv * (a - vv) * (vv - 1.0) - w.v[i];
      out[1].v[i] = eps * (vv - gamma * w.v[i]);
    }
  };
}

double domain_error(const DomainMasks& masks, const GridField& u, const SpaceTimeFn& exact,
                    double t, bool shift) {
  const GridSpec g = u.grid;
  if (masks.chi_domain.grid != g) throw Error("domain_error: grid mismatch");
  double offset = 0.0;
  if (shift) {
    double acc = 0.0;
    long cnt = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (masks.chi_domain.v[i] == 0.0) continue;
      Vec2 p = g.dim == 1 ? Vec2{g.coord(int(i)), 0.0}
                          : Vec2{g.coord(int(i) / g.n), g.coord(int(i) % g.n)};
      acc += u.v[i] - exact(p, t);
      ++cnt;
    }
    if (cnt == 0) throw Error("domain_error: empty domain");
    offset = acc / double(cnt);
  }
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (masks.chi_domain.v[i] == 0.0) continue;
    Vec2 p = g.dim == 1 ? Vec2{g.coord(int(i)), 0.0}
                        : Vec2{g.coord(int(i) / g.n), g.coord(int(i) % g.n)};
    m = std::max(m, std::abs(u.v[i] - exact(p, t) - offset));
  }
  return m;
}

double self_convergence_error(const GridField& coarse, const DomainMasks& coarse_masks,
                              const GridField& fine, const DomainMasks& fine_masks) {
  const GridSpec gc = coarse.grid, gf = fine.grid;
  if (gc.dim != gf.dim || gf.n % gc.n != 0 || gf.n <= gc.n)
    throw Error("self_convergence_error: grids are not nested");
  const int r = gf.n / gc.n;
  double m = 0.0;
  long cnt = 0;
  if (gc.dim == 1) {
    for (int i = 0; i < gc.n; ++i) {
      if (coarse_masks.chi_domain.v[i] == 0.0 || fine_masks.chi_domain.v[i * r] == 0.0)
        continue;
      m = std::max(m, std::abs(coarse.v[i] - fine.v[std::size_t(i) * r]));
      ++cnt;
    }
  } else {
    for (int ix = 0; ix < gc.n; ++ix)
      for (int iy = 0; iy < gc.n; ++iy) {
        if (coarse_masks.chi_domain.at(ix, iy) == 0.0 ||
            fine_masks.chi_domain.at(ix * r, iy * r) == 0.0)
          continue;
        m = std::max(m, std::abs(coarse.at(ix, iy) - fine.at(ix * r, iy * r)));
        ++cnt;
      }
  }
  if (cnt == 0) throw Error("self_convergence_error: no common domain nodes");
  return m;
}

double fit_order(const std::vector<int>& ns, const std::vector<double>& errors) {
  if (ns.size() != errors.size() || ns.size() < 2) throw Error("fit_order: need >= 2 points");
  const std::size_t m = ns.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(errors[i] > 0)) throw Error("fit_order: nonpositive error");
    sx += std::log2(double(ns[i]));
    sy += std::log2(errors[i]);
  }
  const double mx = sx / double(m), my = sy / double(m);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log2(double(ns[i])) - mx;
    num += dx * (std::log2(errors[i]) - my);
    den += dx * dx;
  }
  return -num / den;
}

// ---------------------------------------------------------------------------

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<double> boundary_values(const ProblemSpec& p, const BoundaryDiscretization& bdy,
                                    double t) {
  std::vector<double> g(bdy.n_bdy, 0.0);
  if (!p.boundary) return g;
  for (int i = 0; i < bdy.n_bdy; ++i) g[i] = p.boundary(bdy.node(i), bdy.normal(i), t);
  return g;
}

GridField sample_at(const GridSpec& g, const SpaceTimeFn& f, double t) {
  return GridField::sample(g, [&](Vec2 p) { return f(p, t); });
}

// Factorization with optional disk cache; cached factors must match the
// context and expected metadata exactly or they are rebuilt.
SchurFactorization prepare_factorization(const SolverContext& ctx, const ProblemSpec& p,
                                         double c, const RunConfig& cfg, bool* cached) {
  *cached = false;
  const bool cacheable = !cfg.cache_dir.empty() && !cfg.theta && !cfg.dt &&
                         !cfg.t_final && !cfg.direct_ib;
  std::string path;
  if (cacheable) {
    std::ostringstream os;
    os << cfg.cache_dir << "/" << p.name << "-k" << cfg.k << "-n" << cfg.n << ".fac";
    path = os.str();
    if (std::filesystem::exists(path)) {
      try {
        SchurFactorization fac = load_factorization(path);
        require_compatible(ctx, fac);
        SchurFactorization expect;
        expect.kind = p.kind == ProblemKind::poisson ? FactorizationKind::augmented
                                                     : FactorizationKind::invertible;
        expect.bc = p.bc;
        expect.k = ctx.k;
        expect.n = ctx.grid.n;
        expect.dim = ctx.grid.dim;
        expect.n_bdy = ctx.n_bdy();
        expect.m = ctx.schur_order() +
                   (expect.kind == FactorizationKind::augmented ? 1 : 0);
        expect.c = expect.kind == FactorizationKind::augmented
                       ? std::numeric_limits<double>::quiet_NaN()
                       : c;
        expect.theta = ctx.theta;
        expect.mu = 0.0;
        expect.beta = expect.kind == FactorizationKind::augmented ? double(ctx.n_bdy()) : 0.0;
        expect.geometry_digest = geometry_digest(ctx.bdy);
        if (factorization_matches(fac, expect)) {
          *cached = true;
          return fac;
        }
      } catch (const Error&) {
        // fall through to a fresh assembly
      }
    }
  }
  SchurFactorization fac = p.kind == ProblemKind::poisson
                               ? assemble_augmented_schur(ctx, p.bc)
                               : assemble_schur(ctx, c, p.bc);
  if (cacheable) {
    std::filesystem::create_directories(cfg.cache_dir);
    save_factorization(fac, path);
  }
  return fac;
}

}  // namespace

RunOutput run_problem(const RunConfig& cfg) {
  ProblemSpec p = get_problem(cfg.problem);
  if (cfg.t_final) {
    if (p.kind == ProblemKind::poisson)
      throw Error("run_problem: t_final does not apply to elliptic problems");
    if (!(*cfg.t_final > 0)) throw Error("run_problem: t_final must be positive");
    p.t_final = *cfg.t_final;
  }
  if (cfg.direct_ib && p.dim != 1)
    throw Error("run_problem: the direct-forcing baseline is 1D only");

  RunOutput out;
  out.problem = p.name;
  out.k = cfg.k;
  out.n = cfg.n;
  out.linf_error = kNaN;
  out.max_time_error = kNaN;

  const GridSpec grid(p.dim, cfg.n);
  out.grid = grid;
  const auto [steps, dt] = time_steps(p, grid.dx, cfg.dt);
  out.steps = steps;
  out.dt = dt;
  out.t_final = p.t_final;

  const double t_prep = now_seconds();
  // Stepped nonlinear problems run thousands of coupled solves, so their
  // contexts use the raised regularization floor unless overridden.
  std::optional<double> theta = cfg.theta;
  if (!theta && (p.kind == ProblemKind::burgers || p.kind == ProblemKind::fhn))
    theta = stepping_theta(cfg.k, cfg.n);
  SolverContext ctx = p.dim == 1
                          ? make_context_interval(p.interval_a, p.interval_b, grid, cfg.k,
                                                  theta)
                          : make_context(p.curve(), p.side, grid, cfg.k, theta);
  out.n_bdy = ctx.n_bdy();
  out.masks = ctx.masks;

  const double c = (12.0 / 25.0) * p.nu * dt;
  SchurFactorization fac;
  if (!cfg.direct_ib)
    fac = prepare_factorization(ctx, p, c, cfg, &out.factorization_cached);
  out.prep_seconds = now_seconds() - t_prep;

  const double t_run = now_seconds();
  switch (p.kind) {
    case ProblemKind::poisson: {
      const GridField f = sample_at(grid, p.forcing, 0.0);
      const std::vector<double> g = boundary_values(p, ctx.bdy, 0.0);
      GridField u;
      if (cfg.direct_ib)
        u = solve_direct_ib(ctx, f, g).u;
      else
        u = solve_elliptic(ctx, fac, f, g).u;
      out.fields.push_back(u);
      out.linf_error = domain_error(out.masks, u, p.exact, 0.0,
                                    p.bc == BoundaryCondition::neumann);
      break;
    }
    case ProblemKind::heat: {
      double worst = 0.0;
      double final_err = 0.0;
      GridField u = run_heat_bdf4(
          ctx, fac, p.nu, dt, steps, p.exact, p.forcing,
          [&](double t) { return boundary_values(p, ctx.bdy, t); },
          [&](int, double t, const GridField& uu) {
            const double e = domain_error(out.masks, uu, p.exact, t, false);
            worst = std::max(worst, e);
            final_err = e;
          });
      out.fields.push_back(std::move(u));
      out.linf_error = final_err;
      out.max_time_error = worst;
      break;
    }
    case ProblemKind::burgers: {
      const GridField psi = GridField::sample(grid, p.initial);
      std::vector<ImexComponent> comps(2);
      for (ImexComponent& cc : comps) {
        cc.ctx = &ctx;
        cc.fac = &fac;
        cc.nu = p.nu;
      }
      out.fields = run_imex_bdf4(comps, burgers_term(ctx.ft), {psi, psi}, dt, steps);
      break;
    }
    case ProblemKind::fhn: {
      const GridField psi = GridField::sample(grid, p.initial);
      std::vector<ImexComponent> comps(2);
      comps[0].ctx = &ctx;
      comps[0].fac = &fac;
      comps[0].nu = p.nu;
      out.fields = run_imex_bdf4(comps, fhn_term(p.fhn_a, p.fhn_gamma, p.fhn_eps),
                                 {psi, GridField(grid)}, dt, steps);
      break;
    }
  }
  out.run_seconds = now_seconds() - t_run;
  out.fft_seconds = fft_baseline_seconds(cfg.n, p.dim);
  return out;
}

std::string csv_header() {
  return "problem,k,n,n_bdy,dt,t_final,linf_error,slope,prep_fft_units,step_fft_units,"
         "steps";
}

std::string csv_row(const RunOutput& r, double slope) {
  std::ostringstream os;
  os.precision(17);
  os << r.problem << ',' << r.k << ',' << r.n << ',' << r.n_bdy << ',' << r.dt << ','
     << r.t_final << ',' << r.linf_error << ',' << slope << ',';
  os.precision(6);
  os << r.prep_fft_units() << ',' << r.step_fft_units() << ',' << r.steps;
  return os.str();
}

}  // namespace ibse
