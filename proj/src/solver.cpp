#include "ibse/solver.hpp"

#include <lapacke.h>

#include <cmath>
#include <sstream>

namespace ibse {

void require_compatible(const SolverContext& ctx, const SchurFactorization& fac) {
  std::ostringstream why;
  if (fac.k != ctx.k)
    why << "k " << fac.k << " vs " << ctx.k;
  else if (fac.n != ctx.grid.n)
    why << "grid size " << fac.n << " vs " << ctx.grid.n;
  else if (fac.dim != ctx.grid.dim)
    why << "dimension " << fac.dim << " vs " << ctx.grid.dim;
  else if (fac.n_bdy != ctx.n_bdy())
    why << "boundary node count " << fac.n_bdy << " vs " << ctx.n_bdy();
  else if (fac.geometry_digest != geometry_digest(ctx.bdy))
    why << "geometry digest mismatch";
  else if (fac.theta != ctx.theta)
    why << "extension regularization " << fac.theta << " vs " << ctx.theta;
  else {
    const int expect =
        ctx.schur_order() + (fac.kind == FactorizationKind::augmented ? 1 : 0);
    if (fac.m != expect)
      why << "order " << fac.m << " vs " << expect;
    else
      return;
  }
  throw Error("factorization does not match solver context: " + why.str());
}

namespace {

GridField masked(const GridField& mask, const GridField& f) {
  GridField out = f;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= mask.v[i];
  return out;
}

void axpy(GridField& y, double a, const GridField& x) {
  for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}

}  // namespace

EllipticSolution solve_elliptic(const SolverContext& ctx, const SchurFactorization& fac,
                                const GridField& f, const std::vector<double>& g) {
  require_compatible(ctx, fac);
  if (f.grid != ctx.grid) throw Error("solve_elliptic: forcing grid mismatch");
  if (int(g.size()) != ctx.n_bdy()) throw Error("solve_elliptic: boundary data length");

  const int kk = ctx.k;
  const int nb = ctx.n_bdy();
  const std::size_t N = ctx.grid.size();
  const FourierTransform& ft = *ctx.ft;
  const GridField fdom = masked(ctx.masks.chi_domain, f);

  EllipticSolution sol;
  Spectrum s(N), t(N);

  if (fac.kind == FactorizationKind::invertible) {
    const double c = fac.c;
    Spectrum linv(N);
    for (std::size_t i = 0; i < N; ++i) linv[i] = 1.0 / (1.0 - c * ctx.laplacian[i]);

    ft.forward(fdom, s);
    for (std::size_t i = 0; i < N; ++i) s[i] *= linv[i];
    GridField up;
    ft.inverse(s, up);

    std::vector<double> rhs(fac.m);
    const std::vector<double> top = ctx.coupling->interp_stacked(kk, up);
    const std::vector<double> bot = ctx.bc_interp(fac.bc, up, fac.rc);
    std::copy(top.begin(), top.end(), rhs.begin());
    for (int i = 0; i < nb; ++i) rhs[(kk + 1) * nb + i] = g[i] - bot[i];

    const std::vector<double> x = solve_schur(fac, rhs, &sol.schur);
    sol.F.assign(x.begin(), x.begin() + (kk + 1) * nb);
    sol.G.assign(x.begin() + (kk + 1) * nb, x.end());

    const GridField sp = ctx.coupling->spread_stacked(kk, sol.F);
    ft.forward(sp, s);
    for (std::size_t i = 0; i < N; ++i) s[i] *= -ctx.extension_inv[i];  // xi spectrum
    ft.inverse(s, sol.xi);
    for (std::size_t i = 0; i < N; ++i) s[i] *= (1.0 - c * ctx.laplacian[i]);
    GridField lxi;
    ft.inverse(s, lxi);

    GridField field = fdom;
    for (std::size_t i = 0; i < N; ++i)
      field.v[i] += ctx.masks.chi_extension.v[i] * lxi.v[i];
    axpy(field, -1.0, ctx.bc_spread(fac.bc, sol.G, fac.rc));
    ft.forward(field, t);
    for (std::size_t i = 0; i < N; ++i) t[i] *= linv[i];
    ft.inverse(t, sol.u);
    return sol;
  }

  // Augmented kind: pseudo-inverted Laplacian plus nullspace shift.
  const Spectrum pinv = poisson_pseudo_inverse_multiplier(ctx.grid, fac.mu).sym;
  ft.forward(fdom, s);
  for (std::size_t i = 0; i < N; ++i) s[i] *= pinv[i];
  GridField ap;
  ft.inverse(s, ap);

  std::vector<double> rhs(fac.m);
  const std::vector<double> top = ctx.coupling->interp_stacked(kk, ap);
  const std::vector<double> bot = ctx.bc_interp(fac.bc, ap, fac.rc);
  std::copy(top.begin(), top.end(), rhs.begin());
  for (int i = 0; i < nb; ++i) rhs[(kk + 1) * nb + i] = bot[i] - g[i];
  rhs[fac.m - 1] = mean(fdom);

  const std::vector<double> x = solve_schur(fac, rhs, &sol.schur);
  sol.F.assign(x.begin(), x.begin() + (kk + 1) * nb);
  sol.G.assign(x.begin() + (kk + 1) * nb, x.begin() + (kk + 2) * nb);
  sol.shift = x[fac.m - 1];

  const GridField sp = ctx.coupling->spread_stacked(kk, sol.F);
  ft.forward(sp, s);
  for (std::size_t i = 0; i < N; ++i) s[i] *= -ctx.extension_inv[i];
  ft.inverse(s, sol.xi);
  for (std::size_t i = 0; i < N; ++i) s[i] *= ctx.laplacian[i];
  GridField lapxi;
  ft.inverse(s, lapxi);

  GridField field = fdom;
  for (std::size_t i = 0; i < N; ++i)
    field.v[i] += ctx.masks.chi_extension.v[i] * lapxi.v[i];
  axpy(field, -1.0, ctx.bc_spread(fac.bc, sol.G, fac.rc));
  ft.forward(field, t);
  for (std::size_t i = 0; i < N; ++i) t[i] *= pinv[i];
  ft.inverse(t, sol.u);
  const double shift = sol.shift / fac.beta;
  for (std::size_t i = 0; i < N; ++i) sol.u.v[i] -= shift;
  return sol;
}

namespace {
double vec_max(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace

PlugBackResiduals plug_back(const SolverContext& ctx, const SchurFactorization& fac,
                            const EllipticSolution& sol, const GridField& f,
                            const std::vector<double>& g) {
  require_compatible(ctx, fac);
  const std::size_t N = ctx.grid.size();
  const FourierTransform& ft = *ctx.ft;
  const GridField fdom = masked(ctx.masks.chi_domain, f);
  PlugBackResiduals r;

  Spectrum uh(N), xih(N);
  ft.forward(sol.u, uh);
  ft.forward(sol.xi, xih);

  // PDE row: L u - chi_E L xi + S G - chi_Omega f, with L the Helmholtz or
  // plain Laplacian operator of the factorization.
  {
    Spectrum s(N);
    GridField lu, lxi;
    if (fac.kind == FactorizationKind::invertible) {
      for (std::size_t i = 0; i < N; ++i) s[i] = uh[i] * (1.0 - fac.c * ctx.laplacian[i]);
      ft.inverse(s, lu);
      for (std::size_t i = 0; i < N; ++i) s[i] = xih[i] * (1.0 - fac.c * ctx.laplacian[i]);
      ft.inverse(s, lxi);
    } else {
      for (std::size_t i = 0; i < N; ++i) s[i] = uh[i] * ctx.laplacian[i];
      ft.inverse(s, lu);
      for (std::size_t i = 0; i < N; ++i) s[i] = xih[i] * ctx.laplacian[i];
      ft.inverse(s, lxi);
    }
    const GridField sg = ctx.bc_spread(fac.bc, sol.G, fac.rc);
    const GridField elxi = masked(ctx.masks.chi_extension, lxi);
    double num = 0.0;
    double den = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      num = std::max(num, std::abs(lu.v[i] - elxi.v[i] + sg.v[i] - fdom.v[i]));
      den = std::max({den, std::abs(lu.v[i]), std::abs(elxi.v[i]), std::abs(sg.v[i]),
                      std::abs(fdom.v[i])});
    }
    r.pde = num / den;
    if (fac.kind == FactorizationKind::augmented) {
      // Compatibility projection: mean(S G) - mean(chi_E Lap xi) = mean(f).
      const double me = mean(elxi), mg = mean(sg), mf = mean(fdom);
      const double den2 = std::max({1.0, std::abs(me), std::abs(mg), std::abs(mf)});
      r.pde = std::max(r.pde, std::abs(-me + mg - mf) / den2);
    }
  }

  // Extension row: H^k xi + T_k F; condition-limited in double precision.
  {
    const Spectrum ext = extension_multiplier(ctx.grid, ctx.k, ctx.theta).sym;
    Spectrum s(N);
    for (std::size_t i = 0; i < N; ++i) s[i] = xih[i] * ext[i];
    GridField hxi;
    ft.inverse(s, hxi);
    const GridField tf = ctx.coupling->spread_stacked(ctx.k, sol.F);
    double num = 0.0, den = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      num = std::max(num, std::abs(hxi.v[i] + tf.v[i]));
      den = std::max({den, std::abs(hxi.v[i]), std::abs(tf.v[i])});
    }
    r.extension = num / den;
  }

  // Matching row: T_k*(xi - u) = 0 (any nullspace shift is part of u).
  {
    GridField d = sol.xi;
    axpy(d, -1.0, sol.u);
    const std::vector<double> mm = ctx.coupling->interp_stacked(ctx.k, d);
    const std::vector<double> tu = ctx.coupling->interp_stacked(ctx.k, sol.u);
    const std::vector<double> tx = ctx.coupling->interp_stacked(ctx.k, sol.xi);
    r.matching = vec_max(mm) / std::max({1.0, vec_max(tu), vec_max(tx)});
  }

  // Boundary row: bc(u) = g.
  {
    const std::vector<double> bu = ctx.bc_interp(fac.bc, sol.u, fac.rc);
    double num = 0.0;
    for (std::size_t i = 0; i < bu.size(); ++i)
      num = std::max(num, std::abs(bu[i] - g[i]));
    r.boundary = num / std::max({1.0, vec_max(bu), vec_max(g)});
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {
void check_stepper_c(const SchurFactorization& fac, double nu, double dt,
                     const char* who) {
  if (fac.kind != FactorizationKind::invertible)
    throw Error(std::string(who) + ": needs the invertible factorization kind");
  const double c = (12.0 / 25.0) * nu * dt;
  if (std::abs(fac.c - c) > 1e-12 * std::max(1.0, std::abs(c)))
    throw Error(std::string(who) + ": factorization Helmholtz coefficient does not match "
                                   "(12/25)*nu*dt");
}
}  // namespace

GridField run_heat_bdf4(const SolverContext& ctx, const SchurFactorization& fac, double nu,
                        double dt, int steps, const SpaceTimeFn& exact,
                        const SpaceTimeFn& forcing, const BoundaryDataFn& g,
                        const StepObserver& observer) {
  check_stepper_c(fac, nu, dt, "run_heat_bdf4");
  if (steps < 1) throw Error("run_heat_bdf4: steps must be positive");
  const GridSpec grid = ctx.grid;
  std::vector<GridField> u(4);
  for (int j = 0; j < 4; ++j)
    u[j] = GridField::sample(grid, [&](Vec2 p) { return exact(p, -j * dt); });
  if (observer) observer(0, 0.0, u[0]);

  const std::vector<double> gzero(ctx.n_bdy(), 0.0);
  for (int step = 1; step <= steps; ++step) {
    const double t1 = step * dt;
    GridField rhs(grid);
    const GridField fnew = GridField::sample(grid, [&](Vec2 p) { return forcing(p, t1); });
    for (std::size_t i = 0; i < rhs.v.size(); ++i)
      rhs.v[i] = (48.0 * u[0].v[i] - 36.0 * u[1].v[i] + 16.0 * u[2].v[i] -
                  3.0 * u[3].v[i] + 12.0 * dt * fnew.v[i]) /
                 25.0;
    EllipticSolution sol = solve_elliptic(ctx, fac, rhs, g ? g(t1) : gzero);
    u[3] = std::move(u[2]);
    u[2] = std::move(u[1]);
    u[1] = std::move(u[0]);
    u[0] = std::move(sol.u);
    if (observer) observer(step, t1, u[0]);
  }
  return u[0];
}

std::vector<GridField> run_imex_bdf4(const std::vector<ImexComponent>& comps,
                                     const ExplicitTerm& E,
                                     const std::vector<GridField>& init, double dt,
                                     int steps, double blowup_limit,
                                     const SystemObserver& observer) {
  const std::size_t nc = comps.size();
  if (init.size() != nc) throw Error("run_imex_bdf4: field/component count mismatch");
  if (steps < 1) throw Error("run_imex_bdf4: steps must be positive");
  for (const ImexComponent& c : comps) {
    if (!c.ctx != !c.fac)
      throw Error("run_imex_bdf4: component needs both context and factorization");
    if (c.ctx) {
      require_compatible(*c.ctx, *c.fac);
      check_stepper_c(*c.fac, c.nu, dt, "run_imex_bdf4");
    }
  }

  // hist[j], ehist[j]: fields and explicit terms j steps back. The output
  // slots passed to E are pre-sized to the component grids.
  std::vector<GridField> eblank;
  eblank.reserve(nc);
  for (const GridField& f : init) eblank.emplace_back(f.grid);
  std::array<std::vector<GridField>, 4> hist, ehist;
  for (int j = 0; j < 4; ++j) {
    hist[j] = init;
    ehist[j] = eblank;
    E(init, -j * dt, ehist[j]);
  }
  if (observer) observer(0, 0.0, hist[0]);

  std::vector<GridField> fresh(nc);
  for (int step = 1; step <= steps; ++step) {
    const double t1 = step * dt;
    for (std::size_t i = 0; i < nc; ++i) {
      GridField rhs(init[i].grid);
      const auto& u0 = hist[0][i].v;
      const auto& u1 = hist[1][i].v;
      const auto& u2 = hist[2][i].v;
      const auto& u3 = hist[3][i].v;
      const auto& e0 = ehist[0][i].v;
      const auto& e1 = ehist[1][i].v;
      const auto& e2 = ehist[2][i].v;
      const auto& e3 = ehist[3][i].v;
      for (std::size_t p = 0; p < rhs.v.size(); ++p)
        rhs.v[p] = (12.0 / 25.0) *
                   (4.0 * u0[p] - 3.0 * u1[p] + (4.0 / 3.0) * u2[p] - 0.25 * u3[p] +
                    dt * (4.0 * e0[p] - 6.0 * e1[p] + 4.0 * e2[p] - e3[p]));
      if (comps[i].ctx) {
        const std::vector<double> gv = comps[i].g
                                           ? comps[i].g(t1)
                                           : std::vector<double>(comps[i].ctx->n_bdy(), 0.0);
        fresh[i] = solve_elliptic(*comps[i].ctx, *comps[i].fac, rhs, gv).u;
      } else {
        fresh[i] = std::move(rhs);
      }
      if (!(max_abs(fresh[i]) <= blowup_limit)) {
        std::ostringstream os;
        os << "run_imex_bdf4: field " << i << " exceeded " << blowup_limit << " at t = "
           << t1 << " (diverged)";
        throw Error(os.str());
      }
    }
    hist[3] = std::move(hist[2]);
    hist[2] = std::move(hist[1]);
    hist[1] = std::move(hist[0]);
    hist[0] = fresh;
    ehist[3] = std::move(ehist[2]);
    ehist[2] = std::move(ehist[1]);
    ehist[1] = std::move(ehist[0]);
    ehist[0] = eblank;
    E(hist[0], t1, ehist[0]);
    if (observer) observer(step, t1, hist[0]);
  }
  return hist[0];
}

// ---------------------------------------------------------------------------

EllipticSolution solve_direct_ib(const SolverContext& ctx, const GridField& f,
                                 const std::vector<double>& g, double mu,
                                 std::optional<double> beta) {
  const int nb = ctx.n_bdy();
  if (int(g.size()) != nb) throw Error("solve_direct_ib: boundary data length");
  const double bta = beta.value_or(double(nb));
  const std::size_t N = ctx.grid.size();
  const FourierTransform& ft = *ctx.ft;
  const Spectrum pinv = poisson_pseudo_inverse_multiplier(ctx.grid, mu).sym;
  const GridField fdom = masked(ctx.masks.chi_domain, f);

  auto apply_pinv = [&](const GridField& h) {
    Spectrum s;
    ft.forward(h, s);
    for (std::size_t i = 0; i < N; ++i) s[i] *= pinv[i];
    GridField out;
    ft.inverse(s, out);
    return out;
  };

  // Rows: value matching at the nodes, then the compatibility projection.
  const int m = nb + 1;
  std::vector<double> mat(std::size_t(m) * m, 0.0), rhs(m);
  std::vector<double> e(nb, 0.0);
  for (int col = 0; col < nb; ++col) {
    e[col] = 1.0;
    const GridField sp = ctx.coupling->spread(e);
    e[col] = 0.0;
    const std::vector<double> vals = ctx.coupling->interp(apply_pinv(sp));
    for (int r = 0; r < nb; ++r) mat[std::size_t(r) * m + col] = vals[r];
    mat[std::size_t(nb) * m + col] = mean(sp);
  }
  for (int r = 0; r < nb; ++r) mat[std::size_t(r) * m + nb] = 1.0 / bta;

  const std::vector<double> vap = ctx.coupling->interp(apply_pinv(fdom));
  for (int r = 0; r < nb; ++r) rhs[r] = vap[r] - g[r];
  rhs[nb] = mean(fdom);

  std::vector<std::int32_t> piv(m);
  std::vector<double> x = rhs;
  const lapack_int info =
      LAPACKE_dgesv(LAPACK_ROW_MAJOR, m, 1, mat.data(), m, piv.data(), x.data(), 1);
  if (info != 0) throw Error("solve_direct_ib: singular system");

  EllipticSolution sol;
  sol.G.assign(x.begin(), x.begin() + nb);
  sol.shift = x[nb];
  GridField field = fdom;
  axpy(field, -1.0, ctx.coupling->spread(sol.G));
  sol.u = apply_pinv(field);
  const double shift = sol.shift / bta;
  for (std::size_t i = 0; i < N; ++i) sol.u.v[i] -= shift;
  sol.xi = GridField(ctx.grid);
  return sol;
}

}  // namespace ibse
