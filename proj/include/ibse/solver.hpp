#pragma once

#include <functional>
#include <vector>

#include "ibse/schur.hpp"

namespace ibse {

// Throws with a reason when the factorization was built for different
// geometry or resolution than the context describes.
void require_compatible(const SolverContext& ctx, const SchurFactorization& fac);

struct EllipticSolution {
  GridField u;             // solution, smoothly extended over the whole box
  GridField xi;            // extension field
  std::vector<double> F;   // stacked derivative-jump strengths, (k+1)*n_bdy
  std::vector<double> G;   // boundary-layer strengths, n_bdy
  double shift = 0.0;      // nullspace shift (augmented kind only)
  SchurSolveInfo schur;    // residual report of the dense solve
};

// One elliptic solve against a prepared factorization. Invertible kind:
// (I - c*Laplacian) u = f on the domain. Augmented kind: Laplacian u = f on
// the domain with the compatibility projection. f is restricted to the
// domain internally; g holds one boundary value per node (value, normal
// derivative, or Robin blend, matching the factorization).
EllipticSolution solve_elliptic(const SolverContext& ctx, const SchurFactorization& fac,
                                const GridField& f, const std::vector<double>& g);

// Residuals of the four coupled equations evaluated at a computed solution,
// each relative to the magnitude of its own terms. The extension row is
// reconstructed through the full-order operator, whose condition number
// amplifies roundoff by 1 + (n/2)^(2(k+1))/theta; the other rows are
// well conditioned.
struct PlugBackResiduals {
  double pde = 0.0;
  double extension = 0.0;
  double matching = 0.0;
  double boundary = 0.0;
};

PlugBackResiduals plug_back(const SolverContext& ctx, const SchurFactorization& fac,
                            const EllipticSolution& sol, const GridField& f,
                            const std::vector<double>& g);

// ---------------------------------------------------------------------------
// Time stepping

using SpaceTimeFn = std::function<double(Vec2, double)>;
// Boundary data for all nodes at time t.
using BoundaryDataFn = std::function<std::vector<double>(double)>;
// Called after startup (step 0, t = 0) and after every accepted step.
using StepObserver = std::function<void(int step, double t, const GridField& u)>;

// Fourth-order backward differentiation for u_t = nu*Laplacian(u) + f with
// fully implicit forcing. Startup history is taken from `exact` at
// t = 0, -dt, -2dt, -3dt. The factorization must be the invertible kind with
// c = (12/25)*nu*dt. Returns u at t = steps*dt.
GridField run_heat_bdf4(const SolverContext& ctx, const SchurFactorization& fac, double nu,
                        double dt, int steps, const SpaceTimeFn& exact,
                        const SpaceTimeFn& forcing, const BoundaryDataFn& g,
                        const StepObserver& observer = nullptr);

// One field of a mixed implicit/explicit system. ctx == nullptr selects the
// pure-ODE path (no diffusion, no boundary condition, no dense solve).
struct ImexComponent {
  const SolverContext* ctx = nullptr;
  const SchurFactorization* fac = nullptr;
  double nu = 0.0;
  BoundaryDataFn g;  // empty means homogeneous data
};

// Explicit right-hand sides E_i(fields, t), one output field per component.
using ExplicitTerm =
    std::function<void(const std::vector<GridField>& fields, double t,
                       std::vector<GridField>& out)>;

using SystemObserver =
    std::function<void(int step, double t, const std::vector<GridField>& fields)>;

// Fourth-order IMEX backward differentiation: diffusion implicit, E explicit
// with the (4, -6, 4, -1) extrapolation weights. History is seeded with the
// initial fields held constant. Each diffusive component's factorization must
// carry c = (12/25)*nu*dt. Throws when any field exceeds blowup_limit.
std::vector<GridField> run_imex_bdf4(const std::vector<ImexComponent>& comps,
                                     const ExplicitTerm& E,
                                     const std::vector<GridField>& init, double dt,
                                     int steps, double blowup_limit = 1e6,
                                     const SystemObserver& observer = nullptr);

// ---------------------------------------------------------------------------
// Baseline: classical direct-forcing immersed boundary (no extension field).
// Poisson problem on the 1D excluded-interval domain with the same nullspace
// bookkeeping; first-order accurate, used as a comparison point.
EllipticSolution solve_direct_ib(const SolverContext& ctx, const GridField& f,
                                 const std::vector<double>& g, double mu = 0.0,
                                 std::optional<double> beta = std::nullopt);

}  // namespace ibse
