#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ibse/boundary.hpp"
#include "ibse/coupling.hpp"
#include "ibse/grid.hpp"

namespace ibse {

// Default smoothing penalty for the extension operator: keeps the operator's
// spectral condition number near the reciprocal of machine precision, with a
// floor at 1. alpha = 1e-3, eps = 2^-52.
double default_theta(int k, int n);
// Raised regularization floor used by the time-stepping drivers; equals
// default_theta until the grid is fine enough for the floor to bind.
double stepping_theta(int k, int n);

// Extension-operator condition number 1 + (n/2)^(2(k+1)) / theta.
double extension_condition(int k, int n, double theta);

enum class BoundaryCondition { dirichlet, neumann, robin };

struct RobinCoefficients {
  double a = 1.0;  // value weight
  double b = 1.0;  // normal-derivative weight
};

// Everything fixed by (grid, geometry, k, theta): transforms, masks, coupling
// stencils, and the spectral symbols shared by assembly and solves.
struct SolverContext {
  GridSpec grid;
  std::shared_ptr<FourierTransform> ft;
  BoundaryDiscretization bdy;
  DomainMasks masks;
  std::shared_ptr<BoundaryCoupling> coupling;
  int k = 0;
  double theta = 0.0;

  Spectrum laplacian;      // -|kvec|^2
  Spectrum extension_inv;  // 1 / symbol of (Delta^(k+1) + (-1)^(k+1) theta)

  int n_bdy() const { return bdy.n_bdy; }
  int schur_order() const { return (k + 2) * bdy.n_bdy; }

  // BC interpolation row: values, normal derivatives, or the Robin blend.
  std::vector<double> bc_interp(BoundaryCondition bc, const GridField& u,
                                RobinCoefficients rc = {}) const;
  GridField bc_spread(BoundaryCondition bc, const std::vector<double>& G,
                      RobinCoefficients rc = {}) const;
};

SolverContext make_context(const ParametricCurve& curve, DomainSide side,
                           const GridSpec& grid, int k,
                           std::optional<double> theta = std::nullopt);
SolverContext make_context_interval(double a, double b, const GridSpec& grid, int k,
                                    std::optional<double> theta = std::nullopt);

enum class FactorizationKind : std::uint32_t { invertible = 0, augmented = 1 };

// Dense Schur complement of the coupled extension system, plus its LU
// factorization. kind invertible: L = I - c*Laplacian, unknowns (F, G),
// m = (k+2)*n_bdy. kind augmented: pseudo-inverted Laplacian with nullspace
// bookkeeping, unknowns (F, G, U), m = (k+2)*n_bdy + 1.
struct SchurFactorization {
  FactorizationKind kind = FactorizationKind::invertible;
  BoundaryCondition bc = BoundaryCondition::dirichlet;
  int k = 0;
  int n = 0;
  int dim = 0;
  int n_bdy = 0;
  double c = 0.0;      // Helmholtz coefficient (invertible kind); NaN otherwise
  double theta = 0.0;  // extension regularization the assembly ran with
  double mu = 0.0;     // pseudo-inverse zero-mode gain (augmented kind)
  double beta = 0.0;
  RobinCoefficients rc;  // runtime only; Robin factorizations are not persisted
  std::uint64_t geometry_digest = 0;
  int m = 0;
  std::vector<double> matrix;  // row-major m x m, as assembled
  std::vector<double> lu;      // LAPACK getrf factors of matrix
  std::vector<std::int32_t> pivots;
};

std::uint64_t geometry_digest(const BoundaryDiscretization& bdy);

// Columnwise assembly: each unit basis vector is pushed through the exact
// solve pipeline; the recorded rows are the stacked derivative-matching
// constraints followed by the boundary-condition rows (and the projection row
// for the augmented kind). Factorized in place by partial-pivot LU.
SchurFactorization assemble_schur(const SolverContext& ctx, double c, BoundaryCondition bc,
                                  RobinCoefficients rc = {});
SchurFactorization assemble_augmented_schur(const SolverContext& ctx, BoundaryCondition bc,
                                            double mu = 0.0,
                                            std::optional<double> beta = std::nullopt,
                                            RobinCoefficients rc = {});

struct SchurSolveInfo {
  double residual = 0.0;      // ||A x - rhs||_inf
  double rhs_norm = 0.0;
  bool residual_ok = true;    // residual <= 1e-9 * max(1, ||rhs||_inf)
};

// Equilibrated back-substitution plus one iterative-refinement pass against
// the stored matrix; the final residual is reported rather than enforced, so
// that deliberately ill-conditioned configurations still return a solution.
std::vector<double> solve_schur(const SchurFactorization& f, const std::vector<double>& rhs,
                                SchurSolveInfo* info = nullptr);

// Binary round trip. Loading validates the magic, version, exact file length,
// and every metadata field against expectations before accepting the factors.
void save_factorization(const SchurFactorization& f, const std::string& path);
SchurFactorization load_factorization(const std::string& path);
// One-line metadata summary without loading the matrix payload.
std::string factorization_info(const std::string& path);

// Loaded-vs-expected compatibility: everything except the matrix payload.
bool factorization_matches(const SchurFactorization& f, const SchurFactorization& expect,
                           std::string* why = nullptr);

}  // namespace ibse
