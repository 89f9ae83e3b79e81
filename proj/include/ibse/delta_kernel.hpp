#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <span>
#include <string>
#include <vector>

namespace ibse {

using Rational = boost::multiprecision::cpp_rational;
// Polynomial with exact coefficients, ascending powers.
using RationalPoly = std::vector<Rational>;

// Even, compactly supported piecewise-polynomial kernel. Pieces are stored
// for r >= 0 only; pieces[i] holds the polynomial valid on [i, i+1) in the
// global coordinate r. The function is identically zero for |r| >= support.
struct PiecewisePolyKernel {
  int support = 0;
  int regularity = 0;      // certified C^m smoothness class
  int accuracy_order = 0;  // interpolation order of the lattice sums
  std::vector<RationalPoly> pieces;

  // Frozen double-precision coefficients of d^j/dr^j for j = 0..regularity,
  // indexed [j][piece][power]. Built by freeze(); evaluate() requires it.
  std::vector<std::vector<std::vector<double>>> frozen;

  void freeze();
  // d^j/dr^j at r (any sign; evenness handled internally). j must not exceed
  // the certified regularity.
  double evaluate(double r, int j) const;
};

// The piecewise-cubic four-point kernel with fourth-order interpolation
// accuracy (continuous but not C^1).
PiecewisePolyKernel four_point_delta();

// Exact convolution of two even piecewise-polynomial kernels with integer
// breakpoints. Supports add; regularity increases by one class.
PiecewisePolyKernel self_convolve(const PiecewisePolyKernel& a, const PiecewisePolyKernel& b);

// The C^3 kernel used for all boundary coupling: the published coefficient
// table, support [-8, 8], degree-15 pieces. Frozen and ready to evaluate.
const PiecewisePolyKernel& smooth_delta();

// Same kernel constructed from scratch by convolving four_point_delta with
// itself three times. Used to audit the hard-coded table.
PiecewisePolyKernel smooth_delta_convolved();

// Largest deviation of the shifted lattice sum sum_i (r-i)^m K(r-i) from the
// exact moment ([m==0]) over the given offsets in [0, 1].
double moment_error(const PiecewisePolyKernel& k, int m, std::span<const double> offsets);

// Weight of the direction-(normal) j-th derivative tensor stencil at the
// given per-axis offsets (in kernel units; no grid scaling). normal and
// offsets have the space dimension (1 or 2); normal must be unit length.
double tensor_normal_weight(const PiecewisePolyKernel& k, std::span<const double> normal,
                            int j, std::span<const double> offsets);

struct DeltaAuditReport {
  bool table_matches = false;     // convolved == published, entry for entry
  int coefficient_mismatches = 0;
  bool knots_match = false;       // derivs 0..3 agree across r = 1..8 exactly
  bool even_at_origin = false;    // odd low-order coefficients vanish on [0,1)
  bool support_ok = false;        // evaluates to exactly 0 at |r| >= 8
  double moment_err[5] = {0, 0, 0, 0, 0};  // m = 0..4 over 17 offsets
  bool moments_ok = false;        // m = 0..3 all <= 1e-12
  bool order_barrier = false;     // m = 4 error is genuinely nonzero
  std::string text;               // printable per-check report

  bool pass() const {
    return table_matches && knots_match && even_at_origin && support_ok && moments_ok &&
           order_barrier;
  }
};

// Full audit of the C^3 kernel. perturb_one_coefficient corrupts one table
// entry first (test hook; the audit must then fail).
DeltaAuditReport audit_smooth_delta(bool perturb_one_coefficient = false);

// Exact fraction strings of the published table, one piece per line.
std::string smooth_delta_table_dump();

}  // namespace ibse
