#pragma once

#include <vector>

#include "ibse/boundary.hpp"
#include "ibse/delta_kernel.hpp"
#include "ibse/grid.hpp"

namespace ibse {

// Regularized spread/interpolation between boundary nodes and the grid, with
// normal-derivative variants up to order k_max. All operators share one set
// of per-node window stencils so that spread and interpolation of the same
// order are exact adjoints by construction:
//   <u, spread_deriv(j, F)>_grid = <interp_deriv(j, u), F>_boundary.
class BoundaryCoupling {
 public:
  // Window width is the kernel's full support in grid cells (16 for the C^3
  // kernel). k_max in 0..3.
  BoundaryCoupling(const GridSpec& grid, const BoundaryDiscretization& bdy,
                   const PiecewisePolyKernel& kernel, int k_max);

  const GridSpec& grid() const { return grid_; }
  const BoundaryDiscretization& boundary() const { return bdy_; }
  int k_max() const { return k_max_; }

  // (S F)(x) = sum_i F_i w_i delta(x - X_i); j-th variant carries the
  // direction-(normal) derivative tensor and the sign (-1)^j.
  GridField spread_deriv(int j, const std::vector<double>& F) const;
  void spread_deriv_add(int j, const std::vector<double>& F, GridField& out) const;
  // Adjoint: approximates + d^j u / dn^j at the nodes.
  std::vector<double> interp_deriv(int j, const GridField& u) const;

  GridField spread(const std::vector<double>& F) const { return spread_deriv(0, F); }
  std::vector<double> interp(const GridField& u) const { return interp_deriv(0, u); }

  // Stacked forms over j = 0..k: F holds k+1 blocks of n_bdy values; the
  // interpolated vector likewise.
  GridField spread_stacked(int k, const std::vector<double>& F) const;
  std::vector<double> interp_stacked(int k, const GridField& u) const;

  // Raw stencil access for diagnostics: weight of node i, order j, at window
  // cell w (row-major over the window, grid scaling included).
  double stencil_weight(int i, int j, int w) const;
  int window() const { return win_; }

 private:
  GridSpec grid_;
  BoundaryDiscretization bdy_;
  int k_max_;
  int win_;
  std::vector<int> idx_;         // [node][axis][win] wrapped grid indices
  std::vector<double> weights_;  // [node][j][win^dim]
  std::size_t wsz_;              // win^dim

  const double* node_weights(int i, int j) const {
    return &weights_[(std::size_t(i) * (k_max_ + 1) + j) * wsz_];
  }
  const int* node_idx(int i, int axis) const {
    return &idx_[(std::size_t(i) * grid_.dim + axis) * win_];
  }
};

}  // namespace ibse
