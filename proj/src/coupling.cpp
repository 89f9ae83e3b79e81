#include "ibse/coupling.hpp"

#include <cmath>

namespace ibse {

BoundaryCoupling::BoundaryCoupling(const GridSpec& grid, const BoundaryDiscretization& bdy,
                                   const PiecewisePolyKernel& kernel, int k_max)
    : grid_(grid), bdy_(bdy), k_max_(k_max), win_(2 * kernel.support) {
  if (grid_.dim != bdy_.dim) throw Error("BoundaryCoupling: dimension mismatch");
  if (k_max_ < 0 || k_max_ > kernel.regularity)
    throw Error("BoundaryCoupling: derivative order exceeds kernel regularity");
  const int d = grid_.dim;
  const double dx = grid_.dx;
  wsz_ = 1;
  for (int a = 0; a < d; ++a) wsz_ *= win_;
  idx_.resize(std::size_t(bdy_.n_bdy) * d * win_);
  weights_.resize(std::size_t(bdy_.n_bdy) * (k_max_ + 1) * wsz_);

  // Per-axis kernel derivative values over the window, then tensor combined
  // with the normal-direction multinomial.
  std::vector<double> kval(std::size_t(d) * (k_max_ + 1) * win_);
  for (int i = 0; i < bdy_.n_bdy; ++i) {
    const Vec2 X = bdy_.node(i);
    const Vec2 nrm = bdy_.normal(i);
    for (int a = 0; a < d; ++a) {
      const int base = int(std::floor(X[a] / dx)) - kernel.support + 1;
      for (int t = 0; t < win_; ++t) {
        const int g = base + t;
        idx_[(std::size_t(i) * d + a) * win_ + t] = ((g % grid_.n) + grid_.n) % grid_.n;
        const double r = (g * dx - X[a]) / dx;
        double scale = 1.0 / dx;
        for (int j = 0; j <= k_max_; ++j) {
          kval[(std::size_t(a) * (k_max_ + 1) + j) * win_ + t] =
              kernel.evaluate(r, j) * scale;
          scale /= dx;
        }
      }
    }
    for (int j = 0; j <= k_max_; ++j) {
      double* w = &weights_[(std::size_t(i) * (k_max_ + 1) + j) * wsz_];
      if (d == 1) {
        double nj = 1.0;
        for (int q = 0; q < j; ++q) nj *= nrm[0];
        for (int t = 0; t < win_; ++t) w[t] = nj * kval[std::size_t(j) * win_ + t];
      } else {
        for (std::size_t t = 0; t < wsz_; ++t) w[t] = 0.0;
        for (int a = 0; a <= j; ++a) {
          const int b = j - a;
          double c = 1.0;
          for (int q = 0; q < a; ++q) c = c * double(j - q) / double(q + 1);
          c *= std::pow(nrm[0], a) * std::pow(nrm[1], b);
          const double* kx = &kval[std::size_t(a) * win_];
          const double* ky = &kval[(std::size_t(k_max_ + 1) + b) * win_];
          std::size_t t = 0;
          for (int tx = 0; tx < win_; ++tx)
            for (int ty = 0; ty < win_; ++ty) w[t++] += c * kx[tx] * ky[ty];
        }
      }
    }
  }
}

void BoundaryCoupling::spread_deriv_add(int j, const std::vector<double>& F,
                                        GridField& out) const {
  if (j < 0 || j > k_max_) throw Error("spread_deriv: bad order");
  if (int(F.size()) != bdy_.n_bdy) throw Error("spread_deriv: wrong vector length");
  if (out.grid != grid_) throw Error("spread_deriv: grid mismatch");
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  for (int i = 0; i < bdy_.n_bdy; ++i) {
    const double c = sign * F[i] * bdy_.weights[i];
    if (c == 0.0) continue;
    const double* w = node_weights(i, j);
    if (grid_.dim == 1) {
      const int* gx = node_idx(i, 0);
      for (int t = 0; t < win_; ++t) out.v[gx[t]] += c * w[t];
    } else {
      const int* gx = node_idx(i, 0);
      const int* gy = node_idx(i, 1);
      std::size_t t = 0;
      for (int tx = 0; tx < win_; ++tx) {
        double* row = &out.v[std::size_t(gx[tx]) * grid_.n];
        for (int ty = 0; ty < win_; ++ty) row[gy[ty]] += c * w[t++];
      }
    }
  }
}

GridField BoundaryCoupling::spread_deriv(int j, const std::vector<double>& F) const {
  GridField out(grid_);
  spread_deriv_add(j, F, out);
  return out;
}

std::vector<double> BoundaryCoupling::interp_deriv(int j, const GridField& u) const {
  if (j < 0 || j > k_max_) throw Error("interp_deriv: bad order");
  if (u.grid != grid_) throw Error("interp_deriv: grid mismatch");
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  double cell = grid_.dx;
  if (grid_.dim == 2) cell *= grid_.dx;
  std::vector<double> out(bdy_.n_bdy);
  for (int i = 0; i < bdy_.n_bdy; ++i) {
    const double* w = node_weights(i, j);
    double acc = 0.0;
    if (grid_.dim == 1) {
      const int* gx = node_idx(i, 0);
      for (int t = 0; t < win_; ++t) acc += u.v[gx[t]] * w[t];
    } else {
      const int* gx = node_idx(i, 0);
      const int* gy = node_idx(i, 1);
      std::size_t t = 0;
      for (int tx = 0; tx < win_; ++tx) {
        const double* row = &u.v[std::size_t(gx[tx]) * grid_.n];
        for (int ty = 0; ty < win_; ++ty) acc += row[gy[ty]] * w[t++];
      }
    }
    out[i] = sign * acc * cell;
  }
  return out;
}

GridField BoundaryCoupling::spread_stacked(int k, const std::vector<double>& F) const {
  if (k < 0 || k > k_max_) throw Error("spread_stacked: bad order");
  if (int(F.size()) != (k + 1) * bdy_.n_bdy) throw Error("spread_stacked: wrong length");
  GridField out(grid_);
  std::vector<double> block(bdy_.n_bdy);
  for (int j = 0; j <= k; ++j) {
    std::copy(F.begin() + std::size_t(j) * bdy_.n_bdy,
              F.begin() + std::size_t(j + 1) * bdy_.n_bdy, block.begin());
    spread_deriv_add(j, block, out);
  }
  return out;
}

std::vector<double> BoundaryCoupling::interp_stacked(int k, const GridField& u) const {
  if (k < 0 || k > k_max_) throw Error("interp_stacked: bad order");
  std::vector<double> out;
  out.reserve(std::size_t(k + 1) * bdy_.n_bdy);
  for (int j = 0; j <= k; ++j) {
    const std::vector<double> b = interp_deriv(j, u);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

double BoundaryCoupling::stencil_weight(int i, int j, int w) const {
  return node_weights(i, j)[w];
}

}  // namespace ibse
