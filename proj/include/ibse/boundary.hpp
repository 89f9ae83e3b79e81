#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ibse/grid.hpp"

namespace ibse {

// Smooth closed curve X(s), s in [0, 2pi), with analytic tangent X'(s).
// Curves must stay clear of the periodic seam (no unwrapping is performed).
struct ParametricCurve {
  std::string name;
  std::function<Vec2(double)> position;
  std::function<Vec2(double)> tangent;
};

// Which side of the curve is the physical domain.
enum class DomainSide { interior, exterior };

ParametricCurve make_circle(Vec2 center, double radius);
// r(t) = 1 + cos(t + pi/4)/4 about (3pi/2, 3pi/2)
ParametricCurve make_limacon_blob();
// r(t) = (10 sin^2(2t) + 3 cos^3(2t) + 40)/20 about (pi, pi)
ParametricCurve make_lobed_blob();

// Arc length by dense trapezoidal quadrature of |X'| (spectrally accurate for
// smooth closed curves).
double curve_length(const ParametricCurve& c, int samples = 1024);

// Boundary nodes with quadrature weights and unit normals pointing out of the
// physical domain. In 1D the boundary degenerates to two points.
struct BoundaryDiscretization {
  int dim = 0;
  int n_bdy = 0;
  std::vector<double> nodes;    // dim * n_bdy, node i at [dim*i .. dim*i+dim)
  std::vector<double> normals;  // dim * n_bdy, unit, out of the domain
  std::vector<double> weights;  // |X'(s_i)| * 2pi/n_bdy in 2D; 1 in 1D

  Vec2 node(int i) const {
    return dim == 1 ? Vec2{nodes[i], 0.0} : Vec2{nodes[2 * i], nodes[2 * i + 1]};
  }
  Vec2 normal(int i) const {
    return dim == 1 ? Vec2{normals[i], 0.0} : Vec2{normals[2 * i], normals[2 * i + 1]};
  }
};

// Node count rule: one node per two grid cells of arc length, at least 8.
int boundary_node_count(double length, double dx);

// Equally spaced in parameter; n_bdy from the node count rule applied to grid.
BoundaryDiscretization discretize(const ParametricCurve& c, DomainSide side,
                                  const GridSpec& grid);
// Explicit node count (quadrature studies and tests).
BoundaryDiscretization discretize(const ParametricCurve& c, DomainSide side, int n_bdy);

// 1D domain T \ [a, b]: boundary {a, b}, normals pointing out of the domain
// (into the excluded interval), unit weights.
BoundaryDiscretization interval_boundary(double a, double b);

// Complementary indicator fields: chi_domain + chi_extension = 1 everywhere.
struct DomainMasks {
  GridField chi_domain;     // 1 on the physical domain
  GridField chi_extension;  // 1 on the extension region
  int nudged = 0;           // nodes within 1e-12 of the curve, forced into the domain
};

// Even-odd classification against the curve, one scanline per grid row, with
// crossing abscissae refined to near machine precision.
DomainMasks classify_grid(const ParametricCurve& c, DomainSide side, const GridSpec& grid);
DomainMasks classify_interval(double a, double b, const GridSpec& grid);

// Signed area from the shoelace integral; positive for counterclockwise.
double curve_signed_area(const ParametricCurve& c, int samples = 1024);

}  // namespace ibse
