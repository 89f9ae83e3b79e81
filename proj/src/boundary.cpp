#include "ibse/boundary.hpp"

#include <algorithm>
#include <cmath>

namespace ibse {

namespace {
constexpr double kNudgeTol = 1e-12;
constexpr double kPi = 3.14159265358979323846264338328;
}  // namespace

ParametricCurve make_circle(Vec2 center, double radius) {
  if (!(radius > 0)) throw Error("make_circle: radius must be positive");
  ParametricCurve c;
  c.name = "circle";
  c.position = [=](double s) -> Vec2 {
    return {center[0] + radius * std::cos(s), center[1] + radius * std::sin(s)};
  };
  c.tangent = [=](double s) -> Vec2 {
    return {-radius * std::sin(s), radius * std::cos(s)};
  };
  return c;
}

namespace {
ParametricCurve polar_curve(std::string name, Vec2 center,
                            std::function<double(double)> r,
                            std::function<double(double)> dr) {
  ParametricCurve c;
  c.name = std::move(name);
  c.position = [=](double s) -> Vec2 {
    const double R = r(s);
    return {center[0] + R * std::cos(s), center[1] + R * std::sin(s)};
  };
  c.tangent = [=](double s) -> Vec2 {
    const double R = r(s), dR = dr(s);
    return {dR * std::cos(s) - R * std::sin(s), dR * std::sin(s) + R * std::cos(s)};
  };
  return c;
}
}  // namespace

ParametricCurve make_limacon_blob() {
  return polar_curve(
      "limacon", {3 * kPi / 2, 3 * kPi / 2},
      [](double t) { return 1.0 + std::cos(t + kPi / 4) / 4.0; },
      [](double t) { return -std::sin(t + kPi / 4) / 4.0; });
}

ParametricCurve make_lobed_blob() {
  return polar_curve(
      "lobed", {kPi, kPi},
      [](double t) {
        const double s2 = std::sin(2 * t), c2 = std::cos(2 * t);
        return (10.0 * s2 * s2 + 3.0 * c2 * c2 * c2 + 40.0) / 20.0;
      },
      [](double t) {
        const double s2 = std::sin(2 * t), c2 = std::cos(2 * t);
        return (20.0 * std::sin(4 * t) - 18.0 * c2 * c2 * s2) / 20.0;
      });
}

double curve_length(const ParametricCurve& c, int samples) {
  double acc = 0.0;
  const double h = kTwoPi / samples;
  for (int i = 0; i < samples; ++i) {
    const Vec2 t = c.tangent(i * h);
    acc += std::hypot(t[0], t[1]);
  }
  return acc * h;
}

double curve_signed_area(const ParametricCurve& c, int samples) {
  double acc = 0.0;
  const double h = kTwoPi / samples;
  for (int i = 0; i < samples; ++i) {
    const Vec2 p = c.position(i * h);
    const Vec2 t = c.tangent(i * h);
    acc += p[0] * t[1] - p[1] * t[0];
  }
  return 0.5 * acc * h;
}

int boundary_node_count(double length, double dx) {
  return std::max(8, int(std::llround(length / (2.0 * dx))));
}

BoundaryDiscretization discretize(const ParametricCurve& c, DomainSide side,
                                  const GridSpec& grid) {
  if (grid.dim != 2) throw Error("discretize: 2D grid required for a parametric curve");
  return discretize(c, side, boundary_node_count(curve_length(c), grid.dx));
}

BoundaryDiscretization discretize(const ParametricCurve& c, DomainSide side, int n_bdy) {
  if (n_bdy < 2) throw Error("discretize: need at least 2 boundary nodes");
  BoundaryDiscretization b;
  b.dim = 2;
  b.n_bdy = n_bdy;
  b.nodes.resize(2 * n_bdy);
  b.normals.resize(2 * n_bdy);
  b.weights.resize(n_bdy);
  const double ds = kTwoPi / n_bdy;
  // Outward from the enclosed region is (ty,-tx) when the curve runs
  // counterclockwise; flip for clockwise, flip again for exterior domains.
  const double ccw = curve_signed_area(c) > 0 ? 1.0 : -1.0;
  const double flip = (side == DomainSide::interior ? 1.0 : -1.0) * ccw;
  for (int i = 0; i < n_bdy; ++i) {
    const double s = i * ds;
    const Vec2 p = c.position(s);
    const Vec2 t = c.tangent(s);
    const double speed = std::hypot(t[0], t[1]);
    if (speed < 1e-12) throw Error("discretize: degenerate tangent at a node");
    b.nodes[2 * i] = p[0];
    b.nodes[2 * i + 1] = p[1];
    b.normals[2 * i] = flip * t[1] / speed;
    b.normals[2 * i + 1] = -flip * t[0] / speed;
    b.weights[i] = speed * ds;
  }
  return b;
}

BoundaryDiscretization interval_boundary(double a, double b) {
  if (!(a < b)) throw Error("interval_boundary: require a < b");
  BoundaryDiscretization out;
  out.dim = 1;
  out.n_bdy = 2;
  out.nodes = {a, b};
  // The domain excludes (a, b): at a the domain lies to the left, so the
  // outward normal points in +x; at b it points in -x.
  out.normals = {1.0, -1.0};
  out.weights = {1.0, 1.0};
  return out;
}

namespace {

// All parameter values with Y(s) = y, found by dense sampling and bisection.
class CurveScanner {
 public:
  explicit CurveScanner(const ParametricCurve& c, int samples = 2048)
      : curve_(c), m_(samples), sy_(samples), sx_(samples) {
    for (int i = 0; i < m_; ++i) {
      const Vec2 p = c.position(i * kTwoPi / m_);
      sx_[i] = p[0];
      sy_[i] = p[1];
    }
  }

  // x-abscissae of crossings of the horizontal line at height y
  std::vector<double> crossings(double y) const {
    std::vector<double> xs;
    const double h = kTwoPi / m_;
    for (int i = 0; i < m_; ++i) {
      const double g0 = sy_[i] - y;
      const double g1 = sy_[(i + 1) % m_] - y;
      if (g0 == 0.0) {
        xs.push_back(sx_[i]);
      } else if (g0 * g1 < 0.0) {
        double lo = i * h, hi = (i + 1) * h, glo = g0;
        for (int it = 0; it < 64; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double gm = curve_.position(mid)[1] - y;
          if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
          } else {
            hi = mid;
          }
        }
        xs.push_back(curve_.position(0.5 * (lo + hi))[0]);
      }
    }
    std::sort(xs.begin(), xs.end());
    return xs;
  }

 private:
  const ParametricCurve& curve_;
  int m_;
  std::vector<double> sy_, sx_;
};

}  // namespace

DomainMasks classify_grid(const ParametricCurve& c, DomainSide side, const GridSpec& grid) {
  if (grid.dim != 2) throw Error("classify_grid: 2D grid required");
  DomainMasks m{GridField(grid), GridField(grid), 0};
  CurveScanner scanner(c);
  // Row-major with x outermost: scan lines of constant x would stride; scan
  // by y instead, walking x crossings of each horizontal line.
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = grid.coord(iy);
    const std::vector<double> xs = scanner.crossings(y);
    if (!xs.empty() && (xs.front() <= 0.0 || xs.back() >= kTwoPi))
      throw Error("classify_grid: curve touches the periodic seam");
    std::size_t next = 0;  // crossings passed so far
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.coord(ix);
      while (next < xs.size() && xs[next] <= x) ++next;
      bool inside_curve = (next % 2) == 1;
      bool domain = (side == DomainSide::interior) ? inside_curve : !inside_curve;
      const bool near_lo = next > 0 && x - xs[next - 1] < kNudgeTol;
      const bool near_hi = next < xs.size() && xs[next] - x < kNudgeTol;
      if (near_lo || near_hi) {
        if (!domain) ++m.nudged;
        domain = true;  // ambiguous nodes are pulled onto the physical side
      }
      m.chi_domain.at(ix, iy) = domain ? 1.0 : 0.0;
      m.chi_extension.at(ix, iy) = domain ? 0.0 : 1.0;
    }
  }
  return m;
}

DomainMasks classify_interval(double a, double b, const GridSpec& grid) {
  if (grid.dim != 1) throw Error("classify_interval: 1D grid required");
  DomainMasks m{GridField(grid), GridField(grid), 0};
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.coord(i);
    bool domain = !(x > a && x < b);
    if (std::abs(x - a) < kNudgeTol || std::abs(x - b) < kNudgeTol) {
      if (!domain) ++m.nudged;
      domain = true;
    }
    m.chi_domain[i] = domain ? 1.0 : 0.0;
    m.chi_extension[i] = domain ? 0.0 : 1.0;
  }
  return m;
}

}  // namespace ibse
