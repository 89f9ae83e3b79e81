#include "ibse/delta_kernel.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "ibse/grid.hpp"

namespace ibse {

namespace {

RationalPoly poly_trim(RationalPoly p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
  return p;
}

// q(x) = p(x + c), exact Horner shift
RationalPoly poly_shift(const RationalPoly& p, const Rational& c) {
  RationalPoly q;
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    RationalPoly r(q.size() + 1);
    for (std::size_t m = 0; m < q.size(); ++m) {
      r[m + 1] += q[m];
      r[m] += q[m] * c;
    }
    r[0] += *it;
    q = std::move(r);
  }
  return q;
}

// q(x) = p(-x)
RationalPoly poly_mirror(const RationalPoly& p) {
  RationalPoly q = p;
  for (std::size_t m = 1; m < q.size(); m += 2) q[m] = -q[m];
  return q;
}

RationalPoly poly_derivative(const RationalPoly& p) {
  if (p.size() <= 1) return {};
  RationalPoly q(p.size() - 1);
  for (std::size_t m = 1; m < p.size(); ++m) q[m - 1] = p[m] * Rational(m);
  return q;
}

Rational poly_eval(const RationalPoly& p, const Rational& x) {
  Rational acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Rational binom(int n, int k) {
  Rational r = 1;
  for (int i = 0; i < k; ++i) r = r * Rational(n - i) / Rational(i + 1);
  return r;
}

bool poly_equal(const RationalPoly& a, const RationalPoly& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t m = 0; m < n; ++m) {
    const Rational& x = m < a.size() ? a[m] : Rational(0);
    const Rational& y = m < b.size() ? b[m] : Rational(0);
    if (x != y) return false;
  }
  return true;
}

int poly_mismatch_count(const RationalPoly& a, const RationalPoly& b) {
  int c = 0;
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t m = 0; m < n; ++m) {
    const Rational& x = m < a.size() ? a[m] : Rational(0);
    const Rational& y = m < b.size() ? b[m] : Rational(0);
    if (x != y) ++c;
  }
  return c;
}

}  // namespace

void PiecewisePolyKernel::freeze() {
  // Store each piece in the local coordinate t = r - piece_index. The global
  // expansions of wide high-degree pieces cancel catastrophically in doubles;
  // the shifted forms evaluate to full precision.
  frozen.assign(regularity + 1, {});
  std::vector<RationalPoly> cur = pieces;
  for (int j = 0; j <= regularity; ++j) {
    frozen[j].resize(cur.size());
    for (std::size_t p = 0; p < cur.size(); ++p) {
      const RationalPoly local = poly_shift(cur[p], Rational(p));
      frozen[j][p].resize(local.size());
      for (std::size_t m = 0; m < local.size(); ++m)
        frozen[j][p][m] = local[m].convert_to<double>();
    }
    for (auto& p : cur) p = poly_derivative(p);
  }
}

double PiecewisePolyKernel::evaluate(double r, int j) const {
  if (j < 0 || j > regularity)
    throw Error("kernel evaluate: derivative order exceeds certified regularity");
  if (frozen.empty()) throw Error("kernel evaluate: freeze() not called");
  const double ar = std::abs(r);
  if (ar >= support) return 0.0;
  int piece = int(ar);
  if (piece >= support) piece = support - 1;
  const double t = ar - piece;
  const auto& c = frozen[j][piece];
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  if (r < 0.0 && (j % 2 != 0)) acc = -acc;
  return acc;
}

PiecewisePolyKernel four_point_delta() {
  PiecewisePolyKernel k;
  k.support = 2;
  k.regularity = 0;
  k.accuracy_order = 4;
  k.pieces = {
      {Rational(1), Rational(-1, 2), Rational(-1), Rational(1, 2)},
      {Rational(1), Rational(-11, 6), Rational(1), Rational(-1, 6)},
  };
  k.freeze();
  return k;
}

PiecewisePolyKernel self_convolve(const PiecewisePolyKernel& a, const PiecewisePolyKernel& b) {
  if (a.pieces.empty() || b.pieces.empty()) throw Error("self_convolve: empty kernel");

  // Two-sided pieces in local coordinates, keyed by integer left endpoint.
  auto local_pieces = [](const PiecewisePolyKernel& k) {
    std::map<int, RationalPoly> out;
    for (int i = 0; i < k.support; ++i) {
      out[i] = poly_shift(k.pieces[i], Rational(i));
      out[-i - 1] = poly_shift(poly_mirror(k.pieces[i]), Rational(-i - 1));
    }
    return out;
  };

  const auto la = local_pieces(a);
  const auto lb = local_pieces(b);
  std::map<int, RationalPoly> acc;
  auto add_to = [&acc](int key, const RationalPoly& p) {
    RationalPoly& dst = acc[key];
    if (dst.size() < p.size()) dst.resize(p.size());
    for (std::size_t m = 0; m < p.size(); ++m) dst[m] += p[m];
  };

  for (const auto& [pa, P] : la) {
    for (const auto& [pb, Q] : lb) {
      // h(u) = int P(s) Q(u-s) ds over the overlap, u local to pa+pb.
      const int deg = int(P.size() + Q.size());
      RationalPoly i1(deg, Rational(0));       // valid on u in [0,1)
      RationalPoly i2u(2 * deg, Rational(0));  // in u on [1,2); shifted below
      for (std::size_t i = 0; i < P.size(); ++i) {
        if (P[i] == 0) continue;
        for (std::size_t j = 0; j < Q.size(); ++j) {
          if (Q[j] == 0) continue;
          const Rational pq = P[i] * Q[j];
          for (std::size_t m = 0; m <= j; ++m) {
            const Rational t = pq * binom(int(j), int(m)) *
                               ((m % 2) ? Rational(-1) : Rational(1)) /
                               Rational(int(i + m + 1));
            i1[i + j + 1] += t;
            // upper limit s = 1
            i2u[j - m] += t;
            // lower limit s = u-1: subtract t * (u-1)^(i+m+1) * u^(j-m)
            const int e = int(i + m + 1);
            for (int l = 0; l <= e; ++l) {
              const Rational bl =
                  binom(e, l) * (((e - l) % 2) ? Rational(-1) : Rational(1));
              i2u[j - m + l] -= t * bl;
            }
          }
        }
      }
      add_to(pa + pb, poly_trim(i1));
      add_to(pa + pb + 1, poly_trim(poly_shift(i2u, Rational(1))));
    }
  }

  PiecewisePolyKernel out;
  out.support = a.support + b.support;
  out.regularity = a.regularity + b.regularity + 1;
  out.accuracy_order = std::min(a.accuracy_order, b.accuracy_order);
  out.pieces.resize(out.support);
  for (int i = 0; i < out.support; ++i) {
    auto it = acc.find(i);
    if (it == acc.end()) throw Error("self_convolve: missing piece");
    out.pieces[i] = poly_trim(poly_shift(it->second, Rational(-i)));
    // The convolution of even kernels is even; verify against the mirror side.
    auto itn = acc.find(-i - 1);
    if (itn == acc.end()) throw Error("self_convolve: missing mirror piece");
    RationalPoly neg = poly_trim(poly_shift(itn->second, Rational(i + 1)));
    if (!poly_equal(poly_mirror(out.pieces[i]), neg))
      throw Error("self_convolve: result is not even");
  }
  out.freeze();
  return out;
}

namespace {

// Published coefficients of the C^3 kernel, pieces [i, i+1) for i = 0..7,
// ascending powers of r. Zero beyond r = 8.
const char* kSmoothDeltaTable[8][16] = {
    {"12949745023/20432412000", "0", "-16459/30240", "0", "81491/453600", "0",
     "-11737/340200", "143/145152", "3223/793800", "-143/435456", "-3211/13608000",
     "13/483840", "1/181440", "-1/1451520", "-1/25401600", "1/203212800"},
    {"3177441629/5003856000", "-171811/22861440", "-9089/17280", "-64649/3265920",
     "141751/777600", "88517/5443200", "-119603/2332800", "298727/45722880",
     "28127/5443200", "-30173/19595520", "-403/11664000", "13/207360", "-1/155520",
     "-1/2612736", "1/10886400", "-1/261273600"},
    {"21914742667/35026992000", "-2566373/38102400", "-14339/51840", "-1946191/5443200",
     "288599/777600", "61633/3024000", "-269467/2332800", "630773/15240960",
     "-7337/5443200", "-79651/32659200", "7033/11664000", "-13/345600", "-1/155520",
     "29/21772800", "-1/10886400", "1/435456000"},
    {"4094824493/17513496000", "3468455/4191264", "-163307/285120", "-3764137/2993760",
     "6701891/4276800", "-93301/151200", "16957/1166400", "1057927/15240960",
     "-9859/388800", "4771/1306368", "91/2916000", "-221/2280960", "7/427680",
     "-13/9580032", "1/17107200", "-1/958003200"},
    {"-1606651889/5837832000", "301286857/62868960", "-703993/95040", "32748677/8981280",
     "560257/1425600", "-1620853/1360800", "218939/388800", "-1137851/9144576",
     "7069/907200", "61009/19595520", "-247/243000", "13/84480", "-1/71280",
     "113/143700480", "-1/39916800", "1/2874009600"},
    {"163201885541/35026992000", "-4590637187/1089728640", "-2987689/673920",
     "101232611/11975040", "-4187303/777600", "1038857/604800", "-488741/2332800",
     "-152395/3048192", "157289/5443200", "-44227/6531840", "11519/11664000",
     "-221/2280960", "1/155520", "-173/622702080", "1/141523200", "-1/12454041600"},
    {"1005507698627/245188944000", "-14398288259/1089728640", "56979607/3991680",
     "-17097977/2395008", "78901349/59875200", "255833/604800", "-5818427/16329600",
     "1823393/15240960", "-966457/38102400", "24421/6531840", "-32227/81648000",
     "53/1774080", "-19/11975040", "1/17791488", "-1/838252800", "1/87178291200"},
    {"-5005877248/1915538625", "421762048/127702575", "-23168/45045", "-2091088/1403325",
     "642734/467775", "-538927/850500", "773411/4082400", "-1825543/45722880",
     "58621/9525600", "-69019/97977600", "2447/40824000", "-299/79833600", "1/5987520",
     "-47/9340531200", "1/10897286400", "-1/1307674368000"},
};

PiecewisePolyKernel table_kernel() {
  PiecewisePolyKernel k;
  k.support = 8;
  k.regularity = 3;
  k.accuracy_order = 4;
  k.pieces.resize(8);
  for (int i = 0; i < 8; ++i) {
    k.pieces[i].resize(16);
    for (int m = 0; m < 16; ++m) k.pieces[i][m] = Rational(kSmoothDeltaTable[i][m]);
  }
  k.freeze();
  return k;
}

}  // namespace

const PiecewisePolyKernel& smooth_delta() {
  static const PiecewisePolyKernel k = table_kernel();
  return k;
}

PiecewisePolyKernel smooth_delta_convolved() {
  const PiecewisePolyKernel base = four_point_delta();
  PiecewisePolyKernel k = self_convolve(base, base);
  k = self_convolve(k, base);
  k = self_convolve(k, base);
  return k;
}

double moment_error(const PiecewisePolyKernel& k, int m, std::span<const double> offsets) {
  if (m < 0) throw Error("moment_error: negative moment");
  double worst = 0.0;
  for (double r : offsets) {
    double acc = 0.0;
    for (int i = -k.support; i <= k.support + 1; ++i) {
      const double d = r - i;
      const double kv = k.evaluate(d, 0);
      if (kv == 0.0) continue;
      acc += std::pow(d, m) * kv;
    }
    const double target = (m == 0) ? 1.0 : 0.0;
    worst = std::max(worst, std::abs(acc - target));
  }
  return worst;
}

double tensor_normal_weight(const PiecewisePolyKernel& k, std::span<const double> normal,
                            int j, std::span<const double> offsets) {
  const std::size_t d = normal.size();
  if (d != 1 && d != 2) throw Error("tensor_normal_weight: dimension must be 1 or 2");
  if (offsets.size() != d) throw Error("tensor_normal_weight: offsets/normal size mismatch");
  if (j < 0 || j > k.regularity) throw Error("tensor_normal_weight: bad derivative order");
  double nrm = 0.0;
  for (double c : normal) nrm += c * c;
  if (std::abs(std::sqrt(nrm) - 1.0) > 1e-12)
    throw Error("tensor_normal_weight: normal is not unit length");
  if (d == 1) {
    double w = k.evaluate(offsets[0], j);
    for (int i = 0; i < j; ++i) w *= normal[0];
    return w;
  }
  double acc = 0.0;
  for (int a = 0; a <= j; ++a) {
    const int b = j - a;
    double c = 1.0;
    for (int i = 0; i < a; ++i) c = c * double(j - i) / double(i + 1);  // binom(j, a)
    acc += c * std::pow(normal[0], a) * std::pow(normal[1], b) * k.evaluate(offsets[0], a) *
           k.evaluate(offsets[1], b);
  }
  return acc;
}

DeltaAuditReport audit_smooth_delta(bool perturb_one_coefficient) {
  DeltaAuditReport rep;
  PiecewisePolyKernel table = table_kernel();
  if (perturb_one_coefficient) {
    table.pieces[2][5] += Rational(1, 1000000);
    table.freeze();
  }
  const PiecewisePolyKernel conv = smooth_delta_convolved();

  rep.coefficient_mismatches = 0;
  for (int i = 0; i < 8; ++i)
    rep.coefficient_mismatches += poly_mismatch_count(table.pieces[i], conv.pieces[i]);
  rep.table_matches = rep.coefficient_mismatches == 0 && conv.support == table.support;

  // Exact C^3 continuity at every breakpoint, including vanishing at r = 8.
  rep.knots_match = true;
  {
    std::vector<RationalPoly> cur = table.pieces;
    for (int j = 0; j <= 3; ++j) {
      for (int r = 1; r <= 8; ++r) {
        const Rational left = poly_eval(cur[r - 1], Rational(r));
        const Rational right = (r < 8) ? poly_eval(cur[r], Rational(r)) : Rational(0);
        if (left != right) rep.knots_match = false;
      }
      for (auto& p : cur) p = poly_derivative(p);
    }
  }

  // Even C^3 function: coefficients of r^1 and r^3 vanish on the first piece.
  rep.even_at_origin = table.pieces[0].size() >= 4 && table.pieces[0][1] == 0 &&
                       table.pieces[0][3] == 0;

  rep.support_ok = table.evaluate(8.0, 0) == 0.0 && table.evaluate(-8.0, 0) == 0.0 &&
                   table.evaluate(11.5, 0) == 0.0;

  std::vector<double> offsets(17);
  for (int i = 0; i < 17; ++i) offsets[i] = i / 16.0;
  for (int m = 0; m <= 4; ++m) rep.moment_err[m] = moment_error(table, m, offsets);
  rep.moments_ok = true;
  for (int m = 0; m <= 3; ++m)
    if (rep.moment_err[m] > 1e-12) rep.moments_ok = false;
  rep.order_barrier = rep.moment_err[4] > 1e-8;

  std::ostringstream os;
  auto line = [&os](const char* name, bool ok, const std::string& detail) {
    os << name << ": " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) os << " (" << detail << ")";
    os << "\n";
  };
  line("table-equality", rep.table_matches,
       rep.table_matches ? "" : std::to_string(rep.coefficient_mismatches) + " mismatches");
  line("knot-continuity-C3", rep.knots_match, "");
  line("even-at-origin", rep.even_at_origin, "");
  line("compact-support", rep.support_ok, "");
  {
    std::ostringstream d;
    d << "m0.." << 3 << " max ";
    double w = 0;
    for (int m = 0; m <= 3; ++m) w = std::max(w, rep.moment_err[m]);
    d << w;
    line("moments-0-3", rep.moments_ok, d.str());
  }
  {
    std::ostringstream d;
    d << "m4 " << rep.moment_err[4];
    line("order-barrier-m4", rep.order_barrier, d.str());
  }
  rep.text = os.str();
  return rep;
}

std::string smooth_delta_table_dump() {
  std::ostringstream os;
  const PiecewisePolyKernel& k = smooth_delta();
  for (int i = 0; i < k.support; ++i) {
    os << "[" << i << "," << i + 1 << "):";
    for (const Rational& c : k.pieces[i]) os << " " << c;
    os << "\n";
  }
  return os.str();
}

}  // namespace ibse
