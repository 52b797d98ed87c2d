// Ball compounds joined by necks. The catenoid-like profile is an explicit
// surface of revolution per necked pair, so its distance function is computed
// exactly piece by piece (sphere remnants, cap rims, neck meridian curves).

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmclab/errors.hpp"
#include "cmclab/redistance.hpp"
#include "cmclab/shapes.hpp"

namespace cmclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double smoothstep5(double x) { return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x); }
double smoothstep5_d(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
double smoothstep5_dd(double x) { return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x); }

struct Cap {
  Vec axis;       // unit, pointing from the ball center into the cap
  double offset;  // plane position along axis
  double rim;     // rim circle radius
};

// Meridian profile of one neck in local coordinates: t along the axis from the
// waist, r the distance to the axis.
struct Neck {
  int a = 0, b = 0;
  Vec za, axis;
  double ra = 0, rb = 0, dist = 0, w = 0;
  double s_waist = 0;  // waist position measured from za along axis
  double t1a = 0, t1b = 0;  // catenoid/sphere crossings (t1a < 0 < t1b)
  double tA = 0, tB = 0;    // ends of the neck piece
  double rmax = 0;
  std::vector<double> ts, rs;  // dense samples of the profile

  double sphere_a(double t, double* d1, double* d2) const {
    const double u = t + s_waist;
    const double rho = std::sqrt(std::max(ra * ra - u * u, 0.0));
    if (d1) *d1 = -u / rho;
    if (d2) *d2 = -ra * ra / (rho * rho * rho);
    return rho;
  }
  double sphere_b(double t, double* d1, double* d2) const {
    const double u = t + s_waist - dist;
    const double rho = std::sqrt(std::max(rb * rb - u * u, 0.0));
    if (d1) *d1 = -u / rho;
    if (d2) *d2 = -rb * rb / (rho * rho * rho);
    return rho;
  }

  // Profile value with first and second derivatives.
  double profile(double t, double* d1 = nullptr, double* d2 = nullptr) const {
    const double c = w * std::cosh(t / w), c1 = std::sinh(t / w), c2 = std::cosh(t / w) / w;
    double sig = 0, sig1 = 0, sig2 = 0, rho = c, rho1 = c1, rho2 = c2;
    if (t < t1a) {
      const double x = std::min((t1a - t) / (2.0 * w), 1.0);
      sig = smoothstep5(x);
      sig1 = -smoothstep5_d(x) / (2.0 * w);
      sig2 = smoothstep5_dd(x) / (4.0 * w * w);
      rho = sphere_a(t, &rho1, &rho2);
    } else if (t > t1b) {
      const double x = std::min((t - t1b) / (2.0 * w), 1.0);
      sig = smoothstep5(x);
      sig1 = smoothstep5_d(x) / (2.0 * w);
      sig2 = smoothstep5_dd(x) / (4.0 * w * w);
      rho = sphere_b(t, &rho1, &rho2);
    }
    if (d1) *d1 = c1 + sig1 * (rho - c) + sig * (rho1 - c1);
    if (d2) *d2 = c2 + sig2 * (rho - c) + 2.0 * sig1 * (rho1 - c1) + sig * (rho2 - c2);
    return c + sig * (rho - c);
  }

  // Distance in the meridian half-plane from (tq, rq) to the profile curve.
  double curve_distance(double tq, double rq) const {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double d = (ts[i] - tq) * (ts[i] - tq) + (rs[i] - rq) * (rs[i] - rq);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    const double lo = ts[best == 0 ? 0 : best - 1];
    const double hi = ts[std::min(best + 1, ts.size() - 1)];
    double t = ts[best];
    for (int it = 0; it < 12; ++it) {
      double p1, p2;
      const double p = profile(t, &p1, &p2);
      const double g = (t - tq) + (p - rq) * p1;
      const double gp = 1.0 + p1 * p1 + (p - rq) * p2;
      if (gp <= 0.0) break;
      const double next = std::clamp(t - g / gp, lo, hi);
      if (std::abs(next - t) < 1e-15) break;
      t = next;
    }
    const double p = profile(t);
    return std::min(std::sqrt(bd), std::hypot(t - tq, p - rq));
  }
};

// Largest crossing of the catenoid with a sphere profile on the side given by
// sign (-1 toward ball a, +1 toward ball b), scanning outward from the tip.
double find_crossing(const Neck& nk, int sign) {
  const double tip = sign < 0 ? -(nk.s_waist - nk.ra) : (nk.dist - nk.rb - nk.s_waist);
  const double radius = sign < 0 ? nk.ra : nk.rb;
  auto diff = [&](double t) {
    const double c = nk.w * std::cosh(t / nk.w);
    const double rho = sign < 0 ? nk.sphere_a(t, nullptr, nullptr) : nk.sphere_b(t, nullptr, nullptr);
    return c - rho;
  };
  const double step = nk.w / 256.0;
  double prev = tip;
  for (int i = 1; i * step < radius; ++i) {
    const double t = tip + sign * i * step;
    if (diff(t) < 0.0) {
      double lo = prev, hi = t;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (diff(mid) > 0.0) lo = mid;
        else hi = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = t;
  }
  throw Error(ErrorCode::InvalidArgument, "neck waist is too wide to meet its sphere");
}

Neck build_neck(const NeckCompoundSpec& spec, int a, int b, double w) {
  Neck nk;
  nk.a = a;
  nk.b = b;
  nk.w = w;
  nk.za = spec.centers[static_cast<std::size_t>(a)];
  const Vec zb = spec.centers[static_cast<std::size_t>(b)];
  nk.ra = spec.radii[static_cast<std::size_t>(a)];
  nk.rb = spec.radii[static_cast<std::size_t>(b)];
  nk.dist = distance(nk.za, zb);
  nk.axis = (zb - nk.za) / nk.dist;
  const double gap = nk.dist - nk.ra - nk.rb;
  if (gap < 0.0) throw Error(ErrorCode::InvalidArgument, "catenoid-like necks need non-overlapping balls");
  nk.s_waist = nk.ra + 0.5 * gap;
  nk.t1a = find_crossing(nk, -1);
  nk.t1b = find_crossing(nk, +1);
  nk.tA = nk.t1a - 2.0 * w;
  nk.tB = nk.t1b + 2.0 * w;
  if (nk.tA + nk.s_waist <= 0.0 || nk.tB + nk.s_waist >= nk.dist) {
    throw Error(ErrorCode::InvalidArgument, "neck blend reaches past a ball equator");
  }
  const int samples = 768;
  for (int i = 0; i <= samples; ++i) {
    const double t = nk.tA + (nk.tB - nk.tA) * i / samples;
    nk.ts.push_back(t);
    nk.rs.push_back(nk.profile(t));
    nk.rmax = std::max(nk.rmax, nk.rs.back());
  }
  return nk;
}

double rim_distance(const Vec& x, const Vec& center, const Cap& cap) {
  const Vec c0 = center + cap.offset * cap.axis;
  const Vec v = x - c0;
  const double along = dot(v, cap.axis);
  const double radial = norm(v - along * cap.axis);
  return std::hypot(along, radial - cap.rim);
}

ImplicitDomain catenoid_compound(const NeckCompoundSpec& spec, const std::vector<double>& widths, const Grid& grid) {
  const std::size_t nb = spec.centers.size();
  std::vector<Neck> necks;
  std::vector<std::vector<Cap>> caps(nb);
  for (std::size_t p = 0; p < spec.neck_pairs.size(); ++p) {
    const auto [a, b] = spec.neck_pairs[p];
    Neck nk = build_neck(spec, a, b, widths[p]);
    const double sa = nk.tA + nk.s_waist;
    caps[static_cast<std::size_t>(a)].push_back({nk.axis, sa, nk.profile(nk.tA)});
    const double sb = nk.dist - (nk.tB + nk.s_waist);
    caps[static_cast<std::size_t>(b)].push_back({-nk.axis, sb, nk.profile(nk.tB)});
    necks.push_back(std::move(nk));
  }
  for (std::size_t j = 0; j < nb; ++j) {
    const double r = spec.radii[j];
    for (std::size_t p = 0; p < caps[j].size(); ++p) {
      for (std::size_t q = p + 1; q < caps[j].size(); ++q) {
        const double tp = std::acos(std::clamp(caps[j][p].offset / r, -1.0, 1.0));
        const double tq = std::acos(std::clamp(caps[j][q].offset / r, -1.0, 1.0));
        const double between = std::acos(std::clamp(dot(caps[j][p].axis, caps[j][q].axis), -1.0, 1.0));
        if (between <= tp + tq) throw Error(ErrorCode::InvalidArgument, "two necks on one ball overlap");
      }
    }
  }

  ImplicitDomain dom{ScalarField(grid), true, Provenance::NeckCompound, 0};
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const Vec x = grid.position(idx);
    double d = kInf;
    for (std::size_t j = 0; j < nb; ++j) {
      const Vec v = x - spec.centers[j];
      const double rv = norm(v);
      const double r = spec.radii[j];
      const Cap* hit = nullptr;
      if (rv > 0.0) {
        for (const Cap& cap : caps[j]) {
          if (r * dot(v, cap.axis) / rv > cap.offset) hit = &cap;
        }
      }
      d = std::min(d, hit ? rim_distance(x, spec.centers[j], *hit) : std::abs(rv - r));
    }
    bool decided = false, inside = false;
    for (const Neck& nk : necks) {
      const Vec v = x - nk.za;
      const double along = dot(v, nk.axis);
      const double t = along - nk.s_waist;
      const double r = norm(v - along * nk.axis);
      // Box lower bound in the meridian plane before the exact curve distance.
      const double dt = std::max({nk.tA - t, t - nk.tB, 0.0});
      const double dr = std::max({nk.w - r, r - nk.rmax, 0.0});
      if (std::hypot(dt, dr) < d) d = std::min(d, nk.curve_distance(t, r));
      if (!decided && t >= nk.tA && t <= nk.tB && r < std::max(nk.ra, nk.rb)) {
        decided = true;
        inside = r < nk.profile(t);
      }
    }
    if (!decided) {
      for (std::size_t j = 0; j < nb && !inside; ++j) inside = distance(x, spec.centers[j]) < spec.radii[j];
    }
    dom.phi[idx] = inside ? -d : d;
  }
  return dom;
}

ImplicitDomain smooth_min_compound(const NeckCompoundSpec& spec, const std::vector<double>& widths, const Grid& grid) {
  double k = kInf;
  for (double w : widths) k = std::min(k, w);
  ScalarField raw(grid);
  std::vector<double> vals(spec.centers.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const Vec x = grid.position(idx);
    double m = kInf;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      vals[j] = distance(x, spec.centers[j]) - spec.radii[j];
      m = std::min(m, vals[j]);
    }
    double s = 0.0;
    for (double v : vals) s += std::exp(-(v - m) / k);
    raw[idx] = m - k * std::log(s);
  }
  return ImplicitDomain{redistance(raw), false, Provenance::NeckCompound, 0};
}

}  // namespace

ImplicitDomain make_neck_compound(const NeckCompoundSpec& spec, const Grid& grid) {
  const std::size_t nb = spec.centers.size();
  if (nb == 0 || spec.radii.size() != nb) throw Error(ErrorCode::InvalidArgument, "neck compound needs centers and radii");
  for (double r : spec.radii) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  }
  if (!spec.neck_pairs.empty() && spec.neck_width.size() != 1 && spec.neck_width.size() != spec.neck_pairs.size()) {
    throw Error(ErrorCode::InvalidArgument, "neck_width needs one entry or one per pair");
  }
  NeckCompoundSpec local = spec;
  if (grid.dim() == 2) {
    for (Vec& c : local.centers) c[2] = 0.0;
  }
  std::vector<double> widths;
  std::vector<std::vector<bool>> necked(nb, std::vector<bool>(nb, false));
  for (std::size_t p = 0; p < local.neck_pairs.size(); ++p) {
    const auto [a, b] = local.neck_pairs[p];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= nb || static_cast<std::size_t>(b) >= nb || a == b) {
      throw Error(ErrorCode::InvalidArgument, "neck pair index out of range");
    }
    const double w = local.neck_width.size() == 1 ? local.neck_width[0] : local.neck_width[p];
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "neck width must be positive");
    if (w < 4.0 * grid.h()) throw Error(ErrorCode::NeckUnresolved, "neck width below 4h");
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (distance(local.centers[ua], local.centers[ub]) >= local.radii[ua] + local.radii[ub] + 4.0 * w) {
      throw Error(ErrorCode::InvalidArgument, "necked balls are too far apart for the neck width");
    }
    necked[ua][ub] = necked[ub][ua] = true;
    widths.push_back(w);
  }
  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = a + 1; b < nb; ++b) {
      if (!necked[a][b] && distance(local.centers[a], local.centers[b]) <= local.radii[a] + local.radii[b]) {
        throw Error(ErrorCode::InvalidArgument, "balls without a neck must be disjoint");
      }
    }
  }
  ImplicitDomain dom = local.profile == NeckProfile::SmoothMin && !widths.empty()
                           ? smooth_min_compound(local, widths, grid)
                           : catenoid_compound(local, widths, grid);
  validate_domain(dom);
  return dom;
}

NeckCompoundSpec neck_chain(int count, double radius, double w, double gap_factor, NeckProfile profile) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "chain needs at least one ball");
  NeckCompoundSpec spec;
  const double step = 2.0 * radius + gap_factor * w;
  const double first = -0.5 * step * (count - 1);
  for (int i = 0; i < count; ++i) {
    spec.centers.push_back({first + i * step, 0.0, 0.0});
    spec.radii.push_back(radius);
    if (i > 0) spec.neck_pairs.emplace_back(i - 1, i);
  }
  spec.neck_width = {w};
  spec.profile = profile;
  return spec;
}

}  // namespace cmclab
