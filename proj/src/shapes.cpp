#include "cmclab/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cmclab/errors.hpp"
#include "cmclab/redistance.hpp"

namespace cmclab {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Ball: return "ball";
    case Provenance::Ellipsoid: return "ellipsoid";
    case Provenance::PerturbedSphere: return "perturbed-sphere";
    case Provenance::NeckCompound: return "neck-compound";
    case Provenance::Csg: return "csg";
    case Provenance::External: return "external";
  }
  return "unknown";
}

void validate_domain(const ImplicitDomain& dom) {
  const Grid& g = dom.grid();
  dom.phi.validate();
  std::size_t inside = 0;
  const auto& ext = g.extents();
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (dom.phi[idx] < 0.0) ++inside;
    if (dom.phi[idx] > 0.0) continue;
    const Index3 c = g.coords(idx);
    for (int a = 0; a < g.dim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      if (c[ua] < 4 || c[ua] > ext[ua] - 5) {
        throw Error(ErrorCode::OutOfBox, "domain comes within 4h of the grid box");
      }
    }
  }
  if (inside == 0) throw Error(ErrorCode::EmptySurface, "domain {phi < 0} is empty");
}

Grid grid_around(int dim, const Vec& lo, const Vec& hi, double h, double margin) {
  // Anchor the lattice at the origin so symmetric shapes centred there sit on nodes.
  Vec a{0.0, 0.0, 0.0}, b{0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    a[uk] = std::floor((lo[uk] - margin) / h) * h;
    b[uk] = std::ceil((hi[uk] + margin) / h) * h;
  }
  return Grid::covering(dim, a, b, h);
}

ImplicitDomain make_ball(const Vec& center, double radius, const Grid& grid) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  ImplicitDomain dom{ScalarField(grid), true, Provenance::Ball, 0};
  Vec c = center;
  if (grid.dim() == 2) c[2] = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) dom.phi[i] = distance(grid.position(i), c) - radius;
  validate_domain(dom);
  return dom;
}

ImplicitDomain make_ball_union(const std::vector<Vec>& centers, const std::vector<double>& radii, const Grid& grid) {
  if (centers.empty() || centers.size() != radii.size()) {
    throw Error(ErrorCode::InvalidArgument, "ball union needs matching centers and radii");
  }
  for (std::size_t a = 0; a < centers.size(); ++a) {
    if (!(radii[a] > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
    for (std::size_t b = a + 1; b < centers.size(); ++b) {
      if (distance(centers[a], centers[b]) < radii[a] + radii[b]) {
        throw Error(ErrorCode::InvalidArgument, "ball union members must be disjoint");
      }
    }
  }
  ImplicitDomain dom{ScalarField(grid), true, Provenance::Csg, 0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec x = grid.position(i);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < centers.size(); ++b) d = std::min(d, distance(x, centers[b]) - radii[b]);
    dom.phi[i] = d;
  }
  validate_domain(dom);
  return dom;
}

namespace {

// Root of sum_i (r_i z_i / (s + r_i))^2 = 1 by bisection (after Eberly).
double ellipsoid_root(const double* r, const double* z, int m, double g) {
  double n[3];
  for (int i = 0; i < m; ++i) n[i] = r[i] * z[i];
  double s0 = z[m - 1] - 1.0;
  double s1 = 0.0;
  if (g >= 0.0) {
    double len = 0.0;
    for (int i = 0; i < m; ++i) len += n[i] * n[i];
    s1 = std::sqrt(len) - 1.0;
  }
  double s = 0.0;
  for (int it = 0; it < 2200; ++it) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    double val = -1.0;
    for (int i = 0; i < m; ++i) {
      const double q = n[i] / (s + r[i]);
      val += q * q;
    }
    if (val > 0.0) s0 = s;
    else if (val < 0.0) s1 = s;
    else break;
  }
  return s;
}

// e0 >= e1 > 0, y >= 0. Returns distance and writes the foot point x.
double ellipse_foot(double e0, double e1, double y0, double y1, double& x0, double& x1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z[2] = {y0 / e0, y1 / e1};
      const double g = z[0] * z[0] + z[1] * z[1] - 1.0;
      if (g != 0.0) {
        const double r[2] = {(e0 / e1) * (e0 / e1), 1.0};
        const double sbar = ellipsoid_root(r, z, 2, g);
        x0 = r[0] * y0 / (sbar + r[0]);
        x1 = y1 / (sbar + 1.0);
        return std::hypot(x0 - y0, x1 - y1);
      }
      x0 = y0;
      x1 = y1;
      return 0.0;
    }
    x0 = 0.0;
    x1 = e1;
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    x0 = e0 * xde0;
    x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return std::hypot(x0 - y0, x1);
  }
  x0 = e0;
  x1 = 0.0;
  return std::abs(y0 - e0);
}

// e0 >= e1 >= e2 > 0, y >= 0.
double ellipsoid_foot(const double e[3], const double y[3], double x[3]) {
  if (y[2] > 0.0) {
    if (y[1] > 0.0) {
      if (y[0] > 0.0) {
        const double z[3] = {y[0] / e[0], y[1] / e[1], y[2] / e[2]};
        const double g = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] - 1.0;
        if (g != 0.0) {
          const double r[3] = {(e[0] / e[2]) * (e[0] / e[2]), (e[1] / e[2]) * (e[1] / e[2]), 1.0};
          const double sbar = ellipsoid_root(r, z, 3, g);
          x[0] = r[0] * y[0] / (sbar + r[0]);
          x[1] = r[1] * y[1] / (sbar + r[1]);
          x[2] = y[2] / (sbar + 1.0);
          return std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) +
                           (x[2] - y[2]) * (x[2] - y[2]));
        }
        for (int i = 0; i < 3; ++i) x[i] = y[i];
        return 0.0;
      }
      x[0] = 0.0;
      return ellipse_foot(e[1], e[2], y[1], y[2], x[1], x[2]);
    }
    x[1] = 0.0;
    if (y[0] > 0.0) return ellipse_foot(e[0], e[2], y[0], y[2], x[0], x[2]);
    x[0] = 0.0;
    x[2] = e[2];
    return std::abs(y[2] - e[2]);
  }
  const double denom0 = e[0] * e[0] - e[2] * e[2], denom1 = e[1] * e[1] - e[2] * e[2];
  const double numer0 = e[0] * y[0], numer1 = e[1] * y[1];
  if (numer0 < denom0 && numer1 < denom1) {
    const double xde0 = numer0 / denom0, xde1 = numer1 / denom1;
    const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
    if (discr > 0.0) {
      x[0] = e[0] * xde0;
      x[1] = e[1] * xde1;
      x[2] = e[2] * std::sqrt(discr);
      return std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + x[2] * x[2]);
    }
  }
  x[2] = 0.0;
  return ellipse_foot(e[0], e[1], y[0], y[1], x[0], x[1]);
}

}  // namespace

double ellipsoid_distance(int dim, const Vec& semiaxes, const Vec& p, Vec* foot) {
  // Sort axes descending, fold the point into the positive orthant.
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.begin() + dim,
            [&](int a, int b) { return semiaxes[static_cast<std::size_t>(a)] > semiaxes[static_cast<std::size_t>(b)]; });
  double e[3], y[3], x[3] = {0, 0, 0};
  double level = 0.0;
  for (int k = 0; k < dim; ++k) {
    const auto o = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
    e[k] = semiaxes[o];
    y[k] = std::abs(p[o]);
    level += (p[o] / semiaxes[o]) * (p[o] / semiaxes[o]);
  }
  const double d = dim == 3 ? ellipsoid_foot(e, y, x) : ellipse_foot(e[0], e[1], y[0], y[1], x[0], x[1]);
  if (foot) {
    *foot = {0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) {
      const auto o = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
      (*foot)[o] = std::copysign(x[k], p[o]);
    }
  }
  return level < 1.0 ? -d : d;
}

ImplicitDomain make_ellipsoid(const Vec& semiaxes, const Grid& grid, const Vec& center) {
  const int dim = grid.dim();
  for (int k = 0; k < dim; ++k) {
    if (semiaxes[static_cast<std::size_t>(k)] < 8.0 * grid.h()) {
      throw Error(ErrorCode::DegenerateAxis, "ellipsoid semiaxis below 8h");
    }
  }
  ImplicitDomain dom{ScalarField(grid), false, Provenance::Ellipsoid, 0};
  Vec c = center;
  if (dim == 2) c[2] = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) dom.phi[i] = ellipsoid_distance(dim, semiaxes, grid.position(i) - c);
  validate_domain(dom);
  return dom;
}

ZonalHarmonic::ZonalHarmonic(int dim, const PerturbationSpec& spec) : dim_(dim), degree_(spec.degree) {
  if (spec.degree < 0) throw Error(ErrorCode::InvalidArgument, "harmonic degree must be nonnegative");
  if (spec.seed == 0) {
    axes_.push_back(dim == 3 ? Vec{0.0, 0.0, 1.0} : Vec{0.0, 1.0, 0.0});
    weights_.push_back(1.0);
    return;
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double total = 0.0;
  for (int m = 0; m < 3; ++m) {
    Vec a{gauss(rng), gauss(rng), dim == 3 ? gauss(rng) : 0.0};
    axes_.push_back(normalized(a));
    weights_.push_back(unit(rng));
    total += std::abs(weights_.back());
  }
  for (double& w : weights_) w /= total;
}

namespace {

// Legendre P_l (3-D) or Chebyshev T_l (2-D) and the derivative at c.
std::pair<double, double> zonal_poly(int dim, int l, double c) {
  if (l == 0) return {1.0, 0.0};
  if (dim == 3) {
    double p0 = 1.0, p1 = c, d0 = 0.0, d1 = 1.0;
    for (int k = 1; k < l; ++k) {
      const double p2 = ((2.0 * k + 1.0) * c * p1 - k * p0) / (k + 1.0);
      const double d2 = d0 + (2.0 * k + 1.0) * p1;
      p0 = p1;
      p1 = p2;
      d0 = d1;
      d1 = d2;
    }
    return {p1, d1};
  }
  double t0 = 1.0, t1 = c, u0 = 1.0, u1 = 2.0 * c;
  for (int k = 1; k < l; ++k) {
    const double t2 = 2.0 * c * t1 - t0;
    t0 = t1;
    t1 = t2;
  }
  // T_l' = l U_{l-1}
  if (l == 1) return {t1, 1.0};
  for (int k = 1; k < l - 1; ++k) {
    const double u2 = 2.0 * c * u1 - u0;
    u0 = u1;
    u1 = u2;
  }
  return {t1, l * u1};
}

}  // namespace

double ZonalHarmonic::value(const Vec& omega) const {
  double v = 0.0;
  for (std::size_t m = 0; m < axes_.size(); ++m) v += weights_[m] * zonal_poly(dim_, degree_, dot(omega, axes_[m])).first;
  return v;
}

Vec ZonalHarmonic::surface_gradient(const Vec& omega) const {
  Vec g{0.0, 0.0, 0.0};
  for (std::size_t m = 0; m < axes_.size(); ++m) {
    const double c = dot(omega, axes_[m]);
    const double d = zonal_poly(dim_, degree_, c).second;
    g += (weights_[m] * d) * (axes_[m] - c * omega);
  }
  return g;
}

ImplicitDomain make_perturbed_sphere(double radius, const PerturbationSpec& spec, const Grid& grid, const Vec& center) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
  if (std::abs(spec.amplitude) > radius / 10.0) {
    throw Error(ErrorCode::AmplitudeTooLarge, "perturbation amplitude exceeds R/10");
  }
  const int dim = grid.dim();
  const ZonalHarmonic Y(dim, spec);
  const double a = spec.amplitude;
  Vec c = center;
  if (dim == 2) c[2] = 0.0;
  auto surface_radius = [&](const Vec& omega) { return radius * (1.0 + a * Y.value(omega)); };

  ScalarField phi(grid);
  std::vector<std::uint8_t> band(grid.size(), 0);
  const double band_width = 6.0 * grid.h();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec v = grid.position(i) - c;
    const double r = norm(v);
    if (r == 0.0) {
      phi[i] = -radius;
      continue;
    }
    const Vec omega = v / r;
    const double F = r - surface_radius(omega);
    phi[i] = F;
    if (std::abs(F) >= band_width) continue;
    // Foot point: project onto the tangent plane, then back along the ray.
    Vec p = surface_radius(omega) * omega;
    for (int it = 0; it < 200; ++it) {
      const double pr = norm(p);
      const Vec pw = p / pr;
      const Vec n = normalized(pw - (radius * a / pr) * Y.surface_gradient(pw));
      const Vec q = v - dot(v - p, n) * n;
      const Vec qw = normalized(q);
      const Vec next = surface_radius(qw) * qw;
      const double step = distance(next, p);
      p = next;
      if (step < 1e-15 * radius) break;
    }
    phi[i] = std::copysign(distance(v, p), F);
    band[i] = 1;
  }
  ImplicitDomain dom{fast_sweep(phi, band), false, Provenance::PerturbedSphere, spec.seed};
  validate_domain(dom);
  return dom;
}

ImplicitDomain rigid_move(const ImplicitDomain& dom, const Mat3& rotation, const Vec& translation) {
  const Grid& g = dom.grid();
  ScalarField out(g);
  bool lattice_exact = true;
  const Vec lo = g.origin(), hi = g.upper();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.position(i) - translation;
    // Pre-image under the rotation: R^T x.
    Vec y{0.0, 0.0, 0.0};
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) y[static_cast<std::size_t>(r)] += rotation[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] * x[static_cast<std::size_t>(k)];
    }
    if (g.dim() == 2) y[2] = 0.0;
    Index3 node{0, 0, 0};
    bool snapped = true;
    for (int a = 0; a < g.dim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double u = (y[ua] - lo[ua]) / g.h();
      const double ru = std::round(u);
      if (std::abs(u - ru) > 1e-9) snapped = false;
      node[ua] = static_cast<int>(ru);
    }
    if (snapped && g.in_range(node)) {
      out[i] = dom.phi[g.index(node)];
      continue;
    }
    lattice_exact = false;
    double outside2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double e = std::max({lo[ua] - y[ua], y[ua] - hi[ua], 0.0});
      outside2 += e * e;
    }
    out[i] = interpolate(dom.phi, y) + std::sqrt(outside2);
  }
  ImplicitDomain moved{std::move(out), dom.exact_sdf && lattice_exact, dom.provenance, dom.seed};
  validate_domain(moved);
  return moved;
}

ImplicitDomain load_external(const std::filesystem::path& path) {
  ScalarField raw = read_field_csv(path);
  ImplicitDomain dom{redistance(raw), false, Provenance::External, 0};
  validate_domain(dom);
  return dom;
}

}  // namespace cmclab
