#include "cmclab/measures.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "cmclab/errors.hpp"
#include "cmclab/redistance.hpp"

namespace cmclab {

namespace {

constexpr int kKuhn[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};
constexpr int kTri[2][3] = {{0, 1, 3}, {0, 2, 3}};

Vec corner_offset(int c) { return {static_cast<double>(c & 1), static_cast<double>((c >> 1) & 1), static_cast<double>((c >> 2) & 1)}; }

std::size_t corner_index(const Grid& g, std::size_t base, int c) {
  std::size_t idx = base;
  if (c & 1) idx += g.stride(0);
  if (c & 2) idx += g.stride(1);
  if (c & 4) idx += g.stride(2);
  return idx;
}

double tet_volume(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  return std::abs(dot(b - a, cross(c - a, d - a))) / 6.0;
}

// Integral of the linear interpolant of f over {phi < 0} within one simplex.
// x holds vertex positions (local units), vol the simplex measure.
double clip_tet(const Vec* x, const double* phi, const double* f, double vol) {
  int in[4], out[4], ni = 0, no = 0;
  for (int v = 0; v < 4; ++v) {
    if (phi[v] < 0.0) in[ni++] = v;
    else out[no++] = v;
  }
  if (ni == 0) return 0.0;
  const double full = vol * (f[0] + f[1] + f[2] + f[3]) / 4.0;
  if (ni == 4) return full;
  auto frac = [&](int a, int b) { return phi[a] / (phi[a] - phi[b]); };
  if (ni == 1) {
    const int i = in[0];
    double s = 1.0, fs = f[i];
    for (int k = 0; k < 3; ++k) {
      const double t = frac(i, out[k]);
      s *= t;
      fs += f[i] + t * (f[out[k]] - f[i]);
    }
    return vol * s * fs / 4.0;
  }
  if (ni == 3) {
    const int o = out[0];
    double s = 1.0, fs = f[o];
    for (int k = 0; k < 3; ++k) {
      const double t = frac(o, in[k]);
      s *= t;
      fs += f[o] + t * (f[in[k]] - f[o]);
    }
    return full - vol * s * fs / 4.0;
  }
  // Two inside: a prism with triangles (a, p_ac, p_ad) and (b, p_bc, p_bd).
  const int a = in[0], b = in[1], c = out[0], d = out[1];
  auto point = [&](int p, int q, double& fv) {
    const double t = frac(p, q);
    fv = f[p] + t * (f[q] - f[p]);
    return x[p] + t * (x[q] - x[p]);
  };
  double fac, fad, fbc, fbd;
  const Vec pac = point(a, c, fac), pad = point(a, d, fad), pbc = point(b, c, fbc), pbd = point(b, d, fbd);
  const double scale = vol * 6.0 / std::abs(dot(x[1] - x[0], cross(x[2] - x[0], x[3] - x[0])));
  const double v1 = tet_volume(x[a], pac, pad, x[b]) * scale;
  const double v2 = tet_volume(pac, pad, x[b], pbc) * scale;
  const double v3 = tet_volume(pad, x[b], pbc, pbd) * scale;
  return v1 * (f[a] + fac + fad + f[b]) / 4.0 + v2 * (fac + fad + f[b] + fbc) / 4.0 +
         v3 * (fad + f[b] + fbc + fbd) / 4.0;
}

double clip_tri(const double* phi, const double* f, double area) {
  int in[3], out[3], ni = 0, no = 0;
  for (int v = 0; v < 3; ++v) {
    if (phi[v] < 0.0) in[ni++] = v;
    else out[no++] = v;
  }
  if (ni == 0) return 0.0;
  const double full = area * (f[0] + f[1] + f[2]) / 3.0;
  if (ni == 3) return full;
  auto frac = [&](int a, int b) { return phi[a] / (phi[a] - phi[b]); };
  const bool one = ni == 1;
  const int apex = one ? in[0] : out[0];
  const int* others = one ? out : in;
  double s = 1.0, fs = f[apex];
  for (int k = 0; k < 2; ++k) {
    const double t = frac(apex, others[k]);
    s *= t;
    fs += f[apex] + t * (f[others[k]] - f[apex]);
  }
  const double corner = area * s * fs / 3.0;
  return one ? corner : full - corner;
}

template <class Value>
double integrate_impl(const ScalarField& phi, Value&& value) {
  const Grid& g = phi.grid();
  const auto& ext = g.extents();
  const double h = g.h();
  const int corners = g.dim() == 3 ? 8 : 4;
  std::vector<double> per_slab;
  per_slab.reserve(static_cast<std::size_t>(ext[2]));
  const int kmax = g.dim() == 3 ? ext[2] - 1 : 1;
  for (int k = 0; k < kmax; ++k) {
    double slab = 0.0;
    for (int j = 0; j + 1 < ext[1]; ++j) {
      for (int i = 0; i + 1 < ext[0]; ++i) {
        const std::size_t base = g.index(i, j, k);
        double ph[8];
        bool any_in = false, all_in = true;
        for (int c = 0; c < corners; ++c) {
          ph[c] = phi[corner_index(g, base, c)];
          any_in |= ph[c] < 0.0;
          all_in &= ph[c] < 0.0;
        }
        if (!any_in) continue;
        double fv[8];
        for (int c = 0; c < corners; ++c) fv[c] = value(corner_index(g, base, c));
        if (g.dim() == 3) {
          if (all_in) {
            slab += h * h * h * ((fv[0] + fv[7]) / 4.0 + (fv[1] + fv[2] + fv[3] + fv[4] + fv[5] + fv[6]) / 12.0);
            continue;
          }
          for (const auto& tet : kKuhn) {
            Vec x[4];
            double p[4], f[4];
            for (int v = 0; v < 4; ++v) {
              x[v] = corner_offset(tet[v]);
              p[v] = ph[tet[v]];
              f[v] = fv[tet[v]];
            }
            slab += clip_tet(x, p, f, h * h * h / 6.0);
          }
        } else {
          if (all_in) {
            slab += h * h * (2.0 * fv[0] + fv[1] + fv[2] + 2.0 * fv[3]) / 6.0;
            continue;
          }
          for (const auto& tri : kTri) {
            double p[3], f[3];
            for (int v = 0; v < 3; ++v) {
              p[v] = ph[tri[v]];
              f[v] = fv[tri[v]];
            }
            slab += clip_tri(p, f, h * h / 2.0);
          }
        }
      }
    }
    per_slab.push_back(slab);
  }
  return ordered_sum(per_slab);
}

// Lazily evaluated central-difference gradient and Hessian of phi at nodes.
class NodeDerivatives {
 public:
  explicit NodeDerivatives(const ScalarField& phi) : phi_(phi), slot_(phi.size(), -1) {}

  void get(std::size_t idx, Vec& grad, SymMat& hess) {
    if (slot_[idx] < 0) {
      const Grid& g = phi_.grid();
      Index3 c = g.coords(idx);
      for (int a = 0; a < g.dim(); ++a) {
        const auto ua = static_cast<std::size_t>(a);
        c[ua] = std::clamp(c[ua], 1, g.extents()[ua] - 2);
      }
      slot_[idx] = static_cast<std::int32_t>(grads_.size());
      grads_.push_back(gradient_at(phi_, c));
      hess_.push_back(hessian_at(phi_, c));
    }
    grad = grads_[static_cast<std::size_t>(slot_[idx])];
    hess = hess_[static_cast<std::size_t>(slot_[idx])];
  }

  // Multilinear interpolation of the nodal gradient and Hessian.
  void interpolate_at(const Vec& p, Vec& grad, SymMat& hess) {
    const Grid& g = phi_.grid();
    std::array<int, 3> base{0, 0, 0};
    std::array<double, 3> t{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const int n = g.extents()[ua];
      const double x = std::clamp((p[ua] - g.origin()[ua]) / g.h(), 0.0, static_cast<double>(n - 1));
      base[ua] = std::min(static_cast<int>(std::floor(x)), n - 2);
      t[ua] = x - base[ua];
    }
    grad = {0, 0, 0};
    hess = SymMat{};
    const int corners = g.dim() == 3 ? 8 : 4;
    const std::size_t b0 = g.index(base[0], base[1], base[2]);
    for (int c = 0; c < corners; ++c) {
      const double w = ((c & 1) ? t[0] : 1 - t[0]) * ((c & 2) ? t[1] : 1 - t[1]) *
                       (g.dim() == 3 ? ((c & 4) ? t[2] : 1 - t[2]) : 1.0);
      Vec gc;
      SymMat hc;
      get(corner_index(g, b0, c), gc, hc);
      grad += w * gc;
      hess = hess + w * hc;
    }
  }

 private:
  const ScalarField& phi_;
  std::vector<std::int32_t> slot_;
  std::vector<Vec> grads_;
  std::vector<SymMat> hess_;
};

struct Curvature {
  Vec normal;
  double H;
  std::array<double, 2> kappa;
  double aring;
};

Curvature curvature_from(int dim, const Vec& grad, const SymMat& hess) {
  Curvature out{};
  const double gn = norm(grad);
  const Vec nu = gn > 0.0 ? grad / gn : Vec{0, 0, 0};
  out.normal = nu;
  Eigen::Matrix3d P = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d Hm;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      P(r, c) -= nu[static_cast<std::size_t>(r)] * nu[static_cast<std::size_t>(c)];
      Hm(r, c) = hess(r, c) / gn;
    }
  if (dim == 2) {
    P(2, 2) = 0.0;
    const Eigen::Matrix3d S = P * Hm * P;
    out.kappa = {S.trace(), 0.0};
    out.H = out.kappa[0];
    out.aring = 0.0;
    return out;
  }
  const Eigen::Matrix3d S = P * Hm * P;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (S + S.transpose()));
  const Eigen::Vector3d nv(nu[0], nu[1], nu[2]);
  int normal_slot = 0;
  double best = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double align = std::abs(es.eigenvectors().col(k).dot(nv));
    if (align > best) {
      best = align;
      normal_slot = k;
    }
  }
  std::array<double, 2> kap{};
  int m = 0;
  for (int k = 0; k < 3; ++k) {
    if (k != normal_slot) kap[static_cast<std::size_t>(m++)] = es.eigenvalues()(k);
  }
  if (kap[0] > kap[1]) std::swap(kap[0], kap[1]);
  out.kappa = kap;
  out.H = kap[0] + kap[1];
  const double half = 0.5 * out.H;
  out.aring = std::sqrt((kap[0] - half) * (kap[0] - half) + (kap[1] - half) * (kap[1] - half));
  return out;
}

}  // namespace

double integrate_interior(const ScalarField& phi, std::span<const double> values) {
  return integrate_impl(phi, [&](std::size_t idx) { return values[idx]; });
}

double integrate_interior(const ScalarField& phi, const std::function<double(std::size_t)>& value) {
  return integrate_impl(phi, value);
}

double volume(const ImplicitDomain& dom) {
  return integrate_impl(dom.phi, [](std::size_t) { return 1.0; });
}

Vec volume_centroid(const ImplicitDomain& dom) {
  const Grid& g = dom.grid();
  const double v = volume(dom);
  Vec c{0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) {
    c[static_cast<std::size_t>(a)] =
        integrate_impl(dom.phi, [&](std::size_t idx) { return g.position(idx)[static_cast<std::size_t>(a)]; }) / v;
  }
  return c;
}

double perimeter(const SurfaceSampleSet& surf) { return surf.area(); }

SurfaceSampleSet extract_surface(const ImplicitDomain& dom) {
  const Grid& g = dom.grid();
  const ScalarField& phi = dom.phi;
  const int dim = g.dim();
  const double h = g.h();
  SurfaceSampleSet out;
  out.dim = dim;
  out.h = h;
  NodeDerivatives deriv(phi);
  const auto& ext = g.extents();
  const int corners = dim == 3 ? 8 : 4;
  const double min_area = dim == 3 ? 1e-14 * h * h : 1e-14 * h;

  auto add_sample = [&](const Vec& centroid, double weight) {
    Vec p = centroid;
    Vec grad;
    SymMat hess;
    for (int it = 0; it < 2; ++it) {
      deriv.interpolate_at(p, grad, hess);
      const double g2 = norm2(grad);
      if (g2 <= 0.0) break;
      p -= (interpolate(phi, p) / g2) * grad;
      if (dim == 2) p[2] = 0.0;
    }
    deriv.interpolate_at(p, grad, hess);
    const Curvature cv = curvature_from(dim, grad, hess);
    out.points.push_back(p);
    out.normals.push_back(cv.normal);
    out.weights.push_back(weight);
    out.H.push_back(cv.H);
    out.kappa.push_back(cv.kappa);
    out.aring.push_back(cv.aring);
  };

  const int kmax = dim == 3 ? ext[2] - 1 : 1;
  for (int k = 0; k < kmax; ++k) {
    for (int j = 0; j + 1 < ext[1]; ++j) {
      for (int i = 0; i + 1 < ext[0]; ++i) {
        const std::size_t base = g.index(i, j, k);
        double ph[8];
        bool any_in = false, any_out = false;
        for (int c = 0; c < corners; ++c) {
          ph[c] = phi[corner_index(g, base, c)];
          (ph[c] < 0.0 ? any_in : any_out) = true;
        }
        if (!any_in || !any_out) continue;
        const Vec origin = g.position(i, j, k);
        auto vertex = [&](int c) {
          Vec v = origin + h * corner_offset(c);
          if (dim == 2) v[2] = 0.0;
          return v;
        };
        auto cut = [&](int a, int b) {
          const double t = ph[a] / (ph[a] - ph[b]);
          return vertex(a) + t * (vertex(b) - vertex(a));
        };
        if (dim == 2) {
          for (const auto& tri : kTri) {
            int in[3], outv[3], ni = 0, no = 0;
            for (int v = 0; v < 3; ++v) (ph[tri[v]] < 0.0 ? in[ni++] : outv[no++]) = tri[v];
            if (ni == 0 || no == 0) continue;
            const int apex = ni == 1 ? in[0] : outv[0];
            const int* others = ni == 1 ? outv : in;
            const Vec p0 = cut(apex, others[0]);
            const Vec p1 = cut(apex, others[1]);
            const double len = distance(p0, p1);
            if (len > min_area) add_sample(0.5 * (p0 + p1), len);
          }
          continue;
        }
        for (const auto& tet : kKuhn) {
          int in[4], outv[4], ni = 0, no = 0;
          for (int v = 0; v < 4; ++v) (ph[tet[v]] < 0.0 ? in[ni++] : outv[no++]) = tet[v];
          if (ni == 0 || no == 0) continue;
          auto emit = [&](const Vec& a, const Vec& b, const Vec& c) {
            const double area = 0.5 * norm(cross(b - a, c - a));
            if (area > min_area) add_sample((a + b + c) / 3.0, area);
          };
          if (ni == 1 || ni == 3) {
            const int apex = ni == 1 ? in[0] : outv[0];
            const int* others = ni == 1 ? outv : in;
            emit(cut(apex, others[0]), cut(apex, others[1]), cut(apex, others[2]));
          } else {
            const Vec pac = cut(in[0], outv[0]), pad = cut(in[0], outv[1]);
            const Vec pbc = cut(in[1], outv[0]), pbd = cut(in[1], outv[1]);
            emit(pac, pad, pbd);
            emit(pac, pbd, pbc);
          }
        }
      }
    }
  }
  if (out.size() == 0) throw Error(ErrorCode::EmptySurface, "phi has no sign change");
  return out;
}

PointLocator::PointLocator(std::span<const Vec> points, double cell) : points_(points.begin(), points.end()), cell_(cell) {
  Vec lo{0, 0, 0}, hi{0, 0, 0};
  if (!points_.empty()) lo = hi = points_[0];
  for (const Vec& p : points_) {
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  origin_ = lo;
  for (std::size_t a = 0; a < 3; ++a) dims_[a] = std::max(1, static_cast<int>(std::floor((hi[a] - lo[a]) / cell_)) + 1);
  const std::size_t nb = static_cast<std::size_t>(dims_[0]) * static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(dims_[2]);
  std::vector<std::size_t> which(points_.size());
  start_.assign(nb + 1, 0);
  for (std::size_t p = 0; p < points_.size(); ++p) {
    int c[3];
    for (std::size_t a = 0; a < 3; ++a) c[a] = std::min(dims_[a] - 1, static_cast<int>(std::floor((points_[p][a] - origin_[a]) / cell_)));
    which[p] = bucket(c[0], c[1], c[2]);
    ++start_[which[p] + 1];
  }
  for (std::size_t b = 0; b < nb; ++b) start_[b + 1] += start_[b];
  order_.assign(points_.size(), 0);
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t p = 0; p < points_.size(); ++p) order_[fill[which[p]]++] = static_cast<std::uint32_t>(p);
}

std::pair<std::size_t, double> PointLocator::nearest(const Vec& x) const {
  if (points_.empty()) throw Error(ErrorCode::InvalidArgument, "nearest query on an empty point set");
  // Expand the search radius until a hit is certain to be the nearest.
  double r = cell_;
  Vec clamped = x;
  double outside = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const double hiv = origin_[a] + dims_[a] * cell_;
    const double e = std::max({origin_[a] - x[a], x[a] - hiv, 0.0});
    outside += e * e;
    clamped[a] = std::clamp(x[a], origin_[a], hiv);
  }
  r += std::sqrt(outside);
  for (;;) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for_each_within(x, r, [&](std::size_t p) {
      const double d = norm2(points_[p] - x);
      if (d < bd || (d == bd && p < best)) {
        bd = d;
        best = p;
      }
    });
    if (bd < std::numeric_limits<double>::infinity()) return {best, std::sqrt(bd)};
    r *= 2.0;
  }
}

double sample_diameter(std::span<const Vec> points) {
  if (points.size() < 2) return 0.0;
  bool planar = true;
  for (const Vec& p : points) planar &= p[2] == 0.0;
  // Candidates: extreme samples along a fixed set of directions. A diameter
  // pair is extreme along its own chord, so the candidate diameter is within a
  // factor cos(angular spacing) of the true one; local ascent closes the rest.
  const int ndir = planar ? 720 : 1024;
  std::vector<std::size_t> cand;
  for (int k = 0; k < ndir; ++k) {
    Vec u;
    if (planar) {
      const double t = kPi * k / ndir;
      u = {std::cos(t), std::sin(t), 0.0};
    } else {
      const double z = 1.0 - (2.0 * k + 1.0) / (2.0 * ndir);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = k * kPi * (3.0 - std::sqrt(5.0));
      u = {r * std::cos(a), r * std::sin(a), z};
    }
    std::size_t lo = 0, hi = 0;
    double vlo = dot(points[0], u), vhi = vlo;
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double v = dot(points[i], u);
      if (v < vlo) {
        vlo = v;
        lo = i;
      }
      if (v > vhi) {
        vhi = v;
        hi = i;
      }
    }
    cand.push_back(lo);
    cand.push_back(hi);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  struct Pair {
    double d2;
    std::size_t a, b;
  };
  std::vector<Pair> best;
  for (std::size_t i = 0; i < cand.size(); ++i)
    for (std::size_t j = i + 1; j < cand.size(); ++j) best.push_back({norm2(points[cand[i]] - points[cand[j]]), cand[i], cand[j]});
  std::sort(best.begin(), best.end(), [](const Pair& x, const Pair& y) {
    return x.d2 != y.d2 ? x.d2 > y.d2 : (x.a != y.a ? x.a < y.a : x.b < y.b);
  });
  double d2 = best.empty() ? 0.0 : best[0].d2;
  const double reach = 0.05 * std::sqrt(d2);
  const PointLocator loc(points, std::max(reach, 1e-12));
  auto farthest_near = [&](const Vec& from, const Vec& around, std::size_t current) {
    std::size_t arg = current;
    double far = norm2(points[current] - from);
    loc.for_each_within(around, reach, [&](std::size_t i) {
      const double v = norm2(points[i] - from);
      if (v > far || (v == far && i < arg)) {
        far = v;
        arg = i;
      }
    });
    return arg;
  };
  for (std::size_t k = 0; k < std::min<std::size_t>(best.size(), 16); ++k) {
    std::size_t a = best[k].a, b = best[k].b;
    for (int it = 0; it < 64; ++it) {
      const std::size_t na = farthest_near(points[b], points[a], a);
      const std::size_t nb = farthest_near(points[na], points[b], b);
      if (na == a && nb == b) break;
      a = na;
      b = nb;
    }
    d2 = std::max(d2, norm2(points[a] - points[b]));
  }
  return std::sqrt(d2);
}

namespace {

struct Ball {
  Vec c{};
  double r2 = -1.0;
  bool contains(const Vec& p) const { return norm2(p - c) <= r2 * (1.0 + 1e-12) + 1e-300; }
};

Ball ball_from(const std::vector<Vec>& s, int dim) {
  Ball b;
  if (s.size() == 1) {
    b.c = s[0];
    b.r2 = 0.0;
    return b;
  }
  if (s.size() == 2) {
    b.c = 0.5 * (s[0] + s[1]);
    b.r2 = norm2(s[0] - b.c);
    return b;
  }
  // Circumcentre within the affine hull: c = s0 + sum l_k (s_k - s0).
  const std::size_t m = s.size() - 1;
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec ui = s[i + 1] - s[0];
    for (std::size_t j = 0; j < m; ++j) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * dot(ui, s[j + 1] - s[0]);
    rhs(static_cast<Eigen::Index>(i)) = norm2(ui);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.rank() < static_cast<Eigen::Index>(m)) {
    // Degenerate support: fall back to the widest pair.
    Ball best;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        Ball cand = ball_from({s[i], s[j]}, dim);
        if (cand.r2 > best.r2) best = cand;
      }
    return best;
  }
  const Eigen::VectorXd l = lu.solve(rhs);
  b.c = s[0];
  for (std::size_t k = 0; k < m; ++k) b.c += l(static_cast<Eigen::Index>(k)) * (s[k + 1] - s[0]);
  b.r2 = norm2(s[0] - b.c);
  return b;
}

}  // namespace

std::pair<Vec, double> min_enclosing_ball(std::span<const Vec> points, int dim, std::uint64_t seed) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "enclosing ball of an empty set");
  std::vector<Vec> p(points.begin(), points.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = p.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(p[i], p[pick(rng)]);
  }
  // Randomised incremental construction with nested support sets.
  Ball b = ball_from({p[0]}, dim);
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (b.contains(p[i])) continue;
    b = ball_from({p[i]}, dim);
    for (std::size_t j = 0; j < i; ++j) {
      if (b.contains(p[j])) continue;
      b = ball_from({p[i], p[j]}, dim);
      for (std::size_t k = 0; k < j; ++k) {
        if (b.contains(p[k])) continue;
        b = ball_from({p[i], p[j], p[k]}, dim);
        if (dim < 3) continue;
        for (std::size_t l = 0; l < k; ++l) {
          if (b.contains(p[l])) continue;
          b = ball_from({p[i], p[j], p[k], p[l]}, dim);
        }
      }
    }
  }
  return {b.c, std::sqrt(b.r2)};
}

double inradius(const ImplicitDomain& dom) {
  const ScalarField d = dom.exact_sdf ? dom.phi : redistance(dom.phi);
  double r = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) r = std::max(r, -d[i]);
  return r;
}

double perimeter_density(const SurfaceSampleSet& surf, const PointLocator& loc, const Vec& x, double r) {
  double area = 0.0;
  std::vector<std::size_t> hits;
  loc.for_each_within(x, r, [&](std::size_t i) { hits.push_back(i); });
  std::sort(hits.begin(), hits.end());
  for (auto i : hits) area += surf.weights[i];
  return area / std::pow(r, surf.n());
}

double allard_ratio(const SurfaceSampleSet& surf, const PointLocator& loc, const Vec& x, double r) {
  std::vector<std::size_t> hits;
  loc.for_each_within(x, r, [&](std::size_t i) { hits.push_back(i); });
  if (hits.empty()) throw Error(ErrorCode::EmptyBall, "no surface samples in the ball");
  std::sort(hits.begin(), hits.end());
  double hmax = 0.0, area = 0.0;
  for (auto i : hits) {
    hmax = std::max(hmax, std::abs(surf.H[i]));
    area += surf.weights[i];
  }
  const int n = surf.n();
  const double excess = area / (unit_ball_volume(n) * std::pow(r, n)) - 1.0;
  return r * hmax + std::max(excess, 0.0);
}

double allard_ratio(const SurfaceSampleSet& surf, const Vec& x, double r) {
  const PointLocator loc(surf.points, std::max(r, 2.0 * surf.h));
  return allard_ratio(surf, loc, x, r);
}

DeficitReport deficits(const ImplicitDomain& dom, const SurfaceSampleSet& surf, std::uint64_t seed) {
  DeficitReport rep;
  const int n = dom.dim() - 1;
  rep.volume = volume(dom);
  rep.perimeter = perimeter(surf);
  rep.H0 = n * rep.perimeter / ((n + 1) * rep.volume);
  rep.H_min = std::numeric_limits<double>::infinity();
  rep.H_max = -rep.H_min;
  double dev = 0.0;
  for (std::size_t i = 0; i < surf.size(); ++i) {
    dev = std::max(dev, std::abs(surf.H[i] - rep.H0));
    rep.H_min = std::min(rep.H_min, surf.H[i]);
    rep.H_max = std::max(rep.H_max, surf.H[i]);
  }
  rep.delta = dev / rep.H0;
  rep.Q = std::pow(rep.perimeter, n + 1) /
          (std::pow(n + 1.0, n + 1) * std::pow(rep.volume, n) * unit_ball_volume(n + 1));

  const PointLocator loc(surf.points, 2.0 * surf.h);
  double jump = 0.0;
  for (std::size_t i = 0; i < surf.size(); ++i) {
    loc.for_each_within(surf.points[i], 1.5 * surf.h, [&](std::size_t j) { jump = std::max(jump, std::abs(surf.H[i] - surf.H[j])); });
  }
  rep.delta_error = jump / rep.H0;

  rep.diam = sample_diameter(surf.points);
  rep.r_in = inradius(dom);
  const auto [oc, orad] = min_enclosing_ball(surf.points, dom.dim(), seed);
  rep.out_center = oc;
  rep.r_out = orad;

  std::vector<double> terms(surf.size());
  for (std::size_t i = 0; i < surf.size(); ++i) terms[i] = surf.weights[i] * std::pow(std::abs(surf.H[i]), n - 1);
  rep.topping_rhs = ordered_sum(terms);

  rep.centroid = volume_centroid(dom);
  for (std::size_t i = 0; i < surf.size(); ++i) terms[i] = surf.weights[i] * dot(surf.points[i] - rep.centroid, surf.normals[i]);
  rep.divergence_volume = ordered_sum(terms) / (n + 1);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, surf.size() - 1);
  const PointLocator wide(surf.points, 0.2);
  rep.min_perimeter_density = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 50; ++s) {
    const Vec x = surf.points[pick(rng)];
    for (double r : {0.1, 0.2, 0.4}) rep.min_perimeter_density = std::min(rep.min_perimeter_density, perimeter_density(surf, wide, x, r));
  }
  return rep;
}

void write_surface_csv(const std::filesystem::path& path, const SurfaceSampleSet& surf) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "x,y,z,nx,ny,nz,w,H,k1,k2,Aring\n";
  char buf[512];
  for (std::size_t i = 0; i < surf.size(); ++i) {
    const Vec& p = surf.points[i];
    const Vec& v = surf.normals[i];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", p[0], p[1], p[2], v[0], v[1],
                  v[2], surf.weights[i], surf.H[i], surf.kappa[i][0], surf.kappa[i][1], surf.aring[i]);
    out << buf;
  }
}

}  // namespace cmclab
