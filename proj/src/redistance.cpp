#include "cmclab/redistance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmclab {

namespace {

// Godunov update for |grad u| = 1 given the smaller neighbour per axis.
double eikonal_update(std::array<double, 3> a, int dim, double h) {
  std::sort(a.begin(), a.begin() + dim);
  double u = a[0] + h;
  if (dim >= 2 && u > a[1]) {
    const double d = a[0] - a[1];
    u = 0.5 * (a[0] + a[1] + std::sqrt(std::max(0.0, 2.0 * h * h - d * d)));
    if (dim == 3 && u > a[2]) {
      const double s = a[0] + a[1] + a[2];
      const double q = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
      u = (s + std::sqrt(std::max(0.0, s * s - 3.0 * (q - h * h)))) / 3.0;
    }
  }
  return u;
}

}  // namespace

std::vector<std::uint8_t> interface_nodes(const ScalarField& phi) {
  const Grid& g = phi.grid();
  std::vector<std::uint8_t> out(g.size(), 0);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const Index3 c = g.coords(idx);
    const bool in = phi[idx] < 0.0;
    for (int a = 0; a < g.dim() && !out[idx]; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const std::size_t s = g.stride(a);
      if (c[ua] > 0 && (phi[idx - s] < 0.0) != in) out[idx] = 1;
      if (c[ua] + 1 < g.extents()[ua] && (phi[idx + s] < 0.0) != in) out[idx] = 1;
    }
  }
  return out;
}

ScalarField fast_sweep(const ScalarField& phi, std::span<const std::uint8_t> frozen, int max_rounds) {
  const Grid& g = phi.grid();
  const double big = std::numeric_limits<double>::max() / 4;
  std::vector<double> u(g.size(), big);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (frozen[i]) u[i] = std::abs(phi[i]);
  }
  const auto& ext = g.extents();
  const int dim = g.dim();
  const double h = g.h();
  const int orders = dim == 3 ? 8 : 4;
  for (int round = 0; round < max_rounds; ++round) {
    double change = 0.0;
    for (int o = 0; o < orders; ++o) {
      const int sx = (o & 1) ? -1 : 1, sy = (o & 2) ? -1 : 1, sz = (o & 4) ? -1 : 1;
      for (int kk = 0; kk < ext[2]; ++kk) {
        const int k = sz > 0 ? kk : ext[2] - 1 - kk;
        for (int jj = 0; jj < ext[1]; ++jj) {
          const int j = sy > 0 ? jj : ext[1] - 1 - jj;
          for (int ii = 0; ii < ext[0]; ++ii) {
            const int i = sx > 0 ? ii : ext[0] - 1 - ii;
            const Index3 c{i, j, k};
            const std::size_t idx = g.index(c);
            if (frozen[idx]) continue;
            std::array<double, 3> a{big, big, big};
            for (int ax = 0; ax < dim; ++ax) {
              const auto ua = static_cast<std::size_t>(ax);
              const std::size_t s = g.stride(ax);
              double m = big;
              if (c[ua] > 0) m = std::min(m, u[idx - s]);
              if (c[ua] + 1 < ext[ua]) m = std::min(m, u[idx + s]);
              a[ua] = m;
            }
            const double cand = eikonal_update(a, dim, h);
            if (cand < u[idx]) {
              if (u[idx] < big) change = std::max(change, u[idx] - cand);
              else change = std::max(change, h);
              u[idx] = cand;
            }
          }
        }
      }
    }
    if (change < 1e-12 * h) break;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (u[i] >= big) u[i] = std::abs(phi[i]);
    u[i] = phi[i] < 0.0 ? -u[i] : u[i];
  }
  return ScalarField(g, std::move(u));
}

ScalarField redistance(const ScalarField& phi) {
  const Grid& g = phi.grid();
  auto frozen = interface_nodes(phi);
  ScalarField seeded = phi;
  const auto grad = gradient(phi);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!frozen[i]) continue;
    const double gn = norm(grad.values[i]);
    if (gn > 1e-8) seeded[i] = phi[i] / gn;
  }
  return fast_sweep(seeded, frozen);
}

}  // namespace cmclab
