#include "cmclab/torsion.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <sstream>

#include "cmclab/errors.hpp"

namespace cmclab {

namespace {

constexpr double kThetaMin = 1e-6;

double dot_blocked(const std::vector<double>& a, const std::vector<double>& b) {
  // Fixed 1024-element blocks, then the block sums in order.
  double total = 0.0;
  const std::size_t n = a.size();
  for (std::size_t s = 0; s < n; s += 1024) {
    const std::size_t e = std::min(n, s + 1024);
    double part = 0.0;
    for (std::size_t i = s; i < e; ++i) part += a[i] * b[i];
    total += part;
  }
  return total;
}

struct System {
  std::vector<std::size_t> node;     // unknown -> grid node
  std::vector<double> diag;          // scaled by h^2
  std::vector<std::int32_t> nbr;     // 2d entries per unknown, -1 for a boundary side
  int sides = 6;
};

// Returns false when some cut fraction is below kThetaMin.
bool assemble(const ScalarField& phi, double shift, System& sys, std::vector<std::int32_t>& uid) {
  const Grid& g = phi.grid();
  const int d = g.dim();
  sys.sides = 2 * d;
  uid.assign(g.size(), -1);
  sys.node.clear();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (phi[i] + shift < 0.0) {
      uid[i] = static_cast<std::int32_t>(sys.node.size());
      sys.node.push_back(i);
    }
  const std::size_t n = sys.node.size();
  sys.diag.assign(n, 0.0);
  sys.nbr.assign(n * static_cast<std::size_t>(sys.sides), -1);
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t i = sys.node[u];
    const double pi = phi[i] + shift;
    for (int a = 0; a < d; ++a) {
      const std::size_t st = g.stride(a);
      for (int s = 0; s < 2; ++s) {
        const std::size_t j = s == 0 ? i - st : i + st;
        const std::int32_t v = uid[j];
        if (v >= 0) {
          sys.diag[u] += 1.0;
          sys.nbr[u * static_cast<std::size_t>(sys.sides) + static_cast<std::size_t>(2 * a + s)] = v;
        } else {
          const double theta = pi / (pi - (phi[j] + shift));
          if (theta < kThetaMin) return false;
          sys.diag[u] += 1.0 / theta;
        }
      }
    }
  }
  return true;
}

void apply(const System& sys, const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = x.size();
  const std::size_t k = static_cast<std::size_t>(sys.sides);
  for (std::size_t u = 0; u < n; ++u) {
    double acc = sys.diag[u] * x[u];
    const std::int32_t* nb = &sys.nbr[u * k];
    for (std::size_t s = 0; s < k; ++s)
      if (nb[s] >= 0) acc -= x[static_cast<std::size_t>(nb[s])];
    y[u] = acc;
  }
}

// Jacobi PCG on A u = b; returns the iteration count and final relative residual.
std::pair<int, double> pcg(const System& sys, const std::vector<double>& b, std::vector<double>& x, double tol,
                           int max_iter) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  std::vector<double> r = b, z(n), p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
  p = z;
  double rz = dot_blocked(r, z);
  const double bnorm = std::sqrt(dot_blocked(b, b));
  double rel = std::sqrt(dot_blocked(r, r)) / bnorm;
  int it = 0;
  double best = rel;
  int since_best = 0;
  while (rel > tol && it < max_iter) {
    apply(sys, p, q);
    const double alpha = rz / dot_blocked(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
    const double rz_new = dot_blocked(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rel = std::sqrt(dot_blocked(r, r)) / bnorm;
    ++it;
    if (!std::isfinite(rel)) break;
    if (rel < 0.5 * best) {
      best = rel;
      since_best = 0;
    } else if (++since_best > max_iter / 2) {
      break;
    }
  }
  return {it, rel};
}

bool full_stencil(const Grid& g, const std::vector<std::uint8_t>& interior, const Index3& c) {
  const int d = g.dim();
  for (int dk = (d == 3 ? -1 : 0); dk <= (d == 3 ? 1 : 0); ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if (!interior[g.index(c[0] + di, c[1] + dj, c[2] + dk)]) return false;
  return true;
}

// Multi-source BFS over face neighbours from the full-stencil nodes into the
// band phi < 2h.
std::vector<std::uint32_t> hessian_sources(const ScalarField& phi, double shift,
                                           const std::vector<std::uint8_t>& interior) {
  const Grid& g = phi.grid();
  const double h = g.h();
  const int d = g.dim();
  std::vector<std::uint32_t> src(g.size(), kNoSource);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!interior[i] || phi[i] + shift > -2.0 * h) continue;
    if (!full_stencil(g, interior, g.coords(i))) continue;
    src[i] = static_cast<std::uint32_t>(i);
    queue.push_back(i);
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const Index3 c = g.coords(i);
    for (int a = 0; a < d; ++a)
      for (int s = -1; s <= 1; s += 2) {
        Index3 nc = c;
        nc[static_cast<std::size_t>(a)] += s;
        if (!g.in_range(nc)) continue;
        const std::size_t j = g.index(nc);
        if (src[j] != kNoSource || phi[j] + shift >= 2.0 * h) continue;
        src[j] = src[i];
        queue.push_back(j);
      }
  }
  return src;
}

// Least-squares quadratic through interior values and the zero crossings on
// grid edges near y; returns the fitted gradient at x.
Vec fitted_gradient(const ScalarField& phi, double shift, const ScalarField& f,
                    const std::vector<std::uint8_t>& interior, const Vec& y, const Vec& x) {
  const Grid& g = phi.grid();
  const int d = g.dim();
  const double h = g.h();
  const int nb = d == 3 ? 10 : 6;
  const double radius = 2.5 * h;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(nb, nb);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(nb);
  int count = 0;
  auto add = [&](const Vec& p, double v) {
    const Vec q = (p - y) * (1.0 / h);
    double row[10];
    if (d == 3) {
      const double r[10] = {1, q[0], q[1], q[2], q[0] * q[0], q[1] * q[1], q[2] * q[2], q[0] * q[1], q[0] * q[2], q[1] * q[2]};
      std::copy(r, r + 10, row);
    } else {
      const double r[6] = {1, q[0], q[1], q[0] * q[0], q[1] * q[1], q[0] * q[1]};
      std::copy(r, r + 6, row);
    }
    for (int a = 0; a < nb; ++a) {
      atb[a] += row[a] * v;
      for (int b = 0; b < nb; ++b) ata(a, b) += row[a] * row[b];
    }
    ++count;
  };
  Index3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    if (a >= d) {
      lo[static_cast<std::size_t>(a)] = hi[static_cast<std::size_t>(a)] = 0;
      continue;
    }
    const auto ua = static_cast<std::size_t>(a);
    lo[ua] = std::max(1, static_cast<int>(std::floor((y[ua] - radius - g.origin()[ua]) / h)));
    hi[ua] = std::min(g.extents()[ua] - 2, static_cast<int>(std::ceil((y[ua] + radius - g.origin()[ua]) / h)));
  }
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t idx = g.index(i, j, k);
        if (!interior[idx]) continue;
        const Vec p = g.position(i, j, k);
        if (norm(p - y) <= radius) add(p, f[idx]);
        const double pi = phi[idx] + shift;
        for (int a = 0; a < d; ++a)
          for (int s = -1; s <= 1; s += 2) {
            const std::size_t nbx = s < 0 ? idx - g.stride(a) : idx + g.stride(a);
            if (interior[nbx]) continue;
            const double theta = pi / (pi - (phi[nbx] + shift));
            Vec q = p;
            q[static_cast<std::size_t>(a)] += s * theta * h;
            if (norm(q - y) <= radius) add(q, 0.0);
          }
      }
  if (count < nb + 2) return {0.0, 0.0, 0.0};
  const Eigen::VectorXd c = ata.ldlt().solve(atb);
  const Vec q = (x - y) * (1.0 / h);
  Vec grad{};
  if (d == 3) {
    grad[0] = c[1] + 2 * c[4] * q[0] + c[7] * q[1] + c[8] * q[2];
    grad[1] = c[2] + 2 * c[5] * q[1] + c[7] * q[0] + c[9] * q[2];
    grad[2] = c[3] + 2 * c[6] * q[2] + c[8] * q[0] + c[9] * q[1];
  } else {
    grad[0] = c[1] + 2 * c[3] * q[0] + c[5] * q[1];
    grad[1] = c[2] + 2 * c[4] * q[1] + c[5] * q[0];
  }
  return grad * (1.0 / h);
}

}  // namespace

TorsionSolution solve_torsion(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const TorsionOptions& opt) {
  const ScalarField& phi = dom.phi;
  const Grid& g = phi.grid();
  const double h = g.h();
  System sys;
  std::vector<std::int32_t> uid;
  TorsionSolution sol;
  if (!assemble(phi, 0.0, sys, uid)) {
    sol.phi_shift = 1e-6 * h;
    sol.stats.perturbed = true;
    if (!assemble(phi, sol.phi_shift, sys, uid))
      throw Error(ErrorCode::DomainTooThin, "cut fraction below 1e-6 after perturbing phi");
  }
  const std::size_t n = sys.node.size();
  if (n < 100) throw Error(ErrorCode::DomainTooThin, "fewer than 100 interior nodes (" + std::to_string(n) + ")");

  // -Delta u = -1, scaled by h^2.
  std::vector<double> b(n, -h * h), x;
  const int max_iter = static_cast<int>(
      std::ceil(opt.max_iteration_factor * std::pow(static_cast<double>(n), 1.0 / g.dim())));
  const auto [iters, rel] = pcg(sys, b, x, opt.tolerance, max_iter);
  if (!(rel <= opt.tolerance)) {
    std::ostringstream os;
    os << "relative residual " << rel << " after " << iters << " iterations";
    throw Error(ErrorCode::SolverDiverged, os.str());
  }
  sol.stats.iterations = iters;
  sol.stats.final_relative_residual = rel;
  sol.stats.unknowns = n;

  sol.f = ScalarField(g, 0.0);
  sol.interior.assign(g.size(), 0);
  for (std::size_t u = 0; u < n; ++u) {
    // The M-matrix gives x <= 0; clip round-off at the last bit.
    sol.f[sys.node[u]] = std::min(x[u], 0.0);
    sol.interior[sys.node[u]] = 1;
  }
  sol.hess_source = hessian_sources(phi, sol.phi_shift, sol.interior);

  sol.boundary_dnu.resize(surf.size());
  for (std::size_t s = 0; s < surf.size(); ++s) {
    const Vec y = surf.points[s] - surf.normals[s] * (1.5 * h);
    sol.boundary_dnu[s] = norm(fitted_gradient(phi, sol.phi_shift, sol.f, sol.interior, y, surf.points[s]));
  }
  return sol;
}

Vec torsion_gradient(const TorsionSolution& sol, std::size_t idx) {
  return gradient_at(sol.f, sol.grid().coords(idx));
}

SymMat torsion_hessian(const TorsionSolution& sol, std::size_t idx) {
  const std::uint32_t s = sol.hess_source[idx];
  if (s == kNoSource) throw Error(ErrorCode::InvalidArgument, "no Hessian stand-in for node " + std::to_string(idx));
  return hessian_at(sol.f, sol.grid().coords(s));
}

double torsion_integral(const ImplicitDomain& dom, const TorsionSolution& sol,
                        const std::function<double(std::size_t)>& value) {
  if (sol.phi_shift == 0.0) return integrate_interior(dom.phi, value);
  ScalarField shifted = dom.phi;
  for (auto& v : shifted.mutable_values()) v += sol.phi_shift;
  return integrate_interior(shifted, value);
}

double torsion_extended(const ImplicitDomain& dom, const TorsionSolution& sol, std::size_t idx) {
  if (sol.interior[idx]) return sol.f[idx];
  // Outside: f ~ slope * phi, the slope averaged over interior neighbours.
  const Grid& g = sol.grid();
  const Index3 c = g.coords(idx);
  const int d = g.dim();
  double fs = 0.0, ps = 0.0;
  for (int dk = (d == 3 ? -1 : 0); dk <= (d == 3 ? 1 : 0); ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const Index3 nc{c[0] + di, c[1] + dj, c[2] + dk};
        if (!g.in_range(nc)) continue;
        const std::size_t j = g.index(nc);
        if (!sol.interior[j]) continue;
        fs += sol.f[j];
        ps += dom.phi[j] + sol.phi_shift;
      }
  if (ps == 0.0) return 0.0;
  return (dom.phi[idx] + sol.phi_shift) * fs / ps;
}

EtaReport eta_deficit(const SurfaceSampleSet& surf, double volume) {
  const int n = surf.n();
  std::vector<double> terms(surf.size());
  for (std::size_t i = 0; i < surf.size(); ++i) {
    if (!(surf.H[i] > 0.0)) {
      std::ostringstream os;
      const Vec& p = surf.points[i];
      os << "H = " << surf.H[i] << " at sample " << i << " (" << p[0] << ", " << p[1] << ", " << p[2] << ")";
      throw Error(ErrorCode::NonpositiveMeanCurvature, os.str());
    }
    terms[i] = surf.weights[i] * n / surf.H[i];
  }
  EtaReport r;
  r.hk_integral = ordered_sum(terms);
  r.eta = 1.0 - (n + 1) * volume / r.hk_integral;
  r.hk_slack = r.hk_integral - (n + 1) * volume;
  return r;
}

LipschitzReport lipschitz_check(const ImplicitDomain& dom, const TorsionSolution& sol) {
  const Grid& g = sol.grid();
  const double h = g.h();
  LipschitzReport r;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!sol.interior[i]) continue;
    r.f_sup = std::max(r.f_sup, -sol.f[i]);
    if (dom.phi[i] + sol.phi_shift <= -2.0 * h) r.grad_sup = std::max(r.grad_sup, norm(torsion_gradient(sol, i)));
  }
  for (double v : sol.boundary_dnu) r.grad_sup = std::max(r.grad_sup, v);
  r.ratio = r.f_sup > 0.0 ? r.grad_sup / std::sqrt(2.0 * r.f_sup) : 0.0;
  return r;
}

double talenti_bound(double volume, int n) {
  return std::pow(volume / unit_ball_volume(n + 1), 2.0 / (n + 1)) / (2.0 * (n + 1));
}

}  // namespace cmclab
