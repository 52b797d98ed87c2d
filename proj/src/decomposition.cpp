#include "cmclab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cmclab/errors.hpp"

namespace cmclab {

namespace {

double default_alpha(int n) { return 1.0 / (2.0 * (n + 2)); }
double default_beta(int n, double alpha) { return alpha / (2.0 * (n + 1)); }

// Distance to the union of spheres, negative inside.
double ball_sdf(const std::vector<Ball>& balls, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : balls) best = std::min(best, distance(x, b.center) - b.radius);
  return best;
}

// Roughly uniform points on the unit sphere (circle in 2-D) at the given spacing.
std::vector<Vec> sphere_directions(int dim, double spacing) {
  std::vector<Vec> out;
  if (dim == 2) {
    const int m = std::max(16, static_cast<int>(std::ceil(2 * kPi / spacing)));
    for (int i = 0; i < m; ++i) {
      const double t = 2 * kPi * (i + 0.5) / m;
      out.push_back({std::cos(t), std::sin(t), 0.0});
    }
    return out;
  }
  const int m = std::max(64, static_cast<int>(std::ceil(4 * kPi / (spacing * spacing))));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < m; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double t = golden * i;
    out.push_back({r * std::cos(t), r * std::sin(t), z});
  }
  return out;
}

// Distance from x to the domain boundary: the level set where it is trusted,
// the nearest surface sample elsewhere.
double boundary_distance(const NormalizedDomain& nd, const PointLocator& loc, const Vec& x) {
  const Grid& g = nd.dom.grid();
  if (g.contains(x) && g.distance_to_faces(x) >= g.h()) {
    const double v = std::abs(interpolate(nd.dom.phi, x));
    if (v < 3 * g.h()) return v;
  }
  return loc.nearest(x).second;
}

}  // namespace

NormalizedDomain normalize_domain(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const TorsionSolution& sol,
                                  const DeficitReport& rep) {
  const int n = surf.n();
  if (!(rep.H0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "H0 must be positive to normalise");
  const double s = rep.H0 / n;
  const double sn = std::pow(s, n);
  NormalizedDomain nd;
  nd.scale = s;

  const Grid g = dom.grid().scaled(s);
  std::vector<double> phi(dom.phi.values().begin(), dom.phi.values().end());
  for (double& v : phi) v *= s;
  nd.dom = dom;
  nd.dom.phi = ScalarField(g, std::move(phi));

  nd.surf = surf;
  nd.surf.h = surf.h * s;
  for (std::size_t i = 0; i < surf.size(); ++i) {
    nd.surf.points[i] = s * surf.points[i];
    nd.surf.weights[i] = sn * surf.weights[i];
    nd.surf.H[i] = surf.H[i] / s;
    nd.surf.kappa[i] = {surf.kappa[i][0] / s, surf.kappa[i][1] / s};
    nd.surf.aring[i] = surf.aring[i] / s;
  }

  std::vector<double> f(sol.f.values().begin(), sol.f.values().end());
  for (double& v : f) v *= s * s;
  nd.sol = sol;
  nd.sol.f = ScalarField(g, std::move(f));
  nd.sol.phi_shift = sol.phi_shift * s;
  for (double& v : nd.sol.boundary_dnu) v *= s;

  nd.rep = rep;
  nd.rep.volume = rep.volume * sn * s;
  nd.rep.perimeter = rep.perimeter * sn;
  nd.rep.divergence_volume = rep.divergence_volume * sn * s;
  nd.rep.H0 = rep.H0 / s;
  nd.rep.H_min = rep.H_min / s;
  nd.rep.H_max = rep.H_max / s;
  nd.rep.diam = rep.diam * s;
  nd.rep.r_in = rep.r_in * s;
  nd.rep.r_out = rep.r_out * s;
  nd.rep.out_center = s * rep.out_center;
  nd.rep.centroid = s * rep.centroid;
  nd.rep.topping_rhs = rep.topping_rhs * s;
  nd.balance = std::abs(nd.rep.perimeter - (n + 1) * nd.rep.volume) / nd.rep.perimeter;
  return nd;
}

ThresholdResult threshold_set(const NormalizedDomain& nd, const DecompositionConfig& cfg) {
  const int n = nd.surf.n();
  const double h = nd.dom.grid().h();
  const double alpha = cfg.alpha.value_or(default_alpha(n));
  ThresholdResult th;

  double eta = 0.0;
  try {
    eta = eta_deficit(nd.surf, nd.rep.volume).eta;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonpositiveMeanCurvature) throw;
    eta = nd.rep.delta;
    th.eta_surrogate = true;
  }
  // Below (h/r_in)^2 the deficit is discretisation noise.
  const double floor = nd.rep.r_in > 0 ? std::pow(h / nd.rep.r_in, 2) : 0.0;
  th.eta_used = std::max(eta, floor);

  const auto lip = lipschitz_check(nd.dom, nd.sol);
  th.C0 = cfg.c0_mode == C0Mode::Empirical ? lip.grad_sup : cfg.c0_value;
  if (!(th.C0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "C0 must be positive");

  if (cfg.eps_override) {
    th.eps = *cfg.eps_override;
  } else {
    const double raw = std::pow(nd.rep.volume, 1.0 / (n + 1)) * std::pow(th.eta_used, alpha);
    const double lo = cfg.eps_min_factor * h;
    double hi = cfg.eps_max.value_or(std::min(nd.rep.diam / 4, lip.f_sup / (12 * th.C0)));
    hi = std::max(hi, lo);
    th.eps = std::clamp(raw, lo, hi);
    th.clamped = th.eps != raw;
  }
  th.rho = cfg.rho_override.value_or(th.C0 * th.eps);

  const ScalarField& f = nd.sol.f;
  std::vector<std::uint8_t> where(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) where[i] = nd.sol.interior[i] && f[i] < -th.rho;
  th.f_eps = mollify(f, {th.eps, MollifierKernel::CompactPolynomial}, where);
  th.A.grid = f.grid();
  th.A.values.assign(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) th.A.values[i] = where[i] && th.f_eps[i] < -3 * th.rho;
  if (th.A.count() == 0)
    throw Error(ErrorCode::EmptyThresholdSet, "no node with f_eps < -3 rho (eps = " + std::to_string(th.eps) +
                                                  ", rho = " + std::to_string(th.rho) +
                                                  "); lower rho_override or eps_max");
  return th;
}

std::vector<ComponentFit> fit_component_balls(const ThresholdResult& th) {
  const Grid& g = th.A.grid;
  const int d = g.dim();
  const double level = -3 * th.rho;
  std::vector<ComponentFit> out;
  for (const auto& comp : connected_components(th.A)) {
    ComponentFit fit;
    fit.nodes = comp.size();
    fit.volume = comp.size() * g.cell_volume();
    std::size_t best = comp.front();
    for (std::size_t i : comp)
      if (th.f_eps[i] < th.f_eps[best]) best = i;
    fit.x = g.position(best);

    double r1 = std::numeric_limits<double>::infinity(), r2 = 0.0;
    for (std::size_t i : comp) {
      const Index3 c = g.coords(i);
      for (int a = 0; a < d; ++a)
        for (int step : {-1, 1}) {
          Index3 nb = c;
          nb[a] += step;
          if (!g.in_range(nb)) continue;
          const std::size_t j = g.index(nb);
          if (th.A[j]) continue;
          // Outside the mollified region f_eps is not evaluated; cross at the midpoint.
          double t = 0.5;
          const double vi = th.f_eps[i], vj = th.f_eps[j];
          if (vj != 0.0 && vj > vi) t = std::clamp((level - vi) / (vj - vi), 0.0, 1.0);
          const Vec p = g.position(c) + t * (g.position(nb) - g.position(c));
          const double r = distance(p, fit.x);
          r1 = std::min(r1, r);
          r2 = std::max(r2, r);
        }
    }
    if (!std::isfinite(r1)) r1 = r2 = g.h() / 2;
    fit.r1 = r1;
    fit.r2 = r2;
    out.push_back(fit);
  }
  return out;
}

std::vector<Ball> push_apart(std::vector<Ball> balls) {
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return 1.0 - balls[a].radius < 1.0 - balls[b].radius;
  });
  for (std::size_t j0 : order) {
    const double grow = 1.0 - balls[j0].radius;
    if (grow <= 0.0) {
      balls[j0].radius = 1.0;
      continue;
    }
    for (std::size_t j = 0; j < balls.size(); ++j) {
      if (j == j0) continue;
      const Vec off = balls[j].center - balls[j0].center;
      const double len = norm(off);
      // Coincident centres: push along the first axis.
      const Vec dir = len > 0 ? off / len : Vec{1, 0, 0};
      balls[j].center += grow * dir;
    }
    balls[j0].radius = 1.0;
  }
  return balls;
}

FilterResult filter_and_normalize(const std::vector<ComponentFit>& fits, double delta, int n,
                                  const DecompositionConfig& cfg) {
  const double alpha = cfg.alpha.value_or(default_alpha(n));
  const double upper = 1.0 + cfg.c1 * std::pow(std::max(delta, 0.0), alpha);
  FilterResult out;
  std::vector<Ball> balls;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const auto& f = fits[k];
    if (f.r1 >= 0.5 && f.r1 <= upper) {
      out.kept.push_back(k);
      balls.push_back({f.x, std::min(f.r1, 1.0)});
    } else {
      out.discarded_volume += f.volume;
      ++out.discarded;
    }
  }
  if (balls.empty())
    throw Error(ErrorCode::NoBallsSurvive, "no component has r1 in [1/2, " + std::to_string(upper) + "]");
  out.system.balls = push_apart(std::move(balls));
  out.system.normalized = true;
  return out;
}

StabilityMetrics stability_metrics(const NormalizedDomain& nd, const BallSystem& sys, const DecompositionConfig& cfg) {
  const auto& balls = sys.balls;
  const int n = nd.surf.n();
  const int d = n + 1;
  const Grid& grid = nd.dom.grid();
  const double h = grid.h();
  const double diam = nd.rep.diam;
  const double delta = std::max(nd.rep.delta, 0.0);
  const double alpha = cfg.alpha.value_or(default_alpha(n));
  const double beta = cfg.beta.value_or(default_beta(n, alpha));
  const double unit = unit_ball_volume(d);
  StabilityMetrics m;

  // Volume of the symmetric difference through the exact clipped integral of
  // max(phi_Omega, phi_G).
  {
    std::vector<double> both(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) both[i] = std::max(nd.dom.phi[i], ball_sdf(balls, grid.position(i)));
    const double inter = volume({ScalarField(grid, std::move(both)), false, nd.dom.provenance, nd.dom.seed});
    m.sym_diff_rel = (nd.rep.volume + balls.size() * unit - 2 * inter) / nd.rep.volume;
  }
  m.perim_quant = std::abs(nd.rep.perimeter - balls.size() * d * unit) / nd.rep.perimeter;

  m.tangency_gaps.assign(balls.size(), 0.0);
  if (balls.size() > 1) {
    for (std::size_t j = 0; j < balls.size(); ++j) {
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < balls.size(); ++l)
        if (l != j) gap = std::min(gap, (distance(balls[j].center, balls[l].center) - 2.0) / diam);
      m.tangency_gaps[j] = std::max(gap, 0.0);
    }
  }
  m.tangency = *std::max_element(m.tangency_gaps.begin(), m.tangency_gaps.end());

  const PointLocator omega(nd.surf.points, 2 * h);

  // Samples of the boundary of G, dropping points swallowed by another ball.
  const double spacing = 0.75 * h;
  const auto dirs = sphere_directions(d, spacing);
  struct GSample {
    Vec x, nu;
    std::size_t ball;
  };
  std::vector<GSample> gs;
  for (std::size_t j = 0; j < balls.size(); ++j)
    for (const Vec& u : dirs) {
      const Vec x = balls[j].center + u;
      bool inside_other = false;
      for (std::size_t l = 0; l < balls.size(); ++l)
        if (l != j && distance(x, balls[l].center) < 1.0 - 1e-12) inside_other = true;
      if (!inside_other) gs.push_back({x, u, j});
    }

  double one = 0.0;
  for (const auto& s : gs) one = std::max(one, boundary_distance(nd, omega, s.x));
  m.onesided = one / diam;
  double other = 0.0;
  for (const Vec& x : nd.surf.points) other = std::max(other, std::abs(ball_sdf(balls, x)));
  m.hausdorff = std::max(one, other) / diam;

  // Sigma_lambda: drop caps around the midpoints of every pair.
  m.lambda = cfg.lambda_coeff * std::pow(delta, beta / 2);
  std::vector<Vec> mids;
  for (std::size_t j = 0; j < balls.size(); ++j)
    for (std::size_t l = j + 1; l < balls.size(); ++l) mids.push_back(0.5 * (balls[j].center + balls[l].center));
  std::vector<std::uint8_t> cap_used(mids.size(), 0);
  std::vector<std::size_t> sigma;
  for (std::size_t k = 0; k < gs.size(); ++k) {
    bool keep = true;
    for (std::size_t c = 0; c < mids.size(); ++c)
      if (distance(gs[k].x, mids[c]) < m.lambda) {
        keep = false;
        cap_used[c] = 1;
      }
    if (keep) sigma.push_back(k);
  }
  m.excluded_caps = static_cast<std::size_t>(std::count(cap_used.begin(), cap_used.end(), 1));
  m.sigma_samples = sigma.size();

  // psi: signed distance along the ball normal to the first zero of phi_Omega.
  const double range = 4 * one + 4 * h;
  const double step = h / 2;
  auto phi_at = [&](const Vec& x) { return interpolate(nd.dom.phi, x); };
  std::vector<double> psi(sigma.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t q = 0; q < sigma.size(); ++q) {
    const auto& s = gs[sigma[q]];
    auto F = [&](double t) { return phi_at(s.x + t * s.nu); };
    const double f0 = F(0.0);
    if (f0 == 0.0) {
      psi[q] = 0.0;
      continue;
    }
    std::optional<std::pair<double, double>> bracket;
    for (double t = 0.0; t < range && !bracket; t += step) {
      for (double sgn : {1.0, -1.0}) {
        const double a = sgn * t, b = sgn * (t + step);
        if ((F(a) <= 0.0) != (F(b) <= 0.0)) {
          bracket = std::pair{a, b};
          break;
        }
      }
    }
    if (!bracket) {
      ++m.ray_missed;
      continue;
    }
    auto [a, b] = *bracket;
    double fa = F(a);
    for (int it = 0; it < 50; ++it) {
      const double c = 0.5 * (a + b);
      const double fc = F(c);
      if ((fc <= 0.0) == (fa <= 0.0)) {
        a = c;
        fa = fc;
      } else {
        b = c;
      }
    }
    psi[q] = 0.5 * (a + b);
  }

  std::vector<Vec> hit_points;
  std::vector<Vec> sig_points;
  std::vector<std::size_t> hit_of;  // sigma index of each hit
  for (std::size_t q = 0; q < sigma.size(); ++q) {
    if (std::isnan(psi[q])) continue;
    const auto& s = gs[sigma[q]];
    m.psi_sup = std::max(m.psi_sup, std::abs(psi[q]));
    hit_points.push_back(s.x + psi[q] * s.nu);
    sig_points.push_back(s.x);
    hit_of.push_back(q);
  }
  if (!sig_points.empty()) {
    const double reach = 1.6 * spacing;
    const PointLocator near(sig_points, reach);
    for (std::size_t a = 0; a < sig_points.size(); ++a) {
      near.for_each_within(sig_points[a], reach, [&](std::size_t b) {
        if (b <= a || gs[sigma[hit_of[a]]].ball != gs[sigma[hit_of[b]]].ball) return;
        const double dist = distance(sig_points[a], sig_points[b]);
        if (dist > 0) m.psi_grad_sup = std::max(m.psi_grad_sup, std::abs(psi[hit_of[a]] - psi[hit_of[b]]) / dist);
      });
    }
  }

  // Boundary area of Omega not reached by any ray.
  {
    std::vector<std::uint8_t> covered(nd.surf.size(), 0);
    for (const Vec& p : hit_points) omega.for_each_within(p, h, [&](std::size_t i) { covered[i] = 1; });
    std::vector<double> w;
    for (std::size_t i = 0; i < nd.surf.size(); ++i)
      if (!covered[i]) w.push_back(nd.surf.weights[i]);
    m.uncovered_area = ordered_sum(w) / nd.rep.perimeter;
  }

  // Lower density of the complement at boundary points.
  {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, nd.surf.size() - 1);
    double kappa = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 50; ++k) {
      const Vec x = nd.surf.points[pick(rng)];
      for (double r : {0.1, 0.2, 0.4}) {
        const double a = r / 16;
        const int m_steps = 16;
        std::size_t total = 0, out = 0;
        for (int i = -m_steps; i <= m_steps; ++i)
          for (int j = -m_steps; j <= m_steps; ++j)
            for (int l = (d == 3 ? -m_steps : 0); l <= (d == 3 ? m_steps : 0); ++l) {
              const Vec off{i * a, j * a, l * a};
              if (norm(off) > r) continue;
              ++total;
              if (phi_at(x + off) >= 0.0) ++out;
            }
        kappa = std::min(kappa, static_cast<double>(out) / total);
      }
    }
    m.density_kappa = kappa;
  }

  // Allard ratio at the landing points of a spread of Sigma_lambda samples.
  if (!hit_points.empty()) {
    const std::size_t rows = std::min<std::size_t>(32, hit_points.size());
    const std::size_t stride = hit_points.size() / rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t a = r * stride;
      const auto& s = gs[sigma[hit_of[a]]];
      double rx = 2 * std::pow(delta, beta);
      for (std::size_t l = 0; l < balls.size(); ++l)
        if (l != s.ball) rx = std::min(rx, std::abs(distance(s.x, balls[l].center) - 1.0));
      const double rho = cfg.c4 * rx;
      try {
        const double sigma_val = allard_ratio(nd.surf, omega, hit_points[a], rho);
        m.allard.push_back({s.x, rho, sigma_val});
        m.allard_max = std::max(m.allard_max, sigma_val);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyBall) throw;
      }
    }
  }

  if (cfg.keep_psi_samples)
    for (std::size_t q = 0; q < sigma.size(); ++q)
      if (!std::isnan(psi[q])) m.psi.push_back({gs[sigma[q]].x, psi[q]});
  return m;
}

Decomposition decompose(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const TorsionSolution& sol,
                        const DeficitReport& rep, const DecompositionConfig& cfg) {
  Decomposition out;
  out.normalized = normalize_domain(dom, surf, sol, rep);
  out.threshold = threshold_set(out.normalized, cfg);
  out.fits = fit_component_balls(out.threshold);
  out.filtered = filter_and_normalize(out.fits, out.normalized.rep.delta, surf.n(), cfg);
  out.filtered.system.scale = out.normalized.scale;
  out.metrics = stability_metrics(out.normalized, out.filtered.system, cfg);
  for (const auto& b : out.filtered.system.balls)
    out.balls_original_units.push_back({b.center / out.normalized.scale, b.radius / out.normalized.scale});
  return out;
}

}  // namespace cmclab
