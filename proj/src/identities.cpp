#include "cmclab/identities.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "cmclab/errors.hpp"

namespace cmclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

IdentityEntry make(std::string name, double lhs, double rhs) {
  IdentityEntry e;
  e.name = std::move(name);
  e.lhs = lhs;
  e.rhs = rhs;
  e.residual_rel = residual_rel(lhs, rhs);
  return e;
}

template <class F>
double surface_sum(const SurfaceSampleSet& s, F&& term) {
  std::vector<double> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) v[i] = s.weights[i] * term(i);
  return ordered_sum(v);
}

void require_positive_H(const SurfaceSampleSet& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!(s.H[i] > 0.0))
      throw Error(ErrorCode::NonpositiveMeanCurvature, "H = " + std::to_string(s.H[i]) + " at sample " + std::to_string(i));
}

void require_small_delta(const DeficitReport& r) {
  if (r.delta > 0.5) throw Error(ErrorCode::DeficitTooLarge, "delta = " + std::to_string(r.delta) + " > 1/2");
}

double hessian_sq_integral(const IdentityInputs& in) {
  return torsion_integral(in.dom, in.sol, [&](std::size_t i) { return torsion_hessian(in.sol, i).frob2(); });
}

}  // namespace

double residual_rel(double lhs, double rhs) { return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-30); }

const IdentityEntry* IdentityReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

IdentityEntry reilly(const IdentityInputs& in) {
  const auto& dnu = in.sol.boundary_dnu;
  const double lhs = surface_sum(in.surf, [&](std::size_t i) { return in.surf.H[i] * dnu[i] * dnu[i]; });
  const double rhs = in.rep.volume - hessian_sq_integral(in);
  return make("reilly", lhs, rhs);
}

IdentityEntry pohozaev(const IdentityInputs& in) {
  const int n = in.surf.n();
  const auto& dnu = in.sol.boundary_dnu;
  const Vec c = in.rep.centroid;
  const double mass = torsion_integral(in.dom, in.sol, [&](std::size_t i) { return -torsion_extended(in.dom, in.sol, i); });
  const double rhs = surface_sum(in.surf, [&](std::size_t i) {
    return dot(in.surf.points[i] - c, in.surf.normals[i]) * dnu[i] * dnu[i];
  });
  return make("pohozaev", (n + 3) * mass, rhs);
}

IdentityEntry ros_identity(const IdentityInputs& in) {
  require_positive_H(in.surf);
  const int n = in.surf.n();
  const auto& dnu = in.sol.boundary_dnu;
  const double vol = in.rep.volume;
  const auto eta = eta_deficit(in.surf, vol);
  const double inv_h = surface_sum(in.surf, [&](std::size_t i) { return 1.0 / in.surf.H[i]; });
  const double hdnu2 = surface_sum(in.surf, [&](std::size_t i) { return in.surf.H[i] * dnu[i] * dnu[i]; });
  const double flux = surface_sum(in.surf, [&](std::size_t i) { return dnu[i]; });
  const double traceless = hessian_sq_integral(in) - vol / (n + 1);
  const double lhs = vol / (n + 1) * eta.hk_slack;
  const double rhs = inv_h * traceless + inv_h * hdnu2 - flux * flux;
  return make("ros", lhs, rhs);
}

IdentityEntry hessian_L1_estimate(const IdentityInputs& in, double eta) {
  const int n = in.surf.n();
  const int d = n + 1;
  const SymMat id = identity_matrix(d);
  const double integral = torsion_integral(in.dom, in.sol, [&](std::size_t i) {
    return std::sqrt((torsion_hessian(in.sol, i) + (-1.0 / (n + 1)) * id).frob2());
  });
  const double e = std::max(eta, 0.0);
  IdentityEntry out = make("hessian_L1", integral, in.rep.volume * std::sqrt(e));
  if (e > 1e-8) {
    out.fitted_constant = integral / (in.rep.volume * std::sqrt(e));
  } else {
    out.note = "equality case (eta ~ 0)";
  }
  return out;
}

IdentityEntry normal_derivative_L2_estimate(const IdentityInputs& in) {
  require_small_delta(in.rep);
  const int n = in.surf.n();
  const double H0 = in.rep.H0;
  const double target = n / (H0 * (n + 1));
  const auto& dnu = in.sol.boundary_dnu;
  const double integral = surface_sum(in.surf, [&](std::size_t i) { return (target - dnu[i]) * (target - dnu[i]); });
  const double scale = std::pow(n / H0, 2) * in.rep.perimeter * in.rep.delta;
  IdentityEntry out = make("normal_derivative_L2", integral, scale);
  if (in.rep.delta > 1e-8) {
    out.fitted_constant = integral / scale;
  } else {
    out.note = "equality case (delta ~ 0)";
  }
  return out;
}

IdentityEntry montiel_ros(const IdentityInputs& in, double eta, double p) {
  require_small_delta(in.rep);
  require_positive_H(in.surf);
  const int n = in.surf.n();
  if (!(p >= 1.0 && p <= n + 1)) throw Error(ErrorCode::InvalidArgument, "p must lie in [1, n+1]");
  const auto& s = in.surf;
  auto a_norm = [&](std::size_t i) {
    return n == 2 ? std::hypot(s.kappa[i][0], s.kappa[i][1]) : std::abs(s.kappa[i][0]);
  };
  const double aring_p = std::pow(surface_sum(s, [&](std::size_t i) { return std::pow(s.aring[i], p); }), 1.0 / p);
  double a_star = 0.0;
  if (p >= n + 1) {
    for (std::size_t i = 0; i < s.size(); ++i) a_star = std::max(a_star, a_norm(i));
  } else {
    const double ps = (n + 1) * p / (n + 1 - p);
    a_star = std::pow(surface_sum(s, [&](std::size_t i) { return std::pow(a_norm(i), ps); }), 1.0 / ps);
  }
  const double e = std::max(eta, 0.0);
  const double scale = std::pow(in.rep.perimeter * e, 1.0 / (n + 1)) * a_star;
  std::ostringstream name;
  name << "montiel_ros_p" << p;
  IdentityEntry out = make(name.str(), aring_p, scale);
  if (scale > 1e-12) {
    out.fitted_constant = aring_p / scale;
  } else {
    out.note = "equality case (eta ~ 0)";
  }
  return out;
}

IdentityEntry montiel_ros_extracted(const IdentityInputs& in, double eta) {
  require_small_delta(in.rep);
  require_positive_H(in.surf);
  const int n = in.surf.n();
  const auto& s = in.surf;
  const double lhs = surface_sum(s, [&](std::size_t i) {
    return n / s.H[i] * std::pow(1.0 - s.H[i] / (n * s.kappa_max(i)), n + 1);
  });
  const double hk = surface_sum(s, [&](std::size_t i) { return n / s.H[i]; });
  IdentityEntry out = make("montiel_ros_extracted", lhs, eta * hk);
  // Relative to the right side; absolute when it vanishes.
  const double denom = std::abs(eta * hk) > 1e-12 ? std::abs(eta * hk) : 1.0;
  out.slack = (eta * hk - lhs) / denom;
  return out;
}

double cauchy_schwarz_violation(const TorsionSolution& sol) {
  const int d = sol.grid().dim();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sol.hess_source.size(); ++i) {
    if (sol.hess_source[i] != i) continue;
    const SymMat m = torsion_hessian(sol, i);
    const double tr = m.trace();
    worst = std::max(worst, tr * tr - d * m.frob2());
  }
  return worst;
}

IdentityReport identity_suite(const IdentityInputs& in, std::vector<double> p_values) {
  const int n = in.surf.n();
  if (p_values.empty()) p_values = {1.0, 2.0, static_cast<double>(n + 1)};
  IdentityReport report;
  auto attempt = [&](const std::string& name, auto&& fn) {
    try {
      report.entries.push_back(fn());
    } catch (const Error& e) {
      IdentityEntry skip;
      skip.name = name;
      skip.lhs = skip.rhs = skip.residual_rel = kNaN;
      skip.skipped = true;
      skip.note = e.what();
      report.entries.push_back(std::move(skip));
    }
  };
  attempt("reilly", [&] { return reilly(in); });
  attempt("pohozaev", [&] { return pohozaev(in); });
  attempt("ros", [&] { return ros_identity(in); });

  std::optional<double> eta;
  std::string eta_error;
  try {
    eta = eta_deficit(in.surf, in.rep.volume).eta;
  } catch (const Error& e) {
    eta_error = e.what();
  }
  auto with_eta = [&](const std::string& name, auto&& fn) {
    attempt(name, [&] {
      if (!eta) throw Error(ErrorCode::NonpositiveMeanCurvature, eta_error);
      return fn(*eta);
    });
  };
  with_eta("hessian_L1", [&](double e) { return hessian_L1_estimate(in, e); });
  attempt("normal_derivative_L2", [&] { return normal_derivative_L2_estimate(in); });
  for (double p : p_values) {
    std::ostringstream name;
    name << "montiel_ros_p" << p;
    with_eta(name.str(), [&](double e) { return montiel_ros(in, e, p); });
  }
  with_eta("montiel_ros_extracted", [&](double e) { return montiel_ros_extracted(in, e); });

  IdentityEntry cs = make("cauchy_schwarz", cauchy_schwarz_violation(in.sol), 0.0);
  cs.slack = -cs.lhs;
  report.entries.push_back(std::move(cs));
  return report;
}

void write_identity_csv(std::ostream& out, const IdentityReport& report) {
  out << "identity,lhs,rhs,residual_rel,slack,fitted_constant\n";
  auto opt = [](const std::optional<double>& v) {
    std::ostringstream os;
    if (v) os << std::setprecision(10) << *v;
    return os.str();
  };
  for (const auto& e : report.entries) {
    out << e.name << ',' << std::setprecision(10) << e.lhs << ',' << e.rhs << ',' << e.residual_rel << ','
        << opt(e.slack) << ',' << opt(e.fitted_constant) << '\n';
  }
}

}  // namespace cmclab
