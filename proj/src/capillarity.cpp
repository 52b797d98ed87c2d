#include "cmclab/capillarity.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "cmclab/errors.hpp"
#include "cmclab/identities.hpp"

namespace cmclab {

Potential Potential::constant(double c) {
  Potential p;
  p.kind_ = Kind::Constant;
  p.c_ = c;
  return p;
}

Potential Potential::coordinate(int axis, bool squared) {
  if (axis < 0 || axis > 2) throw Error(ErrorCode::InvalidArgument, "coordinate axis must be 0, 1 or 2");
  Potential p;
  p.kind_ = squared ? Kind::CoordinateSquared : Kind::Coordinate;
  p.axis_ = axis;
  return p;
}

Potential Potential::field(ScalarField g) {
  g.validate();
  Potential p;
  p.kind_ = Kind::Field;
  p.field_ = std::move(g);
  return p;
}

Potential Potential::parse(const std::string& spec) {
  const auto first = spec.find_first_not_of(" \t\"");
  if (first == std::string::npos) throw Error(ErrorCode::ConfigError, "empty potential spec");
  const std::string s = spec.substr(first, spec.find_last_not_of(" \t\"") - first + 1);
  double c = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), c);
  if (ec == std::errc() && end == s.data() + s.size()) return constant(c);
  if (s.size() >= 2 && s[0] == 'x' && s[1] >= '1' && s[1] <= '3') {
    const int axis = s[1] - '1';
    if (s.size() == 2) return coordinate(axis);
    if (s.substr(2) == "^2") return coordinate(axis, true);
  }
  if (s.ends_with(".csv")) {
    try {
      return field(read_field_csv(s));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "potential field '" + s + "': " + e.what());
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown potential '" + s + "' (expected a number, x1..x3, x1^2..x3^2 or a .csv field)");
}

double Potential::operator()(const Vec& x) const {
  switch (kind_) {
    case Kind::Constant: return c_;
    case Kind::Coordinate: return x[axis_];
    case Kind::CoordinateSquared: return x[axis_] * x[axis_];
    case Kind::Field: return interpolate(field_, x);
  }
  return 0.0;
}

std::string Potential::label() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Constant: os << c_; break;
    case Kind::Coordinate: os << 'x' << axis_ + 1; break;
    case Kind::CoordinateSquared: os << 'x' << axis_ + 1 << "^2"; break;
    case Kind::Field: os << "field"; break;
  }
  return os.str();
}

LagrangeMultiplier lagrange_multiplier(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const DeficitReport& rep,
                                       const Potential& g) {
  const Grid& grid = dom.grid();
  const int d = grid.dim();
  const int n = d - 1;
  std::vector<double> gv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) gv[i] = g(grid.position(i));

  // div(x g) = sum_a d/dx_a (x_a g), each product differentiated on the grid.
  std::vector<double> div(grid.size(), 0.0);
  for (int a = 0; a < d; ++a) {
    std::vector<double> prod(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) prod[i] = grid.position(i)[a] * gv[i];
    const auto grad = gradient(ScalarField(grid, std::move(prod)));
    for (std::size_t i = 0; i < grid.size(); ++i) div[i] += grad.values[i][a];
  }
  const double vol = rep.volume;
  LagrangeMultiplier out;
  out.volume_form = (n * rep.perimeter + integrate_interior(dom.phi, div)) / ((n + 1) * vol);

  std::vector<double> flux(surf.size());
  for (std::size_t i = 0; i < surf.size(); ++i) flux[i] = surf.weights[i] * dot(surf.points[i], surf.normals[i]) * g(surf.points[i]);
  out.boundary_form = (n * rep.perimeter + ordered_sum(flux)) / ((n + 1) * vol);
  out.residual_rel = residual_rel(out.volume_form, out.boundary_form);
  return out;
}

StationarityResidual stationarity_residual(const SurfaceSampleSet& surf, const DeficitReport& rep, const Potential& g,
                                           double lambda) {
  StationarityResidual out;
  for (std::size_t i = 0; i < surf.size(); ++i)
    out.residual = std::max(out.residual, std::abs(surf.H[i] + g(surf.points[i]) - lambda));
  out.normalized = out.residual / rep.H0;
  return out;
}

double g_C1_norm(const Grid& grid, const Potential& g, double R0) {
  std::vector<double> gv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) gv[i] = g(grid.position(i));
  const auto grad = gradient(ScalarField(grid, gv));
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (norm(grid.position(i)) > R0) continue;
    best = std::max({best, std::abs(gv[i]), norm(grad.values[i])});
  }
  return best;
}

CapillarityReport deficit_bound_check(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const DeficitReport& rep,
                                      const Potential& g) {
  const int n = surf.n();
  CapillarityReport r;
  r.lambda = lagrange_multiplier(dom, surf, rep, g);
  r.stationarity = stationarity_residual(surf, rep, g, r.lambda.volume_form);
  r.delta = rep.delta;
  r.mass = rep.volume;
  for (const Vec& x : surf.points) r.R0 = std::max(r.R0, norm(x));
  r.g_c1 = g_C1_norm(dom.grid(), g, r.R0);
  r.bound_rhs_shape = std::pow(r.mass, 1.0 / (n + 1)) * r.g_c1;
  r.applicable = r.stationarity.normalized <= 0.05;
  if (r.applicable && r.bound_rhs_shape > 0.0) r.fitted_cstar = r.delta / r.bound_rhs_shape;
  r.H0 = rep.H0;
  r.H0_lower = n * std::pow(unit_ball_volume(n + 1) / r.mass, 1.0 / (n + 1));
  // Discretisation slack of the isoperimetric step.
  r.H0_lower_ok = r.H0 >= r.H0_lower * (1.0 - 3.0 * surf.h / std::max(rep.r_in, surf.h));
  return r;
}

}  // namespace cmclab
