#pragma once

// Capillarity checks for a potential energy density g: the Lagrange
// multiplier, the stationarity residual H + g - lambda, and the deficit bound
// for near-stationary sets.

#include <optional>
#include <string>

#include "cmclab/measures.hpp"
#include "cmclab/shapes.hpp"

namespace cmclab {

class Potential {
 public:
  enum class Kind { Constant, Coordinate, CoordinateSquared, Field };

  static Potential constant(double c);
  // g = x_axis (axis 0-based) or its square.
  static Potential coordinate(int axis, bool squared = false);
  static Potential field(ScalarField g);
  // "5", "-0.3", "x3", "x3^2", or a path to a field snapshot. Throws ConfigError.
  static Potential parse(const std::string& spec);

  double operator()(const Vec& x) const;
  Kind kind() const { return kind_; }
  std::string label() const;

 private:
  Kind kind_ = Kind::Constant;
  double c_ = 0.0;
  int axis_ = 2;
  ScalarField field_;
};

struct LagrangeMultiplier {
  double volume_form = 0.0;    // from the volume integral of div(x g)
  double boundary_form = 0.0;  // from sum w (x.nu) g
  double residual_rel = 0.0;
};

LagrangeMultiplier lagrange_multiplier(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const DeficitReport& rep,
                                       const Potential& g);

struct StationarityResidual {
  double residual = 0.0;  // max |H + g - lambda|
  double normalized = 0.0;
};

StationarityResidual stationarity_residual(const SurfaceSampleSet& surf, const DeficitReport& rep, const Potential& g,
                                           double lambda);

// max(sup|g|, sup|grad g|) over grid nodes in the origin-centred ball of
// radius R0, grad g by central differences.
double g_C1_norm(const Grid& grid, const Potential& g, double R0);

struct CapillarityReport {
  LagrangeMultiplier lambda;
  StationarityResidual stationarity;
  double delta = 0.0, mass = 0.0;
  double R0 = 0.0, g_c1 = 0.0;
  // m^(1/(n+1)) ||g||_C1
  double bound_rhs_shape = 0.0;
  bool applicable = false;
  std::optional<double> fitted_cstar;
  double H0 = 0.0, H0_lower = 0.0;
  bool H0_lower_ok = false;
};

CapillarityReport deficit_bound_check(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const DeficitReport& rep,
                                      const Potential& g);

}  // namespace cmclab
