#pragma once

// Torsion potential: Delta f = 1 in Omega, f = 0 on the boundary.

#include <cstdint>
#include <limits>
#include <vector>

#include "cmclab/grid.hpp"
#include "cmclab/measures.hpp"
#include "cmclab/shapes.hpp"

namespace cmclab {

struct SolverStats {
  int iterations = 0;
  double final_relative_residual = 0.0;
  std::size_t unknowns = 0;
  // True when phi had to be shifted to get rid of a degenerate cut cell.
  bool perturbed = false;
};

struct TorsionOptions {
  double tolerance = 1e-10;
  // Iteration cap is this factor times N^(1/d).
  double max_iteration_factor = 20.0;
};

inline constexpr std::uint32_t kNoSource = std::numeric_limits<std::uint32_t>::max();

struct TorsionSolution {
  // Zero outside the domain.
  ScalarField f;
  std::vector<std::uint8_t> interior;
  // Constant added to phi before discretising (0 unless perturbed).
  double phi_shift = 0.0;
  // |grad f| at each surface sample.
  std::vector<double> boundary_dnu;
  // For nodes with phi < 2h: the node whose Hessian stencil stands in for it
  // (itself when it is at least 2h inside with an all-interior stencil).
  std::vector<std::uint32_t> hess_source;
  SolverStats stats;

  const Grid& grid() const { return f.grid(); }
};

// Symmetric embedded-boundary discretisation (Shortley-Weller distances with
// the Dirichlet value folded into the diagonal), Jacobi-preconditioned CG.
TorsionSolution solve_torsion(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const TorsionOptions& opt = {});

// Central-difference gradient of f (extended by zero) at a node.
Vec torsion_gradient(const TorsionSolution& sol, std::size_t idx);
// Hessian of f at a node, taken from its full-stencil stand-in.
SymMat torsion_hessian(const TorsionSolution& sol, std::size_t idx);

// f at a node, continued outside the domain as phi times the mean slope
// f/phi of the interior 3^d neighbours.
double torsion_extended(const ImplicitDomain& dom, const TorsionSolution& sol, std::size_t idx);

// Integral over the domain of a per-node integrand (values requested for
// nodes of cells that meet the domain).
double torsion_integral(const ImplicitDomain& dom, const TorsionSolution& sol,
                        const std::function<double(std::size_t)>& value);

struct EtaReport {
  double hk_integral = 0.0;
  double eta = 0.0;
  double hk_slack = 0.0;
};

// Throws NonpositiveMeanCurvature naming the first sample with H <= 0.
EtaReport eta_deficit(const SurfaceSampleSet& surf, double volume);

struct LipschitzReport {
  double f_sup = 0.0;
  double grad_sup = 0.0;
  // grad_sup / sqrt(2 f_sup)
  double ratio = 0.0;
};
LipschitzReport lipschitz_check(const ImplicitDomain& dom, const TorsionSolution& sol);

// (1/(2(n+1))) (|Omega|/|B|)^(2/(n+1)).
double talenti_bound(double volume, int n);

}  // namespace cmclab
