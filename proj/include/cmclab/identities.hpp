#pragma once

// Both sides of the integral identities and estimates satisfied by the
// torsion potential, with residuals and fitted constants.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cmclab/measures.hpp"
#include "cmclab/torsion.hpp"

namespace cmclab {

struct IdentityEntry {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual_rel = 0.0;
  // Inequalities only. slack >= 0 when the inequality holds.
  std::optional<double> slack;
  std::optional<double> fitted_constant;
  // Set when the hypotheses fail; the numbers are then meaningless.
  bool skipped = false;
  std::string note;
};

double residual_rel(double lhs, double rhs);

struct IdentityReport {
  std::vector<IdentityEntry> entries;
  const IdentityEntry* find(const std::string& name) const;
};

// Everything the identities need, computed once per domain.
struct IdentityInputs {
  const ImplicitDomain& dom;
  const SurfaceSampleSet& surf;
  const TorsionSolution& sol;
  const DeficitReport& rep;
};

// int H |grad f|^2 over the boundary against int 1 - |Hess f|^2.
IdentityEntry reilly(const IdentityInputs& in);
// (n+3) int -f against int ((x - x_c).nu) |grad f|^2, x_c the volume centroid.
IdentityEntry pohozaev(const IdentityInputs& in);
// Throws NonpositiveMeanCurvature.
IdentityEntry ros_identity(const IdentityInputs& in);
// int |Hess f - Id/(n+1)| against |Omega| sqrt(eta).
IdentityEntry hessian_L1_estimate(const IdentityInputs& in, double eta);
// int (n/(H0(n+1)) - |grad f|)^2 against (n/H0)^2 P delta. Throws DeficitTooLarge.
IdentityEntry normal_derivative_L2_estimate(const IdentityInputs& in);
// ||A_ring||_p against (P eta)^(1/(n+1)) ||A||_{p*}. Throws DeficitTooLarge or
// NonpositiveMeanCurvature.
IdentityEntry montiel_ros(const IdentityInputs& in, double eta, double p);
// int (n/H)(1 - H/(n kappa_max))^(n+1) <= eta int n/H.
IdentityEntry montiel_ros_extracted(const IdentityInputs& in, double eta);

// Largest (tr M)^2 - (n+1)|M|^2 over the full-stencil Hessians (never positive
// beyond round-off).
double cauchy_schwarz_violation(const TorsionSolution& sol);

// Runs everything; failed hypotheses become skipped entries carrying the
// error text. p values default to {1, 2, n+1}.
IdentityReport identity_suite(const IdentityInputs& in, std::vector<double> p_values = {});

// CSV block: identity,lhs,rhs,residual_rel,slack,fitted_constant
void write_identity_csv(std::ostream& out, const IdentityReport& report);

}  // namespace cmclab
