#pragma once

// Ball decomposition of an almost-CMC domain: threshold the mollified torsion
// potential, fit one ball per component, normalise to unit balls, and measure
// how far the domain is from the resulting compound.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmclab/measures.hpp"
#include "cmclab/shapes.hpp"
#include "cmclab/torsion.hpp"

namespace cmclab {

enum class C0Mode { Empirical, Fixed };

struct DecompositionConfig {
  // Defaults follow n: alpha = 1/(2(n+2)), beta = alpha/(2(n+1)).
  std::optional<double> alpha, beta;
  C0Mode c0_mode = C0Mode::Empirical;
  double c0_value = 1.0;
  // epsilon is clamped to [eps_min_factor h, eps_max]; eps_max defaults to
  // min(diam/4, ||f||/(12 C0)) so that A stays nonempty.
  double eps_min_factor = 2.0;
  std::optional<double> eps_max;
  std::optional<double> eps_override, rho_override;
  double lambda_coeff = 1.0;  // c3
  double c1 = 2.0;            // upper cut 1 + c1 delta^alpha
  // rho_x = c4 r_x for the Allard diagnostic.
  double c4 = 0.5;
  std::uint64_t seed = 1;
  bool keep_psi_samples = false;
};

struct Ball {
  Vec center{};
  double radius = 1.0;
};

struct ComponentFit {
  Vec x{};
  double r1 = 0.0, r2 = 0.0;
  std::size_t nodes = 0;
  double volume = 0.0;
};

struct ThresholdResult {
  Mask A;
  ScalarField f_eps;
  double eps = 0.0, rho = 0.0, C0 = 0.0;
  double eta_used = 0.0;
  bool clamped = false;
  // eta was not defined (H <= 0 somewhere) and delta stood in for it.
  bool eta_surrogate = false;
};

struct BallSystem {
  std::vector<Ball> balls;
  bool normalized = false;
  // Lengths of the input were multiplied by this before fitting.
  double scale = 1.0;
};

struct PsiSample {
  Vec x{};  // point on the ball surface
  double psi = 0.0;
};

struct AllardRow {
  Vec y{};
  double rho = 0.0, sigma = 0.0;
};

struct StabilityMetrics {
  double sym_diff_rel = 0, perim_quant = 0, onesided = 0, hausdorff = 0;
  std::vector<double> tangency_gaps;
  double tangency = 0;
  double psi_sup = 0, psi_grad_sup = 0, uncovered_area = 0;
  double density_kappa = 0;
  double lambda = 0;
  std::size_t sigma_samples = 0, ray_missed = 0, excluded_caps = 0;
  std::vector<PsiSample> psi;
  std::vector<AllardRow> allard;
  double allard_max = 0;
};

// Everything measured on the domain rescaled to H0 = n.
struct NormalizedDomain {
  ImplicitDomain dom;
  SurfaceSampleSet surf;
  TorsionSolution sol;
  DeficitReport rep;
  double scale = 1.0;
  // |P - (n+1)|Omega|| / P after rescaling.
  double balance = 0.0;
};

// Rescales by H0/n through the grid spacing (no resampling).
NormalizedDomain normalize_domain(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const TorsionSolution& sol,
                                  const DeficitReport& rep);

// Throws EmptyThresholdSet.
ThresholdResult threshold_set(const NormalizedDomain& nd, const DecompositionConfig& cfg);

std::vector<ComponentFit> fit_component_balls(const ThresholdResult& th);

struct FilterResult {
  BallSystem system;
  std::vector<std::size_t> kept;  // indices into the fits
  double discarded_volume = 0.0;
  std::size_t discarded = 0;
};

// Keeps r1 in [1/2, 1 + c1 delta^alpha], then pushes balls apart to unit
// radius, smallest deficit first. Throws NoBallsSurvive.
FilterResult filter_and_normalize(const std::vector<ComponentFit>& fits, double delta, int n,
                                  const DecompositionConfig& cfg);

// Moves every other centre away from the ball being grown; exposed for tests.
std::vector<Ball> push_apart(std::vector<Ball> balls);

StabilityMetrics stability_metrics(const NormalizedDomain& nd, const BallSystem& g, const DecompositionConfig& cfg);

struct Decomposition {
  NormalizedDomain normalized;
  ThresholdResult threshold;
  std::vector<ComponentFit> fits;
  FilterResult filtered;
  StabilityMetrics metrics;
  // Ball system mapped back to the input's units.
  std::vector<Ball> balls_original_units;
};

Decomposition decompose(const ImplicitDomain& dom, const SurfaceSampleSet& surf, const TorsionSolution& sol,
                        const DeficitReport& rep, const DecompositionConfig& cfg = {});

}  // namespace cmclab
