#pragma once

// Runs a configured family through the pipeline, fits metric exponents
// against delta, and writes the CSV / SVG outputs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmclab/capillarity.hpp"
#include "cmclab/config.hpp"
#include "cmclab/decomposition.hpp"
#include "cmclab/identities.hpp"

namespace cmclab {

// Which CLI subcommand is running; each enables a subset of the pipeline.
enum class Stage { Analyze, Torsion, Decompose, Sweep, Capillarity };

struct RunOptions {
  Stage stage = Stage::Sweep;
  // Field snapshots to write per member: phi, f, f_eps.
  std::vector<std::string> dump_fields;
  bool dump_surface = false;
  // Where dumps go; nothing is dumped when empty.
  std::filesystem::path dump_dir;
};

struct DecompositionSummary {
  std::vector<Ball> balls;           // normalised units
  std::vector<Ball> balls_original;  // input units
  StabilityMetrics metrics;
  double eps = 0, rho = 0, C0 = 0, scale = 1;
  bool clamped = false, eta_surrogate = false;
  std::size_t components = 0, discarded = 0;
  double discarded_volume = 0;
};

struct MemberResult {
  std::size_t index = 0;
  double param = 0.0;
  double h = 0.0;
  std::optional<DeficitReport> rep;
  std::optional<double> eta;
  std::optional<SolverStats> torsion;
  std::optional<LipschitzReport> lipschitz;
  double talenti = 0.0;
  std::optional<IdentityReport> identities;
  std::optional<DecompositionSummary> decomposition;
  std::optional<CapillarityReport> capillarity;
  // First failure; stages after it did not run.
  std::string error;

  bool ok() const { return error.empty(); }
  bool clamped() const { return decomposition && decomposition->clamped; }
};

// Metrics with a theoretical exponent in delta.
struct MetricExponent {
  std::string metric;
  double exponent;
};
std::vector<MetricExponent> theory_exponents(int n, double alpha);

struct ExponentFit {
  std::string metric;
  double theory = 0.0;
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  // max over rows of metric / delta^theory; ratio_spread is that ratio at the
  // smallest delta over its family minimum (>= 10 means it grows as delta -> 0).
  double max_ratio = 0.0, ratio_spread = 0.0;
  std::size_t points = 0;
  // consistent | below_exponent | ratio_unbounded
  std::string flag;
};

// Least squares of log(value) on log(delta). Throws InsufficientPoints below
// three usable (positive) points.
ExponentFit fit_exponent(const std::string& metric, double theory, const std::vector<double>& delta,
                         const std::vector<double>& value);

struct SweepResult {
  std::vector<MemberResult> rows;  // ordered by family index
  std::vector<ExponentFit> fits;
  // Metrics whose fit was skipped, with the reason.
  std::vector<std::pair<std::string, std::string>> skipped_fits;
};

MemberResult run_member(const ExperimentConfig& cfg, std::size_t index, double value, const RunOptions& opt = {});
SweepResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

// Metric value of a row by its sweep.csv column name (NaN when absent).
double metric_value(const MemberResult& row, const std::string& metric);

// Writes every output of the stage into dir; returns the files written.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                                 const SweepResult& result, Stage stage);

void write_sweep_csv(std::ostream& out, const ExperimentConfig& cfg, const SweepResult& result);
void write_fits_csv(std::ostream& out, const SweepResult& result);
// Log-log scatter of metric against delta with the fitted line.
void write_svg(std::ostream& out, const std::string& metric, const std::vector<double>& delta,
               const std::vector<double>& value, const std::optional<ExponentFit>& fit);

}  // namespace cmclab
