#pragma once

// Experiment configuration: an INI file with [section] key = value lines.
//
//   [experiment] name, seed, out, jobs, fit_clamped
//   [shape]      kind = ball | ellipsoid | perturbed | neck | external
//                radius, center (3 numbers), axes (3 numbers), t,
//                degree, amplitude, modes_seed, count, width, gap_factor,
//                profile = catenoid | smooth_min, path,
//                vary = <one numeric key above>, values = <numbers>
//   [grid]       dim, h, margin (in cells)
//   [pipeline]   torsion, identities, decompose, capillarity, montiel_ros
//   [decomposition] alpha, beta, c0 (number or "empirical"), eps_min_factor,
//                eps_max, eps, rho, lambda, c1, c4, keep_psi
//   [capillarity] g
//
// Unknown sections or keys are errors.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "cmclab/decomposition.hpp"
#include "cmclab/shapes.hpp"

namespace cmclab {

enum class ShapeKind { Ball, Ellipsoid, Perturbed, Neck, External };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::Ball;
  double radius = 1.0;
  Vec center{};
  Vec axes{1.0, 1.0, 1.0};
  // Added to the last semiaxis.
  double t = 0.0;
  int degree = 2;
  double amplitude = 0.0;
  // 0 keeps a single zonal mode; see PerturbationSpec.
  std::uint64_t modes_seed = 0;
  int count = 2;
  double width = 0.2;
  double gap_factor = 1.0;
  NeckProfile profile = NeckProfile::CatenoidLike;
  std::filesystem::path path;
  // Swept key and its values; empty for a single run.
  std::string vary;
  std::vector<double> values;
};

struct GridSpec {
  int dim = 3;
  double h = 1.0 / 32;
  double margin_cells = 6.0;
};

struct PipelineToggles {
  bool torsion = true;
  bool identities = true;
  bool decompose = true;
  bool capillarity = false;
  bool montiel_ros = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  int jobs = 1;
  // Exponent fits skip clamped rows unless this is set.
  bool fit_clamped = false;
  ShapeSpec shape;
  GridSpec grid;
  PipelineToggles pipeline;
  DecompositionConfig decomposition;
  std::string potential = "0";

  // section.key=value lines for every setting that affects results (not
  // out or jobs), in a fixed order.
  std::string canonical() const;
  // 16 hex digits (FNV-1a over the canonical text).
  std::string hash() const;
  // Family parameter values, or the single current value of `vary`.
  std::vector<double> members() const;
};

// Throws ConfigError. Relative paths resolve against base.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Value of the swept key for a single run.
double current_value(const ShapeSpec& s);
ShapeSpec with_value(ShapeSpec s, double value);

// Builds the member domain on a grid that covers the shape plus the margin.
ImplicitDomain build_member(const ExperimentConfig& cfg, double value);

}  // namespace cmclab
