#pragma once

// Signed-distance generators for the test geometries. Every generator returns
// a validated ImplicitDomain: {phi < 0} nonempty and at least 4h away from
// the box faces.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cmclab/grid.hpp"

namespace cmclab {

enum class Provenance { Ball, Ellipsoid, PerturbedSphere, NeckCompound, Csg, External };
std::string_view to_string(Provenance p);

struct ImplicitDomain {
  ScalarField phi;
  bool exact_sdf = false;
  Provenance provenance = Provenance::External;
  // Random seed used by the generator (0 when none was used).
  std::uint64_t seed = 0;

  const Grid& grid() const { return phi.grid(); }
  int dim() const { return phi.grid().dim(); }
};

// Throws OutOfBox / EmptySurface / InvalidArgument when the invariants fail.
void validate_domain(const ImplicitDomain& dom);

// Grid with spacing h covering [lo - margin, hi + margin].
Grid grid_around(int dim, const Vec& lo, const Vec& hi, double h, double margin);

ImplicitDomain make_ball(const Vec& center, double radius, const Grid& grid);

// Disjoint balls; the min of their distance functions is exact.
ImplicitDomain make_ball_union(const std::vector<Vec>& centers, const std::vector<double>& radii, const Grid& grid);

// Axis-aligned ellipsoid. Only the first dim semiaxes are used.
ImplicitDomain make_ellipsoid(const Vec& semiaxes, const Grid& grid, const Vec& center = {0.0, 0.0, 0.0});

// Exact distance from p to the axis-aligned ellipsoid with the given semiaxes
// centred at the origin, signed negative inside. Also returns the foot point.
double ellipsoid_distance(int dim, const Vec& semiaxes, const Vec& p, Vec* foot = nullptr);

struct PerturbationSpec {
  int degree = 2;
  double amplitude = 0.0;
  // 0: one zonal mode about the last axis. Otherwise three zonal modes about
  // random axes with random weights drawn from this seed.
  std::uint64_t seed = 0;
};

// Star-shaped surface r = R (1 + a Y(direction)) with Y a zonal harmonic
// (Legendre P_l in 3-D, cos(l theta) in 2-D).
ImplicitDomain make_perturbed_sphere(double radius, const PerturbationSpec& spec, const Grid& grid,
                                     const Vec& center = {0.0, 0.0, 0.0});

// Evaluates the harmonic and its tangential gradient on the unit sphere.
class ZonalHarmonic {
 public:
  ZonalHarmonic(int dim, const PerturbationSpec& spec);
  double value(const Vec& omega) const;
  // Tangential gradient at the unit vector omega.
  Vec surface_gradient(const Vec& omega) const;

 private:
  int dim_;
  int degree_;
  std::vector<Vec> axes_;
  std::vector<double> weights_;
};

enum class NeckProfile { CatenoidLike, SmoothMin };

struct NeckCompoundSpec {
  std::vector<Vec> centers;
  std::vector<double> radii;
  std::vector<std::pair<int, int>> neck_pairs;
  // Waist radius per pair (a single entry applies to every pair).
  std::vector<double> neck_width;
  NeckProfile profile = NeckProfile::CatenoidLike;
};

ImplicitDomain make_neck_compound(const NeckCompoundSpec& spec, const Grid& grid);

// Centers on the first axis for k equal balls joined in a chain, with
// neighbouring sphere tips a gap of gap_factor * w apart.
NeckCompoundSpec neck_chain(int count, double radius, double w, double gap_factor = 1.0,
                            NeckProfile profile = NeckProfile::CatenoidLike);

// Rotation given row-major; resamples phi at the pre-image of every node.
using Mat3 = std::array<std::array<double, 3>, 3>;
ImplicitDomain rigid_move(const ImplicitDomain& dom, const Mat3& rotation, const Vec& translation);

// Load a field snapshot; the field is re-distanced.
ImplicitDomain load_external(const std::filesystem::path& path);

}  // namespace cmclab
