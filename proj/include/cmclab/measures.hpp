#pragma once

// Surface quadrature, volume integrals and the curvature deficits of a domain.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cmclab/grid.hpp"
#include "cmclab/shapes.hpp"

namespace cmclab {

struct SurfaceSampleSet {
  int dim = 3;
  double h = 0.0;
  std::vector<Vec> points;
  std::vector<Vec> normals;
  std::vector<double> weights;
  std::vector<double> H;
  // Ascending principal curvatures; only kappa[i][0] is used when dim == 2.
  std::vector<std::array<double, 2>> kappa;
  std::vector<double> aring;

  std::size_t size() const { return points.size(); }
  int n() const { return dim - 1; }
  double area() const { return ordered_sum(weights); }
  // Largest principal curvature.
  double kappa_max(std::size_t i) const { return dim == 3 ? kappa[i][1] : kappa[i][0]; }
};

// Marching tetrahedra (Kuhn split of every cell; triangle split in 2-D). One
// sample per facet at the centroid, pulled onto {phi = 0} by two Newton steps.
SurfaceSampleSet extract_surface(const ImplicitDomain& dom);

// Uniform bucket grid over a point set for radius and nearest queries.
class PointLocator {
 public:
  PointLocator() = default;
  PointLocator(std::span<const Vec> points, double cell);
  template <class F>
  void for_each_within(const Vec& x, double r, F&& fn) const {
    std::array<int, 3> lo{}, hi{};
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((x[a] - r - origin_[a]) / cell_)));
      hi[a] = std::min(dims_[a] - 1, static_cast<int>(std::floor((x[a] + r - origin_[a]) / cell_)));
    }
    const double r2 = r * r;
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const std::size_t b = bucket(i, j, k);
          for (std::uint32_t s = start_[b]; s < start_[b + 1]; ++s) {
            const std::uint32_t p = order_[s];
            if (norm2(points_[p] - x) <= r2) fn(static_cast<std::size_t>(p));
          }
        }
  }
  // Index and distance of the nearest point.
  std::pair<std::size_t, double> nearest(const Vec& x) const;
  std::size_t size() const { return points_.size(); }

 private:
  std::size_t bucket(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
  }
  std::vector<Vec> points_;
  Vec origin_{};
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> start_, order_;
};

// Exact volume of {phi < 0} for the piecewise-linear interpolant of phi on the
// Kuhn triangulation.
double volume(const ImplicitDomain& dom);
double perimeter(const SurfaceSampleSet& surf);

// Integral over {phi < 0} of the piecewise-linear interpolant of `values`.
// Nodes of cut cells outside the domain must carry extrapolated values.
double integrate_interior(const ScalarField& phi, std::span<const double> values);

// Same, with an integrand evaluated per node on demand (only nodes of cells
// that meet the domain are requested).
double integrate_interior(const ScalarField& phi, const std::function<double(std::size_t)>& value);

struct DeficitReport {
  double volume = 0, perimeter = 0, H0 = 0;
  double delta = 0, delta_error = 0;
  double Q = 0;
  double eta = 0;  // filled by the torsion module
  double diam = 0, r_in = 0, r_out = 0;
  Vec out_center{};
  double topping_rhs = 0;
  double min_perimeter_density = 0;
  double H_min = 0, H_max = 0;
  // (1/(n+1)) sum w (x - c).nu, which should match the volume.
  double divergence_volume = 0;
  Vec centroid{};
};

DeficitReport deficits(const ImplicitDomain& dom, const SurfaceSampleSet& surf, std::uint64_t seed = 1);

// Volume centroid of {phi < 0}.
Vec volume_centroid(const ImplicitDomain& dom);

double sample_diameter(std::span<const Vec> points);
// Minimal enclosing ball (randomised incremental, fixed seed).
std::pair<Vec, double> min_enclosing_ball(std::span<const Vec> points, int dim, std::uint64_t seed = 1);
double inradius(const ImplicitDomain& dom);

// r ||H||_inf(B) + max(area(B)/(omega_n r^n) - 1, 0) over samples in B_{x,r}.
double allard_ratio(const SurfaceSampleSet& surf, const PointLocator& loc, const Vec& x, double r);
double allard_ratio(const SurfaceSampleSet& surf, const Vec& x, double r);

// Surface area inside B_{x,r} divided by r^n.
double perimeter_density(const SurfaceSampleSet& surf, const PointLocator& loc, const Vec& x, double r);

// Dump as CSV x,y,z,nx,ny,nz,w,H,k1,k2,Aring.
void write_surface_csv(const std::filesystem::path& path, const SurfaceSampleSet& surf);

}  // namespace cmclab
