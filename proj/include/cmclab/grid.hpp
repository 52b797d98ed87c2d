#pragma once

// Uniform-grid scalar fields and the finite-difference kernel used by every
// other module: gradients, Hessians, mollification, component labelling,
// interpolation and the field snapshot format.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cmclab/vec.hpp"

namespace cmclab {

using Index3 = std::array<int, 3>;

// Isotropic Cartesian lattice. In 2-D the third extent is 1 and origin[2] = 0.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, Vec origin, Index3 extents, double h);

  // Smallest grid with spacing h whose box contains [lo, hi].
  static Grid covering(int dim, const Vec& lo, const Vec& hi, double h);

  int dim() const { return dim_; }
  const Vec& origin() const { return origin_; }
  const Index3& extents() const { return extents_; }
  double h() const { return h_; }
  std::size_t size() const {
    return static_cast<std::size_t>(extents_[0]) * static_cast<std::size_t>(extents_[1]) *
           static_cast<std::size_t>(extents_[2]);
  }
  double cell_volume() const;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(extents_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(extents_[1]) * static_cast<std::size_t>(k));
  }
  std::size_t index(const Index3& c) const { return index(c[0], c[1], c[2]); }
  Index3 coords(std::size_t idx) const;
  Vec position(int i, int j, int k) const {
    return {origin_[0] + i * h_, origin_[1] + j * h_, dim_ == 3 ? origin_[2] + k * h_ : 0.0};
  }
  Vec position(const Index3& c) const { return position(c[0], c[1], c[2]); }
  Vec position(std::size_t idx) const { return position(coords(idx)); }
  Vec upper() const;
  bool in_range(const Index3& c) const;
  // Point lies in the closed physical box.
  bool contains(const Vec& p) const;
  // Distance from p (assumed inside the box) to the nearest box face.
  double distance_to_faces(const Vec& p) const;
  // Offset of node idx along axis by step (+1/-1); caller checks range.
  std::size_t stride(int axis) const;

  // Same lattice with every length multiplied by s (origin and spacing).
  Grid scaled(double s) const;

  bool operator==(const Grid& o) const = default;

 private:
  int dim_ = 3;
  Vec origin_{};
  Index3 extents_{1, 1, 1};
  double h_ = 1.0;
};

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(Grid grid, double fill = 0.0);
  ScalarField(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }
  std::size_t size() const { return values_.size(); }

  // Throws InvalidArgument on NaN/Inf or a size mismatch.
  void validate() const;
  double max_abs() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

struct Mask {
  Grid grid;
  std::vector<std::uint8_t> values;

  bool operator[](std::size_t i) const { return values[i] != 0; }
  std::size_t count() const;
};

struct VectorField {
  Grid grid;
  std::vector<Vec> values;
};

struct MatrixField {
  Grid grid;
  std::vector<SymMat> values;
};

enum class MollifierKernel { CompactPolynomial, GaussianTruncated };

struct MollifierSpec {
  double radius = 0.0;
  MollifierKernel kernel = MollifierKernel::CompactPolynomial;
};

// Central differences inside, second-order one-sided differences on box faces.
VectorField gradient(const ScalarField& field);
// Central gradient at one node; every neighbour must exist.
Vec gradient_at(const ScalarField& field, const Index3& c);

// Second-order central stencils, mixed terms from the four-point cross.
// Nodes on (or one node from) a box face reuse the stencil of the nearest
// node whose stencil fits.
MatrixField hessian(const ScalarField& field);
SymMat hessian_at(const ScalarField& field, const Index3& c);

// Discrete convolution with a normalised radial kernel; values outside the box
// are zero. When `where` is non-empty only nodes with where[i] != 0 are
// evaluated and all other outputs are 0.
ScalarField mollify(const ScalarField& field, const MollifierSpec& spec,
                    std::span<const std::uint8_t> where = {});

struct KernelOffset {
  Index3 offset;
  double weight;
};
// Normalised stencil weights (sum to 1) of the mollifier on a grid with spacing h.
std::vector<KernelOffset> mollifier_stencil(int dim, double h, const MollifierSpec& spec);

// Face-adjacency components, ordered by their smallest node index; each list
// of node indices is sorted ascending.
std::vector<std::vector<std::size_t>> connected_components(const Mask& mask);

// Multilinear interpolation; p is clamped to the box.
double interpolate(const ScalarField& field, const Vec& p);
Vec interpolate(const VectorField& field, const Vec& p);
SymMat interpolate(const MatrixField& field, const Vec& p);

// Sum in fixed-size blocks so the result does not depend on loop scheduling.
double ordered_sum(std::span<const double> values);

// Snapshot format: "# grid d=<d> h=<h> origin=<x,y,z> extents=<nx,ny,nz>"
// followed by "i,j,k,value" lines.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field_csv(const std::filesystem::path& path);

}  // namespace cmclab
