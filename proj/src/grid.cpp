#include "cmclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

#include "cmclab/errors.hpp"

namespace cmclab {

Grid::Grid(int dim, Vec origin, Index3 extents, double h)
    : dim_(dim), origin_(origin), extents_(extents), h_(h) {
  if (dim != 2 && dim != 3) throw Error(ErrorCode::InvalidArgument, "grid dimension must be 2 or 3");
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  for (int a = 0; a < dim; ++a) {
    if (extents[static_cast<std::size_t>(a)] < 8)
      throw Error(ErrorCode::InvalidArgument, "grid needs at least 8 nodes per axis");
  }
  if (dim == 2) {
    extents_[2] = 1;
    origin_[2] = 0.0;
  }
}

Grid Grid::covering(int dim, const Vec& lo, const Vec& hi, double h) {
  Index3 ext{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double span = hi[ua] - lo[ua];
    ext[ua] = std::max(8, static_cast<int>(std::ceil(span / h - 1e-9)) + 1);
  }
  return Grid(dim, lo, ext, h);
}

double Grid::cell_volume() const { return dim_ == 3 ? h_ * h_ * h_ : h_ * h_; }

Index3 Grid::coords(std::size_t idx) const {
  const auto nx = static_cast<std::size_t>(extents_[0]);
  const auto ny = static_cast<std::size_t>(extents_[1]);
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

Vec Grid::upper() const {
  Vec u = origin_;
  for (int a = 0; a < dim_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    u[ua] += (extents_[ua] - 1) * h_;
  }
  return u;
}

bool Grid::in_range(const Index3& c) const {
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (c[ua] < 0 || c[ua] >= extents_[ua]) return false;
  }
  return true;
}

bool Grid::contains(const Vec& p) const {
  const Vec u = upper();
  for (int a = 0; a < dim_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (p[ua] < origin_[ua] || p[ua] > u[ua]) return false;
  }
  return true;
}

double Grid::distance_to_faces(const Vec& p) const {
  const Vec u = upper();
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    d = std::min({d, p[ua] - origin_[ua], u[ua] - p[ua]});
  }
  return d;
}

std::size_t Grid::stride(int axis) const {
  if (axis == 0) return 1;
  if (axis == 1) return static_cast<std::size_t>(extents_[0]);
  return static_cast<std::size_t>(extents_[0]) * static_cast<std::size_t>(extents_[1]);
}

Grid Grid::scaled(double s) const { return Grid(dim_, s * origin_, extents_, s * h_); }

ScalarField::ScalarField(Grid grid, double fill) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  validate();
}

void ScalarField::validate() const {
  if (values_.size() != grid_.size()) throw Error(ErrorCode::InvalidArgument, "field size does not match grid");
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "field contains a non-finite value");
  }
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](std::uint8_t v) { return v != 0; }));
}

VectorField gradient(const ScalarField& field) {
  const Grid& g = field.grid();
  VectorField out{g, std::vector<Vec>(g.size(), Vec{0.0, 0.0, 0.0})};
  const double inv2h = 1.0 / (2.0 * g.h());
  const auto& ext = g.extents();
  for (int k = 0; k < ext[2]; ++k) {
    for (int j = 0; j < ext[1]; ++j) {
      for (int i = 0; i < ext[0]; ++i) {
        const Index3 c{i, j, k};
        const std::size_t idx = g.index(c);
        for (int a = 0; a < g.dim(); ++a) {
          const auto ua = static_cast<std::size_t>(a);
          const std::size_t s = g.stride(a);
          const int n = ext[ua];
          double d;
          if (c[ua] == 0) {
            d = (-3.0 * field[idx] + 4.0 * field[idx + s] - field[idx + 2 * s]) * inv2h;
          } else if (c[ua] == n - 1) {
            d = (3.0 * field[idx] - 4.0 * field[idx - s] + field[idx - 2 * s]) * inv2h;
          } else {
            d = (field[idx + s] - field[idx - s]) * inv2h;
          }
          out.values[idx][ua] = d;
        }
      }
    }
  }
  return out;
}

Vec gradient_at(const ScalarField& field, const Index3& c) {
  const Grid& g = field.grid();
  const std::size_t idx = g.index(c);
  const double inv2h = 1.0 / (2.0 * g.h());
  Vec d{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t s = g.stride(a);
    d[static_cast<std::size_t>(a)] = (field[idx + s] - field[idx - s]) * inv2h;
  }
  return d;
}

SymMat hessian_at(const ScalarField& field, const Index3& c) {
  const Grid& g = field.grid();
  const std::size_t idx = g.index(c);
  const double h = g.h();
  const double inv_h2 = 1.0 / (h * h);
  const double inv_4h2 = 0.25 * inv_h2;
  SymMat m;
  const double f0 = field[idx];
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t s = g.stride(a);
    m.at(a, a) = (field[idx + s] - 2.0 * f0 + field[idx - s]) * inv_h2;
    for (int b = a + 1; b < g.dim(); ++b) {
      const std::size_t t = g.stride(b);
      m.at(a, b) =
          (field[idx + s + t] - field[idx + s - t] - field[idx - s + t] + field[idx - s - t]) * inv_4h2;
    }
  }
  return m;
}

MatrixField hessian(const ScalarField& field) {
  const Grid& g = field.grid();
  MatrixField out{g, std::vector<SymMat>(g.size())};
  const auto& ext = g.extents();
  for (int k = 0; k < ext[2]; ++k) {
    for (int j = 0; j < ext[1]; ++j) {
      for (int i = 0; i < ext[0]; ++i) {
        Index3 c{i, j, k};
        Index3 s = c;
        for (int a = 0; a < g.dim(); ++a) {
          const auto ua = static_cast<std::size_t>(a);
          s[ua] = std::clamp(c[ua], 1, ext[ua] - 2);
        }
        out.values[g.index(c)] = hessian_at(field, s);
      }
    }
  }
  return out;
}

std::vector<KernelOffset> mollifier_stencil(int dim, double h, const MollifierSpec& spec) {
  if (spec.radius < 2.0 * h * (1.0 - 1e-12)) {
    throw Error(ErrorCode::MollifierTooNarrow, "mollifier radius " + std::to_string(spec.radius) +
                                                   " is below twice the grid spacing " + std::to_string(h));
  }
  const int r = static_cast<int>(std::floor(spec.radius / h));
  const int rz = dim == 3 ? r : 0;
  std::vector<KernelOffset> stencil;
  double total = 0.0;
  const double sigma = spec.radius / 3.0;
  for (int dz = -rz; dz <= rz; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const double rho = h * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
        if (rho >= spec.radius) continue;
        double w;
        if (spec.kernel == MollifierKernel::CompactPolynomial) {
          const double q = 1.0 - (rho / spec.radius) * (rho / spec.radius);
          w = q * q * q * q;
        } else {
          w = std::exp(-0.5 * (rho / sigma) * (rho / sigma));
        }
        stencil.push_back({{dx, dy, dz}, w});
        total += w;
      }
    }
  }
  for (auto& o : stencil) o.weight /= total;
  return stencil;
}

ScalarField mollify(const ScalarField& field, const MollifierSpec& spec, std::span<const std::uint8_t> where) {
  const Grid& g = field.grid();
  const auto stencil = mollifier_stencil(g.dim(), g.h(), spec);
  int reach = 0;
  for (const auto& o : stencil) reach = std::max({reach, std::abs(o.offset[0]), std::abs(o.offset[1]), std::abs(o.offset[2])});
  std::vector<std::ptrdiff_t> delta(stencil.size());
  for (std::size_t s = 0; s < stencil.size(); ++s) {
    const auto& o = stencil[s].offset;
    delta[s] = static_cast<std::ptrdiff_t>(o[0]) + static_cast<std::ptrdiff_t>(o[1]) * static_cast<std::ptrdiff_t>(g.stride(1)) +
               static_cast<std::ptrdiff_t>(o[2]) * static_cast<std::ptrdiff_t>(g.stride(2));
  }
  std::vector<double> out(g.size(), 0.0);
  const auto& ext = g.extents();
  const auto values = field.values();
  for (int k = 0; k < ext[2]; ++k) {
    for (int j = 0; j < ext[1]; ++j) {
      for (int i = 0; i < ext[0]; ++i) {
        const Index3 c{i, j, k};
        const std::size_t idx = g.index(c);
        if (!where.empty() && where[idx] == 0) continue;
        bool interior = true;
        for (int a = 0; a < g.dim(); ++a) {
          const auto ua = static_cast<std::size_t>(a);
          if (c[ua] < reach || c[ua] >= ext[ua] - reach) interior = false;
        }
        double acc = 0.0;
        if (interior) {
          const auto base = static_cast<std::ptrdiff_t>(idx);
          for (std::size_t s = 0; s < stencil.size(); ++s) {
            acc += stencil[s].weight * values[static_cast<std::size_t>(base + delta[s])];
          }
        } else {
          for (const auto& o : stencil) {
            const Index3 q{i + o.offset[0], j + o.offset[1], k + o.offset[2]};
            if (!g.in_range(q)) continue;
            acc += o.weight * values[g.index(q)];
          }
        }
        out[idx] = acc;
      }
    }
  }
  return ScalarField(g, std::move(out));
}

std::vector<std::vector<std::size_t>> connected_components(const Mask& mask) {
  const Grid& g = mask.grid;
  std::vector<std::uint8_t> seen(g.size(), 0);
  std::vector<std::vector<std::size_t>> comps;
  const auto& ext = g.extents();
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < g.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    std::vector<std::size_t> comp;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      comp.push_back(idx);
      const Index3 c = g.coords(idx);
      for (int a = 0; a < g.dim(); ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const std::size_t s = g.stride(a);
        if (c[ua] > 0 && mask[idx - s] && !seen[idx - s]) {
          seen[idx - s] = 1;
          stack.push_back(idx - s);
        }
        if (c[ua] + 1 < ext[ua] && mask[idx + s] && !seen[idx + s]) {
          seen[idx + s] = 1;
          stack.push_back(idx + s);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

namespace {

struct Stencil8 {
  std::array<std::size_t, 8> idx{};
  std::array<double, 8> w{};
  int count = 0;
};

Stencil8 interpolation_stencil(const Grid& g, const Vec& p) {
  Stencil8 st;
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const int n = g.extents()[ua];
    double x = (p[ua] - g.origin()[ua]) / g.h();
    x = std::clamp(x, 0.0, static_cast<double>(n - 1));
    int b = std::min(static_cast<int>(std::floor(x)), n - 2);
    base[ua] = b;
    t[ua] = x - b;
  }
  const int corners = g.dim() == 3 ? 8 : 4;
  for (int c = 0; c < corners; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) * (g.dim() == 3 ? (dz ? t[2] : 1.0 - t[2]) : 1.0);
    st.idx[static_cast<std::size_t>(c)] = g.index(base[0] + dx, base[1] + dy, base[2] + dz);
    st.w[static_cast<std::size_t>(c)] = w;
  }
  st.count = corners;
  return st;
}

}  // namespace

double interpolate(const ScalarField& field, const Vec& p) {
  const auto st = interpolation_stencil(field.grid(), p);
  double v = 0.0;
  for (int c = 0; c < st.count; ++c) v += st.w[static_cast<std::size_t>(c)] * field[st.idx[static_cast<std::size_t>(c)]];
  return v;
}

Vec interpolate(const VectorField& field, const Vec& p) {
  const auto st = interpolation_stencil(field.grid, p);
  Vec v{0.0, 0.0, 0.0};
  for (int c = 0; c < st.count; ++c) v += st.w[static_cast<std::size_t>(c)] * field.values[st.idx[static_cast<std::size_t>(c)]];
  return v;
}

SymMat interpolate(const MatrixField& field, const Vec& p) {
  const auto st = interpolation_stencil(field.grid, p);
  SymMat v;
  for (int c = 0; c < st.count; ++c) {
    v = v + st.w[static_cast<std::size_t>(c)] * field.values[st.idx[static_cast<std::size_t>(c)]];
  }
  return v;
}

double ordered_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 1024;
  double total = 0.0;
  for (std::size_t b = 0; b < values.size(); b += kBlock) {
    const std::size_t e = std::min(values.size(), b + kBlock);
    double part = 0.0;
    for (std::size_t i = b; i < e; ++i) part += values[i];
    total += part;
  }
  return total;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  const Grid& g = field.grid();
  char buf[512];
  std::snprintf(buf, sizeof buf, "# grid d=%d h=%.17g origin=%.17g,%.17g,%.17g extents=%d,%d,%d\n", g.dim(), g.h(),
                g.origin()[0], g.origin()[1], g.origin()[2], g.extents()[0], g.extents()[1], g.extents()[2]);
  out << buf;
  const auto& ext = g.extents();
  for (int k = 0; k < ext[2]; ++k) {
    for (int j = 0; j < ext[1]; ++j) {
      for (int i = 0; i < ext[0]; ++i) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", i, j, k, field.at(i, j, k));
        out << buf;
      }
    }
  }
}

ScalarField read_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string header;
  std::getline(in, header);
  int d = 0;
  double h = 0.0;
  Vec origin{};
  Index3 ext{};
  if (std::sscanf(header.c_str(), "# grid d=%d h=%lf origin=%lf,%lf,%lf extents=%d,%d,%d", &d, &h, &origin[0],
                  &origin[1], &origin[2], &ext[0], &ext[1], &ext[2]) != 8) {
    throw Error(ErrorCode::IoError, "malformed field header in " + path.string());
  }
  Grid g(d, origin, ext, h);
  std::vector<double> values(g.size(), 0.0);
  std::vector<std::uint8_t> filled(g.size(), 0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    int i, j, k;
    double v;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &i, &j, &k, &v) != 4 || !g.in_range({i, j, k})) {
      throw Error(ErrorCode::IoError, "malformed field line: " + line);
    }
    values[g.index(i, j, k)] = v;
    filled[g.index(i, j, k)] = 1;
  }
  if (std::find(filled.begin(), filled.end(), 0) != filled.end()) {
    throw Error(ErrorCode::IoError, "field snapshot is missing nodes: " + path.string());
  }
  return ScalarField(g, std::move(values));
}

}  // namespace cmclab
