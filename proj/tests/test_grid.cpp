#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "cmclab/errors.hpp"
#include "cmclab/grid.hpp"

using namespace cmclab;

namespace {

Grid centered(int dim, double half, double h) {
  return Grid::covering(dim, {-half, -half, dim == 3 ? -half : 0.0}, {half, half, dim == 3 ? half : 0.0}, h);
}

template <class F>
ScalarField sample(const Grid& g, F&& f) {
  ScalarField s(g);
  for (std::size_t i = 0; i < g.size(); ++i) s[i] = f(g.position(i));
  return s;
}

}  // namespace

TEST_CASE("grid rejects bad shapes") {
  CHECK_THROWS_AS(Grid(3, {0, 0, 0}, {7, 8, 8}, 0.1), Error);
  CHECK_THROWS_AS(Grid(3, {0, 0, 0}, {8, 8, 8}, 0.0), Error);
  CHECK_THROWS_AS(Grid(4, {0, 0, 0}, {8, 8, 8}, 0.1), Error);
  Grid g2(2, {0, 0, 5}, {8, 9, 4}, 0.5);
  CHECK(g2.extents()[2] == 1);
  CHECK(g2.size() == 72);
  CHECK(g2.position(1, 2, 0)[2] == 0.0);
}

TEST_CASE("covering grid puts a node on the origin of a symmetric box") {
  const Grid g = centered(3, 1.5, 1.0 / 32);
  CHECK(g.extents()[0] == 97);
  const Vec mid = g.position(48, 48, 48);
  CHECK(std::abs(mid[0]) < 1e-14);
  CHECK(g.coords(g.index(3, 4, 5)) == Index3{3, 4, 5});
}

TEST_CASE("gradient is exact on constants, linears and quadratics") {
  const Grid g = centered(3, 1.25, 1.0 / 32);
  const auto c = sample(g, [](const Vec&) { return 3.5; });
  const auto lin = sample(g, [](const Vec& x) { return x[0]; });
  const auto quad = sample(g, [](const Vec& x) { return norm2(x) / 6.0; });
  const auto gc = gradient(c);
  const auto gl = gradient(lin);
  const auto gq = gradient(quad);
  double ec = 0, el = 0, eq = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.position(i);
    ec = std::max(ec, norm(gc.values[i]));
    el = std::max(el, norm(gl.values[i] - Vec{1, 0, 0}));
    eq = std::max(eq, norm(gq.values[i] - x / 3.0));
  }
  CHECK(ec == 0.0);
  CHECK(el <= 1e-12);
  CHECK(eq <= 1e-12);
}

TEST_CASE("hessian is exact on quadratics and symmetric") {
  const Grid g = centered(3, 1.25, 1.0 / 32);
  const auto quad = sample(g, [](const Vec& x) { return norm2(x) / 6.0; });
  const auto mixed = sample(g, [](const Vec& x) { return x[0] * x[1]; });
  const auto lin = sample(g, [](const Vec& x) { return 2 * x[0] - x[2]; });
  const auto hq = hessian(quad);
  const auto hm = hessian(mixed);
  const auto hl = hessian(lin);
  double eq = 0, em = 0, el = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int r = 0; r < 3; ++r) {
      for (int s = 0; s < 3; ++s) {
        eq = std::max(eq, std::abs(hq.values[i](r, s) - (r == s ? 1.0 / 3.0 : 0.0)));
        const bool off = (r == 0 && s == 1) || (r == 1 && s == 0);
        em = std::max(em, std::abs(hm.values[i](r, s) - (off ? 1.0 : 0.0)));
        el = std::max(el, std::abs(hl.values[i](r, s)));
      }
    }
  }
  CHECK(eq <= 1e-12);
  CHECK(em <= 1e-12);
  CHECK(el <= 1e-12);
}

TEST_CASE("two-dimensional operators") {
  const Grid g = centered(2, 1.0, 1.0 / 16);
  const auto quad = sample(g, [](const Vec& x) { return x[0] * x[0] - 3 * x[0] * x[1]; });
  const auto gq = gradient(quad);
  const auto hq = hessian(quad);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.position(i);
    CHECK(std::abs(gq.values[i][0] - (2 * x[0] - 3 * x[1])) < 1e-12);
    CHECK(std::abs(gq.values[i][1] + 3 * x[0]) < 1e-12);
    CHECK(gq.values[i][2] == 0.0);
    CHECK(std::abs(hq.values[i](0, 0) - 2) < 1e-12);
    CHECK(std::abs(hq.values[i](0, 1) + 3) < 1e-12);
    CHECK(hq.values[i](2, 2) == 0.0);
  }
}

TEST_CASE("mollifier stencil is normalised and rejects sub-grid radii") {
  for (auto kernel : {MollifierKernel::CompactPolynomial, MollifierKernel::GaussianTruncated}) {
    for (int dim : {2, 3}) {
      const auto st = mollifier_stencil(dim, 0.05, {0.17, kernel});
      double s = 0;
      for (const auto& o : st) {
        s += o.weight;
        CHECK(o.weight > 0);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
  const Grid g = centered(3, 1.0, 0.1);
  ScalarField f(g, 1.0);
  try {
    (void)mollify(f, {0.15, MollifierKernel::CompactPolynomial});
    FAIL("expected MollifierTooNarrow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MollifierTooNarrow);
  }
}

TEST_CASE("mollify keeps constants, is non-expansive and preserves mass") {
  const Grid g = centered(3, 1.5, 1.0 / 20);
  const MollifierSpec spec{0.2, MollifierKernel::CompactPolynomial};
  const ScalarField c(g, 2.5);
  const auto mc = mollify(c, spec);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.distance_to_faces(g.position(i)) > 0.25) CHECK(std::abs(mc[i] - 2.5) < 1e-12);
  }

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField bump(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.position(i));
    bump[i] = r < 0.8 ? u(rng) : 0.0;
  }
  for (auto kernel : {MollifierKernel::CompactPolynomial, MollifierKernel::GaussianTruncated}) {
    const auto mb = mollify(bump, {0.2, kernel});
    CHECK(mb.max_abs() <= bump.max_abs());
    const double before = ordered_sum(bump.values());
    const double after = ordered_sum(mb.values());
    double scale = 0;
    for (double v : bump.values()) scale += std::abs(v);
    CHECK(std::abs(after - before) <= 1e-10 * scale);
  }
}

TEST_CASE("mollified torsion stays within the Lipschitz bound away from the boundary") {
  const Grid g = centered(3, 1.25, 1.0 / 40);
  const double eps = 0.1;
  const auto f = sample(g, [](const Vec& x) { return norm2(x) < 1.0 ? (norm2(x) - 1.0) / 6.0 : 0.0; });
  const auto fe = mollify(f, {eps, MollifierKernel::CompactPolynomial});
  double worst = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (norm(g.position(i)) - 1.0 < -eps) worst = std::max(worst, std::abs(fe[i] - f[i]));
  }
  CHECK(worst > 0.0);
  CHECK(worst <= 0.0334);
}

TEST_CASE("mollify commutes with whole-cell translations") {
  const Grid g = centered(3, 1.0, 0.05);
  const auto bump = sample(g, [](const Vec& x) { return std::exp(-8 * norm2(x - Vec{-0.2, 0.1, 0})); });
  // Shift by index so the moved values are bit-identical copies.
  ScalarField moved(g);
  const auto& e = g.extents();
  for (int k = 0; k < e[2]; ++k)
    for (int j = 0; j < e[1]; ++j)
      for (int i = 0; i < e[0]; ++i) moved[g.index(i, j, k)] = i >= 3 ? bump.at(i - 3, j, k) : 0.0;
  const MollifierSpec spec{0.15, MollifierKernel::CompactPolynomial};
  const auto a = mollify(bump, spec);
  const auto b = mollify(moved, spec);
  int checked = 0;
  for (int k = 4; k < e[2] - 4; ++k)
    for (int j = 4; j < e[1] - 4; ++j)
      for (int i = 10; i < e[0] - 4; ++i) {
        REQUIRE(b.at(i, j, k) == a.at(i - 3, j, k));
        ++checked;
      }
  CHECK(checked > 1000);
}

TEST_CASE("connected components partition the mask") {
  const Grid g = centered(3, 2.0, 0.05);
  auto mask_of = [&](auto&& inside) {
    Mask m{g, std::vector<std::uint8_t>(g.size(), 0)};
    for (std::size_t i = 0; i < g.size(); ++i) m.values[i] = inside(g.position(i)) ? 1 : 0;
    return m;
  };
  const Vec a{-0.9, 0, 0}, b{0.9, 0, 0};
  const auto one = mask_of([](const Vec& x) { return norm(x) < 0.7; });
  CHECK(connected_components(one).size() == 1);

  const auto two = mask_of([&](const Vec& x) { return distance(x, a) < 0.7 || distance(x, b) < 0.7; });
  const auto comps = connected_components(two);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].front() < comps[1].front());
  std::vector<int> hits(g.size(), 0);
  for (const auto& c : comps) {
    CHECK(std::is_sorted(c.begin(), c.end()));
    for (auto idx : c) ++hits[idx];
  }
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(hits[i] == (two[i] ? 1 : 0));

  // Neck of radius h/4 around the x axis, offset half a cell so no node row lies inside it.
  const double h = g.h();
  const auto dumbbell = mask_of([&](const Vec& x) {
    const double r = std::hypot(x[1] - 0.5 * h, x[2] - 0.5 * h);
    return distance(x, a) < 0.7 || distance(x, b) < 0.7 || (std::abs(x[0]) < 0.9 && r < 0.25 * h);
  });
  CHECK(dumbbell.count() == two.count());
  CHECK(connected_components(dumbbell).size() == 2);

  const auto joined = mask_of([&](const Vec& x) {
    return distance(x, a) < 0.7 || distance(x, b) < 0.7 || (std::abs(x[0]) < 0.9 && std::hypot(x[1], x[2]) < 3 * h);
  });
  CHECK(connected_components(joined).size() == 1);

  Mask empty{g, std::vector<std::uint8_t>(g.size(), 0)};
  CHECK(connected_components(empty).empty());
}

TEST_CASE("interpolation is exact on multilinear fields and clamps") {
  const Grid g = centered(3, 1.0, 0.125);
  const auto f = sample(g, [](const Vec& x) { return 1 + 2 * x[0] - x[1] + 0.5 * x[2] + x[0] * x[1] * x[2]; });
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const Vec p{u(rng), u(rng), u(rng)};
    const double exact = 1 + 2 * p[0] - p[1] + 0.5 * p[2] + p[0] * p[1] * p[2];
    CHECK(std::abs(interpolate(f, p) - exact) < 1e-12);
  }
  CHECK(interpolate(f, {5, 0, 0}) == doctest::Approx(interpolate(f, {1, 0, 0})));
}

TEST_CASE("field snapshot round-trips bit-exactly") {
  const Grid g(3, {-0.3, 0.1, 0.7}, {8, 9, 10}, 0.1);
  const auto f = sample(g, [](const Vec& x) { return std::sin(3 * x[0]) * std::exp(x[1]) / 7.0; });
  const auto path = std::filesystem::temp_directory_path() / "cmclab_grid_roundtrip.csv";
  write_field_csv(path, f);
  const auto back = read_field_csv(path);
  CHECK(back.grid() == g);
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(back[i] == f[i]);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_field_csv(path), Error);
}

TEST_CASE("ordered sum is independent of block boundaries for exact inputs") {
  std::vector<double> v(5000, 0.5);
  CHECK(ordered_sum(v) == 2500.0);
  CHECK(ordered_sum({}) == 0.0);
}
