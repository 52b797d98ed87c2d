#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cmclab/errors.hpp"
#include "cmclab/measures.hpp"
#include "cmclab/shapes.hpp"

using namespace cmclab;

namespace {

Grid cube(double half, double h) { return grid_around(3, {-half, -half, -half}, {half, half, half}, h, 0.0); }

std::size_t components(const ImplicitDomain& dom) {
  Mask m{dom.grid(), std::vector<std::uint8_t>(dom.grid().size())};
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = dom.phi[i] < 0.0;
  return connected_components(m).size();
}

}  // namespace

TEST_CASE("ball samples the exact distance") {
  const Grid g = cube(2.5, 1.0 / 64);
  const auto dom = make_ball({0, 0, 0}, 1.0, g);
  CHECK(dom.exact_sdf);
  CHECK(dom.provenance == Provenance::Ball);
  const int mid = g.extents()[0] / 2;
  REQUIRE(std::abs(g.position(mid, mid, mid)[0]) < 1e-14);
  CHECK(dom.phi.at(mid, mid, mid) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(dom.phi.at(mid + 128, mid, mid) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(volume(dom) == doctest::Approx(4.0 * kPi / 3.0).epsilon(0.01));
}

TEST_CASE("distance-function gradient is one to second order near the sphere") {
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const auto dom = make_ball({0, 0, 0}, 1.0, cube(1.5, h));
    const Grid& g = dom.grid();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(dom.phi[i]) >= 5 * h) continue;
      worst = std::max(worst, std::abs(norm(gradient_at(dom.phi, g.coords(i))) - 1.0));
    }
    // Central differences of |x| err by O(h^2 / r^2), r >= 1 - 5h here.
    CHECK(worst <= h * h);
  }
}

TEST_CASE("domain validation") {
  const Grid g = cube(1.0, 1.0 / 32);
  CHECK_THROWS_WITH_AS(make_ball({0, 0, 0}, 0.95, g), doctest::Contains("OutOfBox"), Error);
  CHECK_THROWS_AS(make_ball({0, 0, 0}, -1.0, g), Error);
  ImplicitDomain empty{ScalarField(g, 1.0), true, Provenance::External, 0};
  try {
    validate_domain(empty);
    FAIL("expected EmptySurface");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySurface);
  }
}

TEST_CASE("ellipsoid with equal semiaxes is the ball") {
  const Grid g = cube(1.5, 1.0 / 32);
  const auto e = make_ellipsoid({1, 1, 1}, g);
  const auto b = make_ball({0, 0, 0}, 1.0, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(e.phi[i] - b.phi[i]));
  CHECK(worst <= 1e-10);
  CHECK_FALSE(e.exact_sdf);
}

TEST_CASE("ellipsoid distance returns a true foot point") {
  const Vec axes{1.0, 0.8, 1.3};
  const Vec pts[] = {{0.3, -0.2, 0.1}, {1.4, 0.9, -0.7}, {0.0, 0.0, 0.05}, {0.9, 0.0, 0.0}, {2.0, -1.0, 1.5}};
  for (const Vec& p : pts) {
    Vec foot{};
    const double d = ellipsoid_distance(3, axes, p, &foot);
    double level = 0.0;
    for (int a = 0; a < 3; ++a) level += foot[a] * foot[a] / (axes[a] * axes[a]);
    CHECK(level == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(d) == doctest::Approx(norm(p - foot)).epsilon(1e-12));
    // p - foot is along the ellipsoid normal at foot.
    const Vec nrm = normalized(Vec{foot[0] / (axes[0] * axes[0]), foot[1] / (axes[1] * axes[1]), foot[2] / (axes[2] * axes[2])});
    if (std::abs(d) > 1e-9) CHECK(norm(cross(nrm, p - foot)) <= 1e-9 * (1.0 + std::abs(d)));
  }
  CHECK_THROWS_WITH_AS(make_ellipsoid({1, 1, 0.2}, cube(1.5, 1.0 / 32)), doctest::Contains("DegenerateAxis"), Error);
}

TEST_CASE("perturbed sphere family") {
  const Grid g = cube(1.3, 1.0 / 64);
  CHECK_THROWS_WITH_AS(make_perturbed_sphere(1.0, {2, 0.11, 0}, g), doctest::Contains("AmplitudeTooLarge"), Error);

  const auto flat = make_perturbed_sphere(1.0, {2, 0.0, 0}, g);
  const auto ball = make_ball({0, 0, 0}, 1.0, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(ball.phi[i]) < 6 * g.h()) worst = std::max(worst, std::abs(flat.phi[i] - ball.phi[i]));
  CHECK(worst <= 1e-9);

  const auto big = make_perturbed_sphere(1.0, {2, 0.05, 0}, g);
  const auto small = make_perturbed_sphere(1.0, {2, 0.025, 0}, g);
  const double d_big = deficits(big, extract_surface(big)).delta;
  const double d_small = deficits(small, extract_surface(small)).delta;
  CHECK(d_big > 0.0);
  CHECK(d_big < 1.0);
  CHECK(d_small < d_big);
  const double ratio = d_big / d_small;
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.4);
}

TEST_CASE("seeded perturbations are reproducible") {
  const Grid g = cube(1.3, 1.0 / 16);
  const auto a = make_perturbed_sphere(1.0, {3, 0.05, 7}, g);
  const auto b = make_perturbed_sphere(1.0, {3, 0.05, 7}, g);
  const auto c = make_perturbed_sphere(1.0, {3, 0.05, 8}, g);
  CHECK(a.seed == 7);
  bool same = true, differ = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    same &= a.phi[i] == b.phi[i];
    differ |= a.phi[i] != c.phi[i];
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("two balls joined by a neck form one component") {
  const double h = 1.0 / 48;
  const Grid g = grid_around(3, {-2.2, -1.1, -1.1}, {2.2, 1.1, 1.1}, h, 0.0);
  NeckCompoundSpec spec{{{-1.1, 0, 0}, {1.1, 0, 0}}, {1.0, 1.0}, {{0, 1}}, {0.15}, NeckProfile::CatenoidLike};
  const auto cat = make_neck_compound(spec, g);
  CHECK(cat.exact_sdf);
  CHECK(components(cat) == 1);

  spec.profile = NeckProfile::SmoothMin;
  const auto smooth = make_neck_compound(spec, g);
  CHECK_FALSE(smooth.exact_sdf);
  CHECK(components(smooth) == 1);

  // Without the neck the two balls stay apart.
  const auto apart = make_ball_union(spec.centers, spec.radii, g);
  CHECK(components(apart) == 2);

  spec.neck_width = {3.0 * h};
  CHECK_THROWS_WITH_AS(make_neck_compound(spec, g), doctest::Contains("NeckUnresolved"), Error);
}

TEST_CASE("thinner necks approach the union of the balls") {
  const double h = 1.0 / 32;
  const Grid g = grid_around(3, {-2.2, -1.1, -1.1}, {2.2, 1.1, 1.1}, h, 0.0);
  const std::vector<Vec> centers{{-1.1, 0, 0}, {1.1, 0, 0}};
  const auto uni = make_ball_union(centers, {1.0, 1.0}, g);
  std::vector<std::size_t> diff;
  for (double w : {0.3, 0.24, 0.18, 0.14}) {
    const auto dom = make_neck_compound({centers, {1.0, 1.0}, {{0, 1}}, {w}, NeckProfile::CatenoidLike}, g);
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) count += (dom.phi[i] < 0.0) != (uni.phi[i] < 0.0);
    diff.push_back(count);
  }
  for (std::size_t k = 1; k < diff.size(); ++k) CHECK(diff[k] < diff[k - 1]);
}

TEST_CASE("a compound without necks is the ball") {
  const Grid g = cube(1.5, 1.0 / 32);
  const auto dom = make_neck_compound({{{0.1, 0, 0}}, {1.0}, {}, {0.2}, NeckProfile::CatenoidLike}, g);
  const auto ball = make_ball({0.1, 0, 0}, 1.0, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(dom.phi[i] - ball.phi[i]));
  CHECK(worst <= 1e-10);
}

TEST_CASE("neck chain spacing") {
  const auto spec = neck_chain(3, 1.0, 0.2);
  REQUIRE(spec.centers.size() == 3);
  CHECK(spec.centers[1][0] == doctest::Approx(0.0));
  CHECK(spec.centers[2][0] - spec.centers[1][0] == doctest::Approx(2.2));
  CHECK(spec.neck_pairs.size() == 2);
}

TEST_CASE("rigid motions on the lattice are exact") {
  const double h = 1.0 / 16;
  const Grid g = cube(2.0, h);
  const auto dom = make_ellipsoid({0.9, 0.6, 0.5}, g, {0.125, -0.0625, 0.0});
  const Mat3 id{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  const auto same = rigid_move(dom, id, {0, 0, 0});
  bool identical = true;
  for (std::size_t i = 0; i < g.size(); ++i) identical &= same.phi[i] == dom.phi[i];
  CHECK(identical);

  const auto moved = rigid_move(dom, id, {3 * h, 0, 0});
  const auto& ext = g.extents();
  bool shifted = true;
  for (int k = 0; k < ext[2]; ++k)
    for (int j = 0; j < ext[1]; ++j)
      for (int i = 3; i < ext[0]; ++i) shifted &= moved.phi.at(i, j, k) == dom.phi.at(i - 3, j, k);
  CHECK(shifted);

  // Quarter turn about z: (x, y) -> (-y, x).
  const Mat3 rz{{{0, -1, 0}, {1, 0, 0}, {0, 0, 1}}};
  const auto turned = rigid_move(dom, rz, {0, 0, 0});
  const int c = ext[0] / 2;
  bool permuted = true;
  for (int k = 0; k < ext[2]; ++k)
    for (int j = 0; j < ext[1]; ++j)
      for (int i = 0; i < ext[0]; ++i) {
        const int si = j, sj = 2 * c - i;
        if (sj < 0 || sj >= ext[1]) continue;
        permuted &= turned.phi.at(i, j, k) == dom.phi.at(si, sj, k);
      }
  CHECK(permuted);

  CHECK_THROWS_WITH_AS(rigid_move(dom, id, {1.5, 0, 0}), doctest::Contains("OutOfBox"), Error);
}

TEST_CASE("external snapshot loads as a re-distanced domain") {
  const Grid g = cube(1.5, 1.0 / 16);
  const auto ball = make_ball({0, 0, 0}, 1.0, g);
  const auto path = std::filesystem::temp_directory_path() / "cmclab_test_shapes_ball.csv";
  write_field_csv(path, ball.phi);
  const auto ext = load_external(path);
  std::filesystem::remove(path);
  CHECK(ext.provenance == Provenance::External);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(ball.phi[i]) < 3 * g.h()) worst = std::max(worst, std::abs(ext.phi[i] - ball.phi[i]));
  CHECK(worst <= 0.5 * g.h());
}
