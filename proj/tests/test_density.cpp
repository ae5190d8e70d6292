#include <catch_amalgamated.hpp>

#include <vdflow/density.hpp>
#include <vdflow/synthesis.hpp>

using namespace vdflow;
using Catch::Approx;

namespace {

const Grid g(64);
constexpr double pi = std::numbers::pi;

VectorField shear(double a = 1.0) {
  return VectorField::from_function(g, [a](double, double y) { return std::array<double, 2>{a * std::sin(y), 0.0}; });
}

FlowMap frozen(const VectorField& u, double t, int steps) {
  FlowMap fm = FlowMap::starting_with(u);
  for (int s = 0; s < steps; ++s) fm = advance_flow_map_eulerian(fm, u, t / steps, InterpKind::fourier_exact);
  return fm;
}

}  // namespace

TEST_CASE("jump ratio", "[density]") {
  CHECK(jump_ratio(Density::uniform(1.0)) == 0.0);
  CHECK(jump_ratio(Density::piecewise(1.0, 0.1, Disk{1, 1, 0.5})) == Approx(0.1));
  const ScalarField f = ScalarField::from_function(g, [](double x, double) { return 1.0 + 0.2 * std::sin(x); });
  // samples include x = pi/2 and 3 pi/2, so min 0.8 and max 1.2
  CHECK(jump_ratio(Density::general(f, 0.7, 1.3)) == Approx(0.5));
  CHECK_THROWS_AS(Density::piecewise(-1.0, 0.1, Disk{}), std::invalid_argument);
  CHECK_THROWS_AS(Density::general(f, 0.9, 1.3), std::invalid_argument);
}

TEST_CASE("density at t = 0 is the sampled initial density", "[density]") {
  const Density rho = Density::piecewise(1.0, 0.5, Disk{pi, pi, 1.0});
  CHECK(max_abs(density_at_time(rho, FlowMap::identity(g)) - rho.sample(g)) == 0.0);
  CHECK(value_set(rho.sample(g)) == std::set<double>{1.0, 1.5});
}

TEST_CASE("constant velocity translates the disk", "[density]") {
  const Density rho = Density::piecewise(1.0, 0.1, Disk{2.0, 2.0, 0.9});
  const VectorField c(ScalarField(g, 0.7), ScalarField(g, -0.4));
  const double t = 1.0;
  const ScalarField r = density_at_time(rho, frozen(c, t, 4));
  const Density moved = Density::piecewise(1.0, 0.1, Disk{2.0 + 0.7 * t, 2.0 - 0.4 * t, 0.9});
  const ScalarField expect = moved.sample(g);
  int mismatches = 0;
  for (std::size_t p = 0; p < g.size(); ++p) mismatches += r.values[p] != expect.values[p];
  CHECK(mismatches <= 2);  // only points numerically on the circle may flip
}

TEST_CASE("shear map transports the disk to its analytic image", "[density]") {
  const Disk d{pi, pi, 1.2};
  const Density rho = Density::piecewise(1.0, 0.1, d);
  const double t = 0.5;
  const ScalarField r = density_at_time(rho, frozen(shear(), t, 10));
  CHECK(value_set(r) == std::set<double>{1.0, 1.1});
  // x is inside the image iff Y(x) = (x1 - t sin x2, x2) is inside the disk; only a one-cell band may differ
  const double h = g.h();
  int off_band = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const double x = g.coord(i), y = g.coord(j);
      const double y1 = x - t * std::sin(y) - d.cx, y2 = y - d.cy;
      const double dist = std::hypot(y1, y2) - d.r;
      const bool inside = dist < 0;
      if ((r(i, j) == 1.1) != inside && std::abs(dist) > 2 * h) ++off_band;
    }
  CHECK(off_band == 0);
}

TEST_CASE("transported density keeps its values and extrema", "[density][property]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const VectorField u = 0.3 * normalized(random_solenoidal_field(g, 3, seed));
    const Density rho = Density::piecewise(1.0, 0.2, Rectangle{1.0, 1.5, 3.0, 4.0});
    const ScalarField r = density_at_time(rho, frozen(u, 1.0, 10));
    CHECK(value_set(r) == std::set<double>{1.0, 1.2});
  }
  SECTION("general densities stay inside the initial range") {
    const ScalarField f = ScalarField::from_function(g, [](double x, double y) { return 1.0 + 0.2 * std::sin(x) * std::cos(y); });
    const Density rho = Density::general(f, 0.7, 1.3);
    const ScalarField r = density_at_time(rho, frozen(0.3 * normalized(random_solenoidal_field(g, 3, 4)), 1.0, 10));
    CHECK(min_value(r) >= min_value(f));
    CHECK(max_value(r) <= max_value(f));
  }
}

TEST_CASE("markers", "[density]") {
  const Disk unit{pi, pi, 1.0};
  const InterfaceMarkers m = disk_markers(unit, 256);
  SECTION("polygon area of a unit disk") {
    CHECK(enclosed_area(m) == Approx(pi).epsilon(1e-3));
    CHECK(enclosed_area(m) == Approx(0.5 * 256 * std::sin(2 * pi / 256)).epsilon(1e-13));
  }
  SECTION("zero velocity leaves markers in place") {
    const InterfaceMarkers r = advect_markers(m, VectorField(g), 0.1);
    CHECK(r.points == m.points);
    CHECK(r.time == Approx(0.1));
  }
  SECTION("constant velocity translates rigidly and keeps the area") {
    const VectorField c(ScalarField(g, 0.5), ScalarField(g, 0.25));
    const InterfaceMarkers r = advect_markers(m, c, 0.2);
    for (std::size_t k = 0; k < m.points.size(); ++k) {
      CHECK(r.points[k][0] == Approx(m.points[k][0] + 0.1).margin(1e-13));
      CHECK(r.points[k][1] == Approx(m.points[k][1] + 0.05).margin(1e-13));
    }
    CHECK(enclosed_area(r) == Approx(enclosed_area(m)).epsilon(1e-12));
  }
  SECTION("shear flow matches the analytic image") {
    const VectorField u = shear();
    for (double dt : {0.05}) {
      InterfaceMarkers r = m;
      for (int s = 0; s < 10; ++s) r = advect_markers(r, u, dt);
      for (std::size_t k = 0; k < m.points.size(); ++k) {
        const auto& y = m.points[k];
        CHECK(r.points[k][0] == Approx(y[0] + 0.5 * std::sin(y[1])).margin(1e-10));
        CHECK(r.points[k][1] == Approx(y[1]).margin(1e-12));
      }
      CHECK(enclosed_area(r) == Approx(enclosed_area(m)).epsilon(1e-10));
    }
  }
  SECTION("area is conserved under a resolved incompressible flow") {
    const VectorField u = taylor_green(g, 0.5);
    InterfaceMarkers r = disk_markers(Disk{pi / 2, pi / 2, 0.65}, 256);
    const double a0 = enclosed_area(r);
    for (int s = 0; s < 50; ++s) r = advect_markers(r, u, 0.02);
    CHECK(std::abs(enclosed_area(r) - a0) / a0 < 0.01);
  }
  SECTION("too few markers or tangled polygons are rejected") {
    CHECK_THROWS_AS(disk_markers(unit, 8), std::invalid_argument);
    InterfaceMarkers bow{0.0, {{0, 0}, {1, 1}, {1, 0}, {0, 1}}};
    CHECK_FALSE(is_simple_polygon(bow.points));
    CHECK_THROWS_AS(enclosed_area(bow), SelfIntersection);
  }
}

TEST_CASE("periodic membership", "[density]") {
  const Disk d{0.1, 0.1, 0.5};
  CHECK(contains(d, two_pi - 0.1, 0.1, two_pi));
  CHECK_FALSE(contains(d, pi, pi, two_pi));
  const Rectangle r{6.0, 6.0, 6.5, 6.5};  // wraps across the corner
  CHECK(contains(r, 0.1, 0.1, two_pi));
}
