#include <catch_amalgamated.hpp>

#include <sstream>

#include <vdflow/io.hpp>
#include <vdflow/spectral.hpp>
#include <vdflow/synthesis.hpp>

using namespace vdflow;
using Catch::Approx;

namespace {

const Grid g64(64);

ScalarField sf(const Grid& g, double (*f)(double, double)) { return ScalarField::from_function(g, f); }

}  // namespace

TEST_CASE("grid rejects bad sizes", "[field_core]") {
  CHECK_THROWS_AS(Grid(12), std::invalid_argument);
  CHECK_THROWS_AS(Grid(4), std::invalid_argument);
  CHECK_THROWS_AS(Grid(16, -1.0), std::invalid_argument);
  CHECK(Grid(16, 2.0).h() == Approx(0.125));
}

TEST_CASE("gradient oracles", "[field_core]") {
  SECTION("constant has zero gradient") {
    CHECK(max_abs(gradient(ScalarField(g64, 1.0))) < 1e-14);
  }
  SECTION("sin x1") {
    const auto d = gradient(sf(g64, [](double x, double) { return std::sin(x); }));
    CHECK(max_abs(d[0] - sf(g64, [](double x, double) { return std::cos(x); })) < 1e-13);
    CHECK(max_abs(d[1]) < 1e-13);
  }
  SECTION("sin x1 sin x2") {
    const auto d = gradient(sf(g64, [](double x, double y) { return std::sin(x) * std::sin(y); }));
    CHECK(max_abs(d[0] - sf(g64, [](double x, double y) { return std::cos(x) * std::sin(y); })) < 1e-13);
    CHECK(max_abs(d[1] - sf(g64, [](double x, double y) { return std::sin(x) * std::cos(y); })) < 1e-13);
  }
  SECTION("non-2pi box scales wavenumbers") {
    const Grid g(32, 3.0);
    const double k = g.k0();
    const auto d = gradient(ScalarField::from_function(g, [k](double x, double) { return std::sin(2 * k * x); }));
    CHECK(max_abs(d[0] - ScalarField::from_function(g, [k](double x, double) { return 2 * k * std::cos(2 * k * x); })) <
          1e-12);
  }
}

TEST_CASE("divergence oracles", "[field_core]") {
  CHECK(max_abs(divergence(VectorField(ScalarField(g64, 2.0), ScalarField(g64, -3.0)))) < 1e-14);
  const VectorField v(sf(g64, [](double x, double) { return std::sin(x); }), ScalarField(g64));
  CHECK(max_abs(divergence(v) - sf(g64, [](double x, double) { return std::cos(x); })) < 1e-13);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const VectorField w = random_solenoidal_field(g64, 6, seed);
    CHECK(l2_norm(divergence(w)) <= 1e-10 * l2_norm(w));
  }
}

TEST_CASE("Laplacian and its inverse", "[field_core]") {
  const ScalarField s = sf(g64, [](double x, double) { return std::sin(x); });
  CHECK(max_abs(laplacian(s) + s) < 1e-12);
  CHECK(max_abs(laplacian(ScalarField(g64))) == 0.0);
  const ScalarField ss = sf(g64, [](double x, double y) { return std::sin(x) * std::sin(y); });
  const auto inv = inverse_laplacian(-2.0 * ss);
  CHECK(max_abs(inv.field - ss) < 1e-13);
  CHECK(inv.removed_mean == Approx(0.0).margin(1e-14));
  SECTION("mean is removed and reported") {
    const auto r = inverse_laplacian(ss + ScalarField(g64, 0.5));
    CHECK(r.removed_mean == Approx(0.5));
    CHECK(max_abs(r.field + 0.5 * ss) < 1e-13);
  }
}

TEST_CASE("Leray projection", "[field_core]") {
  const VectorField w = random_solenoidal_field(g64, 8, 11);
  CHECK(max_abs(leray_project(w) - w) < 1e-12 * max_abs(w));
  const ScalarField f = random_band_limited(g64, 6, 12);
  const VectorField gf = gradient(f);
  CHECK(max_abs(leray_project(gf)) < 1e-12 * max_abs(gf));
  CHECK(max_abs(leray_project(gf + w) - w) < 1e-12 * max_abs(w));
  SECTION("projector properties on random input") {
    const VectorField v = random_vector_field(g64, 10, 13);
    const VectorField p = leray_project(v);
    CHECK(max_abs(leray_project(p) - p) < 1e-12);
    CHECK(l2_norm(divergence(p)) < 1e-10 * l2_norm(p));
    CHECK(std::abs(inner(p, v - p)) < 1e-10 * inner(v, v));
    CHECK(max_abs(p + gradient_part(v) - v) < 1e-12);
  }
}

TEST_CASE("Nyquist modes are removed by derivatives", "[field_core]") {
  const Grid g(16);
  // alternating sign pattern: pure Nyquist mode in x1
  const ScalarField f = ScalarField::from_function(g, [&](double x, double) { return std::cos(8 * x); });
  CHECK(max_abs(gradient(f)) < 1e-13);
  CHECK(max_abs(laplacian(f)) < 1e-13);
}

TEST_CASE("dealiasing keeps the lower two thirds", "[field_core]") {
  const Grid g(64);
  const ScalarField low = ScalarField::from_function(g, [](double x, double y) { return std::cos(21 * x + 3 * y); });
  const ScalarField high = ScalarField::from_function(g, [](double x, double) { return std::sin(22 * x); });
  CHECK(max_abs(dealias(low) - low) < 1e-12);
  CHECK(max_abs(dealias(high)) < 1e-12);
}

TEST_CASE("curl and perp gradient", "[field_core]") {
  const ScalarField psi = random_band_limited(g64, 5, 4);
  const VectorField v = perp_gradient(psi);
  CHECK(l2_norm(divergence(v)) < 1e-10 * l2_norm(v));
  // curl of (d2 psi, -d1 psi) is -Laplace psi
  CHECK(max_abs(curl(v) + laplacian(psi)) < 1e-10 * max_abs(laplacian(psi)));
  CHECK(max_abs(curl(gradient(psi))) < 1e-10);
}

TEST_CASE("jacobian index convention", "[field_core]") {
  // v = (sin x2, 0): only d_2 v_1 = cos x2 is nonzero, stored at (0, 1)
  const VectorField v(sf(g64, [](double, double y) { return std::sin(y); }), ScalarField(g64));
  const MatrixField D = jacobian(v);
  CHECK(max_abs(D.e[1] - sf(g64, [](double, double y) { return std::cos(y); })) < 1e-13);
  CHECK(max_abs(D.e[0]) + max_abs(D.e[2]) + max_abs(D.e[3]) < 1e-13);
  CHECK(max_op_norm(D) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Mat2 operator norm", "[field_core]") {
  CHECK(Mat2{3, 0, 0, -2}.op_norm() == Approx(3.0));
  CHECK(Mat2{1, 1, 0, 1}.op_norm() == Approx((1 + std::sqrt(5.0)) / 2));
  const Mat2 a{1.5, -0.3, 0.7, 2.0};
  CHECK((a * a.adjugate()).a == Approx(a.det()));
}

TEST_CASE("norms of a single mode", "[field_core]") {
  const ScalarField s = sf(g64, [](double x, double) { return std::sin(x); });
  CHECK(l2_norm(s) == Approx(std::sqrt(2.0) * std::numbers::pi));
  CHECK(lp_norm(s, 4.0) == Approx(std::pow(3.0 / 8.0 * 4 * std::numbers::pi * std::numbers::pi, 0.25)));
  CHECK(integral(ScalarField(g64, 1.0)) == Approx(4 * std::numbers::pi * std::numbers::pi));
}

TEST_CASE("spectral operators are linear", "[field_core][property]") {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const ScalarField a = random_band_limited(g64, 8, seed), b = random_band_limited(g64, 8, seed + 100);
    const double s = 0.37 + 0.1 * double(seed);
    CHECK(max_abs(laplacian(a + s * b) - laplacian(a) - s * laplacian(b)) < 1e-10 * max_abs(laplacian(a)));
    const VectorField u = random_vector_field(g64, 8, seed), w = random_vector_field(g64, 8, seed + 7);
    CHECK(max_abs(leray_project(u + s * w) - leray_project(u) - s * leray_project(w)) < 1e-12 * max_abs(u));
  }
}

TEST_CASE("thread count does not change results", "[field_core][property]") {
  const VectorField v = random_vector_field(g64, 12, 99);
  set_thread_count(1);
  const MatrixField a = jacobian(v);
  const ScalarField f1 = ScalarField::from_function(g64, [](double x, double y) { return std::sin(x * y); });
  set_thread_count(3);
  const MatrixField b = jacobian(v);
  const ScalarField f2 = ScalarField::from_function(g64, [](double x, double y) { return std::sin(x * y); });
  set_thread_count(1);
  for (int k = 0; k < 4; ++k) CHECK(a.e[k].values == b.e[k].values);
  CHECK(f1.values == f2.values);
}

TEST_CASE("worker exceptions reach the caller", "[field_core]") {
  set_thread_count(2);
  CHECK_THROWS_AS(parallel_for(4096, [](std::size_t i) {
                    if (i == 3000) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  set_thread_count(1);
}

TEST_CASE("snapshot round trip", "[field_core][io]") {
  const Grid g(16, 3.5);
  const VectorField v = random_vector_field(g, 4, 5);
  std::stringstream ss;
  write_snapshot(ss, v);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "grid n=16 L=3.5 kind=vector");
  ss.seekg(0);
  const VectorField r = read_vector_snapshot(ss);
  CHECK(r.grid() == g);
  CHECK(r[0].values == v[0].values);
  CHECK(r[1].values == v[1].values);

  std::stringstream ms;
  const MatrixField m = jacobian(v);
  write_snapshot(ms, m);
  const MatrixField mr = read_matrix_snapshot(ms);
  for (int k = 0; k < 4; ++k) CHECK(mr.e[k].values == m.e[k].values);

  std::stringstream bad("grid n=16 L=1 kind=tensor\n");
  CHECK_THROWS(read_scalar_snapshot(bad));
}
