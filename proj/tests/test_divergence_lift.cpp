#include <catch_amalgamated.hpp>

#include <vdflow/divergence_lift.hpp>
#include <vdflow/runner.hpp>
#include <vdflow/synthesis.hpp>

using namespace vdflow;
using Catch::Approx;

namespace {
const Grid g(64);
}

TEST_CASE("solve_divergence oracles", "[divergence_lift]") {
  const VectorField s = random_solenoidal_field(g, 6, 3);
  CHECK(max_abs(solve_divergence(s)) < 1e-12 * max_abs(s));
  const ScalarField f = ScalarField::from_function(g, [](double x, double y) { return std::sin(x) * std::sin(y); });
  const VectorField gf = gradient(f);
  CHECK(max_abs(solve_divergence(gf) - gf) < 1e-13);
  CHECK(max_abs(solve_divergence(gf + s) - gf) < 1e-12);
}

TEST_CASE("solve_divergence output is curl-free and mean-zero", "[divergence_lift][property]") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const VectorField R = random_vector_field(g, 8, seed) + VectorField(ScalarField(g, 0.3), ScalarField(g, -1.0));
    const VectorField w = solve_divergence(R);
    CHECK(l2_norm(curl(w)) < 1e-10 * l2_norm(jacobian(w)));
    CHECK(std::abs(mean(w[0])) + std::abs(mean(w[1])) < 1e-14);
    CHECK(l2_norm(divergence(w) - divergence(R)) <= 1e-10 * l2_norm(divergence(R)));
  }
}

TEST_CASE("Bogovskii right inverse", "[divergence_lift]") {
  const ScalarField f = random_band_limited(g, 6, 9) + ScalarField(g, 0.4);
  const VectorField B = bogovskii(f);
  CHECK(max_abs(divergence(B) - (f - ScalarField(g, mean(f)))) < 1e-12);
}

TEST_CASE("twisted divergence fixed point", "[divergence_lift]") {
  const VectorField R = random_vector_field(g, 4, 21);
  SECTION("A = Id reduces to solve_divergence") {
    const auto r = solve_twisted_divergence(TwistedDivProblem::make(R, MatrixField::identity(g)));
    CHECK(r.iterations == 0);
    CHECK(max_abs(r.u - solve_divergence(R)) == 0.0);
  }
  SECTION("|A - Id| = 0.3") {
    const MatrixField A = reflection_perturbation(g, 0.3);
    const auto p = TwistedDivProblem::make(R, A, 1e-8, 40);
    CHECK(p.contraction_norm == Approx(0.3));
    const auto r = solve_twisted_divergence(p);
    CHECK(r.residual <= 1e-8);
    CHECK(r.iterations <= 40);
    CHECK(r.observed_ratio <= 0.4);
    // log-gap slope over iterations 5..25 is no steeper than log(0.3) + 0.1
    const auto long_run = solve_twisted_divergence(TwistedDivProblem::make(R, A, 1e-12, 60));
    CHECK(std::log(geometric_ratio(long_run.gap_history, 5, 25)) <= std::log(0.3) + 0.1);
  }
  SECTION("contraction violated") {
    CHECK_THROWS_AS(solve_twisted_divergence(TwistedDivProblem::make(R, reflection_perturbation(g, 0.9))),
                    ContractionViolated);
  }
  SECTION("iteration cap") {
    CHECK_THROWS_AS(solve_twisted_divergence(TwistedDivProblem::make(R, reflection_perturbation(g, 0.3), 1e-12, 3)),
                    NoConvergence);
  }
}

TEST_CASE("twisted divergence with A from a flow map", "[divergence_lift]") {
  const FlowMap fm = demo_flow_map(g, 0.3, 1.0, 20);
  CHECK(fm.du_linf_integral <= 0.4);
  const MatrixField A = cofactor_inverse(fm);
  const VectorField R = random_vector_field(g, 4, 8);
  const auto r = solve_twisted_divergence(TwistedDivProblem::make(R, A, 1e-9, 100));
  const ScalarField divR = divergence(R);
  CHECK(l2_norm(divergence(apply(A, r.u)) - divR) <= 1e-9);
  CHECK(l2_norm(twisted_contraction(r.u, wrap_inverse(A)) - divR) <= 1e-9);
  // cofactor and inverse agree up to the determinant error
  CHECK(max_abs(A - inverse_jacobian(fm).A) < 1e-5);
}

TEST_CASE("compatibility corrector", "[divergence_lift]") {
  CHECK(max_abs(compatibility_phi(VectorField(g))) == 0.0);
  SECTION("Taylor-Green against two independent evaluations") {
    const VectorField tg = taylor_green(g);
    const VectorField phi = compatibility_phi(tg);
    CHECK(max_abs(phi - compatibility_oracle(tg)) <= 1e-10);
    const VectorField hand = VectorField::from_function(g, [](double x, double y) {
      return std::array<double, 2>{0.5 * std::sin(2 * x), 0.5 * std::sin(2 * y)};
    });
    CHECK(max_abs(phi - hand) <= 1e-12);
  }
  SECTION("single shear mode") {
    const VectorField s =
        VectorField::from_function(g, [](double, double y) { return std::array<double, 2>{std::sin(y), 0.0}; });
    CHECK(max_abs(compatibility_phi(s)) == 0.0);
  }
}
