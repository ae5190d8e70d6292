#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "flow_map.hpp"

namespace vdflow {

// Curl-free, mean-zero w with div w = div R: w = -grad (-Laplace)^{-1} div R.
inline VectorField solve_divergence(const VectorField& R) { return gradient_part(R); }

// Right inverse of the divergence on mean-zero scalars: div B[f] = f - mean(f).
inline VectorField bogovskii(const ScalarField& f) { return gradient(inverse_laplacian(f).field); }

struct TwistedDivProblem {
  VectorField R;
  MatrixField A;
  double contraction_norm = 0.0;  // max_y |A - Id|
  double tol = 1e-10;
  int max_iter = 100;
  double contraction_threshold = 0.5;

  static TwistedDivProblem make(VectorField R, MatrixField A, double tol = 1e-10, int max_iter = 100,
                                double threshold = 0.5) {
    TwistedDivProblem p{std::move(R), std::move(A), 0.0, tol, max_iter, threshold};
    p.contraction_norm = max_op_norm(p.A - MatrixField::identity(p.A.grid()));
    return p;
  }
};

struct TwistedDivResult {
  VectorField u;
  int iterations = 0;
  double residual = 0.0;                 // |div(A u) - div R|_{L2}
  std::vector<double> residual_history;  // residual after each iteration
  std::vector<double> gap_history;       // |xi_{k+1} - xi_k|_{L2}
  double observed_ratio = 0.0;           // geometric-mean gap ratio over the tail
};

inline double twisted_residual(const VectorField& u, const MatrixField& A, const ScalarField& divR) {
  return l2_norm(divergence(apply(A, u)) - divR);
}

// Geometric-mean ratio of consecutive entries over [first, last] (clamped to the history).
inline double geometric_ratio(const std::vector<double>& h, std::size_t first = 5, std::size_t last = 25) {
  if (h.size() < 2) return 0.0;
  last = std::min(last, h.size() - 1);
  first = std::min(first, last > 0 ? last - 1 : 0);
  // skip entries at round-off level, where the ratio is meaningless
  while (last > first + 1 && h[last] < 1e-13 * h[0]) --last;
  if (last <= first || h[first] <= 0 || h[last] <= 0) return 0.0;
  return std::pow(h[last] / h[first], 1.0 / double(last - first));
}

// Banach iteration xi <- B[div((Id - A) xi + R)].
inline TwistedDivResult solve_twisted_divergence(const TwistedDivProblem& p) {
  if (!(p.contraction_norm <= p.contraction_threshold))
    throw ContractionViolated("solve_twisted_divergence: |A - Id|_inf = " + std::to_string(p.contraction_norm) +
                              " exceeds the contraction threshold " + std::to_string(p.contraction_threshold));
  const Grid& g = p.A.grid();
  const MatrixField IminusA = MatrixField::identity(g) - p.A;
  const ScalarField divR = divergence(p.R);
  TwistedDivResult r;
  r.u = solve_divergence(p.R);
  r.residual = twisted_residual(r.u, p.A, divR);
  r.residual_history.push_back(r.residual);
  while (r.residual > p.tol && r.iterations < p.max_iter) {
    VectorField next = solve_divergence(apply(IminusA, r.u) + p.R);
    r.gap_history.push_back(l2_norm(next - r.u));
    r.u = std::move(next);
    ++r.iterations;
    r.residual = twisted_residual(r.u, p.A, divR);
    r.residual_history.push_back(r.residual);
  }
  r.observed_ratio = geometric_ratio(r.gap_history, 2, 25);
  if (r.residual > p.tol)
    throw NoConvergence("solve_twisted_divergence: residual " + std::to_string(r.residual) + " after " +
                        std::to_string(r.iterations) + " iterations");
  return r;
}

// phi = B[-div(A_t|0 u0)] with A_t|0 = -D u0, i.e. B[div(u0 . grad u0)].
inline VectorField compatibility_phi(const VectorField& u0) {
  const MatrixField At0 = a_time_derivative(FlowMap::identity(u0.grid()), u0);
  const VectorField g = apply(At0, u0);
  return bogovskii(-1.0 * divergence(g));
}

}  // namespace vdflow
