#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include "spectral.hpp"

namespace vdflow {

// Taylor-Green vortex amplitude * (sin x1 cos x2, -cos x1 sin x2) scaled to the box.
inline VectorField taylor_green(const Grid& g, double amplitude = 1.0) {
  const double k = g.k0();
  return VectorField::from_function(g, [&](double x, double y) {
    return std::array<double, 2>{amplitude * std::sin(k * x) * std::cos(k * y),
                                 -amplitude * std::cos(k * x) * std::sin(k * y)};
  });
}

// Exact Navier-Stokes solution for constant density: TG decays like exp(-2 nu k0^2 t).
inline VectorField taylor_green_exact(const Grid& g, double nu, double t, double amplitude = 1.0) {
  const double k = g.k0();
  return taylor_green(g, amplitude * std::exp(-2.0 * nu * k * k * t));
}

// Random real field whose Fourier modes satisfy max(|k1|,|k2|) <= bandwidth, with
// coefficients decaying like 1/(1+|k|^2)^(decay/2). Mean is zero.
inline ScalarField random_band_limited(const Grid& g, int bandwidth, std::uint64_t seed, double decay = 1.0) {
  if (bandwidth >= g.n / 2) throw std::invalid_argument("random_band_limited: bandwidth must be below n/2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Spectrum s(g);
  const double half = 0.5 * double(g.size());
  for (int a = -bandwidth; a <= bandwidth; ++a) {
    for (int b = 0; b <= bandwidth; ++b) {
      if (b == 0 && a <= 0) continue;  // conjugate half is implied
      const double c = gauss(rng), sn = gauss(rng);
      const double amp = std::pow(1.0 + double(a * a + b * b), -0.5 * decay);
      const Complex coef = half * amp * Complex(c, -sn);  // c cos(theta) + sn sin(theta)
      const int i = a < 0 ? a + g.n : a;
      s(i, b) = coef;
      if (b == 0) s(g.n - a, 0) = std::conj(coef);
    }
  }
  return ifft(s);
}

inline VectorField random_vector_field(const Grid& g, int bandwidth, std::uint64_t seed, double decay = 1.0) {
  return VectorField(random_band_limited(g, bandwidth, seed, decay),
                     random_band_limited(g, bandwidth, seed + 0x9e3779b97f4a7c15ULL, decay));
}

// Random divergence-free field from a random stream function.
inline VectorField random_solenoidal_field(const Grid& g, int bandwidth, std::uint64_t seed, double decay = 2.0) {
  return perp_gradient(random_band_limited(g, bandwidth, seed, decay));
}

inline VectorField normalized(VectorField v, double target_l2 = 1.0) {
  const double nrm = l2_norm(v);
  if (nrm > 0) v *= target_l2 / nrm;
  return v;
}

}  // namespace vdflow
