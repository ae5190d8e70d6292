#pragma once
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vdflow {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Periodic square [0, L)^2 sampled with n points per dimension.
struct Grid {
  int n = 64;
  double L = two_pi;

  Grid() = default;
  explicit Grid(int points, double length = two_pi) : n(points), L(length) { validate(); }

  void validate() const {
    if (n < 8 || (n & (n - 1)) != 0)
      throw std::invalid_argument("grid: n must be a power of two >= 8, got " + std::to_string(n));
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("grid: L must be positive and finite");
  }

  double h() const { return L / n; }
  double cell_area() const { return h() * h(); }
  std::size_t size() const { return std::size_t(n) * std::size_t(n); }
  double coord(int i) const { return i * h(); }
  // First (lowest nonzero) wavenumber of the torus.
  double k0() const { return two_pi / L; }
  std::size_t index(int i, int j) const { return std::size_t(i) * std::size_t(n) + std::size_t(j); }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline double wrap(double x, double L) {
  double r = std::fmod(x, L);
  return r < 0 ? r + L : r;
}

// Distance between two coordinates on a circle of length L, signed and in [-L/2, L/2).
inline double periodic_delta(double a, double b, double L) {
  double d = std::fmod(a - b, L);
  if (d >= 0.5 * L) d -= L;
  if (d < -0.5 * L) d += L;
  return d;
}

}  // namespace vdflow
