#pragma once
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spectral.hpp"

namespace vdflow {

enum class InterpKind {
  bilinear,          // monotone, first derivative discontinuous, O(h^2)
  fourier_lagrange,  // spectral upsampling then a 6-point Lagrange stencil, O((h/r)^6)
  fourier_exact,     // direct evaluation of the Fourier series, O(n^2) per point
};

inline InterpKind parse_interp_kind(const std::string& s) {
  if (s == "bilinear") return InterpKind::bilinear;
  if (s == "fourier_lagrange") return InterpKind::fourier_lagrange;
  if (s == "fourier_exact") return InterpKind::fourier_exact;
  throw std::invalid_argument("unknown interpolation kind '" + s + "'");
}

inline const char* to_string(InterpKind k) {
  switch (k) {
    case InterpKind::bilinear: return "bilinear";
    case InterpKind::fourier_lagrange: return "fourier_lagrange";
    case InterpKind::fourier_exact: return "fourier_exact";
  }
  return "?";
}

// Zero-padded spectral resampling onto a grid with `factor` times more points.
inline ScalarField upsample(const ScalarField& f, int factor) {
  const Grid& g = f.grid;
  const Grid fine(g.n * factor, g.L);
  Spectrum src = fft(f);
  Spectrum dst(fine);
  const double scale = double(factor) * factor;
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < src.cols(); ++j) {
      if (is_nyquist(i, j, g.n)) continue;
      const int k1 = mode_index(i, g.n);
      dst(k1 < 0 ? k1 + fine.n : k1, j) = scale * src(i, j);
    }
  }
  return ifft(dst);
}

class ScalarInterpolant {
 public:
  ScalarInterpolant() = default;
  ScalarInterpolant(const ScalarField& f, InterpKind kind, int upsample_factor = 2) : kind_(kind), L_(f.grid.L) {
    switch (kind) {
      case InterpKind::bilinear: data_ = f; break;
      case InterpKind::fourier_lagrange: data_ = upsample(f, upsample_factor); break;
      case InterpKind::fourier_exact: spec_ = fft(f); break;
    }
  }

  InterpKind kind() const { return kind_; }

  double operator()(double x, double y) const {
    switch (kind_) {
      case InterpKind::bilinear: return bilinear(x, y);
      case InterpKind::fourier_lagrange: return lagrange(x, y);
      case InterpKind::fourier_exact: return exact(x, y);
    }
    return 0.0;
  }

 private:
  double bilinear(double x, double y) const {
    const int n = data_.grid.n;
    const double h = data_.grid.h();
    const double sx = wrap(x, L_) / h, sy = wrap(y, L_) / h;
    const int i0 = int(std::floor(sx)), j0 = int(std::floor(sy));
    const double tx = sx - i0, ty = sy - j0;
    const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n, ia = i0 % n, ja = j0 % n;
    return (1 - tx) * ((1 - ty) * data_(ia, ja) + ty * data_(ia, j1)) + tx * ((1 - ty) * data_(i1, ja) + ty * data_(i1, j1));
  }

  static std::array<double, 6> lagrange_weights(double t) {
    // Nodes at -2..3 relative to the base cell.
    std::array<double, 6> w{};
    for (int k = 0; k < 6; ++k) {
      double num = 1, den = 1;
      for (int j = 0; j < 6; ++j) {
        if (j == k) continue;
        num *= t - (j - 2);
        den *= double(k - j);
      }
      w[k] = num / den;
    }
    return w;
  }

  double lagrange(double x, double y) const {
    const int n = data_.grid.n;
    const double h = data_.grid.h();
    const double sx = wrap(x, L_) / h, sy = wrap(y, L_) / h;
    const int i0 = int(std::floor(sx)), j0 = int(std::floor(sy));
    const auto wx = lagrange_weights(sx - i0), wy = lagrange_weights(sy - j0);
    int jj[6];
    for (int b = 0; b < 6; ++b) jj[b] = ((j0 + b - 2) % n + n) % n;
    double acc = 0;
    for (int a = 0; a < 6; ++a) {
      const int ii = ((i0 + a - 2) % n + n) % n;
      const double* row = &data_.values[std::size_t(ii) * n];
      double r = 0;
      for (int b = 0; b < 6; ++b) r += wy[b] * row[jj[b]];
      acc += wx[a] * r;
    }
    return acc;
  }

  double exact(double x, double y) const {
    const Grid& g = spec_.grid;
    const int n = g.n, cols = spec_.cols();
    const double k0 = g.k0();
    std::vector<Complex> ey(cols);
    for (int j = 0; j < cols; ++j) ey[j] = std::polar(1.0, k0 * j * y);
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      const Complex ex = std::polar(1.0, k0 * mode_index(i, n) * x);
      for (int j = 0; j < cols; ++j) {
        if (is_nyquist(i, j, n)) continue;
        const double w = j == 0 ? 1.0 : 2.0;
        acc += w * (spec_(i, j) * ex * ey[j]).real();
      }
    }
    return acc / double(g.size());
  }

  InterpKind kind_ = InterpKind::fourier_lagrange;
  double L_ = two_pi;
  ScalarField data_;
  Spectrum spec_;
};

class VectorInterpolant {
 public:
  VectorInterpolant() = default;
  VectorInterpolant(const VectorField& v, InterpKind kind, int upsample_factor = 2)
      : a_(v[0], kind, upsample_factor), b_(v[1], kind, upsample_factor) {}
  std::array<double, 2> operator()(double x, double y) const { return {a_(x, y), b_(x, y)}; }

 private:
  ScalarInterpolant a_, b_;
};

}  // namespace vdflow
