#pragma once
#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "field.hpp"

namespace vdflow {

using Complex = std::complex<double>;

// Half-complex spectrum of a real field: n x (n/2 + 1), row i <-> k1, column j <-> k2 >= 0.
struct Spectrum {
  Grid grid;
  std::vector<Complex> c;

  Spectrum() = default;
  explicit Spectrum(const Grid& g) : grid(g), c(std::size_t(g.n) * (g.n / 2 + 1)) {}
  int cols() const { return grid.n / 2 + 1; }
  Complex& operator()(int i, int j) { return c[std::size_t(i) * cols() + j]; }
  Complex operator()(int i, int j) const { return c[std::size_t(i) * cols() + j]; }
};

namespace detail {

struct FftPlans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// Plans are created once per size and never destroyed; execution with new arrays is thread safe.
inline const FftPlans& plans_for(int n) {
  static std::map<int, FftPlans> cache;
  std::lock_guard lock(fftw_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(std::size_t(n) * n);
  std::vector<Complex> spec(std::size_t(n) * (n / 2 + 1));
  auto* cs = reinterpret_cast<fftw_complex*>(spec.data());
  FftPlans p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.forward = fftw_plan_dft_r2c_2d(n, n, real.data(), cs, flags);
  p.backward = fftw_plan_dft_c2r_2d(n, n, cs, real.data(), flags);
  return cache.emplace(n, p).first->second;
}

}  // namespace detail

inline Spectrum fft(const ScalarField& f) {
  Spectrum s(f.grid);
  std::vector<double> in = f.values;
  fftw_execute_dft_r2c(detail::plans_for(f.grid.n).forward, in.data(), reinterpret_cast<fftw_complex*>(s.c.data()));
  return s;
}

inline ScalarField ifft(const Spectrum& s) {
  ScalarField f(s.grid);
  std::vector<Complex> in = s.c;  // c2r overwrites its input
  fftw_execute_dft_c2r(detail::plans_for(s.grid.n).backward, reinterpret_cast<fftw_complex*>(in.data()),
                       f.values.data());
  const double norm = 1.0 / double(f.size());
  for (auto& v : f.values) v *= norm;
  return f;
}

// Signed integer wavenumber index for FFT slot i.
inline int mode_index(int i, int n) { return i <= n / 2 ? i : i - n; }
inline bool is_nyquist(int i, int j, int n) { return i == n / 2 || j == n / 2; }

// Calls f(slot, k1, k2) with physical wavenumbers for every non-Nyquist mode; zeroes Nyquist modes.
template <class F>
void for_each_mode(Spectrum& s, F&& f) {
  const int n = s.grid.n, cols = s.cols();
  const double k0 = s.grid.k0();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cols; ++j) {
      Complex& slot = s(i, j);
      if (is_nyquist(i, j, n)) {
        slot = 0.0;
        continue;
      }
      f(slot, k0 * mode_index(i, n), k0 * j);
    }
  }
}

// Applies a Fourier multiplier m(k1, k2).
template <class M>
ScalarField apply_multiplier(const ScalarField& f, M&& m) {
  Spectrum s = fft(f);
  for_each_mode(s, [&](Complex& c, double k1, double k2) { c *= m(k1, k2); });
  return ifft(s);
}

inline const Complex I_unit{0.0, 1.0};

inline ScalarField partial(const ScalarField& f, int dir) {
  return apply_multiplier(f, [dir](double k1, double k2) { return I_unit * (dir == 0 ? k1 : k2); });
}

inline VectorField gradient(const ScalarField& f) {
  Spectrum s = fft(f);
  Spectrum s2 = s;
  for_each_mode(s, [](Complex& c, double k1, double) { c *= I_unit * k1; });
  for_each_mode(s2, [](Complex& c, double, double k2) { c *= I_unit * k2; });
  return VectorField(ifft(s), ifft(s2));
}

inline ScalarField divergence(const VectorField& v) {
  Spectrum a = fft(v[0]);
  Spectrum b = fft(v[1]);
  Spectrum out(v.grid());
  const int n = out.grid.n, cols = out.cols();
  const double k0 = out.grid.k0();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j)
      out(i, j) = is_nyquist(i, j, n) ? Complex(0.0) : I_unit * (k0 * mode_index(i, n) * a(i, j) + k0 * j * b(i, j));
  return ifft(out);
}

inline ScalarField laplacian(const ScalarField& f) {
  return apply_multiplier(f, [](double k1, double k2) { return Complex(-(k1 * k1 + k2 * k2)); });
}

inline VectorField laplacian(const VectorField& v) { return VectorField(laplacian(v[0]), laplacian(v[1])); }

struct InverseLaplacianResult {
  ScalarField field;
  double removed_mean = 0.0;  // mean of the input, dropped before inversion
};

// Solves Laplace(u) = f - mean(f) with mean(u) = 0.
inline InverseLaplacianResult inverse_laplacian(const ScalarField& f) {
  InverseLaplacianResult r;
  r.removed_mean = mean(f);
  r.field = apply_multiplier(f, [](double k1, double k2) {
    const double k2s = k1 * k1 + k2 * k2;
    return k2s == 0.0 ? Complex(0.0) : Complex(-1.0 / k2s);
  });
  return r;
}

namespace detail {
// Applies a 2x2 complex multiplier field to (v1, v2) in Fourier space.
template <class M>
VectorField apply_vector_multiplier(const VectorField& v, M&& m) {
  Spectrum a = fft(v[0]);
  Spectrum b = fft(v[1]);
  const int n = a.grid.n, cols = a.cols();
  const double k0 = a.grid.k0();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (is_nyquist(i, j, n)) {
        a(i, j) = b(i, j) = 0.0;
        continue;
      }
      const auto out = m(k0 * mode_index(i, n), k0 * j, a(i, j), b(i, j));
      a(i, j) = out[0];
      b(i, j) = out[1];
    }
  }
  return VectorField(ifft(a), ifft(b));
}
}  // namespace detail

// Orthogonal projection onto divergence-free fields; the mean is kept.
inline VectorField leray_project(const VectorField& v) {
  return detail::apply_vector_multiplier(v, [](double k1, double k2, Complex a, Complex b) {
    const double k2s = k1 * k1 + k2 * k2;
    if (k2s == 0.0) return std::array<Complex, 2>{a, b};
    const Complex dot = (k1 * a + k2 * b) / k2s;
    return std::array<Complex, 2>{a - k1 * dot, b - k2 * dot};
  });
}

// Leray projection followed by removal of the mean.
inline VectorField leray_project_mean_zero(const VectorField& v) {
  return detail::apply_vector_multiplier(v, [](double k1, double k2, Complex a, Complex b) {
    const double k2s = k1 * k1 + k2 * k2;
    if (k2s == 0.0) return std::array<Complex, 2>{Complex(0.0), Complex(0.0)};
    const Complex dot = (k1 * a + k2 * b) / k2s;
    return std::array<Complex, 2>{a - k1 * dot, b - k2 * dot};
  });
}

// Curl-free, mean-zero part: k (k . v) / |k|^2.
inline VectorField gradient_part(const VectorField& v) {
  return detail::apply_vector_multiplier(v, [](double k1, double k2, Complex a, Complex b) {
    const double k2s = k1 * k1 + k2 * k2;
    if (k2s == 0.0) return std::array<Complex, 2>{Complex(0.0), Complex(0.0)};
    const Complex dot = (k1 * a + k2 * b) / k2s;
    return std::array<Complex, 2>{k1 * dot, k2 * dot};
  });
}

inline VectorField remove_mean(VectorField v) {
  for (int k = 0; k < 2; ++k) {
    const double m = mean(v[k]);
    for (auto& x : v[k].values) x -= m;
  }
  return v;
}

// Scalar vorticity d1 v2 - d2 v1.
inline ScalarField curl(const VectorField& v) { return partial(v[1], 0) - partial(v[0], 1); }

// Velocity (d2 psi, -d1 psi) from a stream function; divergence-free by construction.
inline VectorField perp_gradient(const ScalarField& psi) {
  VectorField g = gradient(psi);
  return VectorField(g[1], -1.0 * g[0]);
}

// 2/3-rule truncation: keeps modes with |k_index| <= n/3 in both directions.
inline ScalarField dealias(const ScalarField& f) {
  Spectrum s = fft(f);
  const int n = s.grid.n, cols = s.cols(), kmax = n / 3;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < cols; ++j)
      if (std::abs(mode_index(i, n)) > kmax || j > kmax) s(i, j) = 0.0;
  return ifft(s);
}
inline VectorField dealias(const VectorField& v) { return VectorField(dealias(v[0]), dealias(v[1])); }

// Largest absolute wavenumber index carrying more than `tol` relative energy; used in tests.
inline int bandwidth(const ScalarField& f, double tol = 1e-12) {
  Spectrum s = fft(f);
  double peak = 0;
  for (auto& c : s.c) peak = std::max(peak, std::abs(c));
  int bw = 0;
  const int n = s.grid.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < s.cols(); ++j)
      if (std::abs(s(i, j)) > tol * peak) bw = std::max({bw, std::abs(mode_index(i, n)), j});
  return bw;
}

// Jacobian (Dv)_ij = d_j v_i.
inline MatrixField jacobian(const VectorField& v) {
  MatrixField m(v.grid());
  for (int i = 0; i < 2; ++i) {
    VectorField g = gradient(v[i]);
    m(i, 0) = std::move(g[0]);
    m(i, 1) = std::move(g[1]);
  }
  return m;
}

// Hessian of a scalar, symmetric.
inline MatrixField hessian(const ScalarField& f) {
  Spectrum s = fft(f);
  MatrixField m(f.grid);
  const int dirs[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (auto& d : dirs) {
    Spectrum t = s;
    for_each_mode(t, [&](Complex& c, double k1, double k2) {
      const double ka = d[0] == 0 ? k1 : k2, kb = d[1] == 0 ? k1 : k2;
      c *= -ka * kb;
    });
    ScalarField r = ifft(t);
    m(d[0], d[1]) = r;
    if (d[0] != d[1]) m(d[1], d[0]) = std::move(r);
  }
  return m;
}

// Row-wise divergence: (div M)_i = sum_j d_j M_ij.
inline VectorField divergence_rows(const MatrixField& m) {
  return VectorField(divergence(VectorField(m(0, 0), m(0, 1))), divergence(VectorField(m(1, 0), m(1, 1))));
}

// sum_ij (d_j v_i)^2 integrated, i.e. the squared L2 norm of the velocity gradient.
inline double gradient_energy(const VectorField& v) {
  const MatrixField g = jacobian(v);
  return inner(g, g);
}

}  // namespace vdflow
