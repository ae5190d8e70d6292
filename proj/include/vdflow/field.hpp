#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "parallel.hpp"

namespace vdflow {

// Row-major samples: values[i * n + j] is the value at (x1, x2) = (i h, j h).
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  template <class F>
  static ScalarField from_function(const Grid& g, F&& f) {
    ScalarField s(g);
    parallel_for(g.size(), [&](std::size_t p) {
      const int i = int(p / g.n), j = int(p % g.n);
      s.values[p] = f(g.coord(i), g.coord(j));
    });
    return s;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t p) { return values[p]; }
  double operator[](std::size_t p) const { return values[p]; }
  double& operator()(int i, int j) { return values[grid.index(i, j)]; }
  double operator()(int i, int j) const { return values[grid.index(i, j)]; }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t p = 0; p < size(); ++p) values[p] += o.values[p];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t p = 0; p < size(); ++p) values[p] -= o.values[p];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (auto& v : values) v *= a;
    return *this;
  }
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }
inline ScalarField operator*(ScalarField a, double s) { return a *= s; }

inline ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  ScalarField r(a.grid);
  for (std::size_t p = 0; p < a.size(); ++p) r.values[p] = a.values[p] * b.values[p];
  return r;
}

struct VectorField {
  std::array<ScalarField, 2> c;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0) : c{ScalarField(g, fill), ScalarField(g, fill)} {}
  VectorField(ScalarField a, ScalarField b) : c{std::move(a), std::move(b)} {}

  // f(x1, x2) returns something indexable by 0 and 1.
  template <class F>
  static VectorField from_function(const Grid& g, F&& f) {
    VectorField v(g);
    parallel_for(g.size(), [&](std::size_t p) {
      const int i = int(p / g.n), j = int(p % g.n);
      const auto val = f(g.coord(i), g.coord(j));
      v.c[0].values[p] = val[0];
      v.c[1].values[p] = val[1];
    });
    return v;
  }

  const Grid& grid() const { return c[0].grid; }
  ScalarField& operator[](int k) { return c[k]; }
  const ScalarField& operator[](int k) const { return c[k]; }

  VectorField& operator+=(const VectorField& o) {
    c[0] += o.c[0];
    c[1] += o.c[1];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    c[0] -= o.c[0];
    c[1] -= o.c[1];
    return *this;
  }
  VectorField& operator*=(double a) {
    c[0] *= a;
    c[1] *= a;
    return *this;
  }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }
inline VectorField operator*(VectorField a, double s) { return a *= s; }

inline VectorField scale(const ScalarField& s, const VectorField& v) {
  return VectorField(hadamard(s, v[0]), hadamard(s, v[1]));
}

// Pointwise 2x2 matrix, row-major.
struct Mat2 {
  double a = 0, b = 0, c = 0, d = 0;  // [[a, b], [c, d]]

  static Mat2 identity() { return {1, 0, 0, 1}; }
  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  Mat2 transpose() const { return {a, c, b, d}; }
  Mat2 adjugate() const { return {d, -b, -c, a}; }
  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  std::array<double, 2> apply(double x, double y) const { return {a * x + b * y, c * x + d * y}; }
  double max_abs_entry() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }
  double frobenius() const { return std::sqrt(a * a + b * b + c * c + d * d); }
  // Spectral (operator 2-) norm.
  double op_norm() const {
    const double f2 = a * a + b * b + c * c + d * d;
    const double dt = std::abs(det());
    const double disc = std::sqrt(std::max(0.0, f2 * f2 - 4 * dt * dt));
    return std::sqrt(0.5 * (f2 + disc));
  }
};

// Entry (r, s) lives in e[2 r + s].
struct MatrixField {
  std::array<ScalarField, 4> e;

  MatrixField() = default;
  explicit MatrixField(const Grid& g, double fill = 0.0)
      : e{ScalarField(g, fill), ScalarField(g, fill), ScalarField(g, fill), ScalarField(g, fill)} {}

  static MatrixField identity(const Grid& g) {
    MatrixField m(g);
    m.e[0].values.assign(g.size(), 1.0);
    m.e[3].values.assign(g.size(), 1.0);
    return m;
  }
  template <class F>
  static MatrixField from_function(const Grid& g, F&& f) {
    MatrixField m(g);
    parallel_for(g.size(), [&](std::size_t p) {
      const int i = int(p / g.n), j = int(p % g.n);
      m.set(p, f(g.coord(i), g.coord(j)));
    });
    return m;
  }

  const Grid& grid() const { return e[0].grid; }
  ScalarField& operator()(int r, int s) { return e[2 * r + s]; }
  const ScalarField& operator()(int r, int s) const { return e[2 * r + s]; }

  Mat2 at(std::size_t p) const { return {e[0].values[p], e[1].values[p], e[2].values[p], e[3].values[p]}; }
  void set(std::size_t p, const Mat2& m) {
    e[0].values[p] = m.a;
    e[1].values[p] = m.b;
    e[2].values[p] = m.c;
    e[3].values[p] = m.d;
  }

  MatrixField& operator+=(const MatrixField& o) {
    for (int k = 0; k < 4; ++k) e[k] += o.e[k];
    return *this;
  }
  MatrixField& operator-=(const MatrixField& o) {
    for (int k = 0; k < 4; ++k) e[k] -= o.e[k];
    return *this;
  }
  MatrixField& operator*=(double s) {
    for (auto& x : e) x *= s;
    return *this;
  }
};

inline MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
inline MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
inline MatrixField operator*(double s, MatrixField a) { return a *= s; }

template <class F>
MatrixField map_pointwise(const MatrixField& m, F&& f) {
  MatrixField r(m.grid());
  parallel_for(m.grid().size(), [&](std::size_t p) { r.set(p, f(m.at(p))); });
  return r;
}

inline MatrixField transpose(const MatrixField& m) {
  return map_pointwise(m, [](const Mat2& x) { return x.transpose(); });
}

inline MatrixField multiply(const MatrixField& x, const MatrixField& y) {
  MatrixField r(x.grid());
  parallel_for(x.grid().size(), [&](std::size_t p) { r.set(p, x.at(p) * y.at(p)); });
  return r;
}

// (M v)_i = sum_j M_ij v_j
inline VectorField apply(const MatrixField& m, const VectorField& v) {
  VectorField r(m.grid());
  parallel_for(m.grid().size(), [&](std::size_t p) {
    const auto out = m.at(p).apply(v[0].values[p], v[1].values[p]);
    r[0].values[p] = out[0];
    r[1].values[p] = out[1];
  });
  return r;
}

// ---- reductions (serial, fixed order) ----

inline double sum(const ScalarField& f) {
  double s = 0;
  for (double v : f.values) s += v;
  return s;
}
inline double integral(const ScalarField& f) { return sum(f) * f.grid.cell_area(); }
inline double mean(const ScalarField& f) { return sum(f) / double(f.size()); }

inline double inner(const ScalarField& a, const ScalarField& b) {
  double s = 0;
  for (std::size_t p = 0; p < a.size(); ++p) s += a.values[p] * b.values[p];
  return s * a.grid.cell_area();
}
inline double inner(const VectorField& a, const VectorField& b) { return inner(a[0], b[0]) + inner(a[1], b[1]); }
inline double inner(const MatrixField& a, const MatrixField& b) {
  double s = 0;
  for (int k = 0; k < 4; ++k) s += inner(a.e[k], b.e[k]);
  return s;
}

inline double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }
inline double l2_norm(const VectorField& v) { return std::sqrt(inner(v, v)); }
inline double l2_norm(const MatrixField& m) { return std::sqrt(inner(m, m)); }

inline double lp_norm(const ScalarField& f, double p) {
  double s = 0;
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid.cell_area(), 1.0 / p);
}
// Pointwise Euclidean magnitude, then L^p.
inline double lp_norm(const VectorField& v, double p) {
  double s = 0;
  for (std::size_t q = 0; q < v[0].size(); ++q) s += std::pow(std::hypot(v[0].values[q], v[1].values[q]), p);
  return std::pow(s * v.grid().cell_area(), 1.0 / p);
}
// Pointwise Frobenius magnitude, then L^p.
inline double lp_norm(const MatrixField& m, double p) {
  double s = 0;
  for (std::size_t q = 0; q < m.grid().size(); ++q) s += std::pow(m.at(q).frobenius(), p);
  return std::pow(s * m.grid().cell_area(), 1.0 / p);
}

inline double max_abs(const ScalarField& f) {
  double m = 0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}
inline double max_abs(const VectorField& v) { return std::max(max_abs(v[0]), max_abs(v[1])); }
inline double max_abs(const MatrixField& m) {
  double r = 0;
  for (const auto& x : m.e) r = std::max(r, max_abs(x));
  return r;
}
inline double max_magnitude(const VectorField& v) {
  double m = 0;
  for (std::size_t q = 0; q < v[0].size(); ++q) m = std::max(m, std::hypot(v[0].values[q], v[1].values[q]));
  return m;
}
// Grid maximum of the pointwise operator norm.
inline double max_op_norm(const MatrixField& m) {
  double r = 0;
  for (std::size_t q = 0; q < m.grid().size(); ++q) r = std::max(r, m.at(q).op_norm());
  return r;
}

inline double min_value(const ScalarField& f) { return *std::min_element(f.values.begin(), f.values.end()); }
inline double max_value(const ScalarField& f) { return *std::max_element(f.values.begin(), f.values.end()); }

inline bool all_finite(const ScalarField& f) {
  return std::all_of(f.values.begin(), f.values.end(), [](double v) { return std::isfinite(v); });
}
inline bool all_finite(const VectorField& v) { return all_finite(v[0]) && all_finite(v[1]); }
inline bool all_finite(const MatrixField& m) {
  return std::all_of(m.e.begin(), m.e.end(), [](const ScalarField& s) { return all_finite(s); });
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

}  // namespace vdflow
