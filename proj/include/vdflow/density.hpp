#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "flow_map.hpp"

namespace vdflow {

struct Disk {
  double cx = 0, cy = 0, r = 1;
};
struct Rectangle {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};
// Membership decided by the nearest grid point of the mask.
struct GridMask {
  Grid grid;
  std::vector<std::uint8_t> inside;
};

using Indicator = std::variant<Disk, Rectangle, GridMask>;

// Periodic membership test on the torus of side L.
inline bool contains(const Indicator& set, double x, double y, double L) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          const double dx = periodic_delta(x, s.cx, L), dy = periodic_delta(y, s.cy, L);
          return dx * dx + dy * dy < s.r * s.r;
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          const double dx = periodic_delta(x, s.x0, L), dy = periodic_delta(y, s.y0, L);
          const double ux = dx < 0 ? dx + L : dx, uy = dy < 0 ? dy + L : dy;
          return ux < s.x1 - s.x0 && uy < s.y1 - s.y0;
        } else {
          const int n = s.grid.n;
          const double h = s.grid.h();
          const int i = int(std::lround(wrap(x, L) / h)) % n, j = int(std::lround(wrap(y, L) / h)) % n;
          return s.inside[s.grid.index(i, j)] != 0;
        }
      },
      set);
}

// rho0 = m + sigma * 1_{A0}.
struct PiecewiseConstantDensity {
  double m = 1.0;
  double sigma = 0.0;
  Indicator set = Disk{};
};

// Bounded field with m < rho0 < M; transported values are interpolated bilinearly,
// which keeps them inside the initial range.
struct GeneralDensity {
  ScalarField field;
  double m = 0.0;
  double M = 0.0;
};

struct Density {
  std::variant<PiecewiseConstantDensity, GeneralDensity> kind;

  static Density uniform(double m) { return {PiecewiseConstantDensity{m, 0.0, Disk{0, 0, 0}}}; }
  static Density piecewise(double m, double sigma, Indicator set) {
    Density d{PiecewiseConstantDensity{m, sigma, std::move(set)}};
    d.validate();
    return d;
  }
  static Density general(ScalarField f, double m, double M) {
    Density d{GeneralDensity{std::move(f), m, M}};
    d.validate();
    return d;
  }

  void validate() const {
    if (auto* p = std::get_if<PiecewiseConstantDensity>(&kind)) {
      if (!(p->m > 0)) throw std::invalid_argument("density: m must be positive");
      if (!(p->m + p->sigma > 0)) throw std::invalid_argument("density: m + sigma must be positive");
    } else {
      const auto& g = std::get<GeneralDensity>(kind);
      if (!(g.m > 0)) throw std::invalid_argument("density: lower bound m must be positive");
      if (!(min_value(g.field) > g.m && max_value(g.field) < g.M))
        throw std::invalid_argument("density: field must satisfy m < rho0 < M pointwise");
    }
  }

  bool is_piecewise_constant() const { return std::holds_alternative<PiecewiseConstantDensity>(kind); }
  bool is_uniform() const {
    auto* p = std::get_if<PiecewiseConstantDensity>(&kind);
    return p && p->sigma == 0.0;
  }

  // inf and sup of rho0 (for the sampled general kind, of the samples).
  double inf() const {
    if (auto* p = std::get_if<PiecewiseConstantDensity>(&kind)) return std::min(p->m, p->m + p->sigma);
    return min_value(std::get<GeneralDensity>(kind).field);
  }
  double sup() const {
    if (auto* p = std::get_if<PiecewiseConstantDensity>(&kind)) return std::max(p->m, p->m + p->sigma);
    return max_value(std::get<GeneralDensity>(kind).field);
  }

  // Value of rho0 at label y.
  double value_at(double y1, double y2, double L) const {
    if (auto* p = std::get_if<PiecewiseConstantDensity>(&kind))
      return p->sigma != 0.0 && contains(p->set, y1, y2, L) ? p->m + p->sigma : p->m;
    const auto& g = std::get<GeneralDensity>(kind);
    return ScalarInterpolant(g.field, InterpKind::bilinear)(y1, y2);
  }

  ScalarField sample(const Grid& g) const {
    if (auto* gen = std::get_if<GeneralDensity>(&kind); gen && gen->field.grid == g) return gen->field;
    return ScalarField::from_function(g, [&](double x, double y) { return value_at(x, y, g.L); });
  }
};

// (sup rho0 - inf rho0) / inf rho0.
inline double jump_ratio(const Density& rho0) {
  if (auto* p = std::get_if<PiecewiseConstantDensity>(&rho0.kind)) return std::abs(p->sigma) / std::min(p->m, p->m + p->sigma);
  const double lo = rho0.inf(), hi = rho0.sup();
  return (hi - lo) / lo;
}

// rho(t, x) = rho0(Y(t, x)) at every grid point.
inline ScalarField density_at_time(const Density& rho0, const FlowMap& fm, const InverseMapOptions& opt = {}) {
  const Grid& g = fm.grid;
  if (rho0.is_uniform()) return ScalarField(g, std::get<PiecewiseConstantDensity>(rho0.kind).m);
  if (fm.time == 0.0 && max_abs(fm.displacement) == 0.0) return rho0.sample(g);
  const VectorField Y = inverse_map(fm, opt);
  if (auto* gen = std::get_if<GeneralDensity>(&rho0.kind)) {
    const ScalarInterpolant f(gen->field, InterpKind::bilinear);
    ScalarField out(g);
    parallel_for(g.size(), [&](std::size_t p) { out.values[p] = f(Y[0].values[p], Y[1].values[p]); });
    return out;
  }
  const auto& pc = std::get<PiecewiseConstantDensity>(rho0.kind);
  ScalarField out(g);
  parallel_for(g.size(), [&](std::size_t p) {
    out.values[p] = contains(pc.set, Y[0].values[p], Y[1].values[p], g.L) ? pc.m + pc.sigma : pc.m;
  });
  return out;
}

// Distinct values of a field, for structure checks.
inline std::set<double> value_set(const ScalarField& f) { return {f.values.begin(), f.values.end()}; }

// ---- interface markers ----

struct InterfaceMarkers {
  double time = 0.0;
  std::vector<Point> points;  // ordered, unwrapped positions
};

inline InterfaceMarkers disk_markers(const Disk& d, int count = 256) {
  if (count < 16) throw std::invalid_argument("disk_markers: at least 16 markers required");
  InterfaceMarkers m;
  m.points.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / count;
    m.points.push_back({d.cx + d.r * std::cos(a), d.cy + d.r * std::sin(a)});
  }
  return m;
}

inline InterfaceMarkers rectangle_markers(const Rectangle& r, int per_side = 64) {
  InterfaceMarkers m;
  const Point c[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
  for (int s = 0; s < 4; ++s) {
    const Point a = c[s], b = c[(s + 1) % 4];
    for (int k = 0; k < per_side; ++k) {
      const double t = double(k) / per_side;
      m.points.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
  }
  return m;
}

// Heun step with the velocity at the start and end of the interval.
inline InterfaceMarkers advect_markers(const InterfaceMarkers& mk, const VectorField& v_start, const VectorField& v_end,
                                       double dt, InterpKind interp = InterpKind::fourier_exact) {
  if (!(dt > 0)) throw std::invalid_argument("advect_markers: dt must be positive");
  const VectorInterpolant a(v_start, interp);
  const VectorInterpolant b(v_end, interp);
  InterfaceMarkers out{mk.time + dt, mk.points};
  parallel_for(mk.points.size(), [&](std::size_t k) {
    const Point x = mk.points[k];
    const auto k1 = a(x[0], x[1]);
    const auto k2 = b(x[0] + dt * k1[0], x[1] + dt * k1[1]);
    out.points[k] = {x[0] + 0.5 * dt * (k1[0] + k2[0]), x[1] + 0.5 * dt * (k1[1] + k2[1])};
  });
  return out;
}

inline InterfaceMarkers advect_markers(const InterfaceMarkers& mk, const VectorField& v, double dt,
                                       InterpKind interp = InterpKind::fourier_exact) {
  return advect_markers(mk, v, v, dt, interp);
}

namespace detail {
inline double orient(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}
inline bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}
}  // namespace detail

inline bool is_simple_polygon(const std::vector<Point>& pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = pts[i];
    const Point& b = pts[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (detail::segments_cross(a, b, pts[j], pts[(j + 1) % n])) return false;
    }
  }
  return true;
}

// Shoelace area of the marker polygon.
inline double enclosed_area(const InterfaceMarkers& mk) {
  if (mk.points.size() < 3) throw DegenerateInput("enclosed_area: need at least 3 markers");
  if (!is_simple_polygon(mk.points))
    throw SelfIntersection("enclosed_area: marker polygon self-intersects at t = " + std::to_string(mk.time) +
                           "; the interface is under-resolved");
  double s = 0;
  const std::size_t n = mk.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = mk.points[i];
    const Point& b = mk.points[(i + 1) % n];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * std::abs(s);
}

}  // namespace vdflow
