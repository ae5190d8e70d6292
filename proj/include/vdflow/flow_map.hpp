#pragma once
#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "interpolation.hpp"
#include "io.hpp"
#include "spectral.hpp"

namespace vdflow {

struct FlowMapTolerances {
  double det_tol = 1e-6;
  double inv_tol = 1e-10;
  double det_floor = 1e-3;
  double inverse_map_tol = 1e-10;
  double identity_tol = 1e-6;
  double interp_tol = 1e-6;
  int max_iter = 100;
  int k_max = 30;
};

// Lagrangian map X(t, y) = y + displacement(y) on the fixed label grid.
struct FlowMap {
  Grid grid;
  double time = 0.0;
  VectorField displacement;       // int_0^t u dt'
  MatrixField jacobian_integral;  // int_0^t D_y u dt'
  double du_linf_integral = 0.0;  // int_0^t max_y |D_y u| dt'
  // Lagrangian velocity at `time` and its gradient norm; the start value of the next trapezoid.
  VectorField velocity;
  double du_linf = 0.0;
  // Lagrangian velocity one step earlier, for the third-order accumulation.
  std::optional<VectorField> previous_velocity;

  FlowMap() = default;
  explicit FlowMap(const Grid& g)
      : grid(g), displacement(g), jacobian_integral(g), velocity(g) {}

  static FlowMap identity(const Grid& g) { return FlowMap(g); }

  // Identity map whose current velocity is v0 (X = id, so u0 = v0).
  static FlowMap starting_with(const VectorField& v0) {
    FlowMap fm(v0.grid());
    fm.velocity = v0;
    fm.du_linf = max_op_norm(jacobian(v0));
    return fm;
  }

  // D_y X = Id + jacobian_integral.
  MatrixField deformation_gradient() const { return MatrixField::identity(grid) + jacobian_integral; }

  ScalarField determinant() const {
    ScalarField d(grid);
    const MatrixField F = deformation_gradient();
    for (std::size_t p = 0; p < grid.size(); ++p) d.values[p] = F.at(p).det();
    return d;
  }

  std::array<double, 2> position(std::size_t p) const {
    const int i = int(p / grid.n), j = int(p % grid.n);
    return {grid.coord(i) + displacement[0].values[p], grid.coord(j) + displacement[1].values[p]};
  }
};

// Trapezoidal accumulation with Lagrangian velocities at the start and end of the step.
inline FlowMap advance_flow_map(const FlowMap& fm, const VectorField& u_start, const VectorField& u_end, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("advance_flow_map: dt must be positive");
  require_same_grid(fm.grid, u_end.grid(), "advance_flow_map");
  FlowMap out = fm;
  const MatrixField g0 = jacobian(u_start), g1 = jacobian(u_end);
  const double n0 = max_op_norm(g0), n1 = max_op_norm(g1);
  out.displacement += (0.5 * dt) * (u_start + u_end);
  out.jacobian_integral += (0.5 * dt) * (g0 + g1);
  out.du_linf_integral += 0.5 * dt * (n0 + n1);
  out.time += dt;
  out.previous_velocity = u_start;
  out.velocity = u_end;
  out.du_linf = n1;
  return out;
}

// Third-order Adams-Moulton accumulation dt/12 (5 u_end + 8 u_start - u_prev), i.e. the
// trapezoid minus dt/12 times the second difference. The gradient-norm integral stays trapezoidal.
inline FlowMap advance_flow_map_am3(const FlowMap& fm, const VectorField& u_prev, const VectorField& u_start,
                                    const VectorField& u_end, double dt) {
  FlowMap out = advance_flow_map(fm, u_start, u_end, dt);
  const VectorField curv = (-dt / 12.0) * (u_end - 2.0 * u_start + u_prev);
  out.displacement += curv;
  out.jacobian_integral += jacobian(curv);
  return out;
}

// Frozen-velocity step: u acts over the whole interval.
inline FlowMap advance_flow_map(const FlowMap& fm, const VectorField& u, double dt) {
  return advance_flow_map(fm, u, u, dt);
}

// ---- inverse Jacobian ----

struct InverseMethod {
  enum class Kind { direct_adjugate, neumann_series } kind = Kind::direct_adjugate;
  int k_max = 30;
  static InverseMethod direct() { return {Kind::direct_adjugate, 0}; }
  static InverseMethod neumann(int k_max = 30) { return {Kind::neumann_series, k_max}; }
};

struct InverseJacobian {
  Grid grid;
  MatrixField A;
  InverseMethod method;
  double tail_bound = 0.0;  // truncation bound r^(k+1)/(1-r) for the series, 0 for direct
};

// sum_{k=0}^{k_max} (-J)^k, pointwise, by Horner.
inline MatrixField neumann_inverse(const MatrixField& J, int k_max) {
  return map_pointwise(J, [k_max](const Mat2& j) {
    const Mat2 mj = j * -1.0;
    Mat2 acc = Mat2::identity();
    for (int k = 0; k < k_max; ++k) acc = Mat2::identity() + mj * acc;
    return acc;
  });
}

inline InverseJacobian inverse_jacobian(const FlowMap& fm, InverseMethod method = InverseMethod::direct(),
                                        const FlowMapTolerances& tol = {}) {
  InverseJacobian inv{fm.grid, MatrixField(fm.grid), method, 0.0};
  if (method.kind == InverseMethod::Kind::direct_adjugate) {
    const MatrixField F = fm.deformation_gradient();
    for (std::size_t p = 0; p < fm.grid.size(); ++p) {
      const Mat2 f = F.at(p);
      const double det = f.det();
      if (!(std::abs(det) >= tol.det_floor))
        throw SingularJacobian("inverse_jacobian: |det D_yX| = " + std::to_string(std::abs(det)) + " below floor " +
                               std::to_string(tol.det_floor));
      inv.A.set(p, f.adjugate() * (1.0 / det));
    }
    return inv;
  }
  const double r = fm.du_linf_integral;
  if (!(r < 1.0))
    throw SeriesDiverged("inverse_jacobian: integral of |D_y u| is " + std::to_string(r) +
                         ", the Neumann series needs it below 1");
  inv.A = neumann_inverse(fm.jacobian_integral, method.k_max);
  inv.tail_bound = std::pow(r, method.k_max + 1) / (1.0 - r);
  return inv;
}

inline InverseJacobian identity_inverse(const Grid& g) {
  return {g, MatrixField::identity(g), InverseMethod::direct(), 0.0};
}

inline InverseJacobian wrap_inverse(const MatrixField& A) { return {A.grid(), A, InverseMethod::direct(), 0.0}; }

// ---- inverse map ----

struct InverseMapOptions {
  InterpKind interp = InterpKind::fourier_lagrange;
  double tol = 1e-10;
  int max_iter = 100;
};

using Point = std::array<double, 2>;

namespace detail {
inline Point solve_inverse_point(const VectorInterpolant& d, const Point& x, const InverseMapOptions& opt) {
  Point y = x;
  for (int it = 0; it < opt.max_iter; ++it) {
    const auto dy = d(y[0], y[1]);
    const double r0 = y[0] + dy[0] - x[0], r1 = y[1] + dy[1] - x[1];
    if (std::hypot(r0, r1) <= opt.tol) return y;
    y = {x[0] - dy[0], x[1] - dy[1]};
  }
  const auto dy = d(y[0], y[1]);
  const double res = std::hypot(y[0] + dy[0] - x[0], y[1] + dy[1] - x[1]);
  if (res <= opt.tol) return y;
  throw NoConvergence("inverse_map: fixed point did not converge in " + std::to_string(opt.max_iter) +
                      " iterations (residual " + std::to_string(res) +
                      "); the flow map has left the small-deformation regime");
}
}  // namespace detail

// Labels y with X(t, y) = x for each x. Returned labels are unwrapped (close to x).
inline std::vector<Point> inverse_map(const FlowMap& fm, const std::vector<Point>& xs, const InverseMapOptions& opt = {}) {
  const VectorInterpolant d(fm.displacement, opt.interp);
  std::vector<Point> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t k) { out[k] = detail::solve_inverse_point(d, xs[k], opt); });
  return out;
}

// Y(t, x) at every grid point x, as a vector field of label positions.
inline VectorField inverse_map(const FlowMap& fm, const InverseMapOptions& opt = {}) {
  const Grid& g = fm.grid;
  const VectorInterpolant d(fm.displacement, opt.interp);
  VectorField Y(g);
  parallel_for(g.size(), [&](std::size_t p) {
    const int i = int(p / g.n), j = int(p % g.n);
    const Point y = detail::solve_inverse_point(d, {g.coord(i), g.coord(j)}, opt);
    Y[0].values[p] = y[0];
    Y[1].values[p] = y[1];
  });
  return Y;
}

// ---- twisted operators ----

// grad_u P = A^T grad_y P.
inline VectorField op_grad_u(const ScalarField& P, const InverseJacobian& A) {
  return apply(transpose(A.A), gradient(P));
}

// div_u H = div_y(A H).
inline ScalarField op_div_u(const VectorField& H, const InverseJacobian& A) { return divergence(apply(A.A, H)); }

// sum_ij A_ij d_i H_j, equal to div_y(A H) whenever the columns of A^T are divergence-free.
inline ScalarField twisted_contraction(const VectorField& H, const InverseJacobian& A) {
  const MatrixField DH = jacobian(H);  // DH(j, i) = d_i H_j
  ScalarField r(A.grid);
  for (std::size_t p = 0; p < A.grid.size(); ++p) {
    const Mat2 a = A.A.at(p), d = DH.at(p);
    r.values[p] = a.a * d.a + a.b * d.c + a.c * d.b + a.d * d.d;
  }
  return r;
}

// Laplace_u u^k = div_y(A A^T grad_y u^k), componentwise.
inline VectorField op_laplace_u(const VectorField& u, const InverseJacobian& A) {
  const MatrixField AT = transpose(A.A);
  VectorField out(A.grid);
  for (int k = 0; k < 2; ++k) out[k] = divergence(apply(A.A, apply(AT, gradient(u[k]))));
  return out;
}

inline double relative_residual(double residual_norm, double scale) {
  return scale > 0 ? residual_norm / scale : residual_norm;
}

struct IdentityResidual {
  double absolute = 0.0;
  double relative = 0.0;
};

// (grad - grad_u) P against (Id - A^T) grad P.
inline IdentityResidual grad_u_identity(const ScalarField& P, const InverseJacobian& A) {
  const VectorField g = gradient(P);
  const VectorField lhs = g - op_grad_u(P, A);
  const MatrixField M = MatrixField::identity(A.grid) - transpose(A.A);
  const VectorField rhs = apply(M, g);
  const double res = l2_norm(lhs - rhs);
  return {res, relative_residual(res, std::max(l2_norm(lhs), l2_norm(g)))};
}

// (Laplace - Laplace_u) u against div((Id - A A^T) grad u).
inline IdentityResidual laplace_u_identity(const VectorField& u, const InverseJacobian& A) {
  const VectorField lhs = laplacian(u) - op_laplace_u(u, A);
  MatrixField AAT = multiply(A.A, transpose(A.A));
  const MatrixField M = MatrixField::identity(A.grid) - AAT;
  VectorField rhs(A.grid);
  for (int k = 0; k < 2; ++k) rhs[k] = divergence(apply(M, gradient(u[k])));
  const double res = l2_norm(lhs - rhs);
  return {res, relative_residual(res, std::max(l2_norm(lhs), l2_norm(laplacian(u))))};
}

// div(A H) against the contraction form.
inline IdentityResidual div_u_identity(const VectorField& H, const InverseJacobian& A) {
  const ScalarField a = op_div_u(H, A), b = twisted_contraction(H, A);
  const double res = l2_norm(a - b);
  return {res, relative_residual(res, std::max({l2_norm(a), l2_norm(b), l2_norm(jacobian(H))}))};
}

// dA/dt = -A (D_y u) A, with A from the Neumann series of the current Jacobian integral.
// At t = 0 this is exactly -D_y u.
inline MatrixField a_time_derivative(const FlowMap& fm, const VectorField& u, int k_max = 30) {
  if (!(fm.du_linf_integral < 1.0))
    throw SeriesDiverged("a_time_derivative: integral of |D_y u| is " + std::to_string(fm.du_linf_integral) +
                         ", needs to be below 1");
  const MatrixField A = neumann_inverse(fm.jacobian_integral, k_max);
  const MatrixField Du = jacobian(u);
  MatrixField out(fm.grid);
  for (std::size_t p = 0; p < fm.grid.size(); ++p) {
    const Mat2 a = A.at(p);
    out.set(p, (a * Du.at(p) * a) * -1.0);
  }
  return out;
}

// ---- frame changes ----

inline ScalarField eulerian_to_lagrangian(const ScalarField& f, const FlowMap& fm,
                                          InterpKind interp = InterpKind::fourier_lagrange) {
  const ScalarInterpolant fi(f, interp);
  ScalarField out(fm.grid);
  parallel_for(fm.grid.size(), [&](std::size_t p) {
    const Point x = fm.position(p);
    out.values[p] = fi(x[0], x[1]);
  });
  return out;
}

// u(y) = v(X(t, y)).
inline VectorField eulerian_to_lagrangian(const VectorField& v, const FlowMap& fm,
                                          InterpKind interp = InterpKind::fourier_lagrange) {
  const VectorInterpolant vi(v, interp);
  VectorField out(fm.grid);
  parallel_for(fm.grid.size(), [&](std::size_t p) {
    const Point x = fm.position(p);
    const auto val = vi(x[0], x[1]);
    out[0].values[p] = val[0];
    out[1].values[p] = val[1];
  });
  return out;
}

inline ScalarField lagrangian_to_eulerian(const ScalarField& f, const FlowMap& fm, const InverseMapOptions& opt = {}) {
  const VectorField Y = inverse_map(fm, opt);
  const ScalarInterpolant fi(f, opt.interp);
  ScalarField out(fm.grid);
  parallel_for(fm.grid.size(), [&](std::size_t p) { out.values[p] = fi(Y[0].values[p], Y[1].values[p]); });
  return out;
}

// v(x) = u(Y(t, x)).
inline VectorField lagrangian_to_eulerian(const VectorField& u, const FlowMap& fm, const InverseMapOptions& opt = {}) {
  const VectorField Y = inverse_map(fm, opt);
  const VectorInterpolant ui(u, opt.interp);
  VectorField out(fm.grid);
  parallel_for(fm.grid.size(), [&](std::size_t p) {
    const auto val = ui(Y[0].values[p], Y[1].values[p]);
    out[0].values[p] = val[0];
    out[1].values[p] = val[1];
  });
  return out;
}

enum class FlowMapQuadrature { trapezoid, adams_moulton3 };

// Advances the map through one step ending at the Eulerian velocity v_end. The end Lagrangian
// velocity v_end(X(t+dt)) is found by fixed-point correction of the implicit update. With
// adams_moulton3 the previous step's velocity is used when available (the step sizes must match).
inline FlowMap advance_flow_map_eulerian(const FlowMap& fm, const VectorField& v_end, double dt,
                                         InterpKind interp = InterpKind::fourier_lagrange, int corrections = 2,
                                         FlowMapQuadrature quad = FlowMapQuadrature::adams_moulton3) {
  const VectorInterpolant vi(v_end, interp);
  const Grid& g = fm.grid;
  auto sample_end = [&](const VectorField& disp) {
    VectorField u(g);
    parallel_for(g.size(), [&](std::size_t p) {
      const int i = int(p / g.n), j = int(p % g.n);
      const auto val = vi(g.coord(i) + disp[0].values[p], g.coord(j) + disp[1].values[p]);
      u[0].values[p] = val[0];
      u[1].values[p] = val[1];
    });
    return u;
  };
  const bool am3 = quad == FlowMapQuadrature::adams_moulton3 && fm.previous_velocity.has_value();
  auto end_displacement = [&](const VectorField& u_end) {
    if (am3) return fm.displacement + (dt / 12.0) * (5.0 * u_end + 8.0 * fm.velocity - *fm.previous_velocity);
    return fm.displacement + (0.5 * dt) * (fm.velocity + u_end);
  };
  VectorField u_end = sample_end(fm.displacement + dt * fm.velocity);
  for (int c = 0; c < corrections; ++c) u_end = sample_end(end_displacement(u_end));
  if (am3) return advance_flow_map_am3(fm, *fm.previous_velocity, fm.velocity, u_end, dt);
  return advance_flow_map(fm, fm.velocity, u_end, dt);
}

// ---- invariants ----

struct FlowMapInvariants {
  double det_max_deviation = 0.0;   // max |det D_yX - 1|
  double dyx_max = 0.0;             // max |D_yX| (operator norm)
  double stretch_bound = 1.0;            // exp(du_linf_integral)
  double a_minus_id_max = 0.0;      // max |A - Id|
  double near_identity_bound = 0.0;            // 2 * du_linf_integral
  double recomputed_jacobian_gap = 0.0;  // max |jacobian_integral - D_y displacement|
  bool stretch_holds = true;
  bool near_identity_applicable = true;
  bool near_identity_holds = true;
};

inline FlowMapInvariants check_invariants(const FlowMap& fm, const FlowMapTolerances& tol = {}) {
  FlowMapInvariants r;
  const MatrixField F = fm.deformation_gradient();
  for (std::size_t p = 0; p < fm.grid.size(); ++p) {
    const Mat2 f = F.at(p);
    r.det_max_deviation = std::max(r.det_max_deviation, std::abs(f.det() - 1.0));
    r.dyx_max = std::max(r.dyx_max, f.op_norm());
    if (std::abs(f.det()) >= tol.det_floor) {
      const Mat2 a = f.adjugate() * (1.0 / f.det());
      r.a_minus_id_max = std::max(r.a_minus_id_max, (a - Mat2::identity()).op_norm());
    }
  }
  r.stretch_bound = std::exp(fm.du_linf_integral);
  r.near_identity_bound = 2.0 * fm.du_linf_integral;
  r.stretch_holds = r.dyx_max <= r.stretch_bound * (1.0 + 1e-12) + 1e-12;
  r.near_identity_applicable = fm.du_linf_integral <= 0.5;
  r.near_identity_holds = !r.near_identity_applicable || r.a_minus_id_max <= r.near_identity_bound * (1.0 + 1e-12) + 1e-12;
  r.recomputed_jacobian_gap = max_abs(fm.jacobian_integral - jacobian(fm.displacement));
  return r;
}

// ---- serialization: two snapshots plus a JSON sidecar ----

inline void write_flow_map(const std::filesystem::path& dir, const std::string& stem, const FlowMap& fm) {
  write_snapshot_file(dir / (stem + "_displacement.txt"), fm.displacement);
  write_snapshot_file(dir / (stem + "_jacobian_integral.txt"), fm.jacobian_integral);
  auto os = detail::open_out(dir / (stem + ".json"));
  nlohmann::json j{{"time", fm.time}, {"du_linf_integral", fm.du_linf_integral}};
  os << j.dump(2) << '\n';
}

inline FlowMap read_flow_map(const std::filesystem::path& dir, const std::string& stem) {
  std::ifstream d(dir / (stem + "_displacement.txt")), m(dir / (stem + "_jacobian_integral.txt")),
      s(dir / (stem + ".json"));
  if (!d || !m || !s) throw std::runtime_error("read_flow_map: missing files for " + stem);
  VectorField disp = read_vector_snapshot(d);
  FlowMap fm(disp.grid());
  fm.displacement = std::move(disp);
  fm.jacobian_integral = read_matrix_snapshot(m);
  const auto j = nlohmann::json::parse(s);
  fm.time = j.at("time").get<double>();
  fm.du_linf_integral = j.at("du_linf_integral").get<double>();
  return fm;
}

}  // namespace vdflow
