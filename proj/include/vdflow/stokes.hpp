#pragma once
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "density.hpp"
#include "divergence_lift.hpp"
#include "errors.hpp"
#include "flow_map.hpp"
#include "synthesis.hpp"

namespace vdflow {

enum class Scheme {
  semi_implicit_l15,   // reference density m = inf rho; needs a small jump ratio
  explicit_advection,  // reference density (inf + sup) / 2; converges for any bounded jump
};

inline Scheme parse_scheme(const std::string& s) {
  if (s == "semi_implicit_l15") return Scheme::semi_implicit_l15;
  if (s == "explicit_advection") return Scheme::explicit_advection;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}
inline const char* to_string(Scheme s) {
  return s == Scheme::semi_implicit_l15 ? "semi_implicit_l15" : "explicit_advection";
}

struct SolverConfig {
  double nu = 0.1;
  double dt = 1e-2;
  double picard_tol = 1e-10;
  int picard_max = 50;
  Scheme scheme = Scheme::semi_implicit_l15;
  double smallness_cap = 0.5;
  double jump_cap = 0.5;
  double cfl_safety = 0.5;
  double div_tol = 1e-10;
  InterpKind interp = InterpKind::fourier_lagrange;
  int flow_map_corrections = 2;

  void validate() const {
    if (!(nu > 0)) throw std::invalid_argument("solver: nu must be positive");
    if (!(dt > 0)) throw std::invalid_argument("solver: dt must be positive");
    if (picard_max < 1) throw std::invalid_argument("solver: picard_max must be at least 1");
    if (!(picard_tol > 0) || !(smallness_cap > 0) || !(jump_cap > 0) || !(cfl_safety > 0) || !(div_tol > 0))
      throw std::invalid_argument("solver: tolerances must be positive");
  }
};

// ---- constant-coefficient Stokes ----

struct StokesSolution {
  VectorField u;
  VectorField grad_Q;
};

// -nu Laplace u + grad Q = f with u, grad Q mean-zero; the mean of f is dropped.
inline StokesSolution solve_stationary_stokes(const VectorField& f, double nu) {
  if (!(nu > 0)) throw std::invalid_argument("solve_stationary_stokes: nu must be positive");
  StokesSolution s;
  s.grad_Q = gradient_part(f);
  s.u = detail::apply_vector_multiplier(f, [nu](double k1, double k2, Complex a, Complex b) {
    const double k2s = k1 * k1 + k2 * k2;
    if (k2s == 0.0) return std::array<Complex, 2>{Complex(0.0), Complex(0.0)};
    const Complex dot = (k1 * a + k2 * b) / k2s;
    const double inv = 1.0 / (nu * k2s);
    return std::array<Complex, 2>{(a - k1 * dot) * inv, (b - k2 * dot) * inv};
  });
  return s;
}

// Solves (alpha - beta Laplace) w = P0 rhs for divergence-free, mean-zero w.
inline VectorField helmholtz_project(const VectorField& rhs, double alpha, double beta) {
  return detail::apply_vector_multiplier(rhs, [alpha, beta](double k1, double k2, Complex a, Complex b) {
    const double k2s = k1 * k1 + k2 * k2;
    if (k2s == 0.0) return std::array<Complex, 2>{Complex(0.0), Complex(0.0)};
    const Complex dot = (k1 * a + k2 * b) / k2s;
    const double inv = 1.0 / (alpha + beta * k2s);
    return std::array<Complex, 2>{(a - k1 * dot) * inv, (b - k2 * dot) * inv};
  });
}

using TimeField = std::function<VectorField(double)>;

struct EvolutionaryStokesProblem {
  VectorField u0;
  TimeField f;  // empty means zero
  TimeField R;  // empty means zero
  double m = 1.0;
  double nu = 1.0;
  double T = 1.0;
  double dt = 1e-2;
  double div_tol = 1e-10;
};

// Time samples of a velocity/pressure pair; used by the Stokes solver and by the norm proxies.
struct FieldTrajectory {
  std::vector<double> t;
  std::vector<VectorField> u;
  std::vector<VectorField> grad_Q;
  std::vector<VectorField> w;  // divergence lift, when present
};

// m u_t - nu Laplace u + grad Q = f, div u = div R, by lifting w = solve_divergence(R) and
// Crank-Nicolson stepping of v = u - w.
inline FieldTrajectory solve_evolutionary_stokes(const EvolutionaryStokesProblem& p) {
  if (!(p.m > 0) || !(p.nu > 0) || !(p.dt > 0) || !(p.T > 0))
    throw std::invalid_argument("solve_evolutionary_stokes: m, nu, dt, T must be positive");
  const Grid& g = p.u0.grid();
  auto f_at = [&](double t) { return p.f ? p.f(t) : VectorField(g); };
  auto w_at = [&](double t) { return p.R ? solve_divergence(p.R(t)) : VectorField(g); };

  const ScalarField div_u0 = divergence(p.u0);
  const ScalarField div_R0 = p.R ? divergence(p.R(0.0)) : ScalarField(g);
  const double mismatch = l2_norm(div_u0 - div_R0);
  const double scale = std::max({1.0, l2_norm(p.u0), l2_norm(jacobian(p.u0))});
  if (mismatch > p.div_tol * scale)
    throw CompatibilityViolated("solve_evolutionary_stokes: |div u0 - div R(0)| = " + std::to_string(mismatch));

  const int steps = int(std::llround(p.T / p.dt));
  const double dt = p.T / steps;
  FieldTrajectory tr;
  VectorField w = w_at(0.0);
  VectorField v = p.u0 - w;
  auto forcing = [&](double t, const VectorField& w_now, const VectorField& w_t) {
    return f_at(t) - p.m * w_t + p.nu * laplacian(w_now);
  };
  // grad Q at a sample: gradient part of the forcing seen by v.
  auto pressure = [&](double t, const VectorField& w_now, const VectorField& w_t) {
    return gradient_part(forcing(t, w_now, w_t));
  };
  const double eps = 1e-6 * dt;
  VectorField wt = (1.0 / (2 * eps)) * (w_at(eps) - w_at(-eps));
  tr.t.push_back(0.0);
  tr.u.push_back(p.u0);
  tr.grad_Q.push_back(pressure(0.0, w, wt));
  tr.w.push_back(w);
  VectorField F0 = forcing(0.0, w, wt);
  for (int n = 0; n < steps; ++n) {
    const double t1 = (n + 1) * dt;
    const VectorField w1 = w_at(t1);
    const VectorField wt1 = (1.0 / dt) * (w1 - w);
    const VectorField F1 = forcing(t1, w1, wt1);
    // (m/dt - nu/2 Laplace) v1 = (m/dt + nu/2 Laplace) v + P (F0 + F1)/2, mean mode advanced separately.
    VectorField rhs = (p.m / dt) * v + (0.5 * p.nu) * laplacian(v) + 0.5 * (F0 + F1);
    VectorField v1 = helmholtz_project(rhs, p.m / dt, 0.5 * p.nu);
    for (int k = 0; k < 2; ++k) {
      const double mean_new = mean(v[k]) + dt / p.m * 0.5 * (mean(F0[k]) + mean(F1[k]));
      for (auto& x : v1[k].values) x += mean_new;
    }
    v = std::move(v1);
    w = w1;
    F0 = F1;
    tr.t.push_back(t1);
    tr.u.push_back(v + w);
    tr.grad_Q.push_back(gradient_part(F1));
    tr.w.push_back(w);
  }
  return tr;
}

// ---- Xi norm proxy ----

struct XiNorm {
  double value = 0.0;
  double ut_sup_l2 = 0.0;     // sup_t |u_t|_{L2}
  double grad_ut_l2 = 0.0;    // |grad u_t|_{L2(space-time)}
  double ut_l4 = 0.0;         // |u_t|_{L4(space-time)}
  double hess_l4 = 0.0;       // |grad^2 u|_{L4(space-time)}
  double grad_p_l4 = 0.0;     // |grad P|_{L4(space-time)}
  std::vector<double> running;  // Xi(t_k) for every sample
};

// Pointwise magnitude of the second derivatives of a vector field, then L^p.
inline double hessian_lp(const VectorField& u, double p) {
  const MatrixField h0 = hessian(u[0]), h1 = hessian(u[1]);
  double s = 0;
  for (std::size_t q = 0; q < u.grid().size(); ++q) {
    const double a = h0.at(q).frobenius(), b = h1.at(q).frobenius();
    s += std::pow(a * a + b * b, 0.5 * p);
  }
  return std::pow(s * u.grid().cell_area(), 1.0 / p);
}

// Time derivatives: central differences inside, second-order one-sided at the ends.
inline std::vector<VectorField> time_derivative(const FieldTrajectory& tr) {
  const std::size_t n = tr.t.size();
  if (n < 3) throw std::invalid_argument("time_derivative: need at least 3 samples");
  std::vector<VectorField> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == 0) {
      const double h = tr.t[1] - tr.t[0];
      d[k] = (1.0 / (2 * h)) * (-3.0 * tr.u[0] + 4.0 * tr.u[1] - tr.u[2]);
    } else if (k == n - 1) {
      const double h = tr.t[n - 1] - tr.t[n - 2];
      d[k] = (1.0 / (2 * h)) * (3.0 * tr.u[n - 1] - 4.0 * tr.u[n - 2] + tr.u[n - 3]);
    } else {
      d[k] = (1.0 / (tr.t[k + 1] - tr.t[k - 1])) * (tr.u[k + 1] - tr.u[k - 1]);
    }
  }
  return d;
}

// Discrete proxy of sup|u_t|_{L2} + |grad u_t|_{L2} + |(u_t, grad^2 u, grad P)|_{L4}, time
// integrals by the trapezoid rule. Derivatives come from the full trajectory, so the running
// value is nondecreasing.
inline XiNorm xi_norm(const FieldTrajectory& tr) {
  const std::size_t n = tr.t.size();
  const auto ut = time_derivative(tr);
  XiNorm r;
  double sup_l2 = 0, i_grad = 0, i_ut4 = 0, i_h4 = 0, i_p4 = 0;
  double prev[4] = {0, 0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    const double g2 = gradient_energy(ut[k]);
    const double a4 = std::pow(lp_norm(ut[k], 4.0), 4);
    const double h4 = std::pow(hessian_lp(tr.u[k], 4.0), 4);
    const double p4 = tr.grad_Q.empty() ? 0.0 : std::pow(lp_norm(tr.grad_Q[k], 4.0), 4);
    sup_l2 = std::max(sup_l2, l2_norm(ut[k]));
    if (k > 0) {
      const double h = tr.t[k] - tr.t[k - 1];
      i_grad += 0.5 * h * (prev[0] + g2);
      i_ut4 += 0.5 * h * (prev[1] + a4);
      i_h4 += 0.5 * h * (prev[2] + h4);
      i_p4 += 0.5 * h * (prev[3] + p4);
    }
    prev[0] = g2, prev[1] = a4, prev[2] = h4, prev[3] = p4;
    r.ut_sup_l2 = sup_l2;
    r.grad_ut_l2 = std::sqrt(i_grad);
    r.ut_l4 = std::pow(i_ut4, 0.25);
    r.hess_l4 = std::pow(i_h4, 0.25);
    r.grad_p_l4 = std::pow(i_p4, 0.25);
    r.value = r.ut_sup_l2 + r.grad_ut_l2 + r.ut_l4 + r.hess_l4 + r.grad_p_l4;
    r.running.push_back(r.value);
  }
  return r;
}

// ---- maximal-regularity scaling probe ----

// Recorded ceiling for the ratio; the 180-run sweep (n = 32, dt = 1e-2) peaks at 1.92.
inline constexpr double stokes_ratio_ceiling = 2.5;

struct StokesScalingSample {
  double m = 1.0, nu = 1.0;
  std::uint64_t seed = 0;
  double lhs = 0.0;  // |m u_t, nu grad^2 u, grad Q|_{L2 L2} + (m nu)^{1/2} sup |grad u|_{L2}
  double rhs = 0.0;  // |f|_{L2 L2}
  double ratio = 0.0;
};

// u0 = 0, R = 0 and f(t) = cos(2 pi t/T) f_a + sin(2 pi t/T) f_b with random band-limited f_a, f_b.
inline StokesScalingSample stokes_scaling_sample(const Grid& g, double m, double nu, std::uint64_t seed, double T = 1.0,
                                                 double dt = 1e-2, int bandwidth = 4) {
  const VectorField fa = random_vector_field(g, bandwidth, seed), fb = random_vector_field(g, bandwidth, seed + 7);
  const double w = two_pi / T;
  EvolutionaryStokesProblem p;
  p.u0 = VectorField(g);
  p.f = [&](double t) { return std::cos(w * t) * fa + std::sin(w * t) * fb; };
  p.m = m;
  p.nu = nu;
  p.T = T;
  p.dt = dt;
  const FieldTrajectory tr = solve_evolutionary_stokes(p);
  const auto ut = time_derivative(tr);
  double i_ut = 0, i_h = 0, i_p = 0, i_f = 0, sup = 0;
  double prev[4] = {0, 0, 0, 0};
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const double cur[4] = {std::pow(m * l2_norm(ut[k]), 2), std::pow(nu * l2_norm(laplacian(tr.u[k])), 2),
                           std::pow(l2_norm(tr.grad_Q[k]), 2), std::pow(l2_norm(p.f(tr.t[k])), 2)};
    sup = std::max(sup, std::sqrt(gradient_energy(tr.u[k])));
    if (k > 0) {
      const double h = 0.5 * (tr.t[k] - tr.t[k - 1]);
      i_ut += h * (prev[0] + cur[0]);
      i_h += h * (prev[1] + cur[1]);
      i_p += h * (prev[2] + cur[2]);
      i_f += h * (prev[3] + cur[3]);
    }
    std::copy(cur, cur + 4, prev);
  }
  StokesScalingSample s{m, nu, seed};
  s.lhs = std::sqrt(i_ut) + std::sqrt(i_h) + std::sqrt(i_p) + std::sqrt(m * nu) * sup;
  s.rhs = std::sqrt(i_f);
  s.ratio = s.rhs > 0 ? s.lhs / s.rhs : 0.0;
  return s;
}

// ---- variable-density stepper ----

struct StepStats {
  int picard_iters = 0;
  double picard_gap = 0.0;                // final relative gap
  double picard_ratio = 0.0;              // geometric-mean gap ratio
  std::vector<double> gaps;
  double reference_density = 1.0;
};

struct SimState {
  double t = 0.0;
  int step = 0;
  VectorField v;       // Eulerian velocity at t
  VectorField grad_Q;  // pressure gradient over the last step
  Density rho;         // initial density rho0
  ScalarField rho_field;  // rho(t) on the grid
  FlowMap fm;
  SolverConfig config;
  // multistep history
  VectorField v_prev;
  VectorField adv_prev;
  bool has_history = false;
  StepStats last;
  bool smallness_exceeded = false;
  std::vector<std::string> warnings;

  static SimState initial(const VectorField& v0, const Density& rho0, const SolverConfig& cfg) {
    cfg.validate();
    SimState s;
    s.config = cfg;
    s.v = leray_project_mean_zero(v0);
    s.grad_Q = VectorField(v0.grid());
    s.rho = rho0;
    s.rho_field = rho0.sample(v0.grid());
    s.fm = FlowMap::starting_with(s.v);
    s.v_prev = s.v;
    s.adv_prev = VectorField(v0.grid());
    const double jr = jump_ratio(rho0);
    if (cfg.scheme == Scheme::semi_implicit_l15 && jr > cfg.jump_cap) {
      std::ostringstream os;
      os << "jump_ratio " << jr << " exceeds jump_cap " << cfg.jump_cap
         << "; Picard contraction is not guaranteed (density oscillation smallness condition)";
      s.warnings.push_back(os.str());
    }
    return s;
  }

  const Grid& grid() const { return v.grid(); }
};

// (v . grad) v
inline VectorField convective_term(const VectorField& v) {
  const MatrixField D = jacobian(v);
  VectorField r(v.grid());
  for (std::size_t p = 0; p < v.grid().size(); ++p) {
    const double a = v[0].values[p], b = v[1].values[p];
    r[0].values[p] = a * D.e[0].values[p] + b * D.e[1].values[p];
    r[1].values[p] = a * D.e[2].values[p] + b * D.e[3].values[p];
  }
  return r;
}

inline double reference_density(const Density& rho, Scheme scheme) {
  return scheme == Scheme::semi_implicit_l15 ? rho.inf() : 0.5 * (rho.inf() + rho.sup());
}

// One step of m v_t - nu Laplace v + grad Q = (m - rho) v_t - rho v . grad v.
inline SimState step_variable_density(const SimState& s) {
  const SolverConfig& c = s.config;
  const Grid& g = s.grid();
  const double dt = c.dt;
  const double vmax = max_magnitude(s.v);
  if (vmax > 0 && dt > c.cfl_safety * g.h() / vmax) {
    std::ostringstream os;
    os << "dt " << dt << " violates the advective CFL limit " << c.cfl_safety * g.h() / vmax << " (max|v| = " << vmax
       << ")";
    throw CflViolated(os.str());
  }
  const bool uniform = s.rho.is_uniform();
  const double m = reference_density(s.rho, c.scheme);
  const VectorField v_star = s.has_history ? 2.0 * s.v - s.v_prev : s.v;

  // density at the half step, from a predicted flow map
  ScalarField rho_half = s.rho_field;
  if (!uniform) {
    const FlowMap fm_pred = advance_flow_map_eulerian(s.fm, v_star, dt, c.interp, c.flow_map_corrections);
    const ScalarField rho_pred = density_at_time(s.rho, fm_pred, {c.interp});
    rho_half = 0.5 * (s.rho_field + rho_pred);
  }

  // explicit advection, Adams-Bashforth 2 after the first step
  const VectorField adv = dealias(scale(s.rho_field, convective_term(s.v)));
  const VectorField adv_ab = s.has_history ? 1.5 * adv - 0.5 * s.adv_prev : adv;

  const VectorField base = (m / dt) * s.v + (0.5 * c.nu) * laplacian(s.v) - adv_ab;
  ScalarField drho = ScalarField(g, m) - rho_half;
  const bool coupled = max_abs(drho) > 0.0;

  StepStats st;
  st.reference_density = m;
  VectorField w = helmholtz_project(coupled ? base + (1.0 / dt) * dealias(scale(drho, v_star - s.v)) : base, m / dt,
                                    0.5 * c.nu);
  st.picard_iters = 1;
  if (coupled) {
    bool converged = false;
    for (int k = 1; k < c.picard_max + 1; ++k) {
      VectorField next = helmholtz_project(base + (1.0 / dt) * dealias(scale(drho, w - s.v)), m / dt, 0.5 * c.nu);
      const double nrm = l2_norm(next);
      const double gap = l2_norm(next - w) / (nrm > 0 ? nrm : 1.0);
      st.gaps.push_back(gap);
      w = std::move(next);
      st.picard_iters = k + 1;
      if (gap <= c.picard_tol) {
        converged = true;
        break;
      }
      if (!std::isfinite(gap) || gap > 1e8) break;
    }
    st.picard_gap = st.gaps.empty() ? 0.0 : st.gaps.back();
    st.picard_ratio = geometric_ratio(st.gaps, 1, st.gaps.size());
    if (!converged) {
      std::ostringstream os;
      os << "Picard iteration stalled at t = " << s.t << " after " << st.gaps.size() << " iterations, iterate gap "
         << st.picard_gap;
      const double jr = jump_ratio(s.rho);
      if (c.scheme == Scheme::semi_implicit_l15 && jr > c.jump_cap)
        os << "; jump_ratio " << jr << " exceeds jump_cap " << c.jump_cap
           << " (density oscillation smallness condition)";
      throw PicardNoConvergence(os.str());
    }
  }

  SimState out = s;
  out.last = st;
  out.v_prev = s.v;
  out.adv_prev = adv;
  out.has_history = true;
  out.v = leray_project_mean_zero(w);
  out.grad_Q = -1.0 * gradient_part(scale(rho_half, (1.0 / dt) * (out.v - s.v)) + adv_ab);
  out.fm = advance_flow_map_eulerian(s.fm, out.v, dt, c.interp, c.flow_map_corrections);
  out.rho_field = uniform ? s.rho_field : density_at_time(s.rho, out.fm, {c.interp});
  out.t = s.t + dt;
  out.step = s.step + 1;
  if (!out.smallness_exceeded && out.fm.du_linf_integral > c.smallness_cap) {
    out.smallness_exceeded = true;
    std::ostringstream os;
    os << "SmallnessExceeded: integral of |grad u| reached " << out.fm.du_linf_integral << " at t = " << out.t
       << " (cap " << c.smallness_cap << ")";
    out.warnings.push_back(os.str());
  }
  return out;
}

}  // namespace vdflow
