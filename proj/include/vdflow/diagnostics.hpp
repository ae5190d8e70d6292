#pragma once
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "simulation.hpp"

namespace vdflow {

// ---- energy equality ----

struct EnergyReport {
  std::vector<double> t;
  std::vector<double> dissipation;  // 2 nu int_0^t |grad v|^2, trapezoid in time
  std::vector<double> residual;     // |E_w(t) + dissipation - E_w(0)| / E_w(0)
  double max_residual = 0.0;
};

inline EnergyReport energy_report(const std::vector<StepRecord>& rec, double nu) {
  EnergyReport r;
  if (rec.empty()) return r;
  const double e0 = rec.front().weighted_energy;
  double diss = 0;
  for (std::size_t k = 0; k < rec.size(); ++k) {
    if (k > 0) diss += 2.0 * nu * 0.5 * (rec[k].t - rec[k - 1].t) * (rec[k].enstrophy + rec[k - 1].enstrophy);
    const double lhs = rec[k].weighted_energy + diss;
    const double res = e0 > 0 ? std::abs(lhs - e0) / e0 : std::abs(lhs - e0);
    r.t.push_back(rec[k].t);
    r.dissipation.push_back(diss);
    r.residual.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
  }
  return r;
}

inline EnergyReport energy_report(const Trajectory& tr) { return energy_report(tr.records, tr.nu); }

// ---- exponential decay ----

struct DecayReport {
  std::vector<double> margin;  // exp(-nu lambda1 t / eta) E_w(0) - E_w(t)
  double min_margin = 0.0;
  double tolerance = 0.0;      // tol_decay * E_w(0)
  bool pass = true;
};

inline double first_eigenvalue(const Grid& g) { return g.k0() * g.k0(); }

inline DecayReport decay_check(const std::vector<StepRecord>& rec, double nu, double eta_star, double lambda1,
                               double tol_decay = 1e-6) {
  DecayReport r;
  if (rec.empty()) return r;
  const double e0 = rec.front().weighted_energy;
  r.tolerance = tol_decay * e0;
  r.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : rec) {
    const double m = std::exp(-nu * lambda1 * s.t / eta_star) * e0 - s.weighted_energy;
    r.margin.push_back(m);
    r.min_margin = std::min(r.min_margin, m);
  }
  r.pass = r.min_margin >= -r.tolerance;
  return r;
}

// ---- smallness ----

struct SmallnessReport {
  std::vector<double> integral;
  double crossing_time = -1.0;  // first t where the integral exceeds the cap, or -1
};

// Trapezoidal running integral of max|grad v| from (t, value) samples.
inline SmallnessReport smallness_monitor(const std::vector<double>& t, const std::vector<double>& grad_linf,
                                         double cap = 0.5) {
  SmallnessReport r;
  double acc = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0) acc += 0.5 * (t[k] - t[k - 1]) * (grad_linf[k] + grad_linf[k - 1]);
    r.integral.push_back(acc);
    if (r.crossing_time < 0 && acc > cap) r.crossing_time = t[k];
  }
  return r;
}

inline SmallnessReport smallness_monitor(const std::vector<StepRecord>& rec, double cap = 0.5) {
  std::vector<double> t, g;
  for (const auto& s : rec) t.push_back(s.t), g.push_back(s.max_grad_v);
  return smallness_monitor(t, g, cap);
}

// ---- Ladyzhenskaya ----

// Sweep maximum 0.1949 (a single |k| = 1 mode; 1000 random band-limited fields peak at 0.165)
// plus 20% headroom.
inline constexpr double ladyzhenskaya_constant = 0.234;

inline double ladyzhenskaya_ratio(const VectorField& v) {
  const MatrixField D = jacobian(v);
  const double g2 = std::sqrt(inner(D, D));
  if (g2 == 0.0) throw DegenerateInput("ladyzhenskaya_check: velocity gradient vanishes");
  const double l4 = lp_norm(D, 4.0);
  return l4 * l4 / (g2 * hessian_lp(v, 2.0));
}

struct LadyzhenskayaResult {
  double ratio = 0.0;
  bool within_constant = true;
};

inline LadyzhenskayaResult ladyzhenskaya_check(const VectorField& v, double constant = ladyzhenskaya_constant) {
  const double r = ladyzhenskaya_ratio(v);
  return {r, r <= constant};
}

// ---- windowed norms ----

struct WindowedNorms {
  std::vector<double> M;  // one entry per complete window
  double rate = 0.0;      // alpha in M_k ~ K exp(-alpha k)
  double r_squared = 0.0;
};

// Least-squares fit of log y against x; returns slope, intercept, R^2.
inline std::array<double, 3> log_linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    ly[k] = std::log(y[k]);
    sx += x[k], sy += ly[k], sxx += x[k] * x[k], sxy += x[k] * ly[k];
  }
  const double den = n * sxx - sx * sx;
  const double slope = den != 0 ? (n * sxy - sx * sy) / den : 0.0;
  const double icpt = (sy - slope * sx) / double(n);
  const double mean_y = sy / double(n);
  double ss_tot = 0, ss_res = 0;
  for (std::size_t k = 0; k < n; ++k) {
    ss_tot += (ly[k] - mean_y) * (ly[k] - mean_y);
    const double e = ly[k] - (icpt + slope * x[k]);
    ss_res += e * e;
  }
  return {slope, icpt, ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

// M_k = m^{1/2} nu^{1/2} sup_window |grad u|_{L4} + |m u_t|_{L2(L4)} + |nu grad^2 u|_{L2(L4)} + |grad P|_{L2(L4)}
// over windows [k w, (k+1) w].
inline WindowedNorms windowed_norms(const std::vector<StepRecord>& rec, double m, double nu, double window = 1.0) {
  WindowedNorms r;
  if (rec.size() < 2) return r;
  const double t0 = rec.front().t, tend = rec.back().t;
  const int windows = int(std::floor((tend - t0) / window + 1e-9));
  for (int k = 0; k < windows; ++k) {
    const double a = t0 + k * window, b = a + window;
    double sup = 0, i_ut = 0, i_h = 0, i_p = 0;
    const StepRecord* prev = nullptr;
    for (const auto& s : rec) {
      if (s.t < a - 1e-9 || s.t > b + 1e-9) continue;
      sup = std::max(sup, s.grad_l4);
      if (prev) {
        const double h = s.t - prev->t;
        i_ut += 0.5 * h * (std::pow(m * s.vt_l4, 2) + std::pow(m * prev->vt_l4, 2));
        i_h += 0.5 * h * (std::pow(nu * s.hess_l4, 2) + std::pow(nu * prev->hess_l4, 2));
        i_p += 0.5 * h * (std::pow(s.grad_q_l4, 2) + std::pow(prev->grad_q_l4, 2));
      }
      prev = &s;
    }
    r.M.push_back(std::sqrt(m * nu) * sup + std::sqrt(i_ut) + std::sqrt(i_h) + std::sqrt(i_p));
  }
  std::vector<double> x, y;
  for (std::size_t k = 0; k < r.M.size(); ++k)
    if (r.M[k] > 0) x.push_back(double(k)), y.push_back(r.M[k]);
  if (x.size() >= 2) {
    const auto fit = log_linear_fit(x, y);
    r.rate = -fit[0];
    r.r_squared = fit[2];
  }
  return r;
}

// ---- Lagrangian round trip ----

struct LagrangianSample {
  VectorField v;       // Eulerian velocity
  VectorField grad_Q;  // Eulerian pressure gradient at the same time
  FlowMap fm;
};

struct RoundtripResult {
  double residual = 0.0;  // |eta u_t - nu Laplace_u u + grad_u P - f o X| / largest term
  double term_ut = 0.0, term_visc = 0.0, term_p = 0.0;
};

// Residual of eta u_t - nu Laplace_u u + grad_u P = f o X at the middle sample, u_t by
// central differences.
inline RoundtripResult lagrangian_roundtrip(const LagrangianSample& prev, const LagrangianSample& cur,
                                            const LagrangianSample& next, double dt, double nu, const Density& rho0,
                                            const VectorField* forcing = nullptr,
                                            InterpKind interp = InterpKind::fourier_lagrange) {
  const Grid& g = cur.v.grid();
  const VectorField u0 = eulerian_to_lagrangian(prev.v, prev.fm, interp);
  const VectorField u1 = eulerian_to_lagrangian(cur.v, cur.fm, interp);
  const VectorField u2 = eulerian_to_lagrangian(next.v, next.fm, interp);
  const ScalarField eta = rho0.sample(g);
  const VectorField ut = scale(eta, (1.0 / (2.0 * dt)) * (u2 - u0));
  const InverseJacobian A = inverse_jacobian(cur.fm);
  const ScalarField Q = inverse_laplacian(divergence(cur.grad_Q)).field;
  const ScalarField P = eulerian_to_lagrangian(Q, cur.fm, interp);
  const VectorField visc = nu * op_laplace_u(u1, A);
  const VectorField gp = op_grad_u(P, A);
  VectorField res = ut - visc + gp;
  if (forcing) res -= eulerian_to_lagrangian(*forcing, cur.fm, interp);
  RoundtripResult r;
  r.term_ut = l2_norm(ut);
  r.term_visc = l2_norm(visc);
  r.term_p = l2_norm(gp);
  const double scale_ = std::max({r.term_ut, r.term_visc, r.term_p});
  r.residual = scale_ > 0 ? l2_norm(res) / scale_ : l2_norm(res);
  return r;
}

// ---- uniqueness proxy ----

enum class Perturbation { picard_tol, dt_halved, thread_count };

struct UniquenessResult {
  std::vector<double> gaps;  // sup_t |v1 - v2|_{L2} for each compared pair
  double order = 0.0;        // for dt_halved: log2(gap0 / gap1)
  bool pass = false;
};

// Velocity snapshots at common times from a trajectory of reports.
inline double sup_gap(const Trajectory& a, const Trajectory& b) {
  double gap = 0;
  for (const auto& sa : a.snapshots)
    for (const auto& sb : b.snapshots)
      if (std::abs(sa.t - sb.t) < 1e-9) gap = std::max(gap, l2_norm(sa.v - sb.v));
  return gap;
}

// make_state(cfg) builds the initial state for a solver configuration; T must be a common
// multiple of every dt used, and report_interval a multiple of every dt.
inline UniquenessResult uniqueness_experiment(const std::function<SimState(const SolverConfig&)>& make_state,
                                              const SolverConfig& base, double T, double report_interval,
                                              Perturbation kind) {
  auto run = [&](const SolverConfig& c) {
    RunOptions o;
    o.T = T;
    o.report_every = std::max(1, int(std::llround(report_interval / c.dt)));
    return simulate(make_state(c), o);
  };
  UniquenessResult r;
  switch (kind) {
    case Perturbation::dt_halved: {
      SolverConfig c1 = base, c2 = base, c3 = base;
      c2.dt = base.dt / 2;
      c3.dt = base.dt / 4;
      const Trajectory t1 = run(c1), t2 = run(c2), t3 = run(c3);
      r.gaps = {sup_gap(t1, t2), sup_gap(t2, t3)};
      r.order = r.gaps[1] > 0 ? std::log2(r.gaps[0] / r.gaps[1]) : 0.0;
      r.pass = r.order >= 1.8 && r.order <= 2.2;
      break;
    }
    case Perturbation::picard_tol: {
      SolverConfig c1 = base, c2 = base;
      c1.picard_tol = 1e-8;
      c2.picard_tol = 1e-10;
      r.gaps = {sup_gap(run(c1), run(c2))};
      r.pass = r.gaps[0] <= 100 * c1.picard_tol;
      break;
    }
    case Perturbation::thread_count: {
      const int saved = thread_count();
      set_thread_count(1);
      const Trajectory t1 = run(base);
      set_thread_count(std::max(2, saved));
      const Trajectory t2 = run(base);
      set_thread_count(saved);
      r.gaps = {sup_gap(t1, t2)};
      r.pass = r.gaps[0] == 0.0;
      break;
    }
  }
  return r;
}

// ---- serialization ----

inline nlohmann::json to_json(const StepRecord& r) {
  nlohmann::json j{{"t", r.t},
                   {"energy", r.energy},
                   {"weighted_energy", r.weighted_energy},
                   {"enstrophy", r.enstrophy},
                   {"max_grad_v", r.max_grad_v},
                   {"smallness_integral", r.smallness_integral},
                   {"lagrangian_smallness", r.lagrangian_smallness},
                   {"picard_iters", r.picard_iters},
                   {"picard_gap", r.picard_gap},
                   {"div_residual", r.div_residual},
                   {"det_deviation", r.det_deviation},
                   {"rho_min", r.rho_min},
                   {"rho_max", r.rho_max}};
  if (r.marker_area) j["marker_area"] = *r.marker_area;
  return j;
}

inline const char* trajectory_csv_header() {
  return "t,energy,weighted_energy,enstrophy,max_grad_v,smallness_integral,picard_iters,div_residual";
}

inline std::string trajectory_csv_row(const StepRecord& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.t << ',' << r.energy << ',' << r.weighted_energy << ',' << r.enstrophy << ','
     << r.max_grad_v << ',' << r.smallness_integral << ',' << r.picard_iters << ',' << r.div_residual;
  return os.str();
}

}  // namespace vdflow
