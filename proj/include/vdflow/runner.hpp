#pragma once
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "diagnostics.hpp"
#include "divergence_lift.hpp"

namespace vdflow {

struct CheckSpec {
  std::string id;
  std::string name;
  std::string description;
};

struct CheckResult {
  std::string id;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

inline const std::vector<CheckSpec>& all_checks() {
  static const std::vector<CheckSpec> list{
      {"energy_equality", "energy equality",
       "int rho|v|^2(t) + 2 nu int_0^t int |grad v|^2 = int rho0|v0|^2, relative residual <= 1e-3"},
      {"decay_bound", "decay bound",
       "int rho|v|^2(t) <= exp(-nu lambda1 t / eta*) int rho0|v0|^2 with eta* = sup rho0, tolerance 1e-6 E_w(0)"},
      {"analytic_solution", "Taylor-Green analytic solution", "relative L2 error against the exact decay <= 1e-4"},
      {"flow_map_invariants", "flow map invariants",
       "|det D_yX - 1| <= 1e-5, |D_yX| <= exp(int |grad u|), |A - Id| <= 2 int |grad u| while the integral is <= 1/2"},
      {"operator_identities", "twisted operator identities",
       "gradient, Laplacian and divergence identities on the final flow map, relative residual <= 1e-6"},
      {"divergence_free", "divergence-free velocity", "|div v| / |v| <= div_tol after every step"},
      {"piecewise_structure", "piecewise-constant density",
       "density takes exactly the values {m, m + sigma}, extrema preserved, marker area drift <= 1%"},
      {"smallness", "smallness condition", "int_0^T max|grad v| dt <= 1/2"},
      {"windowed_decay", "windowed norm decay", "unit-window norms M_k decay geometrically: rate > 0, R^2 >= 0.9"},
      {"fixed_point_contraction", "fixed point contraction",
       "div(A u) = div R by Banach iteration: residual <= tol within max_iter, observed ratio <= 0.4, "
       "ContractionViolated at |A - Id| = 0.9"},
      {"twisted_flow_map", "twisted divergence on a flow map",
       "div(A u) - div R and A:Du - div R both <= tol for A taken from a computed flow map"},
      {"compatibility_corrector", "compatibility corrector",
       "phi = B[-div(A_t u0)] matches an independent spectral evaluation to 1e-10, vanishes on a shear mode"},
      {"stokes_scaling", "maximal regularity scaling",
       "LHS/RHS of the Stokes estimate varies by less than 3x over m, nu and forcings, below the recorded ceiling"},
  };
  return list;
}

inline const CheckSpec& check_spec(const std::string& id) {
  for (const auto& c : all_checks())
    if (c.id == id) return c;
  throw ConfigError("key 'checks': unknown check '" + id + "'");
}

inline std::vector<std::string> scenario_checks(const RunConfig& c) {
  const bool piecewise = c.density.kind == "piecewise_constant" && c.density.sigma != 0.0;
  std::vector<std::string> ids;
  switch (c.scenario) {
    case ScenarioKind::taylor_green:
      ids = {"energy_equality", "decay_bound", "analytic_solution", "flow_map_invariants", "operator_identities",
             "divergence_free"};
      break;
    case ScenarioKind::density_disk:
      ids = {"energy_equality", "decay_bound", "flow_map_invariants", "operator_identities", "divergence_free"};
      break;
    case ScenarioKind::decay_experiment:
      ids = {"energy_equality", "decay_bound", "flow_map_invariants", "divergence_free", "smallness", "windowed_decay"};
      break;
    case ScenarioKind::twisted_divergence_demo:
      return {"fixed_point_contraction", "twisted_flow_map", "compatibility_corrector"};
    case ScenarioKind::stokes_scaling:
      return {"stokes_scaling"};
    case ScenarioKind::custom:
      ids = {"energy_equality", "decay_bound", "flow_map_invariants", "operator_identities", "divergence_free",
             "smallness", "windowed_decay"};
      if (c.velocity.kind == "taylor_green" && c.density.kind == "uniform") ids.push_back("analytic_solution");
      break;
  }
  if (piecewise) ids.push_back("piecewise_structure");
  return ids;
}

// Checks that will run, after applying the config's "checks" block.
inline std::vector<CheckSpec> planned_checks(const RunConfig& c, std::vector<std::string>* warnings = nullptr) {
  const auto available = scenario_checks(c);
  const bool explicit_list = c.checks.count("__explicit_list__") > 0;
  for (const auto& [id, on] : c.checks) {
    if (id == "__explicit_list__") continue;
    check_spec(id);
    if (on && std::find(available.begin(), available.end(), id) == available.end())
      throw ConfigError("key 'checks." + id + "': not available for scenario " + to_string(c.scenario));
  }
  std::vector<CheckSpec> out;
  for (const auto& id : available) {
    auto it = c.checks.find(id);
    const bool on = explicit_list ? it != c.checks.end() && it->second : it == c.checks.end() || it->second;
    if (on) out.push_back(check_spec(id));
  }
  if (out.empty() && warnings) warnings->push_back("all checks are disabled; the run will only produce artifacts");
  return out;
}

struct RunResult {
  int exit_code = 0;
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  std::string error;
  std::string error_kind;
  nlohmann::json report;
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(4) << x;
  return os.str();
}

inline CheckResult make_result(const std::string& id, bool pass, double value, double threshold, std::string detail) {
  return {id, check_spec(id).name, pass, value, threshold, std::move(detail)};
}

inline std::string step_tag(int step) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << step;
  return os.str();
}

inline nlohmann::json echo_config(const RunConfig& c) {
  return {{"scenario", to_string(c.scenario)},
          {"grid", {{"n", c.grid.n}, {"L", c.grid.L}}},
          {"physics",
           {{"nu", c.nu},
            {"velocity", {{"kind", c.velocity.kind}, {"amplitude", c.velocity.amplitude}, {"bandwidth", c.velocity.bandwidth}}},
            {"density", {{"kind", c.density.kind}, {"m", c.density.m}, {"sigma", c.density.sigma}, {"shape", c.density.shape}}}}},
          {"time", {{"dt", c.dt}, {"T", c.T}, {"report_every", c.report_every}}},
          {"solver",
           {{"picard_tol", c.solver.picard_tol},
            {"picard_max", c.solver.picard_max},
            {"scheme", to_string(c.solver.scheme)},
            {"smallness_cap", c.solver.smallness_cap},
            {"jump_cap", c.solver.jump_cap},
            {"cfl_safety", c.solver.cfl_safety},
            {"div_tol", c.solver.div_tol},
            {"interpolation", to_string(c.solver.interp)}}},
          {"seed", c.seed}};
}

inline bool wants(const std::vector<CheckSpec>& plan, const char* id) {
  return std::any_of(plan.begin(), plan.end(), [&](const CheckSpec& s) { return s.id == id; });
}

}  // namespace detail

// ---- check evaluations shared by the runner and the tests ----

inline CheckResult check_energy(const Trajectory& tr, double threshold = 1e-3) {
  const EnergyReport e = energy_report(tr);
  return detail::make_result("energy_equality", e.max_residual <= threshold, e.max_residual, threshold,
                             "max relative residual " + detail::fmt(e.max_residual));
}

inline CheckResult check_decay(const Trajectory& tr, double eta_star, double tol = 1e-6) {
  const DecayReport d = decay_check(tr.records, tr.nu, eta_star, first_eigenvalue(tr.final_state.grid()), tol);
  return detail::make_result("decay_bound", d.pass, d.min_margin, -d.tolerance,
                             "min margin " + detail::fmt(d.min_margin) + ", allowed " + detail::fmt(-d.tolerance));
}

inline CheckResult check_flow_map(const Trajectory& tr, double det_tol = 1e-5) {
  double det = 0;
  bool stretch_ok = true, near_ok = true;
  for (const auto& r : tr.records) {
    det = std::max(det, r.det_deviation);
    stretch_ok = stretch_ok && r.stretch_holds;
    near_ok = near_ok && r.near_identity_holds;
  }
  return detail::make_result("flow_map_invariants", det <= det_tol && stretch_ok && near_ok, det, det_tol,
                             "max |det - 1| " + detail::fmt(det) + (stretch_ok ? "" : ", exp bound violated") +
                                 (near_ok ? "" : ", |A - Id| bound violated"));
}

struct IdentityReport {
  double grad = 0.0, laplace = 0.0, div = 0.0;
  double worst() const { return std::max({grad, laplace, div}); }
};

// Evaluates the three twisted-operator identities with A from the direct inverse of fm.
inline IdentityReport operator_identities(const FlowMap& fm, const ScalarField& P, const VectorField& u) {
  const InverseJacobian A = inverse_jacobian(fm);
  return {grad_u_identity(P, A).relative, laplace_u_identity(u, A).relative, div_u_identity(u, A).relative};
}

inline CheckResult check_identities(const SimState& s, double tol = 1e-6) {
  const ScalarField Q = inverse_laplacian(divergence(s.grad_Q)).field;
  // a pressure-free state still exercises the gradient identity through a test potential
  const ScalarField P = l2_norm(Q) > 0 ? Q : s.v[0];
  const IdentityReport r = operator_identities(s.fm, P, s.fm.velocity);
  return detail::make_result("operator_identities", r.worst() <= tol, r.worst(), tol,
                             "gradient " + detail::fmt(r.grad) + ", Laplacian " + detail::fmt(r.laplace) +
                                 ", divergence " + detail::fmt(r.div));
}

inline CheckResult check_divergence(const Trajectory& tr, double tol) {
  double worst = 0;
  for (const auto& r : tr.records) worst = std::max(worst, r.div_residual);
  return detail::make_result("divergence_free", worst <= tol, worst, tol, "max |div v|/|v| " + detail::fmt(worst));
}

inline CheckResult check_piecewise(const Trajectory& tr, const Density& rho0, double area_tol = 0.01) {
  const auto* pc = std::get_if<PiecewiseConstantDensity>(&rho0.kind);
  if (!pc) return detail::make_result("piecewise_structure", false, 0, 0, "density is not piecewise constant");
  bool two = true, extrema = true;
  const double lo = std::min(pc->m, pc->m + pc->sigma), hi = std::max(pc->m, pc->m + pc->sigma);
  const ScalarField r0 = rho0.sample(tr.final_state.grid());
  const double lo0 = min_value(r0), hi0 = max_value(r0);
  for (const auto& r : tr.records) {
    two = two && r.rho_two_valued;
    extrema = extrema && r.rho_min == lo0 && r.rho_max == hi0 && r.rho_min >= lo && r.rho_max <= hi;
  }
  double drift = 0;
  const StepRecord* first = nullptr;
  for (std::size_t k : tr.report_indices) {
    const auto& r = tr.records[k];
    if (!r.marker_area) continue;
    if (!first) first = &r;
    drift = std::max(drift, std::abs(*r.marker_area - *first->marker_area) / *first->marker_area);
  }
  std::string d = std::string(two ? "two-valued" : "extra values present") + (extrema ? "" : ", extrema changed") +
                  ", marker area drift " + detail::fmt(drift);
  return detail::make_result("piecewise_structure", two && extrema && drift <= area_tol, drift, area_tol, d);
}

inline CheckResult check_smallness(const Trajectory& tr, double cap = 0.5) {
  const double v = tr.records.back().smallness_integral;
  return detail::make_result("smallness", v <= cap, v, cap, "integral " + detail::fmt(v));
}

inline CheckResult check_windowed(const Trajectory& tr, double r2_min = 0.9) {
  const WindowedNorms w = windowed_norms(tr.records, tr.m, tr.nu, 1.0);
  const bool ok = w.M.size() >= 3 && w.rate > 0 && w.r_squared >= r2_min;
  std::string d = std::to_string(w.M.size()) + " windows, rate " + detail::fmt(w.rate) + ", R^2 " + detail::fmt(w.r_squared);
  return detail::make_result("windowed_decay", ok, w.r_squared, r2_min, d);
}

// ---- twisted divergence demo pieces ----

// A = Id + eps (cos t, sin t; sin t, -cos t) with t = x1 + 2 x2: |A - Id| = eps at every point.
inline MatrixField reflection_perturbation(const Grid& g, double eps) {
  const double k = g.k0();
  return MatrixField::from_function(g, [&](double x, double y) {
    const double th = k * (x + 2 * y);
    return Mat2{1 + eps * std::cos(th), eps * std::sin(th), eps * std::sin(th), 1 - eps * std::cos(th)};
  });
}

// Flow map of a frozen Taylor-Green field run for time T, with the Jacobian integral taken
// from the displacement so that the cofactor matrix has divergence-free columns.
inline FlowMap demo_flow_map(const Grid& g, double amplitude, double T, int steps) {
  const VectorField u = taylor_green(g, amplitude);
  FlowMap fm = FlowMap::starting_with(u);
  for (int s = 0; s < steps; ++s) fm = advance_flow_map_eulerian(fm, u, T / steps, InterpKind::fourier_exact);
  fm.jacobian_integral = jacobian(fm.displacement);
  return fm;
}

// Cofactor of D_yX; equals the inverse Jacobian when det D_yX = 1.
inline MatrixField cofactor_inverse(const FlowMap& fm) {
  return map_pointwise(fm.deformation_gradient(), [](const Mat2& f) { return f.adjugate(); });
}

// phi by the independent route grad Laplace^{-1} div div (u0 (x) u0), products in physical space.
inline VectorField compatibility_oracle(const VectorField& u0) {
  ScalarField dd(u0.grid());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) dd += partial(partial(hadamard(u0[i], u0[j]), j), i);
  return gradient(inverse_laplacian(dd).field);
}

// ---- scenario execution ----

namespace detail {

inline void write_trajectory_csv(const std::filesystem::path& dir, const Trajectory& tr) {
  auto os = open_out(dir / "trajectory.csv");
  os << trajectory_csv_header() << '\n';
  for (std::size_t k : tr.report_indices) os << trajectory_csv_row(tr.records[k]) << '\n';
}

inline void write_markers_csv(const std::filesystem::path& dir, const Trajectory& tr) {
  if (tr.marker_history.empty()) return;
  auto os = open_out(dir / "markers.csv");
  os << std::setprecision(17) << "t,index,x1,x2\n";
  for (const auto& mk : tr.marker_history)
    for (std::size_t i = 0; i < mk.points.size(); ++i)
      os << mk.time << ',' << i << ',' << mk.points[i][0] << ',' << mk.points[i][1] << '\n';
}

inline void write_snapshots(const std::filesystem::path& dir, const Trajectory& tr, double dt) {
  const auto snap = dir / "snapshots";
  for (const auto& s : tr.snapshots) {
    const std::string tag = step_tag(int(std::llround(s.t / dt)));
    write_snapshot_file(snap / ("v_" + tag + ".txt"), s.v);
    write_snapshot_file(snap / ("grad_q_" + tag + ".txt"), s.grad_Q);
    write_snapshot_file(snap / ("rho_" + tag + ".txt"), s.rho);
  }
  write_flow_map(snap, "flow_map_final", tr.final_state.fm);
}

inline double taylor_green_error(const Trajectory& tr, double amplitude) {
  const SimState& s = tr.final_state;
  const VectorField exact = taylor_green_exact(s.grid(), s.config.nu, s.t, amplitude);
  return l2_norm(s.v - exact) / l2_norm(exact);
}

inline void run_time_scenario(const RunConfig& c, const std::vector<CheckSpec>& plan, const std::filesystem::path& out,
                              RunResult& res) {
  const Density rho0 = build_density(c);
  SimState s0 = SimState::initial(build_velocity(c), rho0, c.solver);
  RunOptions opt;
  opt.T = c.T;
  opt.report_every = c.report_every;
  opt.markers = build_markers(c);
  const Trajectory tr = simulate(std::move(s0), opt);
  res.warnings.insert(res.warnings.end(), tr.warnings.begin(), tr.warnings.end());

  write_trajectory_csv(out, tr);
  write_markers_csv(out, tr);
  write_snapshots(out, tr, c.dt);

  for (const auto& spec : plan) {
    const std::string& id = spec.id;
    if (id == "energy_equality") res.checks.push_back(check_energy(tr));
    else if (id == "decay_bound") res.checks.push_back(check_decay(tr, rho0.sup()));
    else if (id == "flow_map_invariants") res.checks.push_back(check_flow_map(tr));
    else if (id == "operator_identities") res.checks.push_back(check_identities(tr.final_state));
    else if (id == "divergence_free") res.checks.push_back(check_divergence(tr, c.solver.div_tol));
    else if (id == "piecewise_structure") res.checks.push_back(check_piecewise(tr, rho0));
    else if (id == "smallness") res.checks.push_back(check_smallness(tr, c.solver.smallness_cap));
    else if (id == "windowed_decay") res.checks.push_back(check_windowed(tr));
    else if (id == "analytic_solution") {
      const double e = taylor_green_error(tr, c.velocity.amplitude);
      res.checks.push_back(make_result(id, e <= 1e-4, e, 1e-4, "relative L2 error " + fmt(e)));
    }
  }

  const EnergyReport er = energy_report(tr);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k : tr.report_indices) {
    nlohmann::json j = to_json(tr.records[k]);
    j["energy_residual"] = er.residual[k];
    rows.push_back(j);
  }
  res.report["samples"] = rows;
  res.report["steps"] = tr.records.size() - 1;
  res.report["final_time"] = tr.final_state.t;
  res.report["jump_ratio"] = jump_ratio(rho0);
}

inline void run_twisted_demo(const RunConfig& c, const std::vector<CheckSpec>& plan, const std::filesystem::path& out,
                             RunResult& res) {
  const nlohmann::json blk = c.extra.contains("twisted") ? c.extra["twisted"] : nlohmann::json::object();
  reject_unknown(blk, "twisted", {"epsilon", "violating_epsilon", "tol", "max_iter", "flow_map_amplitude", "flow_map_time"});
  const double eps = get_or<double>(blk, "epsilon", "twisted.", 0.3);
  const double bad = get_or<double>(blk, "violating_epsilon", "twisted.", 0.9);
  const double tol = get_or<double>(blk, "tol", "twisted.", 1e-8);
  const int max_iter = get_or<int>(blk, "max_iter", "twisted.", 40);
  const double amp = get_or<double>(blk, "flow_map_amplitude", "twisted.", 0.3);
  const double fm_time = get_or<double>(blk, "flow_map_time", "twisted.", 1.0);
  require(eps >= 0 && bad >= 0 && tol > 0 && max_iter >= 1 && fm_time > 0, "twisted", "values out of range");
  const Grid& g = c.grid;
  const VectorField R = random_vector_field(g, c.velocity.bandwidth, c.seed);

  TwistedDivResult fp;
  bool fp_ok = true;
  std::string fp_msg;
  try {
    fp = solve_twisted_divergence(TwistedDivProblem::make(R, reflection_perturbation(g, eps), tol, max_iter));
  } catch (const SolverError& e) {
    fp_ok = false;
    fp_msg = e.what();
  }
  bool raised = false;
  try {
    solve_twisted_divergence(TwistedDivProblem::make(R, reflection_perturbation(g, bad), tol, max_iter));
  } catch (const ContractionViolated&) {
    raised = true;
  } catch (const SolverError&) {
  }
  if (fp_ok) {
    auto os = open_out(out / "fixed_point.csv");
    os << std::setprecision(17) << "iteration,residual,gap\n";
    for (std::size_t k = 0; k < fp.residual_history.size(); ++k)
      os << k << ',' << fp.residual_history[k] << ',' << (k > 0 ? fp.gap_history[k - 1] : 0.0) << '\n';
    write_snapshot_file(out / "snapshots" / "twisted_u.txt", fp.u);
  }

  const FlowMap fm = demo_flow_map(g, amp, fm_time, 20);
  const MatrixField A = cofactor_inverse(fm);
  write_flow_map(out / "snapshots", "flow_map_demo", fm);

  const VectorField tg = taylor_green(g);
  const VectorField phi = compatibility_phi(tg);
  write_snapshot_file(out / "snapshots" / "compatibility_phi.txt", phi);

  for (const auto& spec : plan) {
    const std::string& id = spec.id;
    if (id == "fixed_point_contraction") {
      const bool ok = fp_ok && fp.iterations <= max_iter && fp.residual <= tol && fp.observed_ratio <= 0.4 && raised;
      std::string d = fp_ok ? std::to_string(fp.iterations) + " iterations, residual " + fmt(fp.residual) +
                                  ", ratio " + fmt(fp.observed_ratio)
                            : fp_msg;
      d += raised ? ", violation detected at " + fmt(bad) : ", no ContractionViolated at " + fmt(bad);
      res.checks.push_back(make_result(id, ok, fp_ok ? fp.residual : 0.0, tol, d));
    } else if (id == "twisted_flow_map") {
      double r1 = 0, r2 = 0, cn = 0;
      std::string d;
      bool ok = false;
      try {
        const auto prob = TwistedDivProblem::make(R, A, tol, 100);
        cn = prob.contraction_norm;
        const TwistedDivResult tr = solve_twisted_divergence(prob);
        const ScalarField divR = divergence(R);
        r1 = l2_norm(divergence(apply(A, tr.u)) - divR);
        r2 = l2_norm(twisted_contraction(tr.u, wrap_inverse(A)) - divR);
        ok = r1 <= tol && r2 <= tol;
        d = "|A - Id| " + fmt(cn) + ", div form " + fmt(r1) + ", contraction form " + fmt(r2);
      } catch (const SolverError& e) {
        d = e.what();
      }
      res.checks.push_back(make_result(id, ok, std::max(r1, r2), tol, d));
    } else if (id == "compatibility_corrector") {
      const double e1 = max_magnitude(phi - compatibility_oracle(tg)) / std::max(max_magnitude(phi), 1e-300);
      const VectorField shear = VectorField::from_function(
          g, [&](double, double y) { return std::array<double, 2>{std::sin(g.k0() * y), 0.0}; });
      const double e2 = max_magnitude(compatibility_phi(shear));
      const bool ok = e1 <= 1e-10 && e2 <= 1e-10;
      res.checks.push_back(make_result(id, ok, std::max(e1, e2), 1e-10,
                                       "oracle gap " + fmt(e1) + ", shear-mode magnitude " + fmt(e2)));
    }
  }
  res.report["fixed_point"] = {{"epsilon", eps},
                               {"iterations", fp_ok ? fp.iterations : -1},
                               {"residual", fp_ok ? fp.residual : -1.0},
                               {"observed_ratio", fp_ok ? fp.observed_ratio : -1.0},
                               {"violation_raised", raised}};
  res.report["flow_map"] = {{"du_linf_integral", fm.du_linf_integral},
                            {"a_minus_id", max_op_norm(A - MatrixField::identity(g))}};
}

inline void run_stokes_scaling(const RunConfig& c, const std::vector<CheckSpec>& plan, const std::filesystem::path& out,
                               RunResult& res) {
  const nlohmann::json blk = c.extra.contains("stokes_scaling") ? c.extra["stokes_scaling"] : nlohmann::json::object();
  reject_unknown(blk, "stokes_scaling", {"forcings", "nu", "m", "dt", "T", "bandwidth", "ceiling"});
  const int forcings = get_or<int>(blk, "forcings", "stokes_scaling.", 20);
  const auto nus = get_or<std::vector<double>>(blk, "nu", "stokes_scaling.", {0.1, 1.0, 10.0});
  const auto ms = get_or<std::vector<double>>(blk, "m", "stokes_scaling.", {0.5, 1.0, 2.0});
  const double dt = get_or<double>(blk, "dt", "stokes_scaling.", 1e-2);
  const double T = get_or<double>(blk, "T", "stokes_scaling.", 1.0);
  const int bw = get_or<int>(blk, "bandwidth", "stokes_scaling.", 4);
  const double ceiling = get_or<double>(blk, "ceiling", "stokes_scaling.", stokes_ratio_ceiling);
  require(forcings >= 1 && !nus.empty() && !ms.empty() && dt > 0 && T > 0, "stokes_scaling", "values out of range");
  require(bw >= 1 && bw < c.grid.n / 2, "stokes_scaling.bandwidth", "must be in [1, n/2)");
  for (double x : nus) require(x > 0, "stokes_scaling.nu", "entries must be positive");
  for (double x : ms) require(x > 0, "stokes_scaling.m", "entries must be positive");

  auto os = open_out(out / "stokes_scaling.csv");
  os << std::setprecision(17) << "seed,m,nu,lhs,rhs,ratio\n";
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (int f = 0; f < forcings; ++f)
    for (double nu : nus)
      for (double m : ms) {
        const auto s = stokes_scaling_sample(c.grid, m, nu, c.seed + 101 * f, T, dt, bw);
        os << s.seed << ',' << s.m << ',' << s.nu << ',' << s.lhs << ',' << s.rhs << ',' << s.ratio << '\n';
        lo = std::min(lo, s.ratio);
        hi = std::max(hi, s.ratio);
      }
  const double spread = hi / lo;
  if (detail::wants(plan, "stokes_scaling"))
    res.checks.push_back(make_result("stokes_scaling", spread < 3.0 && hi <= ceiling, spread, 3.0,
                                     "ratio in [" + fmt(lo) + ", " + fmt(hi) + "], spread " + fmt(spread) +
                                         ", ceiling " + fmt(ceiling)));
  res.report["stokes_scaling"] = {{"min_ratio", lo}, {"max_ratio", hi}, {"spread", spread}, {"ceiling", ceiling}};
}

}  // namespace detail

// Runs the scenario, writes artifacts into `out` and returns the exit status with check results.
inline RunResult run(const RunConfig& c, const std::filesystem::path& out) {
  RunResult res;
  const auto plan = planned_checks(c, &res.warnings);
  std::filesystem::create_directories(out);
  res.report["config"] = detail::echo_config(c);
  try {
    switch (c.scenario) {
      case ScenarioKind::twisted_divergence_demo: detail::run_twisted_demo(c, plan, out, res); break;
      case ScenarioKind::stokes_scaling: detail::run_stokes_scaling(c, plan, out, res); break;
      default: detail::run_time_scenario(c, plan, out, res); break;
    }
    res.exit_code = std::all_of(res.checks.begin(), res.checks.end(), [](const CheckResult& r) { return r.pass; }) ? 0 : 2;
  } catch (const SolverError& e) {
    res.exit_code = 2;
    res.error = e.what();
    res.error_kind = e.kind();
  }
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : res.checks)
    checks.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"value", r.value}, {"threshold", r.threshold},
                      {"detail", r.detail}});
  res.report["checks"] = checks;
  res.report["warnings"] = res.warnings;
  res.report["status"] = res.exit_code == 0 ? "pass" : "fail";
  res.report["exit_code"] = res.exit_code;
  if (!res.error.empty()) res.report["error"] = {{"kind", res.error_kind}, {"message", res.error}};
  auto os = detail::open_out(out / "report.json");
  os << std::setprecision(17) << res.report.dump(2) << '\n';
  return res;
}

}  // namespace vdflow
