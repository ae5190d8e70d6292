#pragma once
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "density.hpp"
#include "stokes.hpp"

namespace vdflow {

// Everything measured after a step (or at t = 0).
struct StepRecord {
  double t = 0.0;
  double energy = 0.0;           // int |v|^2
  double weighted_energy = 0.0;  // int rho |v|^2
  double enstrophy = 0.0;        // int |grad v|^2
  double max_grad_v = 0.0;       // max |grad v| (operator norm)
  double smallness_integral = 0.0;  // trapezoid of max_grad_v
  double lagrangian_smallness = 0.0;  // flow-map integral of max |D_y u|
  int picard_iters = 0;
  double picard_gap = 0.0;
  double picard_ratio = 0.0;
  double div_residual = 0.0;      // |div v| / |v|
  double grad_q_curl = 0.0;       // |curl grad Q| / |grad grad Q|
  // flow-map invariants
  double det_deviation = 0.0;
  double dyx_max = 1.0;
  double a_minus_id_max = 0.0;
  bool stretch_holds = true;
  bool near_identity_holds = true;
  // density structure
  double rho_min = 0.0, rho_max = 0.0;
  bool rho_two_valued = true;
  // space norms for the windowed-norm and Xi proxies
  double grad_l4 = 0.0, vt_l4 = 0.0, hess_l4 = 0.0, grad_q_l4 = 0.0, vt_l2 = 0.0;
  std::optional<double> marker_area;
};

struct Snapshot {
  double t = 0.0;
  VectorField v;
  VectorField grad_Q;
  ScalarField rho;
};

struct RunOptions {
  double T = 1.0;
  int report_every = 10;
  bool keep_snapshots = true;
  std::optional<InterfaceMarkers> markers;
  std::function<void(const SimState&, const StepRecord&)> on_report;
};

struct Trajectory {
  std::vector<StepRecord> records;  // every step, starting at t = 0
  std::vector<std::size_t> report_indices;
  std::vector<Snapshot> snapshots;  // at report steps
  std::vector<InterfaceMarkers> marker_history;  // at report steps
  std::vector<std::string> warnings;
  SimState final_state;
  double m = 1.0, nu = 0.1;  // density lower bound and viscosity
};

inline StepRecord measure(const SimState& s, const StepRecord* prev, const VectorField* v_before) {
  StepRecord r;
  r.t = s.t;
  const Grid& g = s.grid();
  const MatrixField D = jacobian(s.v);
  r.energy = inner(s.v, s.v);
  double we = 0;
  for (std::size_t p = 0; p < g.size(); ++p)
    we += s.rho_field.values[p] * (s.v[0].values[p] * s.v[0].values[p] + s.v[1].values[p] * s.v[1].values[p]);
  r.weighted_energy = we * g.cell_area();
  r.enstrophy = inner(D, D);
  r.max_grad_v = max_op_norm(D);
  r.smallness_integral = prev ? prev->smallness_integral + 0.5 * (s.t - prev->t) * (prev->max_grad_v + r.max_grad_v) : 0.0;
  r.lagrangian_smallness = s.fm.du_linf_integral;
  r.picard_iters = s.last.picard_iters;
  r.picard_gap = s.last.picard_gap;
  r.picard_ratio = s.last.picard_ratio;
  const double vn = l2_norm(s.v);
  r.div_residual = vn > 0 ? l2_norm(divergence(s.v)) / vn : 0.0;
  const double gq = l2_norm(jacobian(s.grad_Q));
  r.grad_q_curl = gq > 0 ? l2_norm(curl(s.grad_Q)) / gq : 0.0;
  const FlowMapInvariants inv = check_invariants(s.fm);
  r.det_deviation = inv.det_max_deviation;
  r.dyx_max = inv.dyx_max;
  r.a_minus_id_max = inv.a_minus_id_max;
  r.stretch_holds = inv.stretch_holds;
  r.near_identity_holds = inv.near_identity_holds;
  r.rho_min = min_value(s.rho_field);
  r.rho_max = max_value(s.rho_field);
  if (auto* pc = std::get_if<PiecewiseConstantDensity>(&s.rho.kind)) {
    for (double x : s.rho_field.values)
      if (x != pc->m && x != pc->m + pc->sigma) r.rho_two_valued = false;
  }
  r.grad_l4 = lp_norm(D, 4.0);
  r.hess_l4 = hessian_lp(s.v, 4.0);
  r.grad_q_l4 = lp_norm(s.grad_Q, 4.0);
  if (v_before) {
    const VectorField vt = (1.0 / s.config.dt) * (s.v - *v_before);
    r.vt_l4 = lp_norm(vt, 4.0);
    r.vt_l2 = l2_norm(vt);
  }
  return r;
}

// Advances `s` to time T, recording every step.
inline Trajectory simulate(SimState s, const RunOptions& opt) {
  const double dt = s.config.dt;
  const int steps = int(std::llround(opt.T / dt));
  if (steps < 1 || std::abs(steps * dt - opt.T) > 1e-9 * opt.T)
    throw std::invalid_argument("simulate: T must be a positive multiple of dt");
  if (opt.report_every < 1) throw std::invalid_argument("simulate: report_every must be positive");
  Trajectory tr;
  tr.m = s.rho.inf();
  tr.nu = s.config.nu;
  tr.warnings = s.warnings;
  std::optional<InterfaceMarkers> markers = opt.markers;

  auto report = [&](const SimState& st) {
    StepRecord& rec = tr.records.back();
    if (markers) {
      rec.marker_area = enclosed_area(*markers);
      tr.marker_history.push_back(*markers);
    }
    tr.report_indices.push_back(tr.records.size() - 1);
    if (opt.keep_snapshots) tr.snapshots.push_back({st.t, st.v, st.grad_Q, st.rho_field});
    if (opt.on_report) opt.on_report(st, rec);
  };

  tr.records.push_back(measure(s, nullptr, nullptr));
  report(s);
  std::size_t warned = s.warnings.size();
  for (int n = 0; n < steps; ++n) {
    SimState next = step_variable_density(s);
    if (markers) *markers = advect_markers(*markers, s.v, next.v, dt);
    tr.records.push_back(measure(next, &tr.records.back(), &s.v));
    if (n == 0) {
      // the first sample has no backward difference; reuse the first step's
      tr.records[0].vt_l4 = tr.records[1].vt_l4;
      tr.records[0].vt_l2 = tr.records[1].vt_l2;
    }
    for (; warned < next.warnings.size(); ++warned) tr.warnings.push_back(next.warnings[warned]);
    s = std::move(next);
    if ((n + 1) % opt.report_every == 0 || n + 1 == steps) report(s);
  }
  tr.final_state = std::move(s);
  return tr;
}

}  // namespace vdflow
