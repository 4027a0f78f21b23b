/// @file cli.hpp
/// @brief Subcommand dispatch: scenario setup from a RunConfig and artifact emission.
#pragma once

#include <algorithm>
#include <iostream>
#include <json.hpp>
#include <string>

#include "nematic/config.hpp"
#include "nematic/verification.hpp"

namespace nematic {

enum ExitCode { kSuccess = 0, kNumericalFailure = 1, kUsageError = 2 };

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"simulate", "linearize", "adjoint", "optimize", "verify"};
  return names;
}

inline Scenario make_scenario(const RunConfig& c) {
  if (c.scenario == "stationary") return stationary_scenario(c.grid, c.physics);
  if (c.scenario == "vortex") return vortex_scenario(c.grid, c.physics);
  if (c.scenario == "rotating") return rotating_scenario(c.grid, c.physics);
  return random_scenario(c.grid, c.seed, c.physics);
}

/// The configured starting control with its caps.
inline BoundaryControl make_control(const RunConfig& c, const Scenario& s) {
  BoundaryControl h = c.initial_file                 ? *c.initial_file
                      : c.initial_control == "h_ref" ? BoundaryControl::constant(s.d0.trace)
                                                     : s.control;
  h.m_space = c.m_space;
  h.m_time = c.m_time;
  return h;
}

inline CostSpec make_cost(const RunConfig& c, const Scenario& s) {
  const BoundaryControl target =
      c.target_file ? *c.target_file : manufactured_control(s.d0.trace, c.target_amplitude);
  const StateTrajectory ref = solve_state(s.v0, s.d0, target, s.params, s.grid);
  return CostSpec::tracking(ref, c.beta1, c.beta2, c.beta3, c.beta4, c.gamma);
}

/// The checks run by `verify`, on the configured grid.
inline std::vector<CheckReport> default_suite(const RunConfig& c) {
  const GridSpec& g = c.grid;
  const PhysParams& p = c.physics;
  const Scenario random = random_scenario(g, c.seed, p);
  const AdjointProblem ap = default_adjoint_problem(g, c.seed, p);
  std::vector<CheckReport> r;
  r.push_back(run_stationary_check(g, p));
  r.push_back(run_incompressibility_check(
      {stationary_scenario(g, p), vortex_scenario(g, p), rotating_scenario(g, p), random}));
  for (CheckReport& e : run_energy_checks([&](const GridSpec& x) { return vortex_scenario(x, p); },
                                          [&](const GridSpec& x) { return rotating_scenario(x, p); }, g))
    r.push_back(std::move(e));
  r.push_back(run_max_principle_check(rotating_scenario(g, p)));
  r.push_back(run_frechet_check(random, c.seed));
  r.push_back(run_transpose_check(random, 10, c.seed));
  r.push_back(run_adjoint_identity_check(ap.scenario, ap.cost, random_direction(g, c.seed)));
  r.push_back(run_gradient_check(ap.scenario, ap.cost, 10, c.seed));
  r.push_back(run_optimization_check(manufactured_problem(g, p), c.optimize));
  r.push_back(run_stability_ratio_check(random, c.seed));
  return r;
}

/// One JSON object per report; wall time is left out so reruns are byte-identical.
inline std::string report_json_line(const CheckReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const Measurement& x : r.measured)  // JSON has no inf/nan literals
    m[x.name] = std::isfinite(x.value) ? nlohmann::ordered_json(x.value) : nlohmann::ordered_json(format_double(x.value));
  j["measured"] = m;
  j["tolerance"] = r.tolerance;
  j["fingerprint"] = r.fingerprint;
  j["note"] = r.note;
  return j.dump() + "\n";
}

namespace detail {

inline int run_simulate(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Scenario s = make_scenario(c);
  const BoundaryControl h = make_control(c, s);
  const StateTrajectory tr = solve_state(s.v0, s.d0, h, s.params, s.grid);
  const LiftFields lifts = compute_lifts(h, s.d0);
  CsvTable t{{"step", "t", "E", "E_hat", "kinetic", "elastic", "potential", "max_div", "max_dnorm"}, {}};
  const int K = c.grid.num_steps();
  for (int k = 0; k <= K; ++k) {
    const StateSnapshot st = tr.at(k);
    const EnergyParts e = energy_parts(st, s.params);
    t.add({double(k), st.t, e.total(), lifted_energy(st, lifts.d_E[k]), e.kinetic, e.elastic, e.potential,
           max_abs_divergence(st.v), max_director_norm(st.d)});
    if (c.emit_vtk && (k % c.snapshot_stride == 0 || k == K)) write_snapshot_vtk(out, k, st);
  }
  atomic_write(out / "energy.csv", t.str());
  log << "simulate: " << s.name << ", " << K << " steps, E " << format_double(t.rows.front()[2]) << " -> "
      << format_double(t.rows.back()[2]) << "\n";
  return kSuccess;
}

inline int run_linearize(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Scenario s = make_scenario(c);
  const BoundaryControl h = make_control(c, s);
  const StateTrajectory base = solve_state(s.v0, s.d0, h, s.params, s.grid);
  const TaylorResult r =
      taylor_remainder_slopes(base, s.v0, s.d0, random_direction(c.grid, c.seed), {1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
  CsvTable t{{"s", "remainder", "local_slope"}, {}};
  for (std::size_t i = 0; i < r.s.size(); ++i) t.add({r.s[i], r.remainder[i], r.local_slope[i]});
  atomic_write(out / "taylor.csv", t.str());
  log << "linearize: fitted slope " << (r.degenerate ? std::string("n/a (degenerate)") : format_double(r.fitted_slope)) << "\n";
  return kSuccess;
}

inline int run_adjoint(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Scenario s = make_scenario(c);
  const BoundaryControl h = make_control(c, s);
  const CostSpec cost = make_cost(c, s);
  const ModelPtr m = make_model(s.grid, s.params);
  const StateTrajectory base = solve_state(m, s.v0, s.d0, h);
  const AdjointTrajectory adj = solve_adjoint(base, cost);
  const GridSpec& g = c.grid;
  CsvTable t{{"t", "p_tilde_L2", "q_tilde_L2", "q1_L2_Gamma"}, {}};
  for (int k = 0; k < g.num_levels(); ++k) {
    double q1 = 0;
    for (int n = 0; n < g.num_boundary_nodes(); ++n) q1 += boundary_node(g, n).weight * adj.q1[k].values.row(n).squaredNorm();
    t.add({g.time(k), discrete_norm(adj.p_tilde[k], NormOrder::L2), discrete_norm(adj.q_tilde[k], NormOrder::L2), std::sqrt(q1)});
  }
  atomic_write(out / "adjoint_norms.csv", t.str());
  const Evaluation e = evaluate(m, s.v0, s.d0, h, cost);
  write_boundary_series_csv(out / "gradient.csv", g, e.grad);
  log << "adjoint: J " << format_double(e.J) << ", |grad| " << format_double(sigma_norm(g, e.grad)) << "\n";
  return kSuccess;
}

inline int run_optimize(const RunConfig& c, const fs::path& out, std::ostream& log) {
  const Scenario s = make_scenario(c);
  const BoundaryControl h0 = make_control(c, s);
  const CostSpec cost = make_cost(c, s);
  const ModelPtr m = make_model(s.grid, s.params);
  const OptimizeResult r = optimize(m, s.v0, s.d0, h0, cost, c.optimize);
  CsvTable t{{"iter", "J", "grad_norm", "step", "backtracks", "N_space", "N_time"}, {}};
  for (const IterationRecord& it : r.history)
    t.add({double(it.iter), it.J, it.grad_norm, it.step, double(it.backtracks), it.n_space, it.n_time});
  atomic_write(out / "optimize.csv", t.str());
  write_control_csv(out / "h_opt.csv", r.h_opt);
  const double pf = projection_formula_residual(r.h_opt, r.final_gradient, cost);
  nlohmann::ordered_json j;
  j["J_initial"] = r.history.front().J;
  j["J_final"] = r.final_J;
  j["iterations"] = static_cast<int>(r.history.size()) - 1;
  j["converged"] = r.converged;
  j["line_search_failed"] = r.line_search_failed;
  j["projection_residual"] = pf;
  j["tol_opt"] = c.optimize.tol_opt;
  atomic_write(out / "optimize_summary.json", j.dump(2) + "\n");
  log << "optimize: J " << format_double(r.history.front().J) << " -> " << format_double(r.final_J) << " in "
      << r.history.size() - 1 << " iterations, projection residual " << format_double(pf)
      << (r.converged ? "" : " (not converged)") << "\n";
  return kSuccess;
}

inline int run_verify(const RunConfig& c, const fs::path& out, std::ostream& log) {
  std::string lines;
  bool ok = true;
  for (const CheckReport& r : default_suite(c)) {
    lines += report_json_line(r);
    ok = ok && r.ok();
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f s", r.seconds);
    log << to_string(r.status) << "  " << r.name << "  (" << secs << ")";
    if (!r.note.empty()) log << "  " << r.note;
    log << "\n";
  }
  atomic_write(out / "verify.jsonl", lines);
  return ok ? kSuccess : kNumericalFailure;
}

}  // namespace detail

/// Runs one subcommand, writing artifacts under c.output_dir; returns the process exit code.
inline int run_subcommand(const std::string& name, const RunConfig& c, std::ostream& log = std::cout,
                          std::ostream& err = std::cerr) {
  if (std::find(subcommands().begin(), subcommands().end(), name) == subcommands().end()) {
    err << "unknown subcommand '" << name << "'\n";
    return kUsageError;
  }
  try {
    require_valid_for(c, name);
    const fs::path out = c.output_dir;
    fs::create_directories(out);
    atomic_write(out / "resolved_config.txt", resolved_config_text(c));
    if (name == "simulate") return detail::run_simulate(c, out, log);
    if (name == "linearize") return detail::run_linearize(c, out, log);
    if (name == "adjoint") return detail::run_adjoint(c, out, log);
    if (name == "optimize") return detail::run_optimize(c, out, log);
    return detail::run_verify(c, out, log);
  } catch (const ConfigError& e) {
    err << name << ": configuration error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericalError& e) {
    err << name << ": numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace nematic
