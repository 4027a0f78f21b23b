/// @file energy.hpp
/// @brief Energy monitors: plain energy series and the lifted energy inequality residual.
#pragma once

#include <vector>

#include "nematic/lifting.hpp"
#include "nematic/state.hpp"

namespace nematic {

inline std::vector<double> energy_series(const StateTrajectory& traj) {
  std::vector<double> e;
  for (int k = 0; k < traj.num_levels(); ++k) e.push_back(energy(traj.at(k), traj.params()));
  return e;
}

/// Largest per-step energy increase divided by dt^2 (zero for a monotone series).
inline double decay_slack_constant(const std::vector<double>& e, double dt) {
  double c = 0;
  for (std::size_t k = 1; k < e.size(); ++k) c = std::max(c, (e[k] - e[k - 1]) / (dt * dt));
  return c;
}

/// Terms of the lifted energy balance for one step k -> k+1.  The lifted energy uses
/// d_hat = d - d_E, which vanishes on the boundary; all coefficients are taken as one.
struct LiftedStep {
  double e_hat_now = 0, e_hat_next = 0;
  double dissipation = 0;  // |grad v|^2 + 1/2 |Lap d_hat - f(d)|^2 at k+1
  double bound = 0;        // 3/2 |dt d_E|^2 + 1/4 |dt d_E|_L4^4 + 13/3 int F + |Omega|/4
  double residual = 0;     // (E_hat' - E_hat)/dt + dissipation - bound
};

inline double lifted_energy(const StateSnapshot& s, const DirectorField& d_E) {
  DirectorField d_hat{s.d.grid, s.d.values - d_E.values, BoundaryTrace::zeros(s.d.grid)};
  return 0.5 * velocity_l2_sq(s.v) + 0.5 * director_grad_sq(d_hat) + potential_integral(s.d, 1.0);
}

inline std::vector<LiftedStep> lifted_energy_residual(const StateTrajectory& traj, const std::vector<DirectorField>& d_E) {
  const GridSpec& g = traj.grid();
  NEMATIC_REQUIRE(static_cast<int>(d_E.size()) == traj.num_levels(), ConfigError,
                  "lifted_energy_residual: lift sequence length does not match the trajectory");
  for (const DirectorField& l : d_E) require_same_grid(l.grid, g, "lifted_energy_residual");
  const Operators& op = traj.model()->ops();
  const double w = g.cell_area(), dt = g.dt;
  std::vector<LiftedStep> out;
  StateSnapshot now = traj.at(0);
  for (int k = 0; k + 1 < traj.num_levels(); ++k) {
    StateSnapshot next = traj.at(k + 1);
    NEMATIC_REQUIRE((next.d.trace.values - d_E[k + 1].trace.values).cwiseAbs().maxCoeff() <= 1e-12, ConfigError,
                    "lifted_energy_residual: lift trace does not match the trajectory at level " + std::to_string(k + 1));
    LiftedStep st;
    st.e_hat_now = lifted_energy(now, d_E[k]);
    st.e_hat_next = lifted_energy(next, d_E[k + 1]);
    const Mat d_hat = next.d.values - d_E[k + 1].values;
    const Mat tension = op.lap * d_hat - compute_f_rows(next.d.values, 1.0);
    st.dissipation = velocity_grad_sq(next.v) + 0.5 * tension.squaredNorm() * w;
    const Mat dtE = (d_E[k + 1].values - d_E[k].values) / dt;
    const Eigen::ArrayXd m2 = dtE.rowwise().squaredNorm().array();
    st.bound = 1.5 * m2.sum() * w + 0.25 * (m2 * m2).sum() * w + 13.0 / 3.0 * potential_integral(next.d, 1.0) +
               0.25 * g.area();
    st.residual = (st.e_hat_next - st.e_hat_now) / dt + st.dissipation - st.bound;
    out.push_back(st);
    now = std::move(next);
  }
  return out;
}

}  // namespace nematic
