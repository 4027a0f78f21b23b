/// @file cost.hpp
/// @brief Tracking-type cost functional and its weights/targets.
#pragma once

#include <vector>

#include "nematic/state.hpp"

namespace nematic {

/// Weights and targets.  Empty target containers stand for zero targets.
struct CostSpec {
  double beta1 = 0, beta2 = 0, beta3 = 0, beta4 = 0, gamma = 0;
  std::vector<VectorField2D> v_Q;  // one per time level
  std::vector<Mat> d_Q;            // cells x n_dir, one per time level
  VectorField2D v_Omega;
  Mat d_Omega;
  BoundaryTrace d_Omega_trace;     // boundary values of d_Omega (checked when beta4 > 0)

  bool all_weights_zero() const { return beta1 == 0 && beta2 == 0 && beta3 == 0 && beta4 == 0 && gamma == 0; }

  /// Shape and sign checks.  With require_weights the weights may not vanish simultaneously.
  void validate(const GridSpec& g, bool require_weights = false) const {
    for (double b : {beta1, beta2, beta3, beta4, gamma})
      NEMATIC_REQUIRE(b >= 0 && std::isfinite(b), ConfigError, "cost: weights must be finite and non-negative");
    if (require_weights && all_weights_zero())
      throw ConfigError("cost: beta1..beta4 and gamma must not vanish simultaneously when optimising");
    NEMATIC_REQUIRE(v_Q.empty() || static_cast<int>(v_Q.size()) == g.num_levels(), ConfigError,
                    "cost: v_Q needs one field per time level");
    NEMATIC_REQUIRE(d_Q.empty() || static_cast<int>(d_Q.size()) == g.num_levels(), ConfigError,
                    "cost: d_Q needs one field per time level");
    for (const VectorField2D& v : v_Q) {
      require_same_grid(v.grid, g, "cost target v_Q");
      NEMATIC_REQUIRE(v.u.size() == g.num_xfaces() && v.v.size() == g.num_yfaces(), ConfigError, "cost: v_Q shape");
    }
    for (const Mat& d : d_Q)
      NEMATIC_REQUIRE(d.rows() == g.num_cells() && d.cols() == g.n_dir, ConfigError, "cost: d_Q shape");
    if (v_Omega.u.size() > 0) {
      require_same_grid(v_Omega.grid, g, "cost target v_Omega");
      NEMATIC_REQUIRE(v_Omega.u.size() == g.num_xfaces() && v_Omega.v.size() == g.num_yfaces(), ConfigError,
                      "cost: v_Omega shape");
    }
    NEMATIC_REQUIRE(d_Omega.size() == 0 || (d_Omega.rows() == g.num_cells() && d_Omega.cols() == g.n_dir), ConfigError,
                    "cost: d_Omega shape");
    NEMATIC_REQUIRE(d_Omega_trace.values.size() == 0 ||
                        (d_Omega_trace.values.rows() == g.num_boundary_nodes() && d_Omega_trace.values.cols() == g.n_dir),
                    ConfigError, "cost: d_Omega trace shape");
  }

  Vec vq_u(int k, const GridSpec& g) const { return v_Q.empty() ? Vec::Zero(g.num_xfaces()) : v_Q[k].u; }
  Vec vq_v(int k, const GridSpec& g) const { return v_Q.empty() ? Vec::Zero(g.num_yfaces()) : v_Q[k].v; }
  Mat dq(int k, const GridSpec& g) const { return d_Q.empty() ? Mat::Zero(g.num_cells(), g.n_dir) : d_Q[k]; }
  Vec vo_u(const GridSpec& g) const { return v_Omega.u.size() ? v_Omega.u : Vec::Zero(g.num_xfaces()); }
  Vec vo_v(const GridSpec& g) const { return v_Omega.v.size() ? v_Omega.v : Vec::Zero(g.num_yfaces()); }
  Mat dO(const GridSpec& g) const { return d_Omega.size() ? d_Omega : Mat::Zero(g.num_cells(), g.n_dir); }
  Mat dO_trace(const GridSpec& g) const {
    return d_Omega_trace.values.size() ? d_Omega_trace.values : Mat::Zero(g.num_boundary_nodes(), g.n_dir);
  }

  /// Targets taken from a reference trajectory (velocity and director at every level, endpoint included).
  static CostSpec tracking(const StateTrajectory& ref, double b1, double b2, double b3, double b4, double gamma) {
    CostSpec c;
    c.beta1 = b1;
    c.beta2 = b2;
    c.beta3 = b3;
    c.beta4 = b4;
    c.gamma = gamma;
    for (int k = 0; k < ref.num_levels(); ++k) {
      const StateSnapshot s = ref.at(k);
      c.v_Q.push_back(s.v);
      c.d_Q.push_back(s.d.values);
    }
    const StateSnapshot& e = ref.final_snapshot();
    c.v_Omega = e.v;
    c.d_Omega = e.d.values;
    c.d_Omega_trace = e.d.trace;
    return c;
  }
};

/// Face quadrature for a MAC velocity difference: cell area per face, halved on the
/// wall-normal faces (trapezoid across each row of faces).
inline double velocity_sq_integral(const GridSpec& g, const Vec& du, const Vec& dv) {
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) s += (g.is_wall_xface(i) ? 0.5 : 1.0) * du[g.xface(i, j)] * du[g.xface(i, j)];
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s += (g.is_wall_yface(j) ? 0.5 : 1.0) * dv[g.yface(i, j)] * dv[g.yface(i, j)];
  return g.cell_area() * s;
}

struct CostBreakdown {
  double velocity_tracking = 0, director_tracking = 0, velocity_final = 0, director_final = 0, control = 0;
  double total() const { return velocity_tracking + director_tracking + velocity_final + director_final + control; }
};

/// Trapezoid rule in time; midpoint rule over cells, face rule of velocity_sq_integral.
inline CostBreakdown cost_breakdown(const StateTrajectory& traj, const BoundaryControl& h, const CostSpec& cost) {
  const GridSpec& g = traj.grid();
  cost.validate(g);
  require_same_grid(h.grid, g, "cost_evaluate control");
  NEMATIC_REQUIRE(h.num_levels() == traj.num_levels(), ConfigError, "cost_evaluate: control/trajectory length mismatch");
  const double a = g.cell_area();
  CostBreakdown c;
  for (int k = 0; k < traj.num_levels(); ++k) {
    if (cost.beta1 == 0 && cost.beta2 == 0) break;
    const StateSnapshot s = traj.at(k);
    const double w = time_weight(g, k);
    if (cost.beta1 > 0)
      c.velocity_tracking += 0.5 * cost.beta1 * w * velocity_sq_integral(g, s.v.u - cost.vq_u(k, g), s.v.v - cost.vq_v(k, g));
    if (cost.beta2 > 0) c.director_tracking += 0.5 * cost.beta2 * w * a * (s.d.values - cost.dq(k, g)).squaredNorm();
  }
  const StateSnapshot& e = traj.final_snapshot();
  if (cost.beta3 > 0)
    c.velocity_final = 0.5 * cost.beta3 * velocity_sq_integral(g, e.v.u - cost.vo_u(g), e.v.v - cost.vo_v(g));
  if (cost.beta4 > 0) c.director_final = 0.5 * cost.beta4 * a * (e.d.values - cost.dO(g)).squaredNorm();
  if (cost.gamma > 0) {
    const Deviation hv = control_values(h);
    c.control = 0.5 * cost.gamma * sigma_dot(g, hv, hv);
  }
  return c;
}

inline double cost_evaluate(const StateTrajectory& traj, const BoundaryControl& h, const CostSpec& cost) {
  return cost_breakdown(traj, h, cost).total();
}

}  // namespace nematic
