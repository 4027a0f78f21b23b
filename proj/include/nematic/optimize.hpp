/// @file optimize.hpp
/// @brief Reduced gradient, projected-gradient descent with Armijo backtracking, and
/// first-order optimality residuals.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "nematic/adjoint.hpp"
#include "nematic/scenarios.hpp"

namespace nematic {

/// L2(Sigma) gradient of the reduced cost with respect to the deviation: gamma h_k + q1_k
/// for k >= 1; the t = 0 slot is zero.
inline Deviation control_gradient(const StateTrajectory& base, const AdjointTrajectory& adj, const BoundaryControl& h,
                                  const CostSpec& cost) {
  const GridSpec& g = base.grid();
  require_same_grid(adj.grid, g, "control_gradient adjoint");
  require_same_grid(h.grid, g, "control_gradient control");
  NEMATIC_REQUIRE(static_cast<int>(adj.q1.size()) == g.num_levels() && h.num_levels() == g.num_levels(), ConfigError,
                  "control_gradient: trajectory, adjoint and control lengths differ");
  NEMATIC_REQUIRE((base.control().h_ref.values - h.h_ref.values).cwiseAbs().maxCoeff() == 0.0, ConfigError,
                  "control_gradient: the trajectory was computed for a different control");
  Deviation grad = zero_deviation(g);
  for (int k = 1; k < g.num_levels(); ++k) grad[k] = cost.gamma * h.at(k).values + adj.q1[k].values;
  return grad;
}

/// Cost, state and gradient at one control.
struct Evaluation {
  StateTrajectory traj;
  double J = 0;
  Deviation grad;
};

inline double reduced_cost(const ModelPtr& model, const VectorField2D& v0, const DirectorField& d0, const BoundaryControl& h,
                           const CostSpec& cost) {
  return cost_evaluate(solve_state(model, v0, d0, h), h, cost);
}

inline Evaluation evaluate(const ModelPtr& model, const VectorField2D& v0, const DirectorField& d0, const BoundaryControl& h,
                           const CostSpec& cost, bool with_gradient = true) {
  Evaluation e;
  e.traj = solve_state(model, v0, d0, h);
  e.J = cost_evaluate(e.traj, h, cost);
  if (with_gradient) e.grad = control_gradient(e.traj, solve_adjoint(e.traj, cost), h, cost);
  return e;
}

/// Deviation of the control that the projection formula predicts from gradient g:
/// with gamma > 0 the map u -> P(u - g / gamma), whose full control is (1/gamma) P[-q1].
inline Deviation fixed_point_map(const BoundaryControl& h, const Deviation& grad, double scale) {
  BoundaryControl trial = h;
  trial.u = axpy(-scale, grad, h.u);
  trial.u[0].setZero();
  return admissible_project(trial).u;
}

/// |h - (1/gamma) P[-q1]|_{L2(Sigma)} / |h|_{L2(Sigma)}.
inline double projection_formula_residual(const BoundaryControl& h, const Deviation& grad, const CostSpec& cost) {
  if (!(cost.gamma > 0)) throw ConfigError("projection_formula_residual: gamma must be positive");
  const GridSpec& g = h.grid;
  const Deviation target = fixed_point_map(h, grad, 1.0 / cost.gamma);
  const Deviation hv = control_values(h);
  const double nh = sigma_norm(g, hv);
  const double diff = sigma_norm(g, axpy(-1.0, target, h.u));
  return nh > 0 ? diff / nh : diff;
}

inline double projection_formula_residual(const BoundaryControl& h_opt, const AdjointTrajectory& adj,
                                          const StateTrajectory& base, const CostSpec& cost) {
  if (!(cost.gamma > 0)) throw ConfigError("projection_formula_residual: gamma must be positive");
  return projection_formula_residual(h_opt, control_gradient(base, adj, h_opt, cost), cost);
}

/// Stationarity measure driving the stopping rule: the projection-formula residual when
/// gamma > 0, otherwise |u - P(u - g)|_{L2(Sigma)}.
inline double stationarity(const BoundaryControl& h, const Deviation& grad, const CostSpec& cost) {
  if (cost.gamma > 0) return projection_formula_residual(h, grad, cost);
  return sigma_norm(h.grid, axpy(-1.0, fixed_point_map(h, grad, 1.0), h.u));
}

struct OptimizeOptions {
  int max_iters = 50;
  double tol_opt = 1e-3;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  double initial_step = 1.0;
};

struct IterationRecord {
  int iter = 0;
  double J = 0;
  double grad_norm = 0;
  double stationarity = 0;
  double step = 0;
  int backtracks = 0;
  double n_space = 0;
  double n_time = 0;
};

struct OptimizeResult {
  BoundaryControl h_opt;
  std::vector<IterationRecord> history;  // entry 0 describes the starting point
  bool converged = false;
  bool line_search_failed = false;
  double final_J = 0;
  double final_stationarity = 0;
  Deviation final_gradient;
};

/// Projected gradient descent on the deviation in the L2(Sigma) metric.  Every accepted
/// step satisfies J_new <= J + c <grad, u_new - u> < J.  Initial trial steps after the first
/// iteration use the Barzilai-Borwein quotient of the last accepted step.
inline OptimizeResult optimize(const ModelPtr& model, const VectorField2D& v0, const DirectorField& d0,
                               const BoundaryControl& h0, const CostSpec& cost, const OptimizeOptions& opts = {},
                               const std::function<void(const IterationRecord&)>& on_iter = {}) {
  const GridSpec& g = model->grid();
  cost.validate(g, true);
  NEMATIC_REQUIRE(opts.max_iters >= 0 && opts.tol_opt > 0 && opts.armijo_c > 0 && opts.armijo_c < 1 &&
                      opts.backtrack > 0 && opts.backtrack < 1 && opts.initial_step > 0,
                  ConfigError, "optimize: invalid options");
  OptimizeResult res;
  BoundaryControl h = admissible_project(h0);
  Evaluation cur = evaluate(model, v0, d0, h, cost);
  double meas = stationarity(h, cur.grad, cost);
  auto record = [&](int it, double step, int bt) {
    IterationRecord r{it, cur.J, sigma_norm(g, cur.grad), meas, step, bt, n_space(h), n_time(h)};
    res.history.push_back(r);
    if (on_iter) on_iter(r);
  };
  record(0, 0.0, 0);
  double alpha = opts.initial_step;
  for (int it = 1; it <= opts.max_iters && meas > opts.tol_opt; ++it) {
    int bt = 0;
    bool accepted = false;
    BoundaryControl trial = h;
    Evaluation next;
    for (; bt <= opts.max_backtracks; ++bt) {
      trial.u = fixed_point_map(h, cur.grad, alpha);
      const Deviation step = axpy(-1.0, h.u, trial.u);
      const double decrease = sigma_dot(g, cur.grad, step);
      if (decrease < 0) {
        next = evaluate(model, v0, d0, trial, cost, false);
        if (next.J <= cur.J + opts.armijo_c * decrease && next.J < cur.J) {
          accepted = true;
          break;
        }
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }
    next.grad = control_gradient(next.traj, solve_adjoint(next.traj, cost), trial, cost);
    const Deviation s = axpy(-1.0, h.u, trial.u);
    const Deviation y = axpy(-1.0, cur.grad, next.grad);
    const double sy = sigma_dot(g, s, y), ss = sigma_dot(g, s, s);
    const double used = alpha;
    alpha = sy > 0 ? ss / sy : 2 * alpha;
    h = trial;
    cur = std::move(next);
    meas = stationarity(h, cur.grad, cost);
    record(it, used, bt);
  }
  res.converged = meas <= opts.tol_opt;
  res.h_opt = h;
  res.final_J = cur.J;
  res.final_stationarity = meas;
  res.final_gradient = cur.grad;
  return res;
}

/// min over samples of <grad, h - h_opt> / |h - h_opt| for random admissible controls h
/// (a discrete check of the variational inequality; non-negative up to tolerance at an optimum).
inline double variational_inequality_margin(const BoundaryControl& h_opt, const Deviation& grad, int samples,
                                            std::uint64_t seed) {
  const GridSpec& g = h_opt.grid;
  double worst = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    BoundaryControl h = h_opt;
    const Deviation dir = random_direction(g, seed + 1000 + i);
    h.u = axpy(rng.uniform(0.01, 1.0), dir, h_opt.u);
    h = admissible_project(h);
    const Deviation diff = axpy(-1.0, h_opt.u, h.u);
    const double n = sigma_norm(g, diff);
    if (n > 0) worst = std::min(worst, sigma_dot(g, grad, diff) / n);
  }
  return worst;
}

}  // namespace nematic
