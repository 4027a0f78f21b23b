#include <gtest/gtest.h>

#include <cmath>

#include "nematic/verification.hpp"

using namespace nematic;

namespace {

struct Problem {
  Scenario s;
  ModelPtr model;
  CostSpec cost;
};

/// Random scenario tracking the state of a rotated control from the same initial data.
Problem tracking_problem(int n, int steps, double dt, std::uint64_t seed, double b1, double b2, double b3, double b4,
                         double gamma) {
  Problem p{random_scenario(square_grid(n, steps, dt), seed), nullptr, {}};
  p.model = make_model(p.s.grid, p.s.params);
  const StateTrajectory ref = solve_state(p.model, p.s.v0, p.s.d0, manufactured_control(p.s.d0.trace, 0.5));
  p.cost = CostSpec::tracking(ref, b1, b2, b3, b4, gamma);
  return p;
}

/// Direct triple loop over levels, faces/cells and components.
double brute_force_cost(const StateTrajectory& tr, const BoundaryControl& h, const CostSpec& c) {
  const GridSpec& g = tr.grid();
  const int K = g.num_steps();
  auto vel = [&](const VectorField2D& v, const Vec& tu, const Vec& tv) {
    double s = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        const double w = (i == 0 || i == g.nx) ? 0.5 : 1.0, d = v.u[g.xface(i, j)] - tu[g.xface(i, j)];
        s += w * g.hx() * g.hy() * d * d;
      }
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0, d = v.v[g.yface(i, j)] - tv[g.yface(i, j)];
        s += w * g.hx() * g.hy() * d * d;
      }
    return s;
  };
  auto dir = [&](const Mat& d, const Mat& t) {
    double s = 0;
    for (int cell = 0; cell < g.num_cells(); ++cell)
      for (int m = 0; m < g.n_dir; ++m) s += g.hx() * g.hy() * (d(cell, m) - t(cell, m)) * (d(cell, m) - t(cell, m));
    return s;
  };
  double J = 0;
  for (int k = 0; k <= K; ++k) {
    const double w = (k == 0 || k == K) ? g.dt / 2 : g.dt;
    const StateSnapshot st = tr.at(k);
    J += 0.5 * c.beta1 * w * vel(st.v, c.v_Q[k].u, c.v_Q[k].v);
    J += 0.5 * c.beta2 * w * dir(st.d.values, c.d_Q[k]);
    for (int n = 0; n < g.num_boundary_nodes(); ++n) {
      const double len = (n < g.nx || (n >= g.nx + g.ny && n < 2 * g.nx + g.ny)) ? g.hx() : g.hy();
      J += 0.5 * c.gamma * w * len * h.at(k).values.row(n).squaredNorm();
    }
  }
  const StateSnapshot e = tr.at(K);
  J += 0.5 * c.beta3 * vel(e.v, c.v_Omega.u, c.v_Omega.v) + 0.5 * c.beta4 * dir(e.d.values, c.d_Omega);
  return J;
}

BoundaryControl with_caps(BoundaryControl h, double ms, double mt) {
  h.m_space = ms;
  h.m_time = mt;
  return h;
}

}  // namespace

TEST(Cost, StateOnTargetsAndZeroControlIsZero) {
  const GridSpec g = square_grid(8, 5, 1e-3);
  const DirectorField d0 = DirectorField::zeros(g);
  const BoundaryControl h = BoundaryControl::constant(d0.trace);
  const StateTrajectory tr = solve_state(VectorField2D::zeros(g), d0, h, {}, g);
  EXPECT_EQ(cost_evaluate(tr, h, CostSpec::tracking(tr, 1, 2, 3, 4, 5)), 0.0);
}

TEST(Cost, UnitVelocityMismatchOverUnitCylinder) {
  const int n = 4, steps = 100;
  const Scenario s = stationary_scenario(square_grid(n, steps, 1.0 / steps));
  const StateTrajectory tr = solve_state(s.v0, s.d0, s.control, s.params, s.grid);
  CostSpec c = CostSpec::tracking(tr, 2, 0, 0, 0, 0);
  for (VectorField2D& v : c.v_Q) v.u.array() -= 1.0;
  EXPECT_NEAR(cost_evaluate(tr, s.control, c), 1.0, 1e-12);
}

TEST(Cost, MatchesBruteForceOracle) {
  const Problem p = tracking_problem(10, 6, 5e-4, 3, 1.3, 0.7, 2.1, 0.4, 0.05);
  BoundaryControl h = p.s.control;
  h.u = axpy(0.3, random_direction(p.s.grid, 4), h.u);
  const StateTrajectory tr = solve_state(p.model, p.s.v0, p.s.d0, h);
  const double J = cost_evaluate(tr, h, p.cost);
  EXPECT_GT(J, 0);
  EXPECT_NEAR(J, brute_force_cost(tr, h, p.cost), 1e-12 * J);
  const CostBreakdown b = cost_breakdown(tr, h, p.cost);
  EXPECT_GT(b.velocity_tracking, 0);
  EXPECT_GT(b.director_final, 0);
  EXPECT_NEAR(b.total(), J, 0);
}

TEST(Cost, ShapeMismatchRejected) {
  const Problem p = tracking_problem(8, 4, 5e-4, 1, 1, 1, 0, 0, 0);
  CostSpec c = p.cost;
  c.d_Q.pop_back();
  const StateTrajectory tr = solve_state(p.model, p.s.v0, p.s.d0, p.s.control);
  EXPECT_THROW(cost_evaluate(tr, p.s.control, c), ConfigError);
  c = p.cost;
  c.beta2 = -1;
  EXPECT_THROW(cost_evaluate(tr, p.s.control, c), ConfigError);
}

TEST(AdmissibleProject, WithinCapsIsIdentity) {
  const Scenario s = rotating_scenario(square_grid(8, 6, 2e-4));
  const BoundaryControl h = with_caps(s.control, 1e3, 1e3);
  const BoundaryControl p = admissible_project(h);
  for (int k = 0; k < h.num_levels(); ++k) EXPECT_EQ((p.u[k] - h.u[k]).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(is_admissible(p));
}

TEST(AdmissibleProject, SpaceCapHitExactlyAlongTheSameDirection) {
  const Scenario s = rotating_scenario(square_grid(8, 6, 2e-4));
  const double cap = n_space(s.control);
  BoundaryControl h = with_caps(s.control, cap, 1e6);
  h.u = scaled(2.0, h.u);
  ASSERT_GT(n_space(h), cap);
  const BoundaryControl p = admissible_project(h);
  EXPECT_NEAR(n_space(p), cap, 1e-12 * cap);
  const double ratio = p.u[3](5, 0) / h.u[3](5, 0);
  for (int k = 1; k < h.num_levels(); ++k) EXPECT_LE((p.u[k] - ratio * h.u[k]).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(ratio, 0);
  EXPECT_LT(ratio, 1);
  EXPECT_EQ(p.u[0].cwiseAbs().maxCoeff(), 0.0);
}

TEST(AdmissibleProject, TimeCapAndIdempotence) {
  const Scenario s = rotating_scenario(square_grid(8, 6, 2e-4));
  const double cap = 0.5 * n_time(s.control);
  const BoundaryControl p = admissible_project(with_caps(s.control, 1e6, cap));
  EXPECT_NEAR(n_time(p), cap, 1e-12 * cap);
  EXPECT_TRUE(is_admissible(p));
  const BoundaryControl q = admissible_project(p);
  for (int k = 0; k < p.num_levels(); ++k) EXPECT_LE((q.u[k] - p.u[k]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AdmissibleProject, EmptySetRejected) {
  const Scenario s = rotating_scenario(square_grid(8, 6, 2e-4));
  EXPECT_THROW(admissible_project(with_caps(s.control, 1e-6, 1)), ConfigError);
}

TEST(ControlGradient, ZeroTrackingWeightsGiveGammaH) {
  const Problem p = tracking_problem(8, 5, 5e-4, 2, 0, 0, 0, 0, 0.7);
  const Evaluation e = evaluate(p.model, p.s.v0, p.s.d0, p.s.control, p.cost);
  EXPECT_EQ(e.grad[0].cwiseAbs().maxCoeff(), 0.0);
  for (int k = 1; k < p.s.grid.num_levels(); ++k)
    EXPECT_LE((e.grad[k] - 0.7 * p.s.control.at(k).values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ControlGradient, StateOnTargetsWithoutGammaIsZero) {
  const Scenario s = random_scenario(square_grid(8, 5, 5e-4), 5);
  const ModelPtr m = make_model(s.grid, s.params);
  const CostSpec c = CostSpec::tracking(solve_state(m, s.v0, s.d0, s.control), 1, 1, 1, 1, 0);
  const Evaluation e = evaluate(m, s.v0, s.d0, s.control, c);
  EXPECT_EQ(e.J, 0.0);
  for (const Mat& g : e.grad) EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ControlGradient, RejectsForeignTrajectory) {
  const Problem p = tracking_problem(8, 4, 5e-4, 6, 1, 1, 0, 0, 0.1);
  const StateTrajectory tr = solve_state(p.model, p.s.v0, p.s.d0, p.s.control);
  const AdjointTrajectory adj = solve_adjoint(tr, p.cost);
  BoundaryControl other = p.s.control;
  other.h_ref.values.array() += 0.1;
  EXPECT_THROW(control_gradient(tr, adj, other, p.cost), ConfigError);
}

TEST(Optimize, PureControlCostDescendsToZeroControl) {
  const Problem p = tracking_problem(8, 6, 5e-4, 7, 0, 0, 0, 0, 1.0);
  OptimizeOptions o;
  o.tol_opt = 1e-8;
  const OptimizeResult r = optimize(p.model, p.s.v0, p.s.d0, p.s.control, p.cost, o);
  ASSERT_GE(r.history.size(), 2u);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LT(r.history[i].J, r.history[i - 1].J);
  EXPECT_TRUE(r.converged);
  for (int k = 1; k < p.s.grid.num_levels(); ++k) EXPECT_LE(r.h_opt.at(k).values.cwiseAbs().maxCoeff(), 1e-6);
  // the minimiser h = 0 for k >= 1 satisfies the projection formula
  EXPECT_LE(projection_formula_residual(r.h_opt, r.final_gradient, p.cost), 1e-8);
}

TEST(Optimize, StationaryStartTakesZeroIterations) {
  const Scenario s = random_scenario(square_grid(8, 5, 5e-4), 8);
  const ModelPtr m = make_model(s.grid, s.params);
  const CostSpec c = CostSpec::tracking(solve_state(m, s.v0, s.d0, s.control), 1, 1, 0, 0, 0);
  const OptimizeResult r = optimize(m, s.v0, s.d0, s.control, c);
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_TRUE(r.converged);
  for (int k = 0; k < s.grid.num_levels(); ++k) EXPECT_EQ((r.h_opt.u[k] - s.control.u[k]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Optimize, ZeroWeightsRejected) {
  const Problem p = tracking_problem(8, 4, 5e-4, 9, 0, 0, 0, 0, 0);
  EXPECT_THROW(optimize(p.model, p.s.v0, p.s.d0, p.s.control, p.cost), ConfigError);
}

TEST(Optimize, TrackingProblemDescendsAndSatisfiesOptimality) {
  const ManufacturedProblem mp = manufactured_problem(square_grid(16, 10, 2e-4));
  const ModelPtr m = make_model(mp.start.grid, mp.start.params);
  std::vector<double> seen;
  const OptimizeResult r =
      optimize(m, mp.start.v0, mp.start.d0, mp.start.control, mp.cost, {}, [&](const IterationRecord& it) { seen.push_back(it.J); });
  EXPECT_EQ(seen.size(), r.history.size());
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    EXPECT_LT(r.history[i].J, r.history[i - 1].J);
    EXPECT_GT(r.history[i].step, 0);
  }
  EXPECT_LE(r.final_J, 0.5 * r.history.front().J);
  ASSERT_TRUE(r.converged);
  const double res = projection_formula_residual(r.h_opt, r.final_gradient, mp.cost);
  EXPECT_LE(res, 10 * OptimizeOptions{}.tol_opt);
  // an earlier, unconverged iterate is further from the projection formula
  OptimizeOptions early;
  early.max_iters = 2;
  const OptimizeResult e = optimize(m, mp.start.v0, mp.start.d0, mp.start.control, mp.cost, early);
  EXPECT_GT(projection_formula_residual(e.h_opt, e.final_gradient, mp.cost), res);
  // variational inequality at the optimum over random admissible controls
  EXPECT_GE(variational_inequality_margin(r.h_opt, r.final_gradient, 100, 17), -OptimizeOptions{}.tol_opt);
}

TEST(Optimize, RespectsCaps) {
  ManufacturedProblem mp = manufactured_problem(square_grid(12, 8, 3e-4));
  const ModelPtr m = make_model(mp.start.grid, mp.start.params);
  BoundaryControl h0 = mp.start.control;
  h0.m_space = n_space(h0) * 1.01;
  h0.m_time = 1e6;
  OptimizeOptions o;
  o.max_iters = 10;
  const OptimizeResult r = optimize(m, mp.start.v0, mp.start.d0, h0, mp.cost, o);
  EXPECT_TRUE(is_admissible(r.h_opt));
  for (const IterationRecord& it : r.history) EXPECT_LE(it.n_space, h0.m_space * (1 + 1e-10));
}

TEST(ProjectionFormula, UndefinedWithoutGamma) {
  const Problem p = tracking_problem(8, 4, 5e-4, 10, 1, 1, 0, 0, 0);
  const Evaluation e = evaluate(p.model, p.s.v0, p.s.d0, p.s.control, p.cost);
  EXPECT_THROW(projection_formula_residual(p.s.control, e.grad, p.cost), ConfigError);
}
