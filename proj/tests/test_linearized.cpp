#include <gtest/gtest.h>

#include <cmath>

#include "nematic/linearized.hpp"
#include "nematic/scenarios.hpp"

using namespace nematic;

namespace {

struct Base {
  Scenario s;
  ModelPtr model;
  StateTrajectory traj;
};

Base make_base(int n, int steps, double dt, std::uint64_t seed) {
  Base b{random_scenario(square_grid(n, steps, dt), seed), nullptr, {}};
  b.model = make_model(b.s.grid, b.s.params);
  b.traj = solve_state(b.model, b.s.v0, b.s.d0, b.s.control);
  return b;
}

double trajectory_max(const LinearizedTrajectory& l) {
  double m = 0;
  for (std::size_t k = 0; k < l.omega.size(); ++k)
    m = std::max({m, l.omega[k].u.cwiseAbs().maxCoeff(), l.omega[k].v.cwiseAbs().maxCoeff(), l.phi[k].values.cwiseAbs().maxCoeff()});
  return m;
}

}  // namespace

TEST(FPrime, Examples) {
  EXPECT_EQ(f_prime_apply(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0), 1.0), Eigen::VectorXd(Eigen::Vector2d(2, 0)));
  EXPECT_EQ(f_prime_apply(Eigen::Vector2d(0, 0), Eigen::Vector2d(0.3, -2), 1.0), Eigen::VectorXd(Eigen::Vector2d(-0.3, 2)));
  EXPECT_EQ(f_prime_apply(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), 1.0), Eigen::VectorXd(Eigen::Vector2d(0, 0)));
}

TEST(FPrime, MatchesDerivativeOfF) {
  Rng rng(12);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Vector3d d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector3d phi(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double eps = rng.uniform(0.3, 1.5), s = 1e-6;
    const Eigen::VectorXd fd = (compute_f(d + s * phi, eps) - compute_f(d - s * phi, eps)) / (2 * s);
    EXPECT_LT((fd - f_prime_apply(d, phi, eps)).norm(), 1e-7);
  }
}

TEST(SolveLinearized, ZeroDirectionGivesZero) {
  const Base b = make_base(12, 6, 5e-4, 1);
  const LinearizedTrajectory l = solve_linearized(b.traj, zero_deviation(b.s.grid));
  EXPECT_EQ(trajectory_max(l), 0.0);
}

TEST(SolveLinearized, LinearityAndSuperposition) {
  const Base b = make_base(12, 6, 5e-4, 2);
  const GridSpec& g = b.s.grid;
  const Deviation x1 = random_direction(g, 5), x2 = random_direction(g, 6);
  const LinearizedTrajectory l1 = solve_linearized(b.traj, x1), l2 = solve_linearized(b.traj, x2);
  const LinearizedTrajectory l2x = solve_linearized(b.traj, scaled(2.0, x1));
  const LinearizedTrajectory lsum = solve_linearized(b.traj, axpy(1.0, x1, x2));
  const double scale = trajectory_max(l1) + trajectory_max(l2);
  for (int k = 0; k < g.num_levels(); ++k) {
    EXPECT_LE((l2x.phi[k].values - 2 * l1.phi[k].values).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((l2x.omega[k].u - 2 * l1.omega[k].u).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((lsum.phi[k].values - l1.phi[k].values - l2.phi[k].values).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((lsum.omega[k].v - l1.omega[k].v - l2.omega[k].v).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(SolveLinearized, Invariants) {
  const Base b = make_base(12, 6, 5e-4, 3);
  const GridSpec& g = b.s.grid;
  const Deviation xi = random_direction(g, 7);
  const LinearizedTrajectory l = solve_linearized(b.traj, xi);
  EXPECT_EQ(l.omega[0].u.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(l.phi[0].values.cwiseAbs().maxCoeff(), 0.0);
  const Operators& op = b.model->ops();
  for (int k = 0; k < g.num_levels(); ++k) {
    EXPECT_LE(max_abs_divergence(l.omega[k]), 1e-10);
    EXPECT_EQ((l.omega[k].u - l.omega[k].u.cwiseProduct(op.xmask)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((l.phi[k].trace.values - xi[k]).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SolveLinearized, NonzeroInitialDeviationRejected) {
  const Base b = make_base(8, 3, 1e-3, 4);
  Deviation xi = random_direction(b.s.grid, 1);
  xi[0](0, 0) = 1e-3;
  EXPECT_THROW(solve_linearized(b.traj, xi), ConfigError);
}

TEST(SolveLinearized, MatchesDirectionalDerivative) {
  const Base b = make_base(12, 6, 5e-4, 5);
  const GridSpec& g = b.s.grid;
  const Deviation xi = random_direction(g, 8);
  const LinearizedTrajectory l = solve_linearized(b.traj, xi);
  const double s = 1e-5;
  BoundaryControl hp = b.s.control, hm = b.s.control;
  hp.u = axpy(s, xi, hp.u);
  hm.u = axpy(-s, xi, hm.u);
  const StateTrajectory tp = solve_state(b.model, b.s.v0, b.s.d0, hp), tm = solve_state(b.model, b.s.v0, b.s.d0, hm);
  const StateSnapshot ep = tp.final_snapshot(), em = tm.final_snapshot();
  const int K = g.num_steps();
  const Mat fd_d = (ep.d.values - em.d.values) / (2 * s);
  const Vec fd_u = (ep.v.u - em.v.u) / (2 * s);
  EXPECT_LT((fd_d - l.phi[K].values).cwiseAbs().maxCoeff(), 1e-6 * l.phi[K].values.cwiseAbs().maxCoeff());
  EXPECT_LT((fd_u - l.omega[K].u).cwiseAbs().maxCoeff(), 1e-6 * l.omega[K].u.cwiseAbs().maxCoeff());
}

TEST(Taylor, SlopeIsTwo) {
  const Base b = make_base(16, 10, 5e-4, 6);
  const TaylorResult r =
      taylor_remainder_slopes(b.traj, b.s.v0, b.s.d0, random_direction(b.s.grid, 9), {1e-1, 3e-2, 1e-2, 3e-3, 1e-3});
  EXPECT_FALSE(r.degenerate);
  EXPECT_GE(r.fitted_slope, 1.8);
  EXPECT_LE(r.fitted_slope, 2.2);
  EXPECT_TRUE(std::isnan(r.local_slope[0]));
}

TEST(Taylor, ZeroDirectionIsDegenerate) {
  const Base b = make_base(8, 4, 1e-3, 7);
  const TaylorResult r = taylor_remainder_slopes(b.traj, b.s.v0, b.s.d0, zero_deviation(b.s.grid), {1e-1, 1e-2, 1e-3});
  EXPECT_TRUE(r.degenerate);
  for (double x : r.remainder) EXPECT_EQ(x, 0.0);
}

TEST(Taylor, LadderValidation) {
  const Base b = make_base(8, 2, 1e-3, 8);
  const Deviation xi = random_direction(b.s.grid, 1);
  EXPECT_THROW(taylor_remainder_slopes(b.traj, b.s.v0, b.s.d0, xi, {1e-1, 1e-2}), ConfigError);
  EXPECT_THROW(taylor_remainder_slopes(b.traj, b.s.v0, b.s.d0, xi, {1e-1, 1e-2, 1e-2}), ConfigError);
  EXPECT_THROW(taylor_remainder_slopes(b.traj, b.s.v0, b.s.d0, xi, {1e-1, -1e-2, -1e-3}), ConfigError);
}

TEST(Taylor, FitOnExactQuadratic) {
  const std::vector<double> s{1e-1, 3e-2, 1e-2, 3e-3};
  std::vector<double> r;
  for (double x : s) r.push_back(7 * x * x);
  EXPECT_NEAR(fit_loglog_slope(s, r), 2.0, 1e-12);
}

TEST(StepTangent, MatchesFiniteDifferenceOfStep) {
  const Base b = make_base(12, 2, 5e-4, 9);
  const Model& m = *b.model;
  const GridSpec& g = b.s.grid;
  const StateSnapshot now = b.traj.at(0), next = b.traj.at(1);
  Rng rng(4);
  Vec du = Vec::Zero(g.num_xfaces()), dv = Vec::Zero(g.num_yfaces());
  Mat dd(g.num_cells(), 2), dh0(g.num_boundary_nodes(), 2), dh1(g.num_boundary_nodes(), 2);
  for (int i = 0; i < du.size(); ++i) du[i] = rng.uniform(-1, 1) * m.ops().xmask[i];
  for (int i = 0; i < dv.size(); ++i) dv[i] = rng.uniform(-1, 1) * m.ops().ymask[i];
  for (Mat* x : {&dd, &dh0, &dh1})
    for (int i = 0; i < x->size(); ++i) x->data()[i] = rng.uniform(-1, 1);
  const StepTangent t = step_tangent(m, now, next, du, dv, dd, dh0, dh1);
  const double s = 1e-6;
  auto shifted = [&](double sign) {
    StateSnapshot p = now;
    p.v.u += sign * s * du;
    p.v.v += sign * s * dv;
    p.d.values += sign * s * dd;
    p.d.trace.values += sign * s * dh0;
    return m.step(p, {g, next.d.trace.values + sign * s * dh1});
  };
  const StateSnapshot a = shifted(1), c = shifted(-1);
  EXPECT_LT(((a.d.values - c.d.values) / (2 * s) - t.d).cwiseAbs().maxCoeff(), 1e-6 * t.d.cwiseAbs().maxCoeff());
  EXPECT_LT(((a.v.u - c.v.u) / (2 * s) - t.u).cwiseAbs().maxCoeff(), 1e-6 * t.u.cwiseAbs().maxCoeff());
  EXPECT_LT(((a.v.v - c.v.v) / (2 * s) - t.v).cwiseAbs().maxCoeff(), 1e-6 * t.v.cwiseAbs().maxCoeff());
}
