#include <gtest/gtest.h>

#include "nematic/nematic.hpp"

using namespace nematic;

namespace {

bool same_control(const BoundaryControl& a, const BoundaryControl& b) {
  if (a.h_ref.values != b.h_ref.values || a.u.size() != b.u.size()) return false;
  for (std::size_t k = 0; k < a.u.size(); ++k)
    if (a.u[k] != b.u[k]) return false;
  return true;
}

}  // namespace

TEST(Rng, DeterministicAndInRange) {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform(-2, 3);
    EXPECT_EQ(x, b.uniform(-2, 3));
    EXPECT_GE(x, -2);
    EXPECT_LT(x, 3);
  }
  EXPECT_NE(Rng(5).uniform(), c.uniform());
}

TEST(Scenarios, CompatibleAndAdmissibleForSolve) {
  const GridSpec g = square_grid(12, 4, 5e-4);
  for (const Scenario& s : {stationary_scenario(g), vortex_scenario(g), rotating_scenario(g), random_scenario(g, 3)}) {
    EXPECT_NO_THROW(s.control.validate()) << s.name;
    EXPECT_EQ((s.d0.trace.values - s.control.at(0).values).cwiseAbs().maxCoeff(), 0.0) << s.name;
    EXPECT_LE(max_abs_divergence(s.v0), 1e-12) << s.name;
    EXPECT_NO_THROW(solve_state(s.v0, s.d0, s.control, s.params, s.grid)) << s.name;
  }
}

TEST(Scenarios, RandomIsReproducibleBySeed) {
  const GridSpec g = square_grid(10, 3, 5e-4);
  const Scenario a = random_scenario(g, 11), b = random_scenario(g, 11), c = random_scenario(g, 12);
  EXPECT_EQ(a.v0.u, b.v0.u);
  EXPECT_EQ(a.d0.values, b.d0.values);
  EXPECT_TRUE(same_control(a.control, b.control));
  EXPECT_NE(a.d0.values, c.d0.values);
}

TEST(Scenarios, UnitDirectorsWhereDocumented) {
  const GridSpec g = square_grid(12, 4, 5e-4);
  for (const Scenario& s : {stationary_scenario(g), vortex_scenario(g), rotating_scenario(g)}) {
    EXPECT_NEAR(s.d0.values.rowwise().norm().maxCoeff(), 1.0, 1e-12) << s.name;
    for (int k = 0; k < g.num_levels(); ++k) EXPECT_NEAR(s.control.at(k).values.rowwise().norm().maxCoeff(), 1.0, 1e-12);
  }
}

TEST(Scenarios, RotatedAndManufacturedControlsStartAtReference) {
  const Scenario s = vortex_scenario(square_grid(8, 5, 5e-4));
  const BoundaryControl h = manufactured_control(s.d0.trace, 0.7);
  EXPECT_EQ(h.u[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(h.u.back().cwiseAbs().maxCoeff(), 0.1);
  for (int k = 0; k < h.num_levels(); ++k)
    EXPECT_LE((h.at(k).values.rowwise().norm().array() - s.d0.trace.values.rowwise().norm().array()).abs().maxCoeff(), 1e-14);
}

TEST(Scenarios, RandomDirectionVanishesAtStart) {
  const GridSpec g = square_grid(8, 5, 5e-4);
  const Deviation xi = random_direction(g, 2);
  ASSERT_EQ(static_cast<int>(xi.size()), g.num_levels());
  EXPECT_EQ(xi[0].cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(sigma_norm(g, xi), 0.0);
}

TEST(Scenarios, ThreeComponentDirectors) {
  const GridSpec g = square_grid(8, 3, 5e-4, 3);
  const Scenario s = random_scenario(g, 4);
  EXPECT_EQ(s.d0.values.cols(), 3);
  const StateTrajectory tr = solve_state(s.v0, s.d0, s.control, s.params, s.grid);
  EXPECT_TRUE(all_finite(tr.final_snapshot().d));
}
