/// @file scenarios.hpp
/// @brief Reproducible initial/boundary data sets used by the CLI, checks and tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "nematic/control.hpp"

namespace nematic {

struct Scenario {
  std::string name;
  GridSpec grid;
  PhysParams params;
  VectorField2D v0;
  DirectorField d0;
  BoundaryControl control;
};

inline GridSpec square_grid(int n, int steps, double dt, int n_dir = 2) {
  GridSpec g;
  g.nx = g.ny = n;
  g.dt = dt;
  g.t_final = steps * dt;
  g.n_dir = n_dir;
  return g;
}

/// Platform-independent uniform draws in [lo, hi).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

private:
  std::mt19937_64 eng_;
};

/// Smooth random scalar on the rectangle: sum of a few random low Fourier modes.
struct RandomModes {
  double a[3][3]{};
  double phase[3][3]{};

  RandomModes(Rng& rng) {
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        a[p][q] = rng.uniform(-1, 1) / (1 + p + q);
        phase[p][q] = rng.uniform(0, 2 * M_PI);
      }
  }

  double operator()(double x, double y) const {
    double s = 0;
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) s += a[p][q] * std::cos(M_PI * (p * x + q * y) + phase[p][q]);
    return s;
  }
};

inline Eigen::VectorXd planar(double theta, double r, int n_dir) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n_dir);
  d[0] = r * std::cos(theta);
  d[1] = r * std::sin(theta);
  return d;
}

/// Rotates the first two components of every node of h_ref by angle(t, node); the
/// deviation vanishes at t = 0 whenever angle(0, .) = 0.
inline BoundaryControl rotated_control(const BoundaryTrace& h_ref,
                                       const std::function<double(double, const BoundaryNode&)>& angle) {
  const GridSpec& g = h_ref.grid;
  BoundaryControl c = BoundaryControl::constant(h_ref);
  for (int k = 1; k < g.num_levels(); ++k) {
    for (int n = 0; n < g.num_boundary_nodes(); ++n) {
      const double a = angle(g.time(k), boundary_node(g, n));
      const double x = h_ref.values(n, 0), y = h_ref.values(n, 1);
      c.u[k](n, 0) = std::cos(a) * x - std::sin(a) * y - x;
      c.u[k](n, 1) = std::sin(a) * x + std::cos(a) * y - y;
    }
  }
  return c;
}

/// v = 0, d = e1, h = e1: an exact equilibrium.
inline Scenario stationary_scenario(const GridSpec& g, const PhysParams& p = {}) {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(g.n_dir);
  e1[0] = 1;
  Scenario s{"stationary", g, p, VectorField2D::zeros(g), constant_director(g, e1), {}};
  s.control = BoundaryControl::constant(s.d0.trace);
  return s;
}

/// Decaying vortex stirring a bent director; h = e1 fixed in time.
inline Scenario vortex_scenario(const GridSpec& g, const PhysParams& p = {}, double amplitude = 1.0, double theta0 = 0.8) {
  const double lx = g.lx, ly = g.ly;
  Scenario s{"vortex", g, p, {}, {}, {}};
  s.v0 = velocity_from_stream(g, [&](double x, double y) {
    const double sx = std::sin(M_PI * x / lx), sy = std::sin(M_PI * y / ly);
    return amplitude * sx * sx * sy * sy;
  });
  s.d0 = sample_director(g, [&](double x, double y) {
    return planar(theta0 * std::sin(M_PI * x / lx) * std::sin(M_PI * y / ly), 1.0, g.n_dir);
  });
  s.control = BoundaryControl::constant(s.d0.trace);
  return s;
}

/// Vortex initial data with the boundary director rotating in time (|h| = 1).
inline Scenario rotating_scenario(const GridSpec& g, const PhysParams& p = {}, double rate = 20.0) {
  Scenario s = vortex_scenario(g, p);
  s.name = "rotating";
  const double perimeter = 2 * (g.lx + g.ly);
  s.control = rotated_control(s.d0.trace, [&](double t, const BoundaryNode& n) {
    return rate * t * std::sin(2 * M_PI * n.arc / perimeter);
  });
  return s;
}

/// Random smooth data with |d0| < 1 and |h| < 1; the boundary angle drifts linearly in time.
inline Scenario random_scenario(const GridSpec& g, std::uint64_t seed, const PhysParams& p = {}, double flow = 1.0,
                                double drift = 1.0) {
  Rng rng(seed);
  const RandomModes theta(rng), radius(rng), stream(rng), boundary(rng);
  const double lx = g.lx, ly = g.ly, T = g.t_final;
  Scenario s{"random", g, p, {}, {}, {}};
  s.v0 = velocity_from_stream(g, [&](double x, double y) {
    const double sx = std::sin(M_PI * x / lx), sy = std::sin(M_PI * y / ly);
    return flow * sx * sx * sy * sy * (1 + stream(x, y));
  });
  s.d0 = sample_director(g, [&](double x, double y) {
    return planar(2 * theta(x, y), 0.8 + 0.1 * std::tanh(radius(x, y)), g.n_dir);
  });
  s.control = rotated_control(s.d0.trace, [&](double t, const BoundaryNode& n) {
    return drift * (t / T) * boundary(n.x, n.y);
  });
  return s;
}

/// Smooth random deviation direction with xi(0) = 0, scaled to unit L2(Sigma) norm.
inline Deviation random_direction(const GridSpec& g, std::uint64_t seed) {
  Rng rng(seed);
  Deviation xi = zero_deviation(g);
  std::vector<RandomModes> comps;
  for (int c = 0; c < g.n_dir; ++c) comps.emplace_back(rng);
  const double w = rng.uniform(1, 3);
  for (int k = 1; k < g.num_levels(); ++k) {
    const double tau = g.time(k) / g.t_final;
    for (int n = 0; n < g.num_boundary_nodes(); ++n) {
      const BoundaryNode b = boundary_node(g, n);
      for (int c = 0; c < g.n_dir; ++c) xi[k](n, c) = std::sin(w * tau) * comps[c](b.x + 0.3 * tau, b.y);
    }
  }
  const double nrm = sigma_norm(g, xi);
  return nrm > 0 ? scaled(1.0 / nrm, xi) : xi;
}

}  // namespace nematic
