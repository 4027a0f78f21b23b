/// @file grid.hpp
/// @brief Uniform MAC grid geometry, time levels and physical coefficients.
///
/// Layout on the rectangle [0,lx]x[0,ly] with nx*ny cells:
///   - cell centres (i,j), i<nx, j<ny           -> pressure, director, scalars
///   - x-faces (i,j), i<=nx, j<ny at x = i*hx   -> x-velocity
///   - y-faces (i,j), i<nx, j<=ny at y = j*hy   -> y-velocity
///   - boundary nodes: midpoints of the 2(nx+ny) boundary cell faces, numbered
///     counterclockwise from the lower-left corner (bottom, right, top, left).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

#include "nematic/error.hpp"

namespace nematic {

struct GridSpec {
  double lx = 1.0;
  double ly = 1.0;
  int nx = 32;
  int ny = 32;
  double t_final = 0.0;
  double dt = 0.0;
  int n_dir = 2;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  double area() const { return lx * ly; }

  int num_steps() const { return static_cast<int>(std::lround(t_final / dt)); }
  int num_levels() const { return num_steps() + 1; }
  double time(int k) const { return k * dt; }

  int num_cells() const { return nx * ny; }
  int num_xfaces() const { return (nx + 1) * ny; }
  int num_yfaces() const { return nx * (ny + 1); }
  int num_boundary_nodes() const { return 2 * (nx + ny); }

  int cell(int i, int j) const { return j * nx + i; }
  int xface(int i, int j) const { return j * (nx + 1) + i; }
  int yface(int i, int j) const { return j * nx + i; }

  bool is_wall_xface(int i) const { return i == 0 || i == nx; }
  bool is_wall_yface(int j) const { return j == 0 || j == ny; }

  // Boundary node attached to the outer face of a boundary cell.
  int node_bottom(int i) const { return i; }
  int node_right(int j) const { return nx + j; }
  int node_top(int i) const { return nx + ny + (nx - 1 - i); }
  int node_left(int j) const { return 2 * nx + ny + (ny - 1 - j); }

  void validate() const {
    NEMATIC_REQUIRE(nx >= 4 && ny >= 4, ConfigError, "grid: nx and ny must be >= 4");
    NEMATIC_REQUIRE(lx > 0 && ly > 0, ConfigError, "grid: lx and ly must be positive");
    NEMATIC_REQUIRE(dt > 0, ConfigError, "grid: dt must be positive");
    NEMATIC_REQUIRE(t_final >= dt * (1 - 1e-12), ConfigError, "grid: t_final must be >= dt");
    NEMATIC_REQUIRE(n_dir == 2 || n_dir == 3, ConfigError, "grid: director dimension must be 2 or 3");
    const double k = std::round(t_final / dt);
    NEMATIC_REQUIRE(std::abs(k * dt - t_final) <= 1e-12 * t_final, ConfigError,
                    "grid: t_final must be an integer multiple of dt");
  }
};

/// Geometry of one boundary node.
struct BoundaryNode {
  double x, y;     // position (face midpoint)
  double nx, ny;   // outward unit normal
  double weight;   // quadrature weight along Gamma (edge length of the face)
  double arc;      // arc-length coordinate from the lower-left corner
};

inline BoundaryNode boundary_node(const GridSpec& g, int k) {
  const double hx = g.hx(), hy = g.hy();
  if (k < g.nx) {
    const double x = (k + 0.5) * hx;
    return {x, 0.0, 0.0, -1.0, hx, x};
  }
  k -= g.nx;
  if (k < g.ny) {
    const double y = (k + 0.5) * hy;
    return {g.lx, y, 1.0, 0.0, hy, g.lx + y};
  }
  k -= g.ny;
  if (k < g.nx) {
    const double x = g.lx - (k + 0.5) * hx;
    return {x, g.ly, 0.0, 1.0, hx, g.lx + g.ly + (k + 0.5) * hx};
  }
  k -= g.nx;
  const double y = g.ly - (k + 0.5) * hy;
  return {0.0, y, -1.0, 0.0, hy, 2 * g.lx + g.ly + (k + 0.5) * hy};
}

struct PhysParams {
  double nu = 1.0;
  double lambda = 1.0;
  double eta = 1.0;
  double epsilon = 1.0;

  void validate() const {
    NEMATIC_REQUIRE(nu > 0 && lambda > 0 && eta > 0 && epsilon > 0, ConfigError,
                    "physics: nu, lambda, eta and epsilon must be strictly positive");
  }
};

/// Largest admissible step under the explicit-term guard dt <= 0.25 h^2 min(1/nu, 1/eta).
inline double cfl_bound(const GridSpec& g, const PhysParams& p) {
  const double h = std::min(g.hx(), g.hy());
  return 0.25 * h * h * std::min(1.0 / p.nu, 1.0 / p.eta);
}

inline void check_cfl(const GridSpec& g, const PhysParams& p) {
  const double bound = cfl_bound(g, p);
  if (g.dt > bound * (1 + 1e-12)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "CFL guard violated: dt = %.6g exceeds 0.25*h^2*min(1/nu,1/eta) = %.6g",
                  g.dt, bound);
    throw ConfigError(buf);
  }
}

inline std::string fingerprint(const GridSpec& g, const PhysParams& p, std::uint64_t seed) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "grid=%dx%d L=%.6gx%.6g dt=%.6g T=%.6g n=%d nu=%.6g lambda=%.6g eta=%.6g eps=%.6g seed=%llu",
                g.nx, g.ny, g.lx, g.ly, g.dt, g.t_final, g.n_dir, p.nu, p.lambda, p.eta, p.epsilon,
                static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace nematic
