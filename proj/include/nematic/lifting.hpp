/// @file lifting.hpp
/// @brief Harmonic and caloric extensions of boundary director data.
#pragma once

#include <Eigen/SparseCholesky>
#include <vector>

#include "nematic/control.hpp"
#include "nematic/operators.hpp"

namespace nematic {

/// Factorised -L and (I - dt L) for one grid; component-wise solves.
class LiftSolver {
public:
  explicit LiftSolver(const GridSpec& g) : grid_(g), ops_(build_operators(g)) {
    g.validate();
    neg_lap_ = -ops_.lap;
    SpMat I(g.num_cells(), g.num_cells());
    I.setIdentity();
    heat_ = I - g.dt * ops_.lap;
    neg_lap_f_.compute(neg_lap_);
    heat_f_.compute(heat_);
    if (neg_lap_f_.info() != Eigen::Success || heat_f_.info() != Eigen::Success)
      throw NumericalError("lifting: factorisation failed");
  }

  const Operators& ops() const { return ops_; }

  /// Discrete harmonic field with Dirichlet trace h.
  DirectorField elliptic(const BoundaryTrace& h) const {
    require_same_grid(h.grid, grid_, "elliptic_lift");
    NEMATIC_REQUIRE(h.values.allFinite(), NumericalError, "elliptic_lift: non-finite boundary data");
    DirectorField d{grid_, Mat(grid_.num_cells(), grid_.n_dir), h};
    for (int c = 0; c < grid_.n_dir; ++c) {
      const Vec rhs = ops_.lap_b * h.values.col(c);
      d.values.col(c) = solve(neg_lap_f_, neg_lap_, rhs, "elliptic_lift");
    }
    return d;
  }

  /// One implicit-Euler heat step towards trace h_next.
  DirectorField heat_step(const DirectorField& prev, const BoundaryTrace& h_next) const {
    DirectorField d{grid_, Mat(grid_.num_cells(), grid_.n_dir), h_next};
    for (int c = 0; c < grid_.n_dir; ++c) {
      const Vec rhs = prev.values.col(c) + grid_.dt * (ops_.lap_b * h_next.values.col(c));
      d.values.col(c) = solve(heat_f_, heat_, rhs, "parabolic_lift");
    }
    return d;
  }

private:
  static Vec solve(const Eigen::SimplicialLDLT<SpMat>& f, const SpMat& m, const Vec& b, const char* what) {
    Vec x = f.solve(b);
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    x += f.solve(Vec(b - m * x));
    const double res = (m * x - b).cwiseAbs().maxCoeff() / scale;
    if (!(res <= 1e-12)) throw SolverError(std::string(what) + ": linear solve failed", res);
    return x;
  }

  GridSpec grid_;
  Operators ops_;
  SpMat neg_lap_, heat_;
  Eigen::SimplicialLDLT<SpMat> neg_lap_f_, heat_f_;
};

inline DirectorField elliptic_lift(const BoundaryTrace& h, const GridSpec& g) { return LiftSolver(g).elliptic(h); }

inline DirectorField initial_lift(const DirectorField& d0, const GridSpec& g) {
  NEMATIC_REQUIRE(all_finite(d0), NumericalError, "initial_lift: non-finite data");
  return LiftSolver(g).elliptic(d0.trace);
}

/// Implicit-Euler heat flow started from the harmonic extension of d0's trace.
inline std::vector<DirectorField> parabolic_lift(const BoundaryControl& h, const DirectorField& d0, const GridSpec& g) {
  const LiftSolver solver(g);
  std::vector<DirectorField> out;
  out.reserve(h.num_levels());
  out.push_back(solver.elliptic(d0.trace));
  for (int k = 1; k < h.num_levels(); ++k) out.push_back(solver.heat_step(out.back(), h.at(k)));
  return out;
}

struct LiftFields {
  std::vector<DirectorField> d_E;
  std::vector<DirectorField> d_P;
  DirectorField d_E0;
};

inline LiftFields compute_lifts(const BoundaryControl& h, const DirectorField& d0) {
  const GridSpec& g = h.grid;
  const LiftSolver solver(g);
  LiftFields f;
  f.d_E0 = solver.elliptic(d0.trace);
  for (int k = 0; k < h.num_levels(); ++k) f.d_E.push_back(solver.elliptic(h.at(k)));
  f.d_P.push_back(f.d_E0);
  for (int k = 1; k < h.num_levels(); ++k) f.d_P.push_back(solver.heat_step(f.d_P.back(), h.at(k)));
  return f;
}

/// Max over interior cells of |L d + L_b h| for each component.
inline double harmonic_residual(const DirectorField& d) {
  const Operators op = build_operators(d.grid);
  return (op.lap * d.values + op.lap_b * d.trace.values).cwiseAbs().maxCoeff();
}

}  // namespace nematic
