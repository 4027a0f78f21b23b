/// @file fields.hpp
/// @brief Value-type field containers on the staggered grid.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "nematic/grid.hpp"

namespace nematic {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Cell-centred scalar (pressure, divergence, ...).
struct ScalarField {
  GridSpec grid;
  Vec values;

  static ScalarField zeros(const GridSpec& g) { return {g, Vec::Zero(g.num_cells())}; }
};

/// MAC velocity: u on x-faces, v on y-faces.
struct VectorField2D {
  GridSpec grid;
  Vec u;
  Vec v;

  static VectorField2D zeros(const GridSpec& g) {
    return {g, Vec::Zero(g.num_xfaces()), Vec::Zero(g.num_yfaces())};
  }
};

/// Director values at the boundary nodes, one column per component.
struct BoundaryTrace {
  GridSpec grid;
  Mat values;  // num_boundary_nodes x n_dir

  static BoundaryTrace zeros(const GridSpec& g) { return {g, Mat::Zero(g.num_boundary_nodes(), g.n_dir)}; }
};

/// Cell-centred director together with the Dirichlet data that defines its ghost layer.
/// Ghost values are d_ghost = 2 h - d_interior, so the face trace equals h exactly.
struct DirectorField {
  GridSpec grid;
  Mat values;  // num_cells x n_dir
  BoundaryTrace trace;

  static DirectorField zeros(const GridSpec& g) { return {g, Mat::Zero(g.num_cells(), g.n_dir), BoundaryTrace::zeros(g)}; }
};

/// Cell-centred 2x2 tensor, row-major per cell: columns xx, xy, yx, yy.
struct TensorField {
  GridSpec grid;
  Mat values;  // num_cells x 4
};

inline bool all_finite(const Vec& x) { return x.allFinite(); }
inline bool all_finite(const Mat& x) { return x.allFinite(); }
inline bool all_finite(const VectorField2D& f) { return f.u.allFinite() && f.v.allFinite(); }
inline bool all_finite(const DirectorField& d) { return d.values.allFinite() && d.trace.values.allFinite(); }

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (a.nx != b.nx || a.ny != b.ny || a.n_dir != b.n_dir || a.lx != b.lx || a.ly != b.ly) {
    throw ConfigError(std::string("grid mismatch: ") + what);
  }
}

// ---- sampling helpers -------------------------------------------------------

using ScalarFn = std::function<double(double, double)>;
using DirectorFn = std::function<Eigen::VectorXd(double, double)>;

inline ScalarField sample_scalar(const GridSpec& g, const ScalarFn& f) {
  ScalarField s = ScalarField::zeros(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s.values[g.cell(i, j)] = f((i + 0.5) * g.hx(), (j + 0.5) * g.hy());
  return s;
}

/// Samples u(x,y) on x-faces and v(x,y) on y-faces (wall faces included).
inline VectorField2D sample_velocity(const GridSpec& g, const ScalarFn& fu, const ScalarFn& fv) {
  VectorField2D w = VectorField2D::zeros(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) w.u[g.xface(i, j)] = fu(i * g.hx(), (j + 0.5) * g.hy());
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) w.v[g.yface(i, j)] = fv((i + 0.5) * g.hx(), j * g.hy());
  return w;
}

/// Discrete curl of a stream function sampled at cell corners: u = d(psi)/dy, v = -d(psi)/dx.
/// The result is discretely divergence free; if psi vanishes on the boundary corners the
/// wall-normal components are zero.
inline VectorField2D velocity_from_stream(const GridSpec& g, const ScalarFn& psi) {
  VectorField2D w = VectorField2D::zeros(g);
  auto node = [&](int i, int j) { return psi(i * g.hx(), j * g.hy()); };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) w.u[g.xface(i, j)] = (node(i, j + 1) - node(i, j)) / g.hy();
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) w.v[g.yface(i, j)] = -(node(i + 1, j) - node(i, j)) / g.hx();
  return w;
}

inline BoundaryTrace sample_trace(const GridSpec& g, const DirectorFn& f) {
  BoundaryTrace t = BoundaryTrace::zeros(g);
  for (int k = 0; k < g.num_boundary_nodes(); ++k) {
    const BoundaryNode n = boundary_node(g, k);
    t.values.row(k) = f(n.x, n.y).head(g.n_dir).transpose();
  }
  return t;
}

/// Samples the director at cell centres and its Dirichlet trace at boundary nodes.
inline DirectorField sample_director(const GridSpec& g, const DirectorFn& f) {
  DirectorField d = DirectorField::zeros(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d.values.row(g.cell(i, j)) = f((i + 0.5) * g.hx(), (j + 0.5) * g.hy()).head(g.n_dir).transpose();
  d.trace = sample_trace(g, f);
  return d;
}

inline DirectorField constant_director(const GridSpec& g, const Eigen::VectorXd& c) {
  return sample_director(g, [&](double, double) { return c; });
}

}  // namespace nematic
