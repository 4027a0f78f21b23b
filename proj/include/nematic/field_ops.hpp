/// @file field_ops.hpp
/// @brief Divergence, centred gradients, Ericksen stress and discrete norms.
#pragma once

#include <cmath>

#include "nematic/operators.hpp"

namespace nematic {

/// Cell-centred divergence using every face value (wall faces included).
inline ScalarField divergence(const VectorField2D& w) {
  const GridSpec& g = w.grid;
  ScalarField s = ScalarField::zeros(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      s.values[g.cell(i, j)] = (w.u[g.xface(i + 1, j)] - w.u[g.xface(i, j)]) / g.hx() +
                               (w.v[g.yface(i, j + 1)] - w.v[g.yface(i, j)]) / g.hy();
  return s;
}

inline double max_abs_divergence(const VectorField2D& w) { return divergence(w).values.cwiseAbs().maxCoeff(); }

/// Centred cell gradient; one column per component in dx and dy.
struct GradientField {
  GridSpec grid;
  Mat dx;
  Mat dy;
};

namespace detail {

// Ghost-aware access to a cell-centred multi-component field.  Out-of-range cells
// resolve to the Dirichlet ghost 2h - d, or, without a trace, to the linear
// extrapolation 2 d_0 - d_1.
struct GhostView {
  const GridSpec& g;
  const Mat& d;
  const Mat* trace;

  double at(int i, int j, int comp) const {
    if (i >= 0 && i < g.nx && j >= 0 && j < g.ny) return d(g.cell(i, j), comp);
    int ii = std::clamp(i, 0, g.nx - 1), jj = std::clamp(j, 0, g.ny - 1);
    const double inner = d(g.cell(ii, jj), comp);
    if (trace) {
      int node = i < 0 ? g.node_left(jj) : i >= g.nx ? g.node_right(jj) : j < 0 ? g.node_bottom(ii) : g.node_top(ii);
      return 2 * (*trace)(node, comp) - inner;
    }
    const int i2 = i < 0 ? 1 : i >= g.nx ? g.nx - 2 : ii;
    const int j2 = j < 0 ? 1 : j >= g.ny ? g.ny - 2 : jj;
    return 2 * inner - d(g.cell(i2, j2), comp);
  }
};

inline GradientField centred_gradient(const GhostView& gv) {
  const GridSpec& g = gv.g;
  GradientField out{g, Mat(g.num_cells(), gv.d.cols()), Mat(g.num_cells(), gv.d.cols())};
  for (int k = 0; k < gv.d.cols(); ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        out.dx(g.cell(i, j), k) = (gv.at(i + 1, j, k) - gv.at(i - 1, j, k)) / (2 * g.hx());
        out.dy(g.cell(i, j), k) = (gv.at(i, j + 1, k) - gv.at(i, j - 1, k)) / (2 * g.hy());
      }
  return out;
}

}  // namespace detail

/// Scalars use linear-extrapolation ghosts (exact for affine fields).
inline GradientField grad_center(const ScalarField& s) {
  const Mat m = s.values;
  return detail::centred_gradient({s.grid, m, nullptr});
}

/// Directors use their Dirichlet trace.
inline GradientField grad_center(const DirectorField& d) {
  return detail::centred_gradient({d.grid, d.values, &d.trace.values});
}

/// (i,j) entry sum_k d_i d_k * d_j d_k at cell centres.
inline TensorField ericksen_stress(const DirectorField& d) {
  const GradientField gr = grad_center(d);
  TensorField t{d.grid, Mat(d.grid.num_cells(), 4)};
  t.values.col(0) = gr.dx.cwiseProduct(gr.dx).rowwise().sum();
  t.values.col(1) = gr.dx.cwiseProduct(gr.dy).rowwise().sum();
  t.values.col(2) = t.values.col(1);
  t.values.col(3) = gr.dy.cwiseProduct(gr.dy).rowwise().sum();
  return t;
}

enum class NormOrder { L2, H1, H2, LaplacianSeminorm };

inline const char* to_string(NormOrder o) {
  switch (o) {
    case NormOrder::L2: return "L2";
    case NormOrder::H1: return "H1";
    case NormOrder::H2: return "H2";
    case NormOrder::LaplacianSeminorm: return "LaplacianSeminorm";
  }
  return "?";
}

namespace detail {

struct CellNormParts {
  double l2 = 0, grad = 0, hess = 0, lap = 0;  // squared, quadrature-weighted
};

inline CellNormParts cell_norm_parts(const GhostView& gv) {
  const GridSpec& g = gv.g;
  const double hx = g.hx(), hy = g.hy(), w = g.cell_area();
  CellNormParts p;
  for (int k = 0; k < gv.d.cols(); ++k) {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double c = gv.at(i, j, k);
        const double dxx = (gv.at(i + 1, j, k) - 2 * c + gv.at(i - 1, j, k)) / (hx * hx);
        const double dyy = (gv.at(i, j + 1, k) - 2 * c + gv.at(i, j - 1, k)) / (hy * hy);
        p.l2 += c * c * w;
        p.hess += (dxx * dxx + dyy * dyy) * w;
        p.lap += (dxx + dyy) * (dxx + dyy) * w;
      }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) {
        const double dx = (gv.at(i, j, k) - gv.at(i - 1, j, k)) / hx;
        p.grad += dx * dx * w;
      }
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double dy = (gv.at(i, j, k) - gv.at(i, j - 1, k)) / hy;
        p.grad += dy * dy * w;
      }
    for (int j = 1; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) {
        const double dxy = (gv.at(i, j, k) - gv.at(i - 1, j, k) - gv.at(i, j - 1, k) + gv.at(i - 1, j - 1, k)) / (hx * hy);
        p.hess += 2 * dxy * dxy * w;
      }
  }
  return p;
}

inline double assemble_norm(const CellNormParts& p, NormOrder o) {
  switch (o) {
    case NormOrder::L2: return std::sqrt(p.l2);
    case NormOrder::H1: return std::sqrt(p.l2 + p.grad);
    case NormOrder::H2: return std::sqrt(p.l2 + p.grad + p.hess);
    case NormOrder::LaplacianSeminorm: return std::sqrt(p.lap);
  }
  return 0;
}

}  // namespace detail

/// Director norms use the field's own Dirichlet trace for the ghost layer.
inline double discrete_norm(const DirectorField& d, NormOrder o) {
  return detail::assemble_norm(detail::cell_norm_parts({d.grid, d.values, &d.trace.values}), o);
}

/// Quadrature of |grad d|^2 over all cell faces, boundary faces through the ghost layer.
inline double director_grad_sq(const DirectorField& d) {
  return detail::cell_norm_parts({d.grid, d.values, &d.trace.values}).grad;
}

/// Scalar fields are treated as vanishing on the boundary (zero Dirichlet trace).
inline double discrete_norm(const ScalarField& s, NormOrder o) {
  const Mat m = s.values;
  const Mat zero = Mat::Zero(s.grid.num_boundary_nodes(), 1);
  return detail::assemble_norm(detail::cell_norm_parts({s.grid, m, &zero}), o);
}

/// Squared gradient of a MAC velocity with no-slip ghosts (equals -<L v, v> for the
/// viscous stencil when wall-normal faces vanish).
inline double velocity_grad_sq(const VectorField2D& w) {
  const GridSpec& g = w.grid;
  const double hx = g.hx(), hy = g.hy(), a = g.cell_area();
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double du = (w.u[g.xface(i + 1, j)] - w.u[g.xface(i, j)]) / hx;
      const double dv = (w.v[g.yface(i, j + 1)] - w.v[g.yface(i, j)]) / hy;
      s += (du * du + dv * dv) * a;
    }
  for (int i = 1; i < g.nx; ++i)
    for (int j = 0; j <= g.ny; ++j) {
      const double lo = j > 0 ? w.u[g.xface(i, j - 1)] : -w.u[g.xface(i, 0)];
      const double hi = j < g.ny ? w.u[g.xface(i, j)] : -w.u[g.xface(i, g.ny - 1)];
      s += (hi - lo) * (hi - lo) / (hy * hy) * a;
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double lo = i > 0 ? w.v[g.yface(i - 1, j)] : -w.v[g.yface(0, j)];
      const double hi = i < g.nx ? w.v[g.yface(i, j)] : -w.v[g.yface(g.nx - 1, j)];
      s += (hi - lo) * (hi - lo) / (hx * hx) * a;
    }
  return s;
}

inline double velocity_l2_sq(const VectorField2D& w) { return (w.u.squaredNorm() + w.v.squaredNorm()) * w.grid.cell_area(); }

/// Velocities support L2 and H1 only.
inline double discrete_norm(const VectorField2D& w, NormOrder o) {
  switch (o) {
    case NormOrder::L2: return std::sqrt(velocity_l2_sq(w));
    case NormOrder::H1: return std::sqrt(velocity_l2_sq(w) + velocity_grad_sq(w));
    default: break;
  }
  throw ConfigError(std::string("discrete_norm: order ") + to_string(o) + " is not supported for velocity fields");
}

/// L2(Gamma) norm of a boundary trace.
inline double boundary_l2(const BoundaryTrace& t) {
  double s = 0;
  for (int k = 0; k < t.values.rows(); ++k) s += boundary_node(t.grid, k).weight * t.values.row(k).squaredNorm();
  return std::sqrt(s);
}

inline double max_director_norm(const DirectorField& d) { return d.values.rowwise().norm().maxCoeff(); }

}  // namespace nematic
