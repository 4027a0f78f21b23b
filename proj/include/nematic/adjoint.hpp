/// @file adjoint.hpp
/// @brief Backward sweep applying the exact transpose of the linearized steps.
///
/// The raw sweep works with Euclidean cotangents of the stored arrays.  solve_adjoint turns a
/// cost into seeds and rescales the cotangents into densities:
///   p~ = Pi(a_v) / (hx hy),  q~ = a_d / (hx hy),  P~ from the gradient part of a_v,
///   q1_k = dJ/dh_k / (w_k |face|)   (the L2(Sigma) density of the tracking part of the gradient).
#pragma once

#include <vector>

#include "nematic/cost.hpp"
#include "nematic/linearized.hpp"

namespace nematic {

/// Euclidean cotangents per time level.
struct Cotangents {
  std::vector<Vec> u, v;
  std::vector<Mat> d;
  std::vector<Mat> h;  // boundary values, one per level

  static Cotangents zeros(const GridSpec& g) {
    Cotangents c;
    const int L = g.num_levels();
    c.u.assign(L, Vec::Zero(g.num_xfaces()));
    c.v.assign(L, Vec::Zero(g.num_yfaces()));
    c.d.assign(L, Mat::Zero(g.num_cells(), g.n_dir));
    c.h.assign(L, Mat::Zero(g.num_boundary_nodes(), g.n_dir));
    return c;
  }
};

/// Cotangents of (u^n, v^n, d^n, h^n, h^{n+1}) produced by one transposed step.
struct StepCotangent {
  Vec u, v;
  Mat d, h_now, h_next;
};

/// Transpose of step_tangent: given cotangents of (u^{n+1}, v^{n+1}, d^{n+1}).
inline StepCotangent step_transpose(const Model& m, const StateSnapshot& now, const StateSnapshot& next, const Vec& au,
                                    const Vec& av, const Mat& ad) {
  const Operators& op = m.ops();
  const double dt = m.grid().dt, eta = m.params().eta, lam = m.params().lambda;
  const Vec& u = now.v.u;
  const Vec& v = now.v.v;
  StepCotangent c;

  // projection and viscous solves (both symmetric)
  Vec ru = au, rv = av;
  m.project(ru, rv);
  ru = m.solve_u(ru).cwiseProduct(op.xmask);
  rv = m.solve_v(rv).cwiseProduct(op.ymask);
  c.u = ru;
  c.v = rv;

  // convection
  const Vec cu = -dt * ru, cv = -dt * rv;
  const Vec vx = op.v_to_xface * v, uy = op.u_to_yface * u;
  c.u += cu.cwiseProduct(op.dx_u * u) + op.dx_u.transpose() * u.cwiseProduct(cu) + op.dy_u.transpose() * vx.cwiseProduct(cu) +
         op.u_to_yface.transpose() * (op.dx_v * v).cwiseProduct(cv);
  c.v += op.v_to_xface.transpose() * (op.dy_u * u).cwiseProduct(cu) + op.dx_v.transpose() * uy.cwiseProduct(cv) +
         cv.cwiseProduct(op.dy_v * v) + op.dy_v.transpose() * v.cwiseProduct(cv);

  // Ericksen force of the new director
  const Vec fu = dt * ru, fv = dt * rv;
  const Vec sxx = -lam * (op.xface_dx.transpose() * fu);
  const Vec syy = -lam * (op.yface_dy.transpose() * fv);
  const Vec sxy = -lam * (op.xface_dy_node.transpose() * fu + op.yface_dx_node.transpose() * fv);
  const auto [gx1, gy1] = m.director_gradients(next.d.values, next.d.trace.values);
  const auto [nx1, ny1] = m.node_gradients(next.d.values, next.d.trace.values);
  const Mat bgx1 = 2 * detail::rows_dot_scale(gx1, sxx), bgy1 = 2 * detail::rows_dot_scale(gy1, syy);
  const Mat bnx1 = detail::rows_dot_scale(ny1, sxy), bny1 = detail::rows_dot_scale(nx1, sxy);
  Mat ad_next = ad + op.gx.transpose() * bgx1 + op.gy.transpose() * bgy1 + op.node_gx.transpose() * bnx1 +
                op.node_gy.transpose() * bny1;
  c.h_next = op.gx_b.transpose() * bgx1 + op.gy_b.transpose() * bgy1 + op.node_gx_b.transpose() * bnx1 +
             op.node_gy_b.transpose() * bny1;

  // director step
  Mat rd(ad_next.rows(), ad_next.cols());
  for (int k = 0; k < rd.cols(); ++k) rd.col(k) = m.solve_director(ad_next.col(k));
  c.d = rd - dt * eta * f_prime_rows(now.d.values, rd, m.params().epsilon);
  c.h_next += dt * eta * (op.lap_b.transpose() * rd);
  const Mat cbar = -dt * rd;
  const Vec uc = op.xface_to_cell * u, vc = op.yface_to_cell * v;
  const auto [gx, gy] = m.director_gradients(now.d.values, now.d.trace.values);
  c.u += op.xface_to_cell.transpose() * gx.cwiseProduct(cbar).rowwise().sum();
  c.v += op.yface_to_cell.transpose() * gy.cwiseProduct(cbar).rowwise().sum();
  const Mat bgx = detail::rows_dot_scale(cbar, uc), bgy = detail::rows_dot_scale(cbar, vc);
  c.d += op.gx.transpose() * bgx + op.gy.transpose() * bgy;
  c.h_now = op.gx_b.transpose() * bgx + op.gy_b.transpose() * bgy;
  return c;
}

/// Backward sweep.  seeds holds the cotangent injected at each level (seeds.h is ignored);
/// the result holds the total cotangent of every level's state and boundary values.
/// Level 0 boundary entries are reported but do not belong to the control (u_0 = 0).
inline Cotangents adjoint_sweep(const StateTrajectory& base, const Cotangents& seeds) {
  const GridSpec& g = base.grid();
  const Model& m = *base.model();
  const int K = g.num_steps();
  Cotangents a = Cotangents::zeros(g);
  a.u[K] = seeds.u[K];
  a.v[K] = seeds.v[K];
  a.d[K] = seeds.d[K];

  // recompute forward snapshots segment by segment so memory stays bounded by the stride
  const int stride = base.stride();
  StateSnapshot next = base.at(K);
  for (int seg_end = K; seg_end > 0;) {
    const int seg_start = std::max(0, ((seg_end - 1) / stride) * stride);
    std::vector<StateSnapshot> seg;
    seg.push_back(base.at(seg_start));
    for (int n = seg_start; n + 1 < seg_end; ++n) seg.push_back(m.step(seg.back(), base.control().at(n + 1)));
    for (int n = seg_end - 1; n >= seg_start; --n) {
      const StateSnapshot& now = seg[n - seg_start];
      StepCotangent c;
      try {
        c = step_transpose(m, now, next, a.u[n + 1], a.v[n + 1], a.d[n + 1]);
      } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " in adjoint step from level " + std::to_string(n + 1), e.residual());
      }
      a.u[n] = c.u + seeds.u[n];
      a.v[n] = c.v + seeds.v[n];
      a.d[n] = c.d + seeds.d[n];
      a.h[n] += c.h_now;
      a.h[n + 1] += c.h_next;
      if (!a.u[n].allFinite() || !a.v[n].allFinite() || !a.d[n].allFinite())
        throw NumericalError("adjoint sweep: non-finite values at time level " + std::to_string(n));
      next = now;
    }
    seg_end = seg_start;
  }
  return a;
}

struct AdjointTrajectory {
  GridSpec grid;
  std::vector<VectorField2D> p_tilde;
  std::vector<DirectorField> q_tilde;  // zero trace
  std::vector<ScalarField> P_tilde;
  std::vector<BoundaryTrace> q1;       // exact discrete density of dJ_tracking/dh
  std::vector<BoundaryTrace> p1;       // stencil diagnostic, filled by boundary_multipliers
  Cotangents raw;
};

/// Seeds of the tracking part of the cost (control term excluded).
inline Cotangents cost_seeds(const StateTrajectory& base, const CostSpec& cost) {
  const GridSpec& g = base.grid();
  cost.validate(g);
  const double a = g.cell_area();
  const int K = g.num_steps();
  Cotangents s = Cotangents::zeros(g);
  if (cost.beta1 > 0 || cost.beta2 > 0) {
    for (int k = 0; k <= K; ++k) {
      const StateSnapshot st = base.at(k);
      const double w = time_weight(g, k) * a;
      if (cost.beta1 > 0) {
        s.u[k] += cost.beta1 * w * (st.v.u - cost.vq_u(k, g));
        s.v[k] += cost.beta1 * w * (st.v.v - cost.vq_v(k, g));
      }
      if (cost.beta2 > 0) s.d[k] += cost.beta2 * w * (st.d.values - cost.dq(k, g));
    }
  }
  const StateSnapshot& e = base.final_snapshot();
  if (cost.beta3 > 0) {
    s.u[K] += cost.beta3 * a * (e.v.u - cost.vo_u(g));
    s.v[K] += cost.beta3 * a * (e.v.v - cost.vo_v(g));
  }
  if (cost.beta4 > 0) s.d[K] += cost.beta4 * a * (e.d.values - cost.dO(g));
  // wall-normal faces carry half weight in the cost, but they are fixed at zero, so masking suffices
  for (int k = 0; k <= K; ++k) {
    s.u[k] = s.u[k].cwiseProduct(base.model()->ops().xmask);
    s.v[k] = s.v[k].cwiseProduct(base.model()->ops().ymask);
  }
  return s;
}

/// Discrete L2(Sigma) density of a boundary cotangent at level k.
inline BoundaryTrace boundary_density(const GridSpec& g, const Mat& hbar, int k) {
  BoundaryTrace t{g, hbar};
  const double w = time_weight(g, k);
  for (int n = 0; n < g.num_boundary_nodes(); ++n) t.values.row(n) /= w * boundary_node(g, n).weight;
  return t;
}

inline AdjointTrajectory finish_adjoint(const StateTrajectory& base, Cotangents raw);

inline AdjointTrajectory solve_adjoint(const StateTrajectory& base, const CostSpec& cost) {
  const GridSpec& g = base.grid();
  cost.validate(g);
  if (cost.beta4 > 0) {
    const Mat gap = base.final_snapshot().d.trace.values - cost.dO_trace(g);
    const double worst = gap.size() ? gap.cwiseAbs().maxCoeff() : 0.0;
    if (worst > 1e-10)
      throw ConfigError("solve_adjoint: with beta4 > 0 the final director must match d_Omega on the boundary (max gap " +
                        std::to_string(worst) + ")");
  }
  return finish_adjoint(base, adjoint_sweep(base, cost_seeds(base, cost)));
}

// ---- boundary multipliers --------------------------------------------------------

namespace detail {

/// Inward derivative at the wall of a field vanishing there, from values a, b at
/// distances h/2 and 3h/2 (quadratic fit).
inline double inward_zero_wall(double a, double b, double h) { return (9 * a - b) / (3 * h); }

/// Inward derivative at the wall from the wall value w and cell values a, b.
inline double inward_with_wall(double w, double a, double b, double h) { return (9 * a - b - 8 * w) / (3 * h); }

/// Wall-normal geometry of boundary node n: the two nearest cells inward, the mesh width
/// normal to the wall, and the spacing/neighbours along the wall.
struct WallStencil {
  int c0, c1;      // first and second cell inward
  double hn;       // normal spacing
  int side;        // 0 bottom, 1 right, 2 top, 3 left
  int along;       // index along the wall
};

inline WallStencil wall_stencil(const GridSpec& g, int n) {
  const int nx = g.nx, ny = g.ny;
  if (n < nx) return {g.cell(n, 0), g.cell(n, 1), g.hy(), 0, n};
  if (n < nx + ny) {
    const int j = n - nx;
    return {g.cell(nx - 1, j), g.cell(nx - 2, j), g.hx(), 1, j};
  }
  if (n < 2 * nx + ny) {
    const int i = nx - 1 - (n - nx - ny);
    return {g.cell(i, ny - 1), g.cell(i, ny - 2), g.hy(), 2, i};
  }
  const int j = ny - 1 - (n - 2 * nx - ny);
  return {g.cell(0, j), g.cell(1, j), g.hx(), 3, j};
}

/// Derivative of the trace along the wall direction (x for bottom/top, y for left/right),
/// centred in the interior of the wall and one-sided at its ends.
inline Eigen::RowVectorXd trace_tangent_derivative(const GridSpec& g, const Mat& h, int n) {
  const WallStencil w = wall_stencil(g, n);
  const bool horizontal = (w.side == 0 || w.side == 2);
  const int len = horizontal ? g.nx : g.ny;
  const double step = horizontal ? g.hx() : g.hy();
  auto node = [&](int a) {
    switch (w.side) {
      case 0: return g.node_bottom(a);
      case 1: return g.node_right(a);
      case 2: return g.node_top(a);
      default: return g.node_left(a);
    }
  };
  if (w.along == 0) return (h.row(node(1)) - h.row(node(0))) / step;
  if (w.along == len - 1) return (h.row(node(len - 1)) - h.row(node(len - 2))) / step;
  return (h.row(node(w.along + 1)) - h.row(node(w.along - 1))) / (2 * step);
}

/// Inward normal derivative of the wall-tangential velocity component at node n.
inline double tangential_velocity_inward(const GridSpec& g, const VectorField2D& p, int n) {
  const WallStencil w = wall_stencil(g, n);
  const int nx = g.nx, ny = g.ny;
  switch (w.side) {
    case 0: {
      const int i = w.along;
      const double a = 0.5 * (p.u[g.xface(i, 0)] + p.u[g.xface(i + 1, 0)]);
      const double b = 0.5 * (p.u[g.xface(i, 1)] + p.u[g.xface(i + 1, 1)]);
      return inward_zero_wall(a, b, g.hy());
    }
    case 2: {
      const int i = w.along;
      const double a = 0.5 * (p.u[g.xface(i, ny - 1)] + p.u[g.xface(i + 1, ny - 1)]);
      const double b = 0.5 * (p.u[g.xface(i, ny - 2)] + p.u[g.xface(i + 1, ny - 2)]);
      return inward_zero_wall(a, b, g.hy());
    }
    case 1: {
      const int j = w.along;
      const double a = 0.5 * (p.v[g.yface(nx - 1, j)] + p.v[g.yface(nx - 1, j + 1)]);
      const double b = 0.5 * (p.v[g.yface(nx - 2, j)] + p.v[g.yface(nx - 2, j + 1)]);
      return inward_zero_wall(a, b, g.hx());
    }
    default: {
      const int j = w.along;
      const double a = 0.5 * (p.v[g.yface(0, j)] + p.v[g.yface(0, j + 1)]);
      const double b = 0.5 * (p.v[g.yface(1, j)] + p.v[g.yface(1, j + 1)]);
      return inward_zero_wall(a, b, g.hx());
    }
  }
}

/// Inward normal derivative of the wall-normal velocity component (second order, from the
/// wall value zero and the next two normal faces).
inline double normal_velocity_inward(const GridSpec& g, const VectorField2D& p, int n) {
  const WallStencil w = wall_stencil(g, n);
  const int nx = g.nx, ny = g.ny;
  double a = 0, b = 0, h = 0;
  switch (w.side) {
    case 0: a = p.v[g.yface(w.along, 1)], b = p.v[g.yface(w.along, 2)], h = g.hy(); break;
    case 2: a = -p.v[g.yface(w.along, ny - 1)], b = -p.v[g.yface(w.along, ny - 2)], h = g.hy(); break;
    case 1: a = -p.u[g.xface(nx - 1, w.along)], b = -p.u[g.xface(nx - 2, w.along)], h = g.hx(); break;
    default: a = p.u[g.xface(1, w.along)], b = p.u[g.xface(2, w.along)], h = g.hx(); break;
  }
  // returned as the inward derivative of (p . inward normal)
  return (4 * a - b) / (2 * h);
}

}  // namespace detail

struct Multipliers {
  std::vector<BoundaryTrace> p1;  // -dp~/dn - P~ n
  std::vector<BoundaryTrace> q1;  // -eta dq~/dn + lambda (grad d) S n, S = grad p~ + grad p~^T
};

/// Stencil traces of the adjoint boundary multipliers at every level.
inline Multipliers boundary_multipliers(const AdjointTrajectory& adj, const StateTrajectory& base) {
  const GridSpec& g = base.grid();
  require_same_grid(adj.grid, g, "boundary_multipliers");
  const double eta = base.params().eta, lam = base.params().lambda;
  Multipliers out;
  for (int k = 0; k < g.num_levels(); ++k) {
    const VectorField2D& p = adj.p_tilde[k];
    const Mat& q = adj.q_tilde[k].values;
    const Vec& P = adj.P_tilde[k].values;
    const BoundaryTrace h = base.control().at(k);
    BoundaryTrace q1 = BoundaryTrace::zeros(g), p1{g, Mat::Zero(g.num_boundary_nodes(), 2)};
    for (int n = 0; n < g.num_boundary_nodes(); ++n) {
      const detail::WallStencil w = detail::wall_stencil(g, n);
      const BoundaryNode b = boundary_node(g, n);
      const double dpt_in = detail::tangential_velocity_inward(g, p, n);
      for (int c = 0; c < g.n_dir; ++c) {
        const double dq_in = detail::inward_zero_wall(q(w.c0, c), q(w.c1, c), w.hn);
        q1.values(n, c) = eta * dq_in;
      }
      // S n reduces to the outward normal derivative of the tangential component times the
      // tangent, since p~ vanishes on the wall and is divergence free.
      const Eigen::RowVectorXd dh_tau = detail::trace_tangent_derivative(g, h.values, n);
      q1.values.row(n) += lam * (-dpt_in) * dh_tau;

      const double pw = 1.5 * P[w.c0] - 0.5 * P[w.c1];
      const double dpn_in = detail::normal_velocity_inward(g, p, n);
      // tangential direction: +x on bottom/top walls, +y on left/right walls
      const double tx = (w.side == 0 || w.side == 2) ? 1.0 : 0.0, ty = 1.0 - tx;
      // outward derivative = -inward derivative; the normal component points inward in dpn_in
      const double dpx_out = -(dpt_in * tx) + dpn_in * b.nx;
      const double dpy_out = -(dpt_in * ty) + dpn_in * b.ny;
      p1.values(n, 0) = -dpx_out - pw * b.nx;
      p1.values(n, 1) = -dpy_out - pw * b.ny;
    }
    out.q1.push_back(std::move(q1));
    out.p1.push_back(std::move(p1));
  }
  return out;
}

inline AdjointTrajectory finish_adjoint(const StateTrajectory& base, Cotangents raw) {
  const GridSpec& g = base.grid();
  const Model& m = *base.model();
  const double a = g.cell_area();
  AdjointTrajectory adj;
  adj.grid = g;
  for (int k = 0; k < g.num_levels(); ++k) {
    Vec pu = raw.u[k], pv = raw.v[k];
    Vec phi = m.project(pu, pv);
    adj.p_tilde.push_back({g, pu / a, pv / a});
    adj.P_tilde.push_back({g, phi / (a * g.dt)});
    adj.q_tilde.push_back({g, raw.d[k] / a, BoundaryTrace::zeros(g)});
    adj.q1.push_back(k == 0 ? BoundaryTrace::zeros(g) : boundary_density(g, raw.h[k], k));
  }
  adj.raw = std::move(raw);
  adj.p1 = boundary_multipliers(adj, base).p1;
  return adj;
}

/// Adjoint output (Euclidean gradient w.r.t. the deviation) for arbitrary seeds: the
/// transpose of solve_linearized.
inline Deviation linearized_transpose(const StateTrajectory& base, const Cotangents& seeds) {
  Cotangents a = adjoint_sweep(base, seeds);
  a.h[0].setZero();
  return a.h;
}

// ---- Ericksen coupling and its transpose -------------------------------------------

/// Discrete div(grad phi (.) grad d + grad d (.) grad phi) on interior faces for a
/// zero-trace perturbation phi of the director d.
inline VectorField2D linearized_ericksen(const Operators& op, const DirectorField& d, const Mat& phi) {
  const GridSpec& g = d.grid;
  const Mat& dv = d.values;
  const Mat& h = d.trace.values;
  const detail::StressParts s = detail::stress_tangent(
      op.gx * dv + op.gx_b * h, op.gy * dv + op.gy_b * h, op.gx * phi, op.gy * phi, op.node_gx * dv + op.node_gx_b * h,
      op.node_gy * dv + op.node_gy_b * h, op.node_gx * phi, op.node_gy * phi);
  return {g, op.xface_dx * s.xx + op.xface_dy_node * s.xy, op.yface_dy * s.yy + op.yface_dx_node * s.xy};
}

/// Transpose of linearized_ericksen with respect to phi: the discrete counterpart of
/// r_k = sum_i d_i ( sum_j d_j d_k S_ij ), S = grad p + grad p^T.
inline DirectorField r_tilde_apply(const Operators& op, const DirectorField& d_sharp, const VectorField2D& p) {
  const GridSpec& g = d_sharp.grid;
  require_same_grid(p.grid, g, "r_tilde_apply");
  const Mat& dv = d_sharp.values;
  const Mat& h = d_sharp.trace.values;
  const Vec sxx = op.xface_dx.transpose() * p.u;
  const Vec syy = op.yface_dy.transpose() * p.v;
  const Vec sxy = op.xface_dy_node.transpose() * p.u + op.yface_dx_node.transpose() * p.v;
  const Mat bgx = 2 * detail::rows_dot_scale(op.gx * dv + op.gx_b * h, sxx);
  const Mat bgy = 2 * detail::rows_dot_scale(op.gy * dv + op.gy_b * h, syy);
  const Mat bnx = detail::rows_dot_scale(op.node_gy * dv + op.node_gy_b * h, sxy);
  const Mat bny = detail::rows_dot_scale(op.node_gx * dv + op.node_gx_b * h, sxy);
  return {g, op.gx.transpose() * bgx + op.gy.transpose() * bgy + op.node_gx.transpose() * bnx + op.node_gy.transpose() * bny,
          BoundaryTrace::zeros(g)};
}

inline DirectorField r_tilde_apply(const DirectorField& d_sharp, const VectorField2D& p) {
  return r_tilde_apply(build_operators(d_sharp.grid), d_sharp, p);
}

}  // namespace nematic
