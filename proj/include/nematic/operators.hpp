/// @file operators.hpp
/// @brief Sparse stencil matrices of the MAC discretisation.
///
/// Every discrete differential operator used by the state, linearized and adjoint
/// solvers is assembled once per grid as a sparse matrix, so transposes used by the
/// adjoint pass are exact.  Director operators come in pairs (A, A_b): the value of
/// the stencil is A*d + A_b*h, where h is the Dirichlet trace entering through the
/// ghost cell d_ghost = 2h - d.  Velocity operators never reference wall faces, whose
/// values are identically zero (no-slip normal component); tangential no-slip is
/// imposed by the ghost reflection u_ghost = -u.
#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <vector>

#include "nematic/fields.hpp"

namespace nematic {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct Operators {
  GridSpec grid;

  // cell-centred, homogeneous-ghost part and boundary-trace part
  SpMat lap, lap_b;
  SpMat gx, gx_b;
  SpMat gy, gy_b;

  // face <-> cell
  SpMat xface_to_cell, yface_to_cell;  // two-point averages
  SpMat div_x, div_y;                  // interior faces only
  SpMat grad_x, grad_y;                // = -div^T, pressure gradient on interior faces

  // velocity viscous and convective stencils
  SpMat lap_u, lap_v;
  SpMat dx_u, dy_u, v_to_xface;
  SpMat dx_v, dy_v, u_to_yface;

  // Ericksen divergence.  Normal stresses live at cell centres, the shear stress at cell
  // corners (nodes, index j*(nx+1)+i):
  //   F_u = xface_dx*sxx + xface_dy_node*sxy,  F_v = yface_dy*syy + yface_dx_node*sxy
  SpMat node_gx, node_gx_b;  // director gradient at nodes (cells, trace parts)
  SpMat node_gy, node_gy_b;
  SpMat xface_dx, xface_dy_node;
  SpMat yface_dy, yface_dx_node;

  Vec xmask, ymask;  // 1 on interior faces, 0 on wall faces
};

namespace detail {

inline SpMat from_triplets(int rows, int cols, const Triplets& t) {
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace detail

inline Operators build_operators(const GridSpec& g) {
  using detail::from_triplets;
  const int nx = g.nx, ny = g.ny;
  const int nc = g.num_cells(), nu = g.num_xfaces(), nv = g.num_yfaces(), nb = g.num_boundary_nodes();
  const double hx = g.hx(), hy = g.hy();
  const double ihx2 = 1.0 / (hx * hx), ihy2 = 1.0 / (hy * hy);

  Operators op;
  op.grid = g;

  {
    Triplets L, Lb, X, Xb, Y, Yb;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int c = g.cell(i, j);
        // x-direction
        if (i > 0) {
          L.emplace_back(c, g.cell(i - 1, j), ihx2);
          L.emplace_back(c, c, -ihx2);
          X.emplace_back(c, g.cell(i - 1, j), -0.5 / hx);
        } else {
          L.emplace_back(c, c, -2 * ihx2);
          Lb.emplace_back(c, g.node_left(j), 2 * ihx2);
          X.emplace_back(c, c, 0.5 / hx);
          Xb.emplace_back(c, g.node_left(j), -1.0 / hx);
        }
        if (i < nx - 1) {
          L.emplace_back(c, g.cell(i + 1, j), ihx2);
          L.emplace_back(c, c, -ihx2);
          X.emplace_back(c, g.cell(i + 1, j), 0.5 / hx);
        } else {
          L.emplace_back(c, c, -2 * ihx2);
          Lb.emplace_back(c, g.node_right(j), 2 * ihx2);
          X.emplace_back(c, c, -0.5 / hx);
          Xb.emplace_back(c, g.node_right(j), 1.0 / hx);
        }
        // y-direction
        if (j > 0) {
          L.emplace_back(c, g.cell(i, j - 1), ihy2);
          L.emplace_back(c, c, -ihy2);
          Y.emplace_back(c, g.cell(i, j - 1), -0.5 / hy);
        } else {
          L.emplace_back(c, c, -2 * ihy2);
          Lb.emplace_back(c, g.node_bottom(i), 2 * ihy2);
          Y.emplace_back(c, c, 0.5 / hy);
          Yb.emplace_back(c, g.node_bottom(i), -1.0 / hy);
        }
        if (j < ny - 1) {
          L.emplace_back(c, g.cell(i, j + 1), ihy2);
          L.emplace_back(c, c, -ihy2);
          Y.emplace_back(c, g.cell(i, j + 1), 0.5 / hy);
        } else {
          L.emplace_back(c, c, -2 * ihy2);
          Lb.emplace_back(c, g.node_top(i), 2 * ihy2);
          Y.emplace_back(c, c, -0.5 / hy);
          Yb.emplace_back(c, g.node_top(i), 1.0 / hy);
        }
      }
    }
    op.lap = from_triplets(nc, nc, L);
    op.lap_b = from_triplets(nc, nb, Lb);
    op.gx = from_triplets(nc, nc, X);
    op.gx_b = from_triplets(nc, nb, Xb);
    op.gy = from_triplets(nc, nc, Y);
    op.gy_b = from_triplets(nc, nb, Yb);
  }

  op.xmask = Vec::Ones(nu);
  op.ymask = Vec::Ones(nv);
  for (int j = 0; j < ny; ++j) {
    op.xmask[g.xface(0, j)] = 0;
    op.xmask[g.xface(nx, j)] = 0;
  }
  for (int i = 0; i < nx; ++i) {
    op.ymask[g.yface(i, 0)] = 0;
    op.ymask[g.yface(i, ny)] = 0;
  }

  {
    Triplets Ax, Ay, Dx, Dy;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int c = g.cell(i, j);
        Ax.emplace_back(c, g.xface(i, j), 0.5);
        Ax.emplace_back(c, g.xface(i + 1, j), 0.5);
        Ay.emplace_back(c, g.yface(i, j), 0.5);
        Ay.emplace_back(c, g.yface(i, j + 1), 0.5);
        if (i > 0) Dx.emplace_back(c, g.xface(i, j), -1.0 / hx);
        if (i + 1 < nx) Dx.emplace_back(c, g.xface(i + 1, j), 1.0 / hx);
        if (j > 0) Dy.emplace_back(c, g.yface(i, j), -1.0 / hy);
        if (j + 1 < ny) Dy.emplace_back(c, g.yface(i, j + 1), 1.0 / hy);
      }
    }
    op.xface_to_cell = from_triplets(nc, nu, Ax);
    op.yface_to_cell = from_triplets(nc, nv, Ay);
    op.div_x = from_triplets(nc, nu, Dx);
    op.div_y = from_triplets(nc, nv, Dy);
    op.grad_x = SpMat(-SpMat(op.div_x.transpose()));
    op.grad_y = SpMat(-SpMat(op.div_y.transpose()));
  }

  // x-face stencils (rows only for interior faces)
  {
    Triplets L, DX, DY, V;
    for (int j = 0; j < ny; ++j) {
      for (int i = 1; i < nx; ++i) {
        const int f = g.xface(i, j);
        for (int di : {-1, 1}) {
          L.emplace_back(f, f, -ihx2);
          if (!g.is_wall_xface(i + di)) {
            L.emplace_back(f, g.xface(i + di, j), ihx2);
            DX.emplace_back(f, g.xface(i + di, j), di * 0.5 / hx);
          }
        }
        for (int dj : {-1, 1}) {
          const int jj = j + dj;
          if (jj >= 0 && jj < ny) {
            L.emplace_back(f, g.xface(i, jj), ihy2);
            L.emplace_back(f, f, -ihy2);
            DY.emplace_back(f, g.xface(i, jj), dj * 0.5 / hy);
          } else {
            L.emplace_back(f, f, -2 * ihy2);
            DY.emplace_back(f, f, -dj * 0.5 / hy);
          }
        }
        for (int jj : {j, j + 1}) {
          if (g.is_wall_yface(jj)) continue;
          V.emplace_back(f, g.yface(i - 1, jj), 0.25);
          V.emplace_back(f, g.yface(i, jj), 0.25);
        }
      }
    }
    op.lap_u = from_triplets(nu, nu, L);
    op.dx_u = from_triplets(nu, nu, DX);
    op.dy_u = from_triplets(nu, nu, DY);
    op.v_to_xface = from_triplets(nu, nv, V);
  }

  // y-face stencils
  {
    Triplets L, DX, DY, U;
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int f = g.yface(i, j);
        for (int dj : {-1, 1}) {
          L.emplace_back(f, f, -ihy2);
          if (!g.is_wall_yface(j + dj)) {
            L.emplace_back(f, g.yface(i, j + dj), ihy2);
            DY.emplace_back(f, g.yface(i, j + dj), dj * 0.5 / hy);
          }
        }
        for (int di : {-1, 1}) {
          const int ii = i + di;
          if (ii >= 0 && ii < nx) {
            L.emplace_back(f, g.yface(ii, j), ihx2);
            L.emplace_back(f, f, -ihx2);
            DX.emplace_back(f, g.yface(ii, j), di * 0.5 / hx);
          } else {
            L.emplace_back(f, f, -2 * ihx2);
            DX.emplace_back(f, f, -di * 0.5 / hx);
          }
        }
        for (int ii : {i, i + 1}) {
          if (g.is_wall_xface(ii)) continue;
          U.emplace_back(f, g.xface(ii, j - 1), 0.25);
          U.emplace_back(f, g.xface(ii, j), 0.25);
        }
      }
    }
    op.lap_v = from_triplets(nv, nv, L);
    op.dx_v = from_triplets(nv, nv, DX);
    op.dy_v = from_triplets(nv, nv, DY);
    op.u_to_yface = from_triplets(nv, nu, U);
  }

  // Ericksen divergence pieces
  {
    const int nn = (nx + 1) * (ny + 1);
    auto node = [&](int i, int j) { return j * (nx + 1) + i; };
    Triplets NX, NXb, NY, NYb;
    // Adds coef * d(ci, cj) to row r, resolving out-of-range cells to the ghost 2h - d.
    auto add = [&](Triplets& in, Triplets& bd, int r, int ci, int cj, double coef) {
      if (ci >= 0 && ci < nx && cj >= 0 && cj < ny) {
        in.emplace_back(r, g.cell(ci, cj), coef);
        return;
      }
      const int ii = std::clamp(ci, 0, nx - 1), jj = std::clamp(cj, 0, ny - 1);
      const int b = ci < 0 ? g.node_left(jj) : ci >= nx ? g.node_right(jj) : cj < 0 ? g.node_bottom(ii) : g.node_top(ii);
      bd.emplace_back(r, b, 2 * coef);
      in.emplace_back(r, g.cell(ii, jj), -coef);
    };
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const int r = node(i, j);
        for (int cj : {j - 1, j}) {
          add(NX, NXb, r, i, cj, 0.5 / hx);
          add(NX, NXb, r, i - 1, cj, -0.5 / hx);
        }
        for (int ci : {i - 1, i}) {
          add(NY, NYb, r, ci, j, 0.5 / hy);
          add(NY, NYb, r, ci, j - 1, -0.5 / hy);
        }
      }
    }
    op.node_gx = from_triplets(nn, nc, NX);
    op.node_gx_b = from_triplets(nn, nb, NXb);
    op.node_gy = from_triplets(nn, nc, NY);
    op.node_gy_b = from_triplets(nn, nb, NYb);

    Triplets FX, FXN, FY, FYN;
    for (int j = 0; j < ny; ++j) {
      for (int i = 1; i < nx; ++i) {
        const int f = g.xface(i, j);
        FX.emplace_back(f, g.cell(i, j), 1.0 / hx);
        FX.emplace_back(f, g.cell(i - 1, j), -1.0 / hx);
        FXN.emplace_back(f, node(i, j + 1), 1.0 / hy);
        FXN.emplace_back(f, node(i, j), -1.0 / hy);
      }
    }
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int f = g.yface(i, j);
        FY.emplace_back(f, g.cell(i, j), 1.0 / hy);
        FY.emplace_back(f, g.cell(i, j - 1), -1.0 / hy);
        FYN.emplace_back(f, node(i + 1, j), 1.0 / hx);
        FYN.emplace_back(f, node(i, j), -1.0 / hx);
      }
    }
    op.xface_dx = from_triplets(nu, nc, FX);
    op.xface_dy_node = from_triplets(nu, nn, FXN);
    op.yface_dy = from_triplets(nv, nc, FY);
    op.yface_dx_node = from_triplets(nv, nn, FYN);
  }
  return op;
}

}  // namespace nematic
