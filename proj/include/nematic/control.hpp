/// @file control.hpp
/// @brief Boundary controls h = h_ref + u, surrogate norms and the admissible-set retraction.
///
/// The deviation u vanishes at t = 0, so the compatibility condition h(0) = d0|Gamma holds
/// for every control built here.  The caps use integer-order tangential norms on the
/// closed boundary loop:
///   N_space(h)^2 = sum_k w_k |h_k|^2_{H^2_tau}          (trapezoid weights w_k)
///   N_time(h)^4  = sum_{k>=1} dt |(h_k - h_{k-1})/dt|^4_{H^1_tau}
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "nematic/fields.hpp"

namespace nematic {

/// Trapezoid weight of time level k.
inline double time_weight(const GridSpec& g, int k) {
  const int K = g.num_steps();
  return (k == 0 || k == K) ? 0.5 * g.dt : g.dt;
}

struct BoundaryControl {
  GridSpec grid;
  BoundaryTrace h_ref;
  std::vector<Mat> u;  // one (nodes x n_dir) deviation per time level, u[0] == 0
  double m_space = std::numeric_limits<double>::infinity();
  double m_time = std::numeric_limits<double>::infinity();

  static BoundaryControl constant(const BoundaryTrace& h_ref) {
    BoundaryControl c;
    c.grid = h_ref.grid;
    c.h_ref = h_ref;
    c.u.assign(h_ref.grid.num_levels(), Mat::Zero(h_ref.values.rows(), h_ref.values.cols()));
    return c;
  }

  int num_levels() const { return static_cast<int>(u.size()); }

  BoundaryTrace at(int k) const { return {grid, h_ref.values + u[k]}; }

  void validate() const {
    NEMATIC_REQUIRE(num_levels() == grid.num_levels(), ConfigError, "control: wrong number of time levels");
    for (const Mat& m : u) {
      NEMATIC_REQUIRE(m.rows() == grid.num_boundary_nodes() && m.cols() == grid.n_dir, ConfigError,
                      "control: deviation shape does not match the grid");
      NEMATIC_REQUIRE(m.allFinite(), ConfigError, "control: non-finite deviation");
    }
    NEMATIC_REQUIRE(u[0].cwiseAbs().maxCoeff() == 0.0, ConfigError, "control: deviation at t=0 must vanish");
    NEMATIC_REQUIRE(m_space > 0 && m_time > 0, ConfigError, "control: caps must be positive");
  }
};

// ---- deviation algebra (vectors of per-level matrices) -----------------------

using Deviation = std::vector<Mat>;

inline Deviation zero_deviation(const GridSpec& g) {
  return Deviation(g.num_levels(), Mat::Zero(g.num_boundary_nodes(), g.n_dir));
}

inline Deviation axpy(double a, const Deviation& x, const Deviation& y) {
  Deviation r = y;
  for (std::size_t k = 0; k < r.size(); ++k) r[k] += a * x[k];
  return r;
}

inline Deviation scaled(double a, const Deviation& x) {
  Deviation r = x;
  for (Mat& m : r) m *= a;
  return r;
}

/// Discrete L2(Sigma) inner product (trapezoid in time, face-length weights along Gamma).
inline double sigma_dot(const GridSpec& g, const Deviation& a, const Deviation& b) {
  double s = 0;
  for (int k = 0; k < static_cast<int>(a.size()); ++k) {
    const double wk = time_weight(g, k);
    for (int n = 0; n < a[k].rows(); ++n) s += wk * boundary_node(g, n).weight * a[k].row(n).dot(b[k].row(n));
  }
  return s;
}

inline double sigma_norm(const GridSpec& g, const Deviation& a) { return std::sqrt(sigma_dot(g, a, a)); }

/// Full control values h_k as a Deviation-shaped sequence.
inline Deviation control_values(const BoundaryControl& h) {
  Deviation r = h.u;
  for (Mat& m : r) m += h.h_ref.values;
  return r;
}

// ---- tangential surrogate norms ------------------------------------------------

namespace detail {

/// Spacing between consecutive nodes along the closed boundary loop (entry k: node k -> k+1).
inline std::vector<double> loop_spacing(const GridSpec& g) {
  const int nb = g.num_boundary_nodes();
  const double perimeter = 2 * (g.lx + g.ly);
  std::vector<double> d(nb);
  for (int k = 0; k < nb; ++k) {
    const double s0 = boundary_node(g, k).arc;
    const double s1 = k + 1 < nb ? boundary_node(g, k + 1).arc : perimeter + boundary_node(g, 0).arc;
    d[k] = s1 - s0;
  }
  return d;
}

/// Bilinear tangential Sobolev form of order 1 or 2 on the boundary loop.
inline double tangential_dot(const GridSpec& g, const Mat& a, const Mat& b, int order) {
  const int nb = g.num_boundary_nodes();
  const std::vector<double> ds = loop_spacing(g);
  double s = 0;
  for (int k = 0; k < nb; ++k) {
    const int kp = (k + 1) % nb;
    const double w = boundary_node(g, k).weight;
    s += w * a.row(k).dot(b.row(k));
    s += ds[k] * ((a.row(kp) - a.row(k)) / ds[k]).dot((b.row(kp) - b.row(k)) / ds[k]);
    if (order >= 2) {
      const int km = (k + nb - 1) % nb;
      const double hbar = 0.5 * (ds[k] + ds[km]);
      auto second = [&](const Mat& m) {
        return Eigen::RowVectorXd(((m.row(kp) - m.row(k)) / ds[k] - (m.row(k) - m.row(km)) / ds[km]) / hbar);
      };
      s += w * second(a).dot(second(b));
    }
  }
  return s;
}

}  // namespace detail

inline double space_form(const GridSpec& g, const Deviation& a, const Deviation& b) {
  double s = 0;
  for (int k = 0; k < static_cast<int>(a.size()); ++k) s += time_weight(g, k) * detail::tangential_dot(g, a[k], b[k], 2);
  return s;
}

inline double n_space(const BoundaryControl& h) {
  const Deviation v = control_values(h);
  return std::sqrt(space_form(h.grid, v, v));
}

/// Depends only on the deviation, since h_ref is constant in time.
inline double n_time(const GridSpec& g, const Deviation& u) {
  double s = 0;
  for (int k = 1; k < static_cast<int>(u.size()); ++k) {
    const Mat dtu = (u[k] - u[k - 1]) / g.dt;
    const double n2 = detail::tangential_dot(g, dtu, dtu, 1);
    s += g.dt * n2 * n2;
  }
  return std::pow(s, 0.25);
}

inline double n_time(const BoundaryControl& h) { return n_time(h.grid, h.u); }

/// Radial retraction onto both caps: the space cap first, then the time cap.
/// Controls that already satisfy both caps are returned unchanged.
inline BoundaryControl admissible_project(const BoundaryControl& h) {
  const GridSpec& g = h.grid;
  BoundaryControl out = h;
  const Deviation ref(h.u.size(), h.h_ref.values);
  const double a = space_form(g, ref, ref);
  const double b = space_form(g, ref, h.u);
  const double c = space_form(g, h.u, h.u);
  const double m2 = h.m_space * h.m_space;
  if (a > m2 * (1 + 1e-12)) {
    throw ConfigError("admissible set is empty: N_space(h_ref) = " + std::to_string(std::sqrt(a)) +
                      " exceeds M_space = " + std::to_string(h.m_space));
  }
  double s = 1.0;
  if (a + 2 * b + c > m2 && c > 0) {
    s = (-b + std::sqrt(std::max(0.0, b * b - c * (a - m2)))) / c;
    s = std::clamp(s, 0.0, 1.0);
    for (Mat& m : out.u) m *= s;
  }
  const double nt = n_time(g, out.u);
  if (nt > h.m_time) {
    const double st = h.m_time / nt;
    for (Mat& m : out.u) m *= st;
  }
  out.u[0].setZero();
  return out;
}

inline bool is_admissible(const BoundaryControl& h, double rel_tol = 1e-10) {
  return n_space(h) <= h.m_space * (1 + rel_tol) && n_time(h) <= h.m_time * (1 + rel_tol);
}

}  // namespace nematic
