/// @file linearized.hpp
/// @brief Exact Jacobian of the discrete forward map: the linearized state solver.
///
/// Each step of solve_state is differentiated as written (discretize, then linearize), so
/// solve_linearized(base, xi) is the directional derivative of the discrete control-to-state
/// map and its transpose is available in adjoint.hpp.
#pragma once

#include <cmath>
#include <vector>

#include "nematic/state.hpp"

namespace nematic {

struct LinearizedTrajectory {
  GridSpec grid;
  std::vector<VectorField2D> omega;  // velocity derivative
  std::vector<DirectorField> phi;    // director derivative, trace = xi(t_k)
  std::vector<ScalarField> phat;     // pressure derivative
  Deviation xi;
};

/// Tangent of one state step.
struct StepTangent {
  Vec u, v;
  Mat d;
  Vec phi;  // projection potential
};

namespace detail {

inline Mat rows_dot_scale(const Mat& g, const Vec& s) { return g.array().colwise() * s.array(); }

/// Tangent of the Ericksen stress: normal parts at cells, shear part at nodes.
struct StressParts {
  Vec xx, yy, xy;
};

inline StressParts stress_tangent(const Mat& gx, const Mat& gy, const Mat& dgx, const Mat& dgy, const Mat& nx,
                                  const Mat& ny, const Mat& dnx, const Mat& dny) {
  return {2 * gx.cwiseProduct(dgx).rowwise().sum(), 2 * gy.cwiseProduct(dgy).rowwise().sum(),
          (dnx.cwiseProduct(ny) + nx.cwiseProduct(dny)).rowwise().sum()};
}

}  // namespace detail

/// Tangent of step n -> n+1 around (now, next) for perturbations of u^n, v^n, d^n, h^n, h^{n+1}.
inline StepTangent step_tangent(const Model& m, const StateSnapshot& now, const StateSnapshot& next, const Vec& du,
                                const Vec& dv, const Mat& dd, const Mat& dh_now, const Mat& dh_next) {
  const Operators& op = m.ops();
  const double dt = m.grid().dt, eta = m.params().eta, lam = m.params().lambda;
  const Vec& u = now.v.u;
  const Vec& v = now.v.v;

  // director
  const Vec uc = op.xface_to_cell * u, vc = op.yface_to_cell * v;
  const Vec duc = op.xface_to_cell * du, dvc = op.yface_to_cell * dv;
  const auto [gx, gy] = m.director_gradients(now.d.values, now.d.trace.values);
  const auto [dgx, dgy] = m.director_gradients(dd, dh_now);
  const Mat fp = f_prime_rows(now.d.values, dd, m.params().epsilon);
  StepTangent t;
  t.d.resize(dd.rows(), dd.cols());
  for (int k = 0; k < dd.cols(); ++k) {
    const Vec dconv = duc.cwiseProduct(gx.col(k)) + uc.cwiseProduct(dgx.col(k)) + dvc.cwiseProduct(gy.col(k)) +
                      vc.cwiseProduct(dgy.col(k));
    const Vec rhs = dd.col(k) + dt * (eta * (op.lap_b * dh_next.col(k)) - eta * fp.col(k) - dconv);
    t.d.col(k) = m.solve_director(rhs);
  }

  // Ericksen force from the new director
  const auto [gx1, gy1] = m.director_gradients(next.d.values, next.d.trace.values);
  const auto [nx1, ny1] = m.node_gradients(next.d.values, next.d.trace.values);
  const auto [dgx1, dgy1] = m.director_gradients(t.d, dh_next);
  const auto [dnx1, dny1] = m.node_gradients(t.d, dh_next);
  const detail::StressParts ds = detail::stress_tangent(gx1, gy1, dgx1, dgy1, nx1, ny1, dnx1, dny1);
  const Vec dfu = -lam * (op.xface_dx * ds.xx + op.xface_dy_node * ds.xy);
  const Vec dfv = -lam * (op.yface_dy * ds.yy + op.yface_dx_node * ds.xy);

  // convection
  const Vec vx = op.v_to_xface * v, uy = op.u_to_yface * u;
  const Vec dnu = du.cwiseProduct(op.dx_u * u) + u.cwiseProduct(op.dx_u * du) +
                  (op.v_to_xface * dv).cwiseProduct(op.dy_u * u) + vx.cwiseProduct(op.dy_u * du);
  const Vec dnv = (op.u_to_yface * du).cwiseProduct(op.dx_v * v) + uy.cwiseProduct(op.dx_v * dv) +
                  dv.cwiseProduct(op.dy_v * v) + v.cwiseProduct(op.dy_v * dv);

  t.u = m.solve_u((du + dt * (dfu - dnu)).cwiseProduct(op.xmask));
  t.v = m.solve_v((dv + dt * (dfv - dnv)).cwiseProduct(op.ymask));
  t.phi = m.project(t.u, t.v);
  return t;
}

inline void require_zero_initial_deviation(const GridSpec& g, const Deviation& xi, const char* who) {
  NEMATIC_REQUIRE(static_cast<int>(xi.size()) == g.num_levels(), ConfigError,
                  std::string(who) + ": deviation needs one value per time level");
  for (const Mat& m : xi)
    NEMATIC_REQUIRE(m.rows() == g.num_boundary_nodes() && m.cols() == g.n_dir && m.allFinite(), ConfigError,
                    std::string(who) + ": deviation shape mismatch or non-finite values");
  NEMATIC_REQUIRE(xi[0].cwiseAbs().maxCoeff() == 0.0, ConfigError,
                  std::string(who) + ": the deviation must vanish at t = 0");
}

/// Directional derivative of the discrete control-to-state map at base.control() in direction xi.
inline LinearizedTrajectory solve_linearized(const StateTrajectory& base, const Deviation& xi) {
  const GridSpec& g = base.grid();
  const Model& m = *base.model();
  require_zero_initial_deviation(g, xi, "solve_linearized");
  LinearizedTrajectory out;
  out.grid = g;
  out.xi = xi;
  out.omega.push_back(VectorField2D::zeros(g));
  out.phi.push_back(DirectorField{g, Mat::Zero(g.num_cells(), g.n_dir), {g, xi[0]}});
  out.phat.push_back(ScalarField::zeros(g));
  StateSnapshot now = base.at(0);
  for (int n = 0; n < g.num_steps(); ++n) {
    StateSnapshot next = base.at(n + 1);
    StepTangent t;
    try {
      t = step_tangent(m, now, next, out.omega[n].u, out.omega[n].v, out.phi[n].values, xi[n], xi[n + 1]);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " in linearized step to level " + std::to_string(n + 1), e.residual());
    }
    if (!t.u.allFinite() || !t.v.allFinite() || !t.d.allFinite())
      throw NumericalError("solve_linearized: non-finite values at time level " + std::to_string(n + 1));
    out.omega.push_back({g, std::move(t.u), std::move(t.v)});
    out.phi.push_back({g, std::move(t.d), {g, xi[n + 1]}});
    out.phat.push_back({g, t.phi / g.dt});
    now = std::move(next);
  }
  return out;
}

/// max_k (|dv_k|_L2 + |dd_k|_H1): the discrete C(L2) x C(H1) norm of a trajectory difference.
inline double w1_norm(const std::vector<VectorField2D>& dv, const std::vector<DirectorField>& dd) {
  double r = 0;
  for (std::size_t k = 0; k < dv.size(); ++k)
    r = std::max(r, discrete_norm(dv[k], NormOrder::L2) + discrete_norm(dd[k], NormOrder::H1));
  return r;
}

/// Least-squares slope of log(r) against log(s).
inline double fit_loglog_slope(const std::vector<double>& s, const std::vector<double>& r) {
  NEMATIC_REQUIRE(s.size() == r.size() && s.size() >= 2, ConfigError, "fit_loglog_slope: need matching series of length >= 2");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    mx += std::log(s[i]);
    my += std::log(r[i]);
  }
  mx /= s.size();
  my /= s.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxy += (std::log(s[i]) - mx) * (std::log(r[i]) - my);
    sxx += (std::log(s[i]) - mx) * (std::log(s[i]) - mx);
  }
  return sxy / sxx;
}

struct TaylorResult {
  std::vector<double> s;
  std::vector<double> remainder;
  std::vector<double> local_slope;  // NaN for the first entry
  double fitted_slope = std::nan("");
  bool degenerate = false;          // all remainders at round-off level (e.g. xi = 0)
};

/// Remainders R(s) = |S(h + s xi) - S(h) - s S'(h) xi| in the W1 surrogate norm.
inline TaylorResult taylor_remainder_slopes(const StateTrajectory& base, const VectorField2D& v0, const DirectorField& d0,
                                            const Deviation& xi, const std::vector<double>& s_values) {
  NEMATIC_REQUIRE(s_values.size() >= 3, ConfigError, "taylor_remainder_slopes: at least three s values are required");
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    NEMATIC_REQUIRE(s_values[i] > 0, ConfigError, "taylor_remainder_slopes: s values must be positive");
    if (i > 0) NEMATIC_REQUIRE(s_values[i] < s_values[i - 1], ConfigError, "taylor_remainder_slopes: s values must decrease");
  }
  const GridSpec& g = base.grid();
  const LinearizedTrajectory lin = solve_linearized(base, xi);
  TaylorResult res;
  res.s = s_values;
  double state_scale = 0;
  for (int k = 0; k < g.num_levels(); ++k) {
    const StateSnapshot b = base.at(k);
    state_scale = std::max(state_scale, discrete_norm(b.v, NormOrder::L2) + discrete_norm(b.d, NormOrder::H1));
  }
  for (double s : s_values) {
    BoundaryControl hs = base.control();
    hs.u = axpy(s, xi, hs.u);
    const StateTrajectory pert = solve_state(base.model(), v0, d0, hs);
    std::vector<VectorField2D> dv;
    std::vector<DirectorField> dd;
    for (int k = 0; k < g.num_levels(); ++k) {
      const StateSnapshot a = pert.at(k), b = base.at(k);
      dv.push_back({g, a.v.u - b.v.u - s * lin.omega[k].u, a.v.v - b.v.v - s * lin.omega[k].v});
      dd.push_back({g, a.d.values - b.d.values - s * lin.phi[k].values,
                    {g, a.d.trace.values - b.d.trace.values - s * lin.phi[k].trace.values}});
    }
    res.remainder.push_back(w1_norm(dv, dd));
  }
  const double floor = 1e-13 * std::max(state_scale, 1.0);
  res.degenerate = *std::max_element(res.remainder.begin(), res.remainder.end()) <= floor;
  res.local_slope.push_back(std::nan(""));
  for (std::size_t i = 1; i < s_values.size(); ++i)
    res.local_slope.push_back(std::log(res.remainder[i - 1] / res.remainder[i]) / std::log(s_values[i - 1] / s_values[i]));
  if (!res.degenerate) {
    std::vector<double> ss, rr;
    for (std::size_t i = 0; i < s_values.size(); ++i)
      if (res.remainder[i] > 100 * floor) {
        ss.push_back(s_values[i]);
        rr.push_back(res.remainder[i]);
      }
    if (ss.size() >= 2) res.fitted_slope = fit_loglog_slope(ss, rr);
  }
  return res;
}

}  // namespace nematic
