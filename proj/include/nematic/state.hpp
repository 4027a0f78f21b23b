/// @file state.hpp
/// @brief Forward solver for the nematic flow system with Dirichlet director control.
///
/// One step from level n to n+1 (semi-implicit, first order in time):
///   director:  (I - dt eta L) d^{n+1} = d^n + dt [eta L_b h^{n+1} - eta f(d^n) - (v^n . grad) d^n]
///   velocity:  (I - dt nu L) v*      = v^n + dt [-(v^n . grad) v^n - lambda div(grad d^{n+1} (.) grad d^{n+1})]
///   projection v^{n+1} = v* - G phi with D v^{n+1} = 0, P^{n+1} = phi / dt (mean zero).
#pragma once

#include <Eigen/SparseCholesky>
#include <map>
#include <memory>
#include <utility>

#include "nematic/control.hpp"
#include "nematic/field_ops.hpp"
#include "nematic/physics.hpp"

namespace nematic {

struct StateSnapshot {
  VectorField2D v;
  DirectorField d;
  ScalarField p;
  double t = 0.0;
};

/// Tolerances of the linear algebra.
struct SolverTolerances {
  double helmholtz_rel = 1e-12;
  double poisson_rel = 1e-11;
  double divergence = 1e-10;
};

/// Discretisation of one (grid, parameters) pair: stencils plus factorised implicit operators.
/// Immutable after construction and safe to share between threads.
class Model {
public:
  using Factor = Eigen::SimplicialLDLT<SpMat>;

  Model(const GridSpec& grid, const PhysParams& params, SolverTolerances tol = {})
      : grid_(grid), params_(params), tol_(tol) {
    grid.validate();
    params.validate();
    check_cfl(grid, params);
    ops_ = build_operators(grid);
    const double dt = grid.dt;
    auto identity = [](int n) {
      SpMat I(n, n);
      I.setIdentity();
      return I;
    };
    sd_mat_ = identity(grid.num_cells()) - dt * params.eta * ops_.lap;
    su_mat_ = identity(grid.num_xfaces()) - dt * params.nu * ops_.lap_u;
    sv_mat_ = identity(grid.num_yfaces()) - dt * params.nu * ops_.lap_v;
    SpMat poisson = ops_.div_x * SpMat(ops_.div_x.transpose()) + ops_.div_y * SpMat(ops_.div_y.transpose());
    poisson.prune([](int r, int c, double) { return r != 0 && c != 0; });
    poisson.coeffRef(0, 0) = 1.0;
    poisson.makeCompressed();
    poisson_mat_ = poisson;
    factor(sd_, sd_mat_, "director Helmholtz");
    factor(su_, su_mat_, "x-velocity Helmholtz");
    factor(sv_, sv_mat_, "y-velocity Helmholtz");
    factor(poisson_, poisson_mat_, "pressure Poisson");
  }

  const GridSpec& grid() const { return grid_; }
  const PhysParams& params() const { return params_; }
  const Operators& ops() const { return ops_; }
  const SolverTolerances& tolerances() const { return tol_; }

  // ---- implicit solves (all operators are symmetric, so these double as transposes)

  Vec solve_director(const Vec& b) const { return checked_solve(sd_, sd_mat_, b, tol_.helmholtz_rel, "director Helmholtz"); }
  Vec solve_u(const Vec& b) const { return checked_solve(su_, su_mat_, b, tol_.helmholtz_rel, "x-velocity Helmholtz"); }
  Vec solve_v(const Vec& b) const { return checked_solve(sv_, sv_mat_, b, tol_.helmholtz_rel, "y-velocity Helmholtz"); }

  /// Discrete Leray projection on interior faces. Returns the potential phi (mean zero)
  /// with u = u* - G phi.  The map is symmetric and idempotent.
  Vec project(Vec& u, Vec& v) const {
    u = u.cwiseProduct(ops_.xmask);
    v = v.cwiseProduct(ops_.ymask);
    Vec div = ops_.div_x * u + ops_.div_y * v;
    const double scale = std::max(1.0, div.cwiseAbs().maxCoeff());
    Vec phi = Vec::Zero(grid_.num_cells());
    for (int pass = 0; pass < 3; ++pass) {
      Vec rhs = -div;
      rhs[0] = 0.0;
      const Vec dphi = checked_solve(poisson_, poisson_mat_, rhs, tol_.poisson_rel, "pressure Poisson");
      phi += dphi;
      u -= ops_.grad_x * dphi;
      v -= ops_.grad_y * dphi;
      div = ops_.div_x * u + ops_.div_y * v;
      if (div.cwiseAbs().maxCoeff() <= 1e-3 * tol_.divergence) break;
    }
    const double residual = div.cwiseAbs().maxCoeff();
    if (residual > tol_.divergence && residual > 1e-14 * scale) throw SolverError("pressure projection failed", residual);
    phi.array() -= phi.mean();
    return phi;
  }

  // ---- discrete forward step on raw arrays ---------------------------------------

  /// Centred director gradients (cells x n_dir) with Dirichlet trace h.
  std::pair<Mat, Mat> director_gradients(const Mat& d, const Mat& h) const {
    return {ops_.gx * d + ops_.gx_b * h, ops_.gy * d + ops_.gy_b * h};
  }

  Mat director_update(const Vec& u, const Vec& v, const Mat& d, const Mat& h_now, const Mat& h_next) const {
    const double dt = grid_.dt, eta = params_.eta;
    const Vec uc = ops_.xface_to_cell * u, vc = ops_.yface_to_cell * v;
    const auto [gx, gy] = director_gradients(d, h_now);
    const Mat fd = compute_f_rows(d, params_.epsilon);
    Mat out(d.rows(), d.cols());
    for (int k = 0; k < d.cols(); ++k) {
      Vec rhs = d.col(k) + dt * (eta * (ops_.lap_b * h_next.col(k)) - eta * fd.col(k) - uc.cwiseProduct(gx.col(k)) -
                                 vc.cwiseProduct(gy.col(k)));
      out.col(k) = solve_director(rhs);
    }
    return out;
  }

  /// Director gradients at cell corners (nodes), used by the shear stress.
  std::pair<Mat, Mat> node_gradients(const Mat& d, const Mat& h) const {
    return {ops_.node_gx * d + ops_.node_gx_b * h, ops_.node_gy * d + ops_.node_gy_b * h};
  }

  /// -lambda div(grad d (.) grad d) on interior faces.
  std::pair<Vec, Vec> ericksen_force(const Mat& d, const Mat& h) const {
    const auto [gx, gy] = director_gradients(d, h);
    const auto [nx, ny] = node_gradients(d, h);
    const Vec sxx = gx.cwiseProduct(gx).rowwise().sum();
    const Vec syy = gy.cwiseProduct(gy).rowwise().sum();
    const Vec sxy = nx.cwiseProduct(ny).rowwise().sum();
    const double lam = params_.lambda;
    return {-lam * (ops_.xface_dx * sxx + ops_.xface_dy_node * sxy), -lam * (ops_.yface_dy * syy + ops_.yface_dx_node * sxy)};
  }

  /// Advective (v . grad) v on interior faces.
  std::pair<Vec, Vec> convection(const Vec& u, const Vec& v) const {
    const Vec nu_ = u.cwiseProduct(ops_.dx_u * u) + (ops_.v_to_xface * v).cwiseProduct(ops_.dy_u * u);
    const Vec nv_ = (ops_.u_to_yface * u).cwiseProduct(ops_.dx_v * v) + v.cwiseProduct(ops_.dy_v * v);
    return {nu_, nv_};
  }

  StateSnapshot step(const StateSnapshot& prev, const BoundaryTrace& h_next) const {
    const double dt = grid_.dt;
    require_same_grid(prev.d.grid, grid_, "step_state snapshot");
    require_same_grid(h_next.grid, grid_, "step_state boundary data");
    if (!h_next.values.allFinite()) throw NumericalError("step_state: non-finite boundary data");

    StateSnapshot next;
    next.t = prev.t + dt;
    next.d.grid = grid_;
    next.d.trace = h_next;
    next.d.values = director_update(prev.v.u, prev.v.v, prev.d.values, prev.d.trace.values, h_next.values);
    if (!next.d.values.allFinite()) throw NumericalError("step_state: non-finite director field at t = " + std::to_string(next.t));

    const auto [fu, fv] = ericksen_force(next.d.values, h_next.values);
    const auto [cu, cv] = convection(prev.v.u, prev.v.v);
    Vec us = solve_u((prev.v.u + dt * (fu - cu)).cwiseProduct(ops_.xmask));
    Vec vs = solve_v((prev.v.v + dt * (fv - cv)).cwiseProduct(ops_.ymask));
    if (!us.allFinite() || !vs.allFinite())
      throw NumericalError("step_state: non-finite velocity field at t = " + std::to_string(next.t));
    const Vec phi = project(us, vs);
    next.v = {grid_, std::move(us), std::move(vs)};
    next.p = {grid_, phi / dt};
    return next;
  }

private:
  static void factor(Factor& f, const SpMat& m, const char* what) {
    f.compute(m);
    if (f.info() != Eigen::Success) throw NumericalError(std::string("factorisation failed: ") + what);
  }

  static Vec checked_solve(const Factor& f, const SpMat& m, const Vec& b, double rel_tol, const char* what) {
    Vec x = f.solve(b);
    const double bn = b.cwiseAbs().maxCoeff();
    if (bn == 0.0) return x;
    double res = (m * x - b).cwiseAbs().maxCoeff() / bn;
    if (res > rel_tol) {
      x += f.solve(Vec(b - m * x));
      res = (m * x - b).cwiseAbs().maxCoeff() / bn;
      if (res > rel_tol) throw SolverError(std::string("linear solve failed: ") + what, res);
    }
    return x;
  }

  GridSpec grid_;
  PhysParams params_;
  SolverTolerances tol_;
  Operators ops_;
  SpMat sd_mat_, su_mat_, sv_mat_, poisson_mat_;
  Factor sd_, su_, sv_, poisson_;
};

using ModelPtr = std::shared_ptr<const Model>;

inline ModelPtr make_model(const GridSpec& grid, const PhysParams& params) {
  return std::make_shared<const Model>(grid, params);
}

/// Time-indexed solution.  With stride s > 1 only every s-th level (and the last) is
/// stored; other levels are recomputed from the preceding checkpoint on access.
class StateTrajectory {
public:
  StateTrajectory() = default;
  StateTrajectory(ModelPtr model, BoundaryControl control, int stride)
      : model_(std::move(model)), control_(std::move(control)), stride_(stride) {}

  const GridSpec& grid() const { return model_->grid(); }
  const PhysParams& params() const { return model_->params(); }
  const ModelPtr& model() const { return model_; }
  const BoundaryControl& control() const { return control_; }
  int stride() const { return stride_; }
  int num_levels() const { return control_.num_levels(); }

  StateSnapshot at(int k) const {
    auto it = stored_.upper_bound(k);
    --it;
    if (it->first == k) return it->second;
    StateSnapshot s = it->second;
    for (int n = it->first; n < k; ++n) s = model_->step(s, control_.at(n + 1));
    return s;
  }

  const StateSnapshot& final_snapshot() const { return stored_.rbegin()->second; }

  void store(int k, StateSnapshot s) { stored_.insert_or_assign(k, std::move(s)); }
  std::size_t num_stored() const { return stored_.size(); }

private:
  ModelPtr model_;
  BoundaryControl control_;
  int stride_ = 1;
  std::map<int, StateSnapshot> stored_;
};

inline StateSnapshot step_state(const StateSnapshot& prev, const BoundaryTrace& h_next, const PhysParams& params,
                                const GridSpec& grid) {
  return Model(grid, params).step(prev, h_next);
}

struct SolveOptions {
  int stride = 1;
  double compatibility_tol = 1e-12;
};

inline StateTrajectory solve_state(const ModelPtr& model, const VectorField2D& v0, const DirectorField& d0,
                                   const BoundaryControl& h, const SolveOptions& opts = {}) {
  const GridSpec& g = model->grid();
  require_same_grid(v0.grid, g, "initial velocity");
  require_same_grid(d0.grid, g, "initial director");
  require_same_grid(h.grid, g, "boundary control");
  h.validate();
  NEMATIC_REQUIRE(opts.stride >= 1, ConfigError, "solve_state: stride must be >= 1");
  NEMATIC_REQUIRE(all_finite(v0) && all_finite(d0), ConfigError, "solve_state: non-finite initial data");

  const Mat mismatch = (d0.trace.values - h.at(0).values).cwiseAbs();
  Eigen::Index node = 0, comp = 0;
  const double worst = mismatch.maxCoeff(&node, &comp);
  if (worst > opts.compatibility_tol) {
    throw ConfigError("compatibility violated: |d0 - h(0)| = " + std::to_string(worst) + " at boundary node " +
                      std::to_string(node) + ", component " + std::to_string(comp));
  }
  const double div0 = max_abs_divergence(v0);
  if (div0 > model->tolerances().divergence)
    throw ConfigError("initial velocity is not divergence free: max |div| = " + std::to_string(div0));
  const double wall = std::max(v0.u.cwiseProduct(Vec::Ones(v0.u.size()) - model->ops().xmask).cwiseAbs().maxCoeff(),
                               v0.v.cwiseProduct(Vec::Ones(v0.v.size()) - model->ops().ymask).cwiseAbs().maxCoeff());
  NEMATIC_REQUIRE(wall <= 1e-10, ConfigError, "initial velocity must vanish on wall faces");

  StateSnapshot s;
  s.v = {g, v0.u.cwiseProduct(model->ops().xmask), v0.v.cwiseProduct(model->ops().ymask)};
  s.d = d0;
  s.d.trace = h.at(0);
  s.p = ScalarField::zeros(g);
  s.t = 0.0;

  StateTrajectory traj(model, h, opts.stride);
  const int K = g.num_steps();
  traj.store(0, s);
  for (int n = 0; n < K; ++n) {
    try {
      s = model->step(s, h.at(n + 1));
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at time level " + std::to_string(n + 1), e.residual());
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at time level " + std::to_string(n + 1));
    }
    if ((n + 1) % opts.stride == 0 || n + 1 == K) traj.store(n + 1, s);
  }
  return traj;
}

inline StateTrajectory solve_state(const VectorField2D& v0, const DirectorField& d0, const BoundaryControl& h,
                                   const PhysParams& params, const GridSpec& grid, const SolveOptions& opts = {}) {
  return solve_state(make_model(grid, params), v0, d0, h, opts);
}

/// (v, phi) with v = v* - grad(phi), phi mean zero.
inline std::pair<VectorField2D, ScalarField> pressure_project(const Model& model, const VectorField2D& v_star) {
  NEMATIC_REQUIRE(all_finite(v_star), NumericalError, "pressure_project: non-finite input");
  Vec u = v_star.u, v = v_star.v;
  const Vec phi = model.project(u, v);
  return {{v_star.grid, u, v}, {v_star.grid, phi}};
}

// ---- energy -------------------------------------------------------------------

struct EnergyParts {
  double kinetic = 0;
  double elastic = 0;
  double potential = 0;
  double total() const { return kinetic + elastic + potential; }
};

inline double potential_integral(const DirectorField& d, double epsilon) {
  double s = 0;
  for (int c = 0; c < d.values.rows(); ++c) s += compute_F(d.values.row(c).transpose(), epsilon);
  return s * d.grid.cell_area();
}

/// 1/2 |v|^2 + lambda/2 |grad d|^2 + lambda int F(d).
inline EnergyParts energy_parts(const StateSnapshot& s, const PhysParams& p) {
  EnergyParts e;
  e.kinetic = 0.5 * velocity_l2_sq(s.v);
  e.elastic = 0.5 * p.lambda * director_grad_sq(s.d);
  e.potential = p.lambda * potential_integral(s.d, p.epsilon);
  return e;
}

inline double energy(const StateSnapshot& s, const PhysParams& p) { return energy_parts(s, p).total(); }

}  // namespace nematic
