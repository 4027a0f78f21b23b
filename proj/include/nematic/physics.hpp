/// @file physics.hpp
/// @brief Ginzburg-Landau bulk potential, its gradient and the linearised gradient.
#pragma once

#include <Eigen/Dense>

namespace nematic {

/// F(d) = (|d|^2 - 1)^2 / (4 eps^2)
template <class V>
double compute_F(const Eigen::MatrixBase<V>& d, double epsilon) {
  const double s = d.squaredNorm() - 1.0;
  return s * s / (4.0 * epsilon * epsilon);
}

/// f(d) = grad F = (|d|^2 - 1) d / eps^2
template <class V>
Eigen::VectorXd compute_f(const Eigen::MatrixBase<V>& d, double epsilon) {
  return (d.squaredNorm() - 1.0) / (epsilon * epsilon) * d;
}

/// f'(d*) phi = [2 (d*.phi) d* + |d*|^2 phi - phi] / eps^2.  The Jacobian is symmetric.
template <class V, class W>
Eigen::VectorXd f_prime_apply(const Eigen::MatrixBase<V>& d_star, const Eigen::MatrixBase<W>& phi, double epsilon) {
  return (2.0 * d_star.dot(phi) * d_star + (d_star.squaredNorm() - 1.0) * phi) / (epsilon * epsilon);
}

/// Row-wise f over a (cells x components) matrix.
inline Eigen::MatrixXd compute_f_rows(const Eigen::MatrixXd& d, double epsilon) {
  const Eigen::VectorXd s = (d.rowwise().squaredNorm().array() - 1.0) / (epsilon * epsilon);
  return d.array().colwise() * s.array();
}

/// Row-wise f'(d*) phi.
inline Eigen::MatrixXd f_prime_rows(const Eigen::MatrixXd& d_star, const Eigen::MatrixXd& phi, double epsilon) {
  const Eigen::ArrayXd dot = (d_star.array() * phi.array()).rowwise().sum();
  const Eigen::ArrayXd s = d_star.rowwise().squaredNorm().array() - 1.0;
  Eigen::MatrixXd out = 2.0 * (d_star.array().colwise() * dot).matrix() + (phi.array().colwise() * s).matrix();
  return out / (epsilon * epsilon);
}

}  // namespace nematic
