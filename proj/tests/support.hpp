#pragma once

// Shared deterministic random generators for the test suites.

#include <random>

#include "domcert/matgeo.hpp"

namespace testsupport {

using domcert::Matrix;
using domcert::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = g(rng);
  return M;
}

inline Matrix random_orthogonal(std::mt19937_64& rng, int d) {
  Matrix M = random_matrix(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(M);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

// Invertible matrix with singular values log-uniform in [smin, smax].
inline Matrix random_invertible(std::mt19937_64& rng, int d, double smin = 0.2,
                                double smax = 5.0) {
  std::uniform_real_distribution<double> u(std::log(smin), std::log(smax));
  Vector s(d);
  for (int i = 0; i < d; ++i) s[i] = std::exp(u(rng));
  return random_orthogonal(rng, d) * s.asDiagonal() * random_orthogonal(rng, d);
}

inline domcert::matgeo::Subspace random_subspace(std::mt19937_64& rng, int d, int p) {
  return domcert::matgeo::Subspace(random_matrix(rng, d, p));
}

inline Matrix rotation2(double theta) {
  Matrix R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

// Random rotation in SO(d): product of Givens rotations with angles
// uniform in [-max_angle, max_angle] over all coordinate planes.
inline Matrix small_rotation(std::mt19937_64& rng, int d, double max_angle) {
  std::uniform_real_distribution<double> u(-max_angle, max_angle);
  Matrix R = Matrix::Identity(d, d);
  for (int i = 0; i < d - 1; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double t = u(rng);
      Eigen::JacobiRotation<double> rot(std::cos(t), std::sin(t));
      R.applyOnTheRight(i, j, rot);
    }
  }
  return R;
}

}  // namespace testsupport
