#include "domcert/matgeo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace domcert::matgeo {

namespace {

double clamp_cos(double c) { return std::min(1.0, std::max(-1.0, c)); }

// One-sided Jacobi: rotate column pairs of W until all pairs are orthogonal.
// Returns W with orthogonal columns and accumulates the rotations into V,
// so that A = W * V^T on exit (W = A * V).
void jacobi_orthogonalize(Matrix& W, Matrix& V) {
  const int n = static_cast<int>(W.cols());
  const double tol = 1e-28;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool changed = false;
    for (int i = 0; i < n - 1; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double alpha = W.col(i).squaredNorm();
        const double gamma = W.col(j).squaredNorm();
        const double beta = W.col(i).dot(W.col(j));
        if (beta * beta <= tol * alpha * gamma) continue;
        changed = true;
        const double tau = (gamma - alpha) / (2.0 * beta);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Eigen::JacobiRotation<double> rot(c, s);
        W.applyOnTheRight(i, j, rot);
        V.applyOnTheRight(i, j, rot);
      }
    }
    if (!changed) break;
  }
}

struct RawSvd {
  Vector sigmas;
  Matrix left;
  Matrix right;
};

RawSvd jacobi_svd(const Matrix& A) {
  // pre-scale so the Gram values inside the sweeps cannot overflow
  double back = 1.0;
  Matrix W = A;
  const double scale = A.cwiseAbs().maxCoeff();
  if (scale > 1e50 || (scale > 0 && scale < 1e-50)) {
    W /= scale;
    back = scale;
  }
  Matrix V = Matrix::Identity(A.cols(), A.cols());
  jacobi_orthogonalize(W, V);

  const int n = static_cast<int>(W.cols());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Vector norms(n);
  for (int i = 0; i < n; ++i) norms[i] = W.col(i).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return norms[a] > norms[b]; });

  RawSvd out;
  out.sigmas.resize(n);
  out.left.resize(A.rows(), n);
  out.right.resize(A.cols(), n);
  for (int k = 0; k < n; ++k) {
    const int i = order[k];
    out.sigmas[k] = norms[i] * back;
    out.right.col(k) = V.col(i);
    if (norms[i] > 0) {
      out.left.col(k) = W.col(i) / norms[i];
    } else {
      out.left.col(k).setZero();
    }
  }
  return out;
}

void apply_sign_convention(Matrix& left, Matrix& right) {
  for (int k = 0; k < left.cols(); ++k) {
    const double ref = 1e-9 * left.col(k).cwiseAbs().maxCoeff();
    for (int i = 0; i < left.rows(); ++i) {
      const double x = left(i, k);
      if (std::abs(x) > ref) {
        if (x < 0) {
          left.col(k) *= -1.0;
          right.col(k) *= -1.0;
        }
        break;
      }
    }
  }
}

}  // namespace

SvdTriple svd(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1) fail("BadInput", "svd expects a square matrix");
  RawSvd raw = jacobi_svd(A);
  const int d = static_cast<int>(A.rows());
  if (raw.sigmas[d - 1] < 1e-12 * raw.sigmas[0]) {
    fail("NonInvertible", "singular value ratio below 1e-12");
  }
  apply_sign_convention(raw.left, raw.right);
  return {raw.sigmas, raw.left, raw.right};
}

SvdTriple svd_unguarded(const Matrix& A) {
  if (A.rows() != A.cols() || A.rows() < 1) fail("BadInput", "svd expects a square matrix");
  RawSvd raw = jacobi_svd(A);
  apply_sign_convention(raw.left, raw.right);
  return {raw.sigmas, raw.left, raw.right};
}

Vector singular_values(const Matrix& A) { return jacobi_svd(A).sigmas; }

double operator_norm(const Matrix& A) { return singular_values(A)[0]; }

double conorm(const Matrix& A) {
  Vector s = singular_values(A);
  return s[s.size() - 1];
}

double gap_ratio(const Matrix& A, int p) {
  const int d = static_cast<int>(A.rows());
  if (p < 1 || p > d - 1) fail("BadInput", "gap index out of range");
  SvdTriple t = svd(A);
  return t.sigmas[p] / t.sigmas[p - 1];
}

Subspace::Subspace(const Matrix& span) {
  if (span.cols() < 1 || span.cols() > span.rows()) {
    fail("BadInput", "subspace dimension out of range");
  }
  Eigen::HouseholderQR<Matrix> qr(span);
  Matrix Q = qr.householderQ() * Matrix::Identity(span.rows(), span.cols());
  // Rank guard: the projection of span onto Q must have full diagonal.
  Matrix R = Q.transpose() * span;
  for (int i = 0; i < R.cols(); ++i) {
    if (std::abs(R(i, i)) < 1e-12 * span.cwiseAbs().maxCoeff()) {
      fail("BadInput", "rank-deficient spanning set for subspace");
    }
  }
  basis_ = Q;
}

Subspace Subspace::coordinate(int d, std::vector<int> axes) {
  Matrix B = Matrix::Zero(d, static_cast<int>(axes.size()));
  for (int j = 0; j < B.cols(); ++j) B(axes[j], j) = 1.0;
  return Subspace(B);
}

Subspace Subspace::orthocomplement() const {
  const int d = ambient_dim();
  const int p = dim();
  Eigen::HouseholderQR<Matrix> qr(basis_);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  return Subspace(Q.rightCols(d - p));
}

Subspace apply(const Matrix& A, const Subspace& P) { return Subspace(A * P.basis()); }

std::pair<Subspace, Subspace> singular_spaces(const Matrix& A, int p, double tol_gap) {
  const int d = static_cast<int>(A.rows());
  if (p < 1 || p > d - 1) fail("BadInput", "gap index out of range");
  // No invertibility guard here: long dominated products exceed condition
  // 1e12 by design, while the spaces at a gapped index stay well-defined.
  RawSvd t = jacobi_svd(A);
  if (t.sigmas[p] / t.sigmas[p - 1] >= 1.0 - tol_gap) {
    fail("NoGap", "no singular value gap of the requested index");
  }
  Subspace U(t.left.leftCols(p));
  Subspace S(t.right.rightCols(d - p));
  return {U, S};
}

double grassmann_distance(const Subspace& P, const Subspace& Q) {
  if (P.dim() != Q.dim() || P.ambient_dim() != Q.ambient_dim()) {
    fail("DimensionMismatch", "grassmann_distance needs equal dimensions");
  }
  if (P.dim() == P.ambient_dim()) return 0.0;
  // sin of the largest canonical angle, computed as the largest singular
  // value of B_{P^perp}^T B_Q; this form stays accurate near 0.
  Vector s = singular_values(P.orthocomplement().basis().transpose() * Q.basis());
  return clamp_cos(s[0]);
}

double angle(const Subspace& P, const Subspace& Q) {
  if (P.ambient_dim() != Q.ambient_dim()) {
    fail("DimensionMismatch", "angle needs a common ambient space");
  }
  Vector s = singular_values(P.basis().transpose() * Q.basis());
  return std::acos(clamp_cos(s[0]));
}

std::vector<double> canonical_angles(const Subspace& P, const Subspace& Q) {
  if (P.dim() != Q.dim() || P.ambient_dim() != Q.ambient_dim()) {
    fail("DimensionMismatch", "canonical_angles needs equal dimensions");
  }
  Vector s = singular_values(P.basis().transpose() * Q.basis());
  std::vector<double> betas(s.size());
  for (int i = 0; i < s.size(); ++i) betas[i] = std::acos(clamp_cos(s[i]));
  std::sort(betas.begin(), betas.end(), std::greater<>());
  return betas;
}

double graph_map_norm(const Subspace& P, const Subspace& Q) {
  const double d = grassmann_distance(P, Q);
  if (d >= 1.0 - 1e-10) fail("NotGraph", "subspaces too far apart for a graph map");
  return d / std::sqrt(1.0 - d * d);
}

std::vector<std::vector<int>> wedge_index_sets(int d, int p) {
  std::vector<std::vector<int>> sets;
  std::vector<int> cur(p);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    sets.push_back(cur);
    int i = p - 1;
    while (i >= 0 && cur[i] == d - p + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < p; ++j) cur[j] = cur[j - 1] + 1;
  }
  return sets;
}

namespace {
double minor_det(const Matrix& A, const std::vector<int>& rows,
                 const std::vector<int >& cols) {
  const int p = static_cast<int>(rows.size());
  Matrix M(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) M(i, j) = A(rows[i], cols[j]);
  if (p == 1) return M(0, 0);
  if (p == 2) return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  return M.determinant();
}
}  // namespace

Matrix exterior_power(const Matrix& A, int p) {
  const int d = static_cast<int>(A.rows());
  if (p < 1 || p > d - 1) fail("BadInput", "exterior power degree out of range");
  auto sets = wedge_index_sets(d, p);
  const int n = static_cast<int>(sets.size());
  Matrix E(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) E(i, j) = minor_det(A, sets[i], sets[j]);
  return E;
}

Vector wedge_columns(const Matrix& M) {
  const int d = static_cast<int>(M.rows());
  const int p = static_cast<int>(M.cols());
  auto sets = wedge_index_sets(d, p);
  Vector w(static_cast<int>(sets.size()));
  std::vector<int> cols(p);
  std::iota(cols.begin(), cols.end(), 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    w[static_cast<int>(i)] = minor_det(M, sets[i], cols);
  }
  return w;
}

Vector plucker_embed(const Subspace& P) {
  Vector w = wedge_columns(P.basis());
  w.normalize();
  const double ref = 1e-9 * w.cwiseAbs().maxCoeff();
  for (int i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) > ref) {
      if (w[i] < 0) w = -w;
      break;
    }
  }
  return w;
}

double restricted_jacobian(const Matrix& A, const Subspace& P) {
  return wedge_columns(A * P.basis()).norm();
}

}  // namespace domcert::matgeo
