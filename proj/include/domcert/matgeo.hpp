#pragma once

#include <utility>
#include <vector>

#include "domcert/types.hpp"

namespace domcert::matgeo {

/// Singular value decomposition A = left * diag(sigmas) * right^T with
/// sigmas sorted descending and a deterministic sign convention (first
/// entry of each left column with magnitude above 1e-9 * colmax is positive).
struct SvdTriple {
  Vector sigmas;
  Matrix left;
  Matrix right;
};

/// One-sided Jacobi SVD. Throws NonInvertible if sigma_d < 1e-12 * sigma_1.
SvdTriple svd(const Matrix& A);

/// Same decomposition without the invertibility guard, for long products
/// whose condition number legitimately exceeds the atom guard.
SvdTriple svd_unguarded(const Matrix& A);

/// Singular values only, rank deficiency allowed (used for overlap matrices).
Vector singular_values(const Matrix& A);

/// sigma_1(A)
double operator_norm(const Matrix& A);
/// sigma_d(A), the conorm m(A)
double conorm(const Matrix& A);

/// sigma_{p+1}(A) / sigma_p(A), p in [1, d-1].
double gap_ratio(const Matrix& A, int p);

/// A p-dimensional subspace of R^d stored as a d x p column-orthonormal basis.
class Subspace {
public:
  /// Orthonormalizes the columns of `span`. Throws on rank deficiency.
  explicit Subspace(const Matrix& span);
  static Subspace coordinate(int d, std::vector<int> axes);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }

  Subspace orthocomplement() const;

private:
  Matrix basis_;
};

/// Image subspace A(P), re-orthonormalized.
Subspace apply(const Matrix& A, const Subspace& P);

/// (U_p(A), S_{d-p}(A)). Requires a relative gap of index p:
/// gap_ratio(A, p) < 1 - tol_gap, else throws NoGap.
std::pair<Subspace, Subspace> singular_spaces(const Matrix& A, int p,
                                              double tol_gap = defaults::tol_gap);

/// Hausdorff metric on Gr_p: d(P,Q) = sin(largest canonical angle).
double grassmann_distance(const Subspace& P, const Subspace& Q);

/// Smallest principal angle between two subspaces of any dimensions,
/// acos of the largest singular value of basis(P)^T basis(Q), clamped.
double angle(const Subspace& P, const Subspace& Q);

/// Canonical angles beta_1 >= ... >= beta_p for equal-dimension subspaces.
std::vector<double> canonical_angles(const Subspace& P, const Subspace& Q);

/// Norm of the graph map L_{Q,P}: equals d / sqrt(1 - d^2) with
/// d = grassmann_distance(P, Q). Throws NotGraph when d >= 1 - 1e-10.
double graph_map_norm(const Subspace& P, const Subspace& Q);

/// Lexicographically ordered p-subsets of {0, ..., d-1}.
std::vector<std::vector<int>> wedge_index_sets(int d, int p);

/// Compound matrix of p x p minors over the lexicographic wedge basis.
Matrix exterior_power(const Matrix& A, int p);

/// Wedge of p column vectors (the C(d,p) minors of a d x p matrix).
Vector wedge_columns(const Matrix& M);

/// Unit Plucker vector of P, sign-normalized.
Vector plucker_embed(const Subspace& P);

/// Product of the singular values of A restricted to P, via the wedge norm.
double restricted_jacobian(const Matrix& A, const Subspace& P);

}  // namespace domcert::matgeo
