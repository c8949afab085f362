#pragma once

#include <vector>

#include "domcert/matgeo.hpp"
#include "domcert/types.hpp"

namespace domcert::morse {

/// Vector of log singular values sorted descending; trace-free under the
/// determinant-one convention used throughout this module.
using CartanVector = Vector;

/// a(g) = (log sigma_1, ..., log sigma_d) after normalizing |det| to 1.
/// Components are evaluated two-sided (from g and from g^-1), so each one is
/// measured on the side where it is the dominant scale.
CartanVector cartan_projection(const Matrix& g);

/// Opposition involution a -> (-a_d, ..., -a_1).
CartanVector opposition(const CartanVector& a);

/// Symmetric-space distance d(o, g o) = |a(g)|_2.
double symmetric_space_distance(const Matrix& g);

/// Vector-valued distance a(h1^-1 h2) between h1 o and h2 o. Accuracy is
/// bounded by the conditioning of h1; for long orbits use an Orbit.
CartanVector vector_distance(const Matrix& h1, const Matrix& h2);

/// Simple root alpha_p(a) = a_p - a_{p+1}, p in [1, d-1].
double simple_root(const CartanVector& a, int p);

/// Orbit x_n = h_n o stored through its increments g_n = h_n^-1 h_{n+1}.
/// Pairwise vector distances are rebuilt from renormalized increment
/// products, which stays accurate at any orbit length; endpoint matrices of
/// a long quasi-geodesic exceed double range/conditioning.
class Orbit {
public:
  explicit Orbit(std::vector<Matrix> increments);
  /// Increments recovered by linear solves; sound while the points are
  /// within the matrix-atom conditioning guard.
  static Orbit from_points(const std::vector<Matrix>& points);

  int num_points() const { return static_cast<int>(increments_.size()) + 1; }
  int dim() const { return static_cast<int>(increments_[0].rows()); }
  const std::vector<Matrix>& increments() const { return increments_; }

  /// a(x_n, x_m) = a(h_n^-1 h_m) for 0 <= n < m < num_points().
  CartanVector segment(int n, int m) const;

private:
  std::vector<Matrix> increments_;
};

struct ComparabilityInterval {
  double lo;
  double hi;
};

/// Ratio interval of d(o, g o) / phi(a(g)) over the sample, for a functional
/// phi (coefficients against the a-coordinates) positive on the chamber.
ComparabilityInterval comparability_check(const Vector& phi_coeffs,
                                          const std::vector<Matrix>& sample);

/// Nested singular spaces U_p(g) for p in theta (ascending).
struct PartialFlag {
  std::vector<int> theta;
  std::vector<matgeo::Subspace> spaces;
};

PartialFlag flag_of(const Matrix& g, const std::vector<int>& theta,
                    double tol_gap = defaults::tol_gap);

/// Flag of g^-1 of type theta, computed from the right frame of g (no
/// inversion): U_q(g^-1) spans the right singular vectors of the smallest q
/// singular values.
PartialFlag flag_of_inverse(const Matrix& g, const std::vector<int>& theta,
                            double tol_gap = defaults::tol_gap);

/// Type of the opposite flag: {d - p : p in theta}, ascending.
std::vector<int> opposite_type(const std::vector<int>& theta, int d);

struct DistanceBracket {
  double lower;  // m / sqrt(2), with m = -log sin of the smallest flag angle
  double upper;  // d(o, g o) for the orthogonal-projection construction
};

/// Two-sided bracket on the distance from the basepoint to the parallel set
/// of a transverse flag pair (E of type theta, F of type iota theta).
DistanceBracket parallel_set_distance_bounds(const PartialFlag& E,
                                             const PartialFlag& F);

struct QuasiGeodesicConstants {
  double mu;
  double c;
};

/// Smallest constants (c minimized first, then mu) satisfying
/// |n-m|/mu - c <= d(x_n, x_m) <= mu |n-m| + c for all pairs.
QuasiGeodesicConstants quasigeodesic_constants(const Orbit& orbit);
QuasiGeodesicConstants quasigeodesic_constants(const std::vector<Matrix>& points);

/// min over pairs n < m and p in theta of alpha_p(a(x_n,x_m)) / |a(x_n,x_m)|.
double regularity_margin(const Orbit& orbit, const std::vector<int>& theta);
double regularity_margin(const std::vector<Matrix>& points,
                         const std::vector<int>& theta);

struct MorseAuditRow {
  int k;
  double lower;             // bracket on d(x_k, parallel set)
  double upper;
  double sidedness_margin;  // regularity of a(x_min, x_k)
};

struct MorseAuditReport {
  QuasiGeodesicConstants constants;
  double regularity;
  double max_lower = 0.0;
  double max_upper = 0.0;
  std::vector<MorseAuditRow> rows;
};

struct MorseAuditOptions {
  double mu_cap = 1e3;
  double c_cap = 1e3;
};

/// Per-point bracket on the distance to the parallel set of the endpoint
/// flags, plus Weyl-cone sidedness margins; flags are translated to each
/// basepoint by h_k^-1 (realized through increment products).
MorseAuditReport morse_audit(const Orbit& orbit, const std::vector<int>& theta,
                             const MorseAuditOptions& opts = {});
MorseAuditReport morse_audit(const std::vector<Matrix>& points,
                             const std::vector<int>& theta,
                             const MorseAuditOptions& opts = {});

}  // namespace domcert::morse
