#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "domcert/cocycle.hpp"
#include "domcert/group.hpp"
#include "domcert/matgeo.hpp"

namespace domcert::reprcheck {

using cocycle::Verdict;

/// A representation of a supported presentation into GL(d, R), stored as one
/// matrix per generator. Formal inverse pairs must multiply to +-identity
/// (sign quotient: the artifact works projectively), and every relator must
/// evaluate to +-identity; violations reject construction.
class Representation {
public:
  Representation(group::GroupPresentation pres, std::vector<Matrix> images,
                 bool unimodular);

  /// Images map keyed by generator name; missing inverses are filled with
  /// matrix inverses.
  static Representation from_images(group::GroupPresentation pres,
                                    const std::map<std::string, Matrix>& images,
                                    bool unimodular);

  const group::GroupPresentation& presentation() const { return pres_; }
  int dim() const { return d_; }
  bool unimodular() const { return unimodular_; }
  const Matrix& image(int generator) const { return images_[generator]; }

private:
  group::GroupPresentation pres_;
  std::vector<Matrix> images_;
  int d_;
  bool unimodular_;
};

/// Product of generator images in word order.
Matrix evaluate(const Representation& rep, const group::Word& w);

struct DominationReport {
  int p = 0;
  int radius = 0;
  std::vector<double> per_length_min_gap;  // index n: min over |g| = n
  double lambda_hat = 0.0;
  double C_hat = 1.0;
  double min_margin = 0.0;
  group::Word worst_element;
  Verdict verdict = Verdict::Inconclusive;
  double dual_symmetry_residual = 0.0;  // p vs (d-p) per-length minima
  int burn_in = 3;
  // (length, min_gap, mean_gap) rows for plotting
  std::vector<std::array<double, 3>> gap_rows;
};

struct ReportOptions {
  int burn_in = 3;
  double tol_ratio_one = 1e-9;
  int ratio_one_horizon = 4;
  std::size_t ball_cap = defaults::ball_cap;
  int workers = 1;  // ball evaluation is data parallel; merges are ordered
};

DominationReport domination_report(const Representation& rep, int p, int R,
                                   const ReportOptions& opts = {});

/// Eventually periodic geodesic ray u v^inf; every tested prefix must be
/// geodesic.
struct BoundaryRay {
  group::Word u;
  group::Word v;
};

/// First n letters of u v^inf.
group::Word ray_prefix(const BoundaryRay& ray, int n);

/// Validates that |u v^k| = |u| + k |v| for k <= k_test.
void validate_ray(const group::GroupPresentation& pres, const BoundaryRay& ray,
                  int k_test = 6);

struct LimitPoint {
  matgeo::Subspace space;
  double residual;
  int depth_used;
};

/// xi(x) = lim U_p(rho(gamma_n)) along the ray prefixes.
LimitPoint limit_map(const Representation& rep, int p, const BoundaryRay& ray,
                     int depth, double residual_target = 1e-8);

/// Dominant invariant p-subspace of M (top p eigenvalue moduli), via the
/// QR eigensolver; independent of the singular value path.
matgeo::Subspace dominant_invariant_subspace(const Matrix& M, int p);

/// {U_p(rho(gamma)) : |gamma| = R}, deduplicated at the given resolution.
std::vector<matgeo::Subspace> limit_set_sample(const Representation& rep, int p,
                                               int R, double resolution = 1e-6);

struct EigenGapRow {
  group::Word word;
  double translation_length;
  double chi_ratio;  // chi_{p+1} / chi_p
  bool elliptic;     // ratio within tolerance of 1
};

struct EigenGapReport {
  int p;
  double lambda_prime;
  double C_prime;
  std::vector<EigenGapRow> rows;
  // A positive fit does not certify domination; surfaced in serialized form.
  std::string caveat =
      "eigenvalue-gap fit is exploratory: a positive rate does not certify "
      "domination";
  bool representatives_exact;  // cyclic dedup exact for this family
};

EigenGapReport eigenvalue_gap_report(const Representation& rep, int p, int R,
                                     int n_pow,
                                     std::size_t cap = defaults::ball_cap);

}  // namespace domcert::reprcheck
