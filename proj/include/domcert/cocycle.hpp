#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "domcert/matgeo.hpp"
#include "domcert/types.hpp"

namespace domcert::cocycle {

/// Finite window of an integer-indexed sequence of invertible matrices.
/// Index i in [origin, origin + size) maps to items[i - origin].
struct MatrixSequence {
  int origin = 0;
  std::vector<Matrix> items;

  int size() const { return static_cast<int>(items.size()); }
  int first() const { return origin; }
  int last() const { return origin + size() - 1; }
  const Matrix& at(int index) const { return items.at(index - origin); }

  /// K = max over items of max(|A|, |A^-1|).
  double norm_bound() const;
};

enum class Verdict { Dominated, Inconclusive, NotDominated };

std::string to_string(Verdict v);

struct DominationFit {
  int p = 0;
  double mu_hat = 0.0;     // fitted exponential rate per step
  double c_hat = 1.0;      // prefactor, inflated to cover every pair
  double min_margin = 0.0; // min over pairs of (-log ratio - OLS line)
  Verdict verdict = Verdict::Inconclusive;
  // (n, m, length, -log gap ratio) rows for every scanned subproduct.
  std::vector<std::array<double, 4>> pair_table;
};

struct FitOptions {
  double tol_ratio_one = 1e-9;  // |log ratio| below this counts as ratio 1
  int ratio_one_horizon = 8;    // window length above which ratio 1 refutes
  double tol_gap = defaults::tol_gap;
};

/// Least-squares fit of the subproduct gap decay followed by a verification
/// pass; scans all O(len^2) subproducts with prefix reuse. Pairs whose small
/// singular value sits at the floating-point noise floor only lower-bound the
/// true gap and are excluded from the fit and the margin check; the certified
/// inequality is verified on all measurable pairs.
DominationFit fit_domination(const MatrixSequence& seq, int p,
                             const FitOptions& opts = {});

struct SplittingEstimate {
  matgeo::Subspace ecu;
  matgeo::Subspace ecs;
  double angle = 0.0;
  double convergence_residual = 0.0;
  int depth_used = 0;
};

struct BgOptions {
  int ell_min = defaults::ell_min;
  int max_depth = defaults::max_bg_depth;
  double residual_target = defaults::residual_target;
};

/// Limit spaces at `center`: ecu from reversed left products, ecs from right
/// products. Requires a Dominated fit on the window.
SplittingEstimate bg_limits(const MatrixSequence& seq, int p, int center,
                            const BgOptions& opts = {});

/// d( A_center * ecu(center), ecu(center + 1) ), the shift-equivariance
/// residual of the estimated splitting.
double bg_shift_equivariance_residual(const MatrixSequence& seq, int p, int center,
                                      const BgOptions& opts = {});

/// Min over triples n < k < m with min(k-n, m-k) > ell of the angle between
/// U_p of the incoming product and S_{d-p} of the outgoing product.
double transversality_scan(const MatrixSequence& seq, int p, int ell);

/// Extends a sequence on an N-window to a Z-window by prepending copies of
/// the block map fixing Q = lim S_{d-p} and its orthocomplement.
MatrixSequence extend_one_sided(const MatrixSequence& seq, int p,
                                int extension_len = 0);

}  // namespace domcert::cocycle
