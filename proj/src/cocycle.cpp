#include "domcert/cocycle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace domcert::cocycle {

using matgeo::Subspace;

namespace {

// Running product with scale renormalization; only directions matter for
// gap ratios and singular spaces, so the accumulated log scale is dropped.
struct ScaledProduct {
  Matrix M;
  double log_scale = 0.0;

  void left_multiply(const Matrix& A) {
    M = (A * M).eval();
    renorm();
  }
  void right_multiply(const Matrix& A) {
    M = (M * A).eval();
    renorm();
  }
  void renorm() {
    const double s = M.cwiseAbs().maxCoeff();
    if (s > 1e50 || s < 1e-50) {
      M /= s;
      log_scale += std::log(s);
    }
  }
};

// -log of the gap ratio. A product whose sigma_{p+1} falls to the floating
// point noise floor (relative ~2e-16) only yields a lower bound on the true
// value; such pairs are flagged so the fit can skip them.
struct GapSample {
  double y;
  bool saturated;
};

GapSample neg_log_gap(const Matrix& M, int p) {
  Vector s = matgeo::singular_values(M);
  // The tiny singular values of an explicitly formed long product sit on a
  // noise floor of roughly (accumulated multiplications) * eps relative;
  // 3e-12 covers the window lengths the fit scans with headroom.
  const double noise = 2.3e-16 * s[0];
  const bool saturated = s[p] < 3e-12 * s[0];
  const double sp1 = std::max(s[p], noise);
  return {std::log(s[p - 1]) - std::log(sp1), saturated};
}

}  // namespace

double MatrixSequence::norm_bound() const {
  double K = 1.0;
  for (const auto& A : items) {
    K = std::max(K, matgeo::operator_norm(A));
    K = std::max(K, matgeo::operator_norm(A.inverse()));
  }
  return K;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Dominated: return "Dominated";
    case Verdict::Inconclusive: return "Inconclusive";
    case Verdict::NotDominated: return "NotDominated";
  }
  return "?";
}

DominationFit fit_domination(const MatrixSequence& seq, int p, const FitOptions& opts) {
  const int len = seq.size();
  if (len < 2) fail("TooShort", "need at least 2 matrices");
  const int d = static_cast<int>(seq.items[0].rows());
  if (p < 1 || p > d - 1) fail("BadInput", "index p out of range");

  DominationFit fit;
  fit.p = p;

  bool ratio_one_long_window = false;
  std::vector<bool> saturated;
  for (int n = 0; n < len; ++n) {
    ScaledProduct prod{seq.items[n], 0.0};
    for (int m = n; m < len; ++m) {
      if (m > n) prod.left_multiply(seq.items[m]);
      const GapSample g = neg_log_gap(prod.M, p);
      const double L = m - n + 1;
      fit.pair_table.push_back(
          {double(n + seq.origin), double(m + seq.origin), L, g.y});
      saturated.push_back(g.saturated);
      if (L > opts.ratio_one_horizon && g.y <= opts.tol_ratio_one) {
        ratio_one_long_window = true;
      }
    }
  }

  // OLS of -log ratio against window length, over unsaturated pairs.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, N = 0;
  for (std::size_t i = 0; i < fit.pair_table.size(); ++i) {
    if (saturated[i]) continue;
    const auto& row = fit.pair_table[i];
    sx += row[2];
    sy += row[3];
    sxx += row[2] * row[2];
    sxy += row[2] * row[3];
    N += 1;
  }
  if (N < 2) {
    // everything saturated: domination beyond measurable precision
    fit.mu_hat = 0.0;
    fit.c_hat = 1.0;
    fit.min_margin = 0.0;
    fit.verdict = Verdict::Inconclusive;
    return fit;
  }
  const double denom = N * sxx - sx * sx;
  const double slope = denom > 0 ? (N * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / N;
  fit.mu_hat = std::max(0.0, slope);

  // Verification pass: margin against the OLS line, then inflate the
  // prefactor minimally so every pair satisfies ratio <= c e^{-mu L}.
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fit.pair_table.size(); ++i) {
    if (saturated[i]) continue;
    const auto& row = fit.pair_table[i];
    min_margin = std::min(min_margin, row[3] - (intercept + fit.mu_hat * row[2]));
  }
  fit.min_margin = min_margin;
  const double log_c = -intercept + std::max(0.0, -min_margin);
  fit.c_hat = std::exp(log_c);

  if (ratio_one_long_window) {
    fit.verdict = Verdict::NotDominated;
  } else if (fit.mu_hat > 0 && len >= 5.0 / fit.mu_hat) {
    fit.verdict = Verdict::Dominated;
  } else {
    fit.verdict = Verdict::Inconclusive;
  }
  return fit;
}

SplittingEstimate bg_limits(const MatrixSequence& seq, int p, int center,
                            const BgOptions& opts) {
  const int L = std::min(center - seq.first(), seq.last() + 1 - center);
  if (L < opts.ell_min) fail("TooShort", "window too short around center");
  DominationFit fit = fit_domination(seq, p);
  if (fit.verdict != Verdict::Dominated) {
    fail("NotDominatedInput", "fit verdict is " + to_string(fit.verdict));
  }

  const int depth = std::min(L, opts.max_depth);
  std::optional<Subspace> ecu, ecs;
  double res_u = 1.0, res_s = 1.0;
  int used = 0;

  ScaledProduct left{seq.at(center - 1), 0.0};  // A_{c-1} A_{c-2} ... A_{c-n}
  ScaledProduct right{seq.at(center), 0.0};     // A_{c+n-1} ... A_c
  for (int n = 1; n <= depth; ++n) {
    if (n > 1) {
      left.right_multiply(seq.at(center - n));
      right.left_multiply(seq.at(center + n - 1));
    }
    try {
      Subspace U = matgeo::singular_spaces(left.M, p).first;
      Subspace S = matgeo::singular_spaces(right.M, p).second;
      if (ecu) res_u = matgeo::grassmann_distance(*ecu, U);
      if (ecs) res_s = matgeo::grassmann_distance(*ecs, S);
      ecu = U;
      ecs = S;
    } catch (const Error&) {
      continue;  // no gap yet at this depth
    }
    used = n;
    if (n >= opts.ell_min && std::max(res_u, res_s) < opts.residual_target) break;
  }
  if (!ecu || !ecs) fail("DidNotConverge", "no gap appeared within the window");
  const double residual = std::max(res_u, res_s);
  if (residual > opts.residual_target) {
    fail("DidNotConverge", "residual " + std::to_string(residual) + " at max depth");
  }
  return {*ecu, *ecs, matgeo::angle(*ecu, *ecs), residual, used};
}

double bg_shift_equivariance_residual(const MatrixSequence& seq, int p, int center,
                                      const BgOptions& opts) {
  SplittingEstimate here = bg_limits(seq, p, center, opts);
  SplittingEstimate next = bg_limits(seq, p, center + 1, opts);
  return matgeo::grassmann_distance(matgeo::apply(seq.at(center), here.ecu), next.ecu);
}

double transversality_scan(const MatrixSequence& seq, int p, int ell) {
  if (ell < 1) fail("BadInput", "ell must be >= 1");
  const int len = seq.size();
  if (len < 2 * ell + 3) fail("TooShort", "window shorter than the scan needs");
  DominationFit fit = fit_domination(seq, p);
  if (fit.verdict != Verdict::Dominated) {
    fail("NotDominatedInput", "fit verdict is " + to_string(fit.verdict));
  }

  // U[k][n] = U_p(A_{k-1} ... A_n), S[k][m] = S_{d-p}(A_{m-1} ... A_k),
  // window-relative indices; entries missing where no gap appears.
  const int n_idx = len + 1;
  std::vector<std::vector<std::optional<Subspace>>> U(n_idx), S(n_idx);
  for (int k = 0; k <= len; ++k) {
    U[k].resize(n_idx);
    S[k].resize(n_idx);
  }
  for (int k = 1; k <= len; ++k) {
    ScaledProduct prod{seq.items[k - 1], 0.0};
    for (int n = k - 1; n >= 0; --n) {
      if (n < k - 1) prod.right_multiply(seq.items[n]);
      if (k - n > ell) {
        try {
          U[k][n] = matgeo::singular_spaces(prod.M, p).first;
        } catch (const Error&) {
        }
      }
    }
  }
  for (int k = 0; k < len; ++k) {
    ScaledProduct prod{seq.items[k], 0.0};
    for (int m = k + 1; m <= len; ++m) {
      if (m > k + 1) prod.left_multiply(seq.items[m - 1]);
      if (m - k > ell) {
        try {
          S[k][m] = matgeo::singular_spaces(prod.M, p).second;
        } catch (const Error&) {
        }
      }
    }
  }

  double floor = std::numeric_limits<double>::infinity();
  for (int k = 1; k < len; ++k) {
    for (int n = 0; n < k; ++n) {
      if (k - n <= ell || !U[k][n]) continue;
      for (int m = k + 1; m <= len; ++m) {
        if (m - k <= ell || !S[k][m]) continue;
        floor = std::min(floor, matgeo::angle(*U[k][n], *S[k][m]));
      }
    }
  }
  if (!std::isfinite(floor)) fail("TooShort", "no admissible triple in the window");
  return floor;
}

MatrixSequence extend_one_sided(const MatrixSequence& seq, int p, int extension_len) {
  DominationFit fit = fit_domination(seq, p);
  if (fit.verdict != Verdict::Dominated) {
    fail("NotDominatedInput", "fit verdict is " + to_string(fit.verdict));
  }
  const int d = static_cast<int>(seq.items[0].rows());
  const int len = seq.size();

  // Q = lim S_{d-p}(A_{n-1} ... A_0), approximated at the full window.
  ScaledProduct prod{seq.items[0], 0.0};
  for (int i = 1; i < len; ++i) prod.left_multiply(seq.items[i]);
  Subspace Q = matgeo::singular_spaces(prod.M, p).second;
  Subspace Qp = Q.orthocomplement();

  // Block map with axes Q^perp (expanded by s) and Q (contracted by 1/s),
  // so U_p(B) = Q^perp, S_{d-p}(B) = Q, |B^{+-1}| = s <= K and gap s^-2.
  const double K = seq.norm_bound();
  const double s = std::min(std::max(1.5 * std::exp(fit.mu_hat / 2.0), 1.02), K);
  Matrix frame(d, d);
  frame.leftCols(p) = Qp.basis();
  frame.rightCols(d - p) = Q.basis();
  Vector diag(d);
  diag.head(p).setConstant(s);
  diag.tail(d - p).setConstant(1.0 / s);
  Matrix B = frame * diag.asDiagonal() * frame.transpose();

  MatrixSequence out;
  const int ext = extension_len > 0 ? extension_len : len;
  out.origin = seq.origin - ext;
  out.items.reserve(ext + len);
  for (int i = 0; i < ext; ++i) out.items.push_back(B);
  for (const auto& A : seq.items) out.items.push_back(A);
  return out;
}

}  // namespace domcert::cocycle
