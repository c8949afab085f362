#include "domcert/morse.hpp"

#include <algorithm>
#include <cmath>

namespace domcert::morse {

using matgeo::Subspace;

namespace {

Matrix unimodularize(const Matrix& g) {
  const int d = static_cast<int>(g.rows());
  const double det = std::abs(g.determinant());
  if (det == 0.0) fail("NonInvertible", "singular input");
  return g / std::pow(det, 1.0 / d);
}

CartanVector two_sided_cartan(const Matrix& fwd, const Matrix& bwd,
                              double logdet_fwd, double logdet_bwd);

// Running renormalized product of increments and of their inverses; the
// Cartan data of the product is read off both sides. The log determinant is
// tracked analytically: computing det of a long product from its entries
// cancels catastrophically.
struct SegmentProduct {
  Matrix fwd;         // g_{m-1} ... g_n, rescaled
  Matrix bwd;         // g_n^-1 ... g_{m-1}^-1, rescaled
  double logdet_fwd;  // log |det| of the rescaled fwd
  double logdet_bwd;

  static SegmentProduct seed(const Matrix& g) {
    const double ld = std::log(std::abs(g.determinant()));
    return {g, g.inverse(), ld, -ld};
  }
  void extend(const Matrix& g) {
    const double ld = std::log(std::abs(g.determinant()));
    fwd = (g * fwd).eval();
    bwd = (bwd * g.inverse()).eval();
    logdet_fwd += ld;
    logdet_bwd -= ld;
    renorm(fwd, logdet_fwd);
    renorm(bwd, logdet_bwd);
  }
  static void renorm(Matrix& M, double& logdet) {
    const double s = M.cwiseAbs().maxCoeff();
    if (s > 1e50 || s < 1e-50) {
      M /= s;
      logdet -= M.rows() * std::log(s);
    }
  }
  CartanVector cartan() const {
    return two_sided_cartan(fwd, bwd, logdet_fwd, logdet_bwd);
  }
};

// Component i is read from whichever side carries it as a relatively large
// singular value: sigma_i of the forward product or sigma_{d+1-i} of the
// inverse-side product. One side always measures it well; the other may sit
// on the roundoff floor (or underflow to zero) for strongly proximal
// products.
CartanVector two_sided_cartan(const Matrix& fwd, const Matrix& bwd,
                              double logdet_fwd, double logdet_bwd) {
  Vector s = matgeo::singular_values(fwd);
  Vector si = matgeo::singular_values(bwd);
  const int d = static_cast<int>(s.size());
  CartanVector a(d);
  for (int i = 0; i < d; ++i) {
    const double rel_f = s[i] / s[0];
    const double rel_b = si[d - 1 - i] / si[0];
    if (rel_f >= rel_b) {
      a[i] = std::log(s[i]) - logdet_fwd / d;
    } else {
      a[i] = -(std::log(si[d - 1 - i]) - logdet_bwd / d);
    }
  }
  a.array() -= a.mean();  // trace-free under the determinant-one convention
  std::sort(a.data(), a.data() + d, std::greater<double>());
  return a;
}

// basis of the intersection of two column spaces, via the nullspace of the
// concatenated matrix
Matrix subspace_intersection(const Matrix& B1, const Matrix& B2) {
  const int d = static_cast<int>(B1.rows());
  Matrix C(d, B1.cols() + B2.cols());
  C << B1, -B2;
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-10 * sv[0]) ++rank;
  }
  const int null_dim = static_cast<int>(C.cols()) - rank;
  if (null_dim <= 0) return Matrix(d, 0);
  Matrix alphas = svd.matrixV().rightCols(null_dim).topRows(B1.cols());
  return B1 * alphas;
}

}  // namespace

CartanVector cartan_projection(const Matrix& g) {
  Matrix gn = unimodularize(g);
  return two_sided_cartan(gn, gn.inverse(), 0.0, 0.0);
}

CartanVector opposition(const CartanVector& a) {
  CartanVector out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = -a[a.size() - 1 - i];
  return out;
}

double symmetric_space_distance(const Matrix& g) { return cartan_projection(g).norm(); }

CartanVector vector_distance(const Matrix& h1, const Matrix& h2) {
  return cartan_projection(h1.partialPivLu().solve(h2));
}

double simple_root(const CartanVector& a, int p) {
  if (p < 1 || p > a.size() - 1) fail("BadInput", "simple root index out of range");
  return a[p - 1] - a[p];
}

Orbit::Orbit(std::vector<Matrix> increments) : increments_(std::move(increments)) {
  if (increments_.empty()) fail("BadInput", "orbit needs at least one increment");
}

Orbit Orbit::from_points(const std::vector<Matrix>& points) {
  if (points.size() < 2) fail("BadInput", "orbit needs at least two points");
  std::vector<Matrix> inc;
  inc.reserve(points.size() - 1);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    inc.push_back(points[i].partialPivLu().solve(points[i + 1]));
  }
  return Orbit(std::move(inc));
}

CartanVector Orbit::segment(int n, int m) const {
  if (n < 0 || m <= n || m >= num_points()) fail("BadInput", "bad segment indices");
  SegmentProduct prod = SegmentProduct::seed(increments_[n]);
  for (int i = n + 1; i < m; ++i) prod.extend(increments_[i]);
  return prod.cartan();
}

ComparabilityInterval comparability_check(const Vector& phi_coeffs,
                                          const std::vector<Matrix>& sample) {
  const int d = static_cast<int>(phi_coeffs.size());
  // positivity on the extreme rays of the closed chamber:
  // r_k = (1,...,1,0,...,0) - (k/d)(1,...,1), k = 1..d-1
  for (int k = 1; k <= d - 1; ++k) {
    Vector ray = Vector::Zero(d);
    for (int i = 0; i < k; ++i) ray[i] = 1.0;
    ray.array() -= double(k) / d;
    if (phi_coeffs.dot(ray) <= 0) {
      fail("NotPositiveOnChamber", "phi is not positive on an extreme ray");
    }
  }
  if (sample.empty()) fail("BadInput", "empty sample");
  ComparabilityInterval out{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& g : sample) {
    CartanVector a = cartan_projection(g);
    const double phi = phi_coeffs.dot(a);
    const double dist = a.norm();
    if (dist < 1e-14) continue;  // g o = o contributes nothing
    const double ratio = dist / phi;
    out.lo = std::min(out.lo, ratio);
    out.hi = std::max(out.hi, ratio);
  }
  if (!std::isfinite(out.lo)) fail("BadInput", "sample contains only isometries");
  return out;
}

namespace {

PartialFlag flag_from_frames(const matgeo::SvdTriple& t, const Vector& sigmas,
                             const std::vector<int>& theta, bool from_left,
                             double tol_gap) {
  const int d = static_cast<int>(sigmas.size());
  PartialFlag flag;
  flag.theta = theta;
  std::sort(flag.theta.begin(), flag.theta.end());
  for (int p : flag.theta) {
    if (p < 1 || p > d - 1) fail("BadInput", "flag type index out of range");
    const int gap_at = from_left ? p : d - p;
    if (sigmas[gap_at] / sigmas[gap_at - 1] >= 1.0 - tol_gap) {
      fail("NoGapAtTheta", "no gap at index " + std::to_string(gap_at));
    }
    if (from_left) {
      flag.spaces.emplace_back(t.left.leftCols(p));
    } else {
      flag.spaces.emplace_back(t.right.rightCols(p));
    }
  }
  return flag;
}

}  // namespace

PartialFlag flag_of(const Matrix& g, const std::vector<int>& theta, double tol_gap) {
  auto t = matgeo::svd_unguarded(unimodularize(g));
  return flag_from_frames(t, t.sigmas, theta, true, tol_gap);
}

namespace {

// frames and gap ratios are scale invariant, so no determinant is needed
PartialFlag flag_of_scaled(const Matrix& g, const std::vector<int>& theta,
                           double tol_gap = defaults::tol_gap) {
  auto t = matgeo::svd_unguarded(g);
  return flag_from_frames(t, t.sigmas, theta, true, tol_gap);
}

PartialFlag flag_of_inverse_scaled(const Matrix& g, const std::vector<int>& theta,
                                   double tol_gap = defaults::tol_gap) {
  auto t = matgeo::svd_unguarded(g);
  return flag_from_frames(t, t.sigmas, theta, false, tol_gap);
}

}  // namespace

PartialFlag flag_of_inverse(const Matrix& g, const std::vector<int>& theta,
                            double tol_gap) {
  // U_q(g^-1) is spanned by the right singular vectors of the q smallest
  // singular values of g; the needed gap is at index d - q of g.
  auto t = matgeo::svd_unguarded(unimodularize(g));
  return flag_from_frames(t, t.sigmas, theta, false, tol_gap);
}

std::vector<int> opposite_type(const std::vector<int>& theta, int d) {
  std::vector<int> out;
  for (int p : theta) out.push_back(d - p);
  std::sort(out.begin(), out.end());
  return out;
}

DistanceBracket parallel_set_distance_bounds(const PartialFlag& E,
                                             const PartialFlag& F) {
  if (E.spaces.empty()) fail("BadInput", "empty flag");
  const int d = E.spaces[0].ambient_dim();
  if (opposite_type(E.theta, d) != F.theta) {
    fail("BadInput", "flag types are not opposite");
  }

  // general position and the angle term
  double min_angle = M_PI;
  for (std::size_t i = 0; i < E.theta.size(); ++i) {
    const int p = E.theta[i];
    const Subspace& Ep = E.spaces[i];
    const Subspace* Fdp = nullptr;
    for (std::size_t j = 0; j < F.theta.size(); ++j) {
      if (F.theta[j] == d - p) Fdp = &F.spaces[j];
    }
    Matrix C(d, d);
    C << Ep.basis(), Fdp->basis();
    if (std::abs(C.determinant()) < 1e-12) {
      fail("NotTransverse", "E_p meets F_{d-p}");
    }
    min_angle = std::min(min_angle, matgeo::angle(Ep, *Fdp));
  }
  if (min_angle <= 0) fail("NotTransverse", "zero flag angle");
  const double m = -std::log(std::sin(min_angle));

  // transverse summands H_i = E_{P_i} \cap F_{d - P_{i-1}} with P_0 = 0,
  // P_K = d; the orthogonalized slots H_i^0 refine the same flag
  std::vector<int> cuts;
  cuts.push_back(0);
  for (int p : E.theta) cuts.push_back(p);
  cuts.push_back(d);
  const int K = static_cast<int>(cuts.size()) - 1;

  auto E_space = [&](int p) -> Matrix {
    if (p == d) return Matrix::Identity(d, d);
    for (std::size_t i = 0; i < E.theta.size(); ++i) {
      if (E.theta[i] == p) return E.spaces[i].basis();
    }
    fail("BadInput", "missing flag space");
  };
  auto F_space = [&](int q) -> Matrix {
    if (q == d) return Matrix::Identity(d, d);
    for (std::size_t j = 0; j < F.theta.size(); ++j) {
      if (F.theta[j] == q) return F.spaces[j].basis();
    }
    fail("BadInput", "missing flag space");
  };

  Matrix Ginv = Matrix::Zero(d, d);
  Matrix domain = Matrix::Zero(d, d);
  int col = 0;
  for (int i = 1; i <= K; ++i) {
    const int Pi = cuts[i], Pim1 = cuts[i - 1];
    Matrix Hi = subspace_intersection(E_space(Pi), F_space(d - Pim1));
    if (Hi.cols() != Pi - Pim1) fail("NotTransverse", "flag summand has wrong rank");
    Subspace Hi_o{Hi};
    // H_i^0 = V_i \cap V_{i-1}^perp, rank P_i - P_{i-1}
    Matrix Hi0;
    if (Pim1 == 0) {
      Hi0 = Subspace(E_space(Pi)).basis().leftCols(Pi);
    } else {
      Subspace Vim1{E_space(Pim1)};
      Matrix proj =
          Matrix::Identity(d, d) - Vim1.basis() * Vim1.basis().transpose();
      Matrix projected = proj * E_space(Pi);
      Eigen::JacobiSVD<Matrix> dec(projected, Eigen::ComputeThinU);
      Hi0 = dec.matrixU().leftCols(Pi - Pim1);
    }
    // g^-1 restricted to H_i is the orthogonal projection onto H_i^0
    Matrix piHi0 = Hi0 * Hi0.transpose();
    domain.middleCols(col, Hi.cols()) = Hi_o.basis();
    Ginv.middleCols(col, Hi.cols()) = piHi0 * Hi_o.basis();
    col += static_cast<int>(Hi.cols());
  }
  if (col != d) fail("NotTransverse", "summands do not span");
  Matrix g_inverse = Ginv * domain.inverse();
  if (std::abs(g_inverse.determinant()) < 1e-300) {
    fail("NotTransverse", "projection construction degenerates");
  }
  // d(o, g o) = d(o, g^-1 o): the opposition involution preserves the norm
  return {m / std::sqrt(2.0), symmetric_space_distance(g_inverse)};
}

namespace {

struct PairTable {
  std::vector<std::vector<CartanVector>> a;  // a[n][m - n - 1] = segment(n, m)

  static PairTable build(const Orbit& orbit) {
    const int N = orbit.num_points();
    PairTable t;
    t.a.resize(N);
    for (int n = 0; n + 1 < N; ++n) {
      SegmentProduct prod = SegmentProduct::seed(orbit.increments()[n]);
      t.a[n].push_back(prod.cartan());
      for (int m = n + 2; m < N; ++m) {
        prod.extend(orbit.increments()[m - 1]);
        t.a[n].push_back(prod.cartan());
      }
    }
    return t;
  }
  const CartanVector& at(int n, int m) const { return a[n][m - n - 1]; }
};

QuasiGeodesicConstants constants_from_table(const PairTable& table, int N) {
  double mu = 1.0;
  for (int n = 0; n + 1 < N; ++n) {
    for (int m = n + 1; m < N; ++m) {
      const double dist = table.at(n, m).norm();
      if (dist < 1e-9) continue;  // repeats are absorbed into c
      mu = std::max(mu, dist / (m - n));
      mu = std::max(mu, (m - n) / dist);
    }
  }
  double c = 0.0;
  for (int n = 0; n + 1 < N; ++n) {
    for (int m = n + 1; m < N; ++m) {
      const double dist = table.at(n, m).norm();
      c = std::max(c, dist - mu * (m - n));
      c = std::max(c, (m - n) / mu - dist);
    }
  }
  return {mu, c};
}

}  // namespace

QuasiGeodesicConstants quasigeodesic_constants(const Orbit& orbit) {
  if (orbit.num_points() < 3) fail("BadInput", "need at least 3 points");
  auto table = PairTable::build(orbit);
  // fully degenerate orbit: all points coincide
  bool all_zero = true;
  for (int n = 0; n + 1 < orbit.num_points() && all_zero; ++n) {
    for (int m = n + 1; m < orbit.num_points(); ++m) {
      if (table.at(n, m).norm() >= 1e-9) all_zero = false;
    }
  }
  if (all_zero) return {1.0, 0.0};
  return constants_from_table(table, orbit.num_points());
}

QuasiGeodesicConstants quasigeodesic_constants(const std::vector<Matrix>& points) {
  return quasigeodesic_constants(Orbit::from_points(points));
}

double regularity_margin(const Orbit& orbit, const std::vector<int>& theta) {
  if (orbit.num_points() < 2) fail("BadInput", "need at least 2 points");
  auto table = PairTable::build(orbit);
  double margin = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int n = 0; n + 1 < orbit.num_points(); ++n) {
    for (int m = n + 1; m < orbit.num_points(); ++m) {
      const CartanVector& a = table.at(n, m);
      const double norm = a.norm();
      if (norm < 1e-12) continue;
      any = true;
      for (int p : theta) margin = std::min(margin, simple_root(a, p) / norm);
    }
  }
  return any ? margin : 0.0;
}

double regularity_margin(const std::vector<Matrix>& points,
                         const std::vector<int>& theta) {
  return regularity_margin(Orbit::from_points(points), theta);
}

MorseAuditReport morse_audit(const Orbit& orbit, const std::vector<int>& theta,
                             const MorseAuditOptions& opts) {
  const int N = orbit.num_points();
  if (N < 3) fail("BadInput", "need at least 3 points");
  const int d = orbit.dim();

  MorseAuditReport report;
  report.regularity = regularity_margin(orbit, theta);
  if (report.regularity <= 0) fail("NotRegular", "regularity margin is not positive");
  report.constants = quasigeodesic_constants(orbit);
  if (report.constants.mu > opts.mu_cap || report.constants.c > opts.c_cap) {
    fail("NotQuasiGeodesic", "constants exceed the configured caps");
  }

  const auto itheta = opposite_type(theta, d);
  // forward products h_k^-1 h_last, backward products h_0^-1 h_k
  for (int k = 0; k < N; ++k) {
    PartialFlag E, F;
    try {
      // E_k: flag of h_k^-1 h_last = g_{last-1} ... g_k
      SegmentProduct fwd = SegmentProduct::seed(
          k + 1 < N ? orbit.increments()[k] : Matrix::Identity(d, d));
      for (int i = k + 1; i + 1 < N; ++i) fwd.extend(orbit.increments()[i]);
      // the flag only needs frames and gap ratios: scale does not matter
      E = flag_of_scaled(fwd.fwd, theta);
      // F_k: flag of h_k^-1 h_0 = (g_{k-1} ... g_0)^-1, from the right frame
      if (k == 0) fail("NoGapAtTheta", "endpoint");
      SegmentProduct bwd = SegmentProduct::seed(orbit.increments()[0]);
      for (int i = 1; i < k; ++i) bwd.extend(orbit.increments()[i]);
      F = flag_of_inverse_scaled(bwd.fwd, itheta);
    } catch (const Error&) {
      continue;  // endpoint too close: no gap of the needed index
    }
    DistanceBracket bracket = parallel_set_distance_bounds(E, F);
    double sided = 0.0;
    if (k > 0) {
      CartanVector v = orbit.segment(0, k);
      if (v.norm() > 1e-12) {
        sided = std::numeric_limits<double>::infinity();
        for (int p : theta) sided = std::min(sided, simple_root(v, p) / v.norm());
      }
    }
    report.rows.push_back({k, bracket.lower, bracket.upper, sided});
    report.max_lower = std::max(report.max_lower, bracket.lower);
    report.max_upper = std::max(report.max_upper, bracket.upper);
  }
  if (report.rows.empty()) fail("NoGapAtTheta", "no auditable interior point");
  return report;
}

MorseAuditReport morse_audit(const std::vector<Matrix>& points,
                             const std::vector<int>& theta,
                             const MorseAuditOptions& opts) {
  return morse_audit(Orbit::from_points(points), theta, opts);
}

}  // namespace domcert::morse
