#include "domcert/multicone.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>

namespace domcert::multicone {

using group::Word;
using matgeo::Subspace;

namespace {

double lambda_max(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  return es.eigenvalues().maxCoeff();
}

// max over t in [e^-20, e^20] of -lambda_max(Q2 - t Q1); the pencil's top
// eigenvalue is convex in t, so a coarse scan plus golden section suffices.
double pencil_margin(const Matrix& Q1, const Matrix& Q2) {
  auto f = [&](double logt) { return lambda_max(Q2 - std::exp(logt) * Q1); };
  const double lo = -20.0, hi = 20.0;
  const int coarse = 81;
  double best = std::numeric_limits<double>::infinity();
  double best_x = lo;
  for (int i = 0; i < coarse; ++i) {
    const double x = lo + (hi - lo) * i / (coarse - 1);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - (hi - lo) / (coarse - 1));
  double b = std::min(hi, best_x + (hi - lo) / (coarse - 1));
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 120 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return -std::min({best, fc, fd});
}

}  // namespace

QuadraticCone::QuadraticCone(Matrix form, int index) : index_(index) {
  if (form.rows() != form.cols()) fail("BadInput", "form must be square");
  form_ = 0.5 * (form + form.transpose());
  const int d = static_cast<int>(form_.rows());
  if (index < 1 || index > d - 1) fail("BadInput", "cone index out of range");
  Eigen::SelfAdjointEigenSolver<Matrix> es(form_);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  int negatives = 0;
  for (int i = 0; i < d; ++i) {
    if (es.eigenvalues()[i] < -1e-12 * scale) {
      ++negatives;
    } else if (es.eigenvalues()[i] < 1e-12 * scale) {
      fail("SignatureMismatch", "degenerate quadratic form");
    }
  }
  if (negatives != index) {
    fail("SignatureMismatch", "form has " + std::to_string(negatives) +
                                  " negative eigenvalues, expected " +
                                  std::to_string(index));
  }
  // eigenvalues ascend: negatives first
  negative_ = Subspace(es.eigenvectors().leftCols(index));
  positive_ = Subspace(es.eigenvectors().rightCols(d - index));
}

QuadraticCone pushforward(const QuadraticCone& Q, const Matrix& A) {
  const Matrix Ainv = A.inverse();
  return QuadraticCone(Ainv.transpose() * Q.form() * Ainv, Q.index());
}

double strict_containment(const QuadraticCone& Q1, const QuadraticCone& Q2) {
  if (Q1.dim() != Q2.dim()) fail("SignatureMismatch", "dimension mismatch");
  if (Q1.index() != Q2.index()) fail("SignatureMismatch", "index mismatch");
  return pencil_margin(Q1.form(), Q2.form());
}

Multicone::Multicone(std::vector<QuadraticCone> components)
    : components_(std::move(components)) {
  if (components_.empty()) fail("BadInput", "multicone needs a component");
  const int p = components_[0].index();
  const int d = components_[0].dim();
  for (const auto& c : components_) {
    if (c.index() != p || c.dim() != d) {
      fail("IndexMismatch", "multicone components disagree on index");
    }
  }
  // pairwise disjoint closures via the S-check {Qi<=0}\0 inside {Qj>0}
  for (std::size_t i = 0; i < components_.size(); ++i) {
    for (std::size_t j = i + 1; j < components_.size(); ++j) {
      if (pencil_margin(components_[i].form(), -components_[j].form()) <= 0) {
        fail("BadInput", "multicone components have intersecting closures");
      }
    }
  }
  // a (d-p)-plane must avoid the whole multicone: Q_i restricted to the
  // witness positive semidefinite for every component
  auto misses_all = [&](const Matrix& W) {
    for (const auto& c : components_) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(W.transpose() * c.form() * W);
      if (es.eigenvalues().minCoeff() < -1e-12) return false;
    }
    return true;
  };
  bool found = false;
  for (const auto& cw : components_) {
    if (misses_all(cw.positive_witness().basis())) found = true;
  }
  if (!found && d - p == 1) {
    // line witness: seeded random directions plus, in the plane case, a grid
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    for (int s = 0; s < 4096 && !found; ++s) {
      Vector v(d);
      if (d == 2) {
        const double t = M_PI * s / 4096.0;
        v << std::cos(t), std::sin(t);
      } else {
        for (int i = 0; i < d; ++i) v[i] = g(rng);
        v.normalize();
      }
      if (misses_all(v)) found = true;
    }
  }
  if (!found && d - p > 1) {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    for (int s = 0; s < 512 && !found; ++s) {
      Matrix W(d, d - p);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d - p; ++j) W(i, j) = g(rng);
      if (misses_all(Subspace(W).basis())) found = true;
    }
  }
  if (!found) fail("BadInput", "no (d-p)-plane witness avoiding the multicone");
}

VerifyResult verify_family(const reprcheck::Representation& rep,
                           const ConeFamily& fam, double margin_floor) {
  VerifyResult result;
  if (fam.assignment.empty()) fail("AutomatonMismatch", "empty family");
  const int p = fam.assignment.begin()->second.index();
  for (int v : fam.automaton.vertex_ids) {
    auto it = fam.assignment.find(v);
    if (it == fam.assignment.end()) {
      fail("AutomatonMismatch", "vertex " + std::to_string(v) + " unassigned");
    }
    if (it->second.index() != p) fail("IndexMismatch", "mixed indices in family");
    if (it->second.dim() != rep.dim()) fail("IndexMismatch", "dimension mismatch");
  }

  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t ei = 0; ei < fam.automaton.edges.size(); ++ei) {
    const auto& e = fam.automaton.edges[ei];
    const Multicone& src = fam.assignment.at(e.tail);
    const Multicone& dst = fam.assignment.at(e.head);
    for (std::size_t ci = 0; ci < src.components().size(); ++ci) {
      QuadraticCone pushed = pushforward(src.components()[ci], rep.image(e.label));
      double best = -std::numeric_limits<double>::infinity();
      int positives = 0;
      const bool scan_all = dst.components().size() <= 16;
      for (const auto& target : dst.components()) {
        const double m = strict_containment(pushed, target);
        if (m > 0) ++positives;
        best = std::max(best, m);
        // disjoint closures make a second positive impossible; on large
        // families stop at the witness instead of asserting it
        if (!scan_all && m > 0) break;
      }
      if (positives > 1) {
        // impossible for disjoint-closure targets
        fail("InternalConsistency",
             "pushforward strictly inside two disjoint components");
      }
      result.table.push_back({static_cast<int>(ei), static_cast<int>(ci), best});
      min_margin = std::min(min_margin, best);
    }
  }
  result.min_margin = min_margin;
  result.verdict =
      min_margin >= margin_floor ? CertVerdict::Certified : CertVerdict::NotCertified;
  return result;
}

namespace {

// Random backward/forward walk of the given length, ending/starting at v.
// Returns the product of the label images in composition order, i.e. the
// matrix A_{l_k} ... A_{l_1} for labels l_1 ... l_k along the walk.
std::optional<Matrix> walk_product(const reprcheck::Representation& rep,
                                   const group::GeodesicAutomaton& autom, int v,
                                   int length, bool ending_at, std::mt19937_64& rng) {
  Matrix M = Matrix::Identity(rep.dim(), rep.dim());
  int cur = v;
  for (int step = 0; step < length; ++step) {
    std::vector<const group::AutomatonEdge*> options;
    for (const auto& e : autom.edges) {
      if (ending_at ? (e.head == cur) : (e.tail == cur)) options.push_back(&e);
    }
    if (options.empty()) return std::nullopt;
    const auto* e = options[rng() % options.size()];
    if (ending_at) {
      // extend into the past: label acts after what is already accumulated
      M = (M * rep.image(e->label)).eval();
      cur = e->tail;
    } else {
      // extend into the future: label acts before the accumulated product
      M = (rep.image(e->label) * M).eval();
      cur = e->head;
    }
    const double s = M.cwiseAbs().maxCoeff();
    if (s > 1e50) M /= s;
  }
  return M;
}

// All walk products of exactly `length` ending (or starting) at v, capped.
void enumerate_walk_products(const reprcheck::Representation& rep,
                             const group::GeodesicAutomaton& autom, int v,
                             int length, bool ending_at, std::size_t cap,
                             std::vector<Matrix>& out) {
  struct Node {
    int vertex;
    Matrix M;
  };
  std::vector<Node> layer{{v, Matrix::Identity(rep.dim(), rep.dim())}};
  for (int step = 0; step < length; ++step) {
    std::vector<Node> next;
    for (const auto& node : layer) {
      for (const auto& e : autom.edges) {
        if (ending_at ? (e.head != node.vertex) : (e.tail != node.vertex)) continue;
        Matrix M = ending_at ? (node.M * rep.image(e.label)).eval()
                             : (rep.image(e.label) * node.M).eval();
        const double s = M.cwiseAbs().maxCoeff();
        if (s > 1e50) M /= s;
        next.push_back({ending_at ? e.tail : e.head, std::move(M)});
        if (next.size() > cap) return;  // too many: caller falls back
      }
    }
    layer = std::move(next);
  }
  for (auto& node : layer) out.push_back(std::move(node.M));
}

std::vector<std::vector<int>> cluster_by_distance(const std::vector<Subspace>& pts,
                                                  double split) {
  // complete linkage, greedy
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    bool placed = false;
    for (auto& cl : clusters) {
      bool fits = true;
      for (int j : cl) {
        if (matgeo::grassmann_distance(pts[i], pts[j]) > split) fits = false;
      }
      if (fits) {
        cl.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({i});
  }
  return clusters;
}

Subspace average_projector_space(const std::vector<Subspace>& pts,
                                 const std::vector<int>& idx, int dim) {
  const int d = pts[idx[0]].ambient_dim();
  Matrix P = Matrix::Zero(d, d);
  for (int i : idx) P += pts[i].basis() * pts[i].basis().transpose();
  P /= static_cast<double>(idx.size());
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  return Subspace(es.eigenvectors().rightCols(dim));
}

}  // namespace


namespace {

// ---------------------------------------------------------------------------
// d = 2 synthesis through interval dynamics. Lines in P(R^2) are angles in
// [0, pi); every projective interval is the negative set of a signature
// (1,1) quadratic form, so arc systems are exact multicone candidates.

struct Arc {
  double center;  // in [0, pi)
  double half;    // half-width, < pi/2
};

double wrap_pi(double t) {
  t = std::fmod(t, M_PI);
  return t < 0 ? t + M_PI : t;
}

// signed distance from arc center to angle, in (-pi/2, pi/2]
double center_offset(const Arc& a, double theta) {
  double d = wrap_pi(theta - a.center + M_PI / 2) - M_PI / 2;
  return d;
}

bool arc_contains(const Arc& a, double theta, double slack = 0.0) {
  return std::abs(center_offset(a, theta)) <= a.half + slack;
}

Arc merge_arcs(const Arc& a, const Arc& b) {
  // smallest arc containing both; assumes they overlap or nearly touch
  const double off = center_offset(a, b.center);
  const double lo = std::min(-a.half, off - b.half);
  const double hi = std::max(a.half, off + b.half);
  return {wrap_pi(a.center + (lo + hi) / 2), (hi - lo) / 2};
}

void insert_arc(std::vector<Arc>& arcs, Arc next, double touch_gap) {
  while (true) {
    bool merged = false;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const double off = std::abs(center_offset(arcs[i], next.center));
      if (off <= arcs[i].half + next.half + touch_gap) {
        next = merge_arcs(arcs[i], next);
        arcs.erase(arcs.begin() + i);
        merged = true;
        break;
      }
    }
    if (!merged) break;
  }
  arcs.push_back(next);
}

// merge the two closest arcs until at most cap remain
void coarsen_arcs(std::vector<Arc>& arcs, std::size_t cap) {
  while (arcs.size() > cap) {
    double best_gap = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      for (std::size_t j = i + 1; j < arcs.size(); ++j) {
        const double gap = std::abs(center_offset(arcs[i], arcs[j].center)) -
                           arcs[i].half - arcs[j].half;
        if (gap < best_gap) {
          best_gap = gap;
          bi = i;
          bj = j;
        }
      }
    }
    Arc merged = merge_arcs(arcs[bi], arcs[bj]);
    arcs.erase(arcs.begin() + bj);
    arcs.erase(arcs.begin() + bi);
    insert_arc(arcs, merged, 1e-9);
  }
}

double line_angle(const Vector& v) { return wrap_pi(std::atan2(v[1], v[0])); }

double apply_angle(const Matrix& A, double theta) {
  Vector v(2);
  v << std::cos(theta), std::sin(theta);
  Vector w = A * v;
  return line_angle(w);
}

// |d(image angle)/d(theta)| of the projective action
double projective_derivative(const Matrix& A, double theta) {
  Vector v(2);
  v << std::cos(theta), std::sin(theta);
  Vector w = A * v;
  return std::abs(A.determinant()) / w.squaredNorm();
}

Arc apply_arc(const Matrix& A, const Arc& a) {
  // GL+(2) acts on P(R^2) by orientation-preserving circle homeomorphisms,
  // so the image runs from the image of the low endpoint to the image of
  // the high endpoint in the positive direction.
  const double lo = apply_angle(A, a.center - a.half);
  const double hi = apply_angle(A, a.center + a.half);
  const double half = wrap_pi(hi - lo) / 2;
  return {wrap_pi(lo + half), half};
}

std::optional<ConeFamily> synthesize_intervals(
    const reprcheck::Representation& rep,
    const group::GeodesicAutomaton& recurrent,
    const std::map<int, std::vector<Subspace>>& cu, double margin_floor,
    std::size_t cap_per_vertex) {
  // seed arcs at the sampled attractor lines
  std::map<int, std::vector<Arc>> arcs;
  const double seed_half = 1e-4;
  const double touch_gap = 1e-3;
  for (const auto& [v, spaces] : cu) {
    for (const auto& S : spaces) {
      insert_arc(arcs[v], {line_angle(S.basis().col(0)), seed_half}, touch_gap);
    }
    if (arcs[v].empty()) return std::nullopt;
  }
  const bool trace = std::getenv("DOMCERT_TRACE") != nullptr;

  // fixpoint of the union dynamics M(head) >= rho(label)(M(tail))
  for (int round = 0; round < 500; ++round) {
    bool changed = false;
    for (const auto& e : recurrent.edges) {
      for (const Arc& a : arcs[e.tail]) {
        Arc img = apply_arc(rep.image(e.label), a);
        bool covered = false;
        for (const Arc& b : arcs[e.head]) {
          if (std::abs(center_offset(b, img.center)) + img.half <= b.half + 1e-12) {
            covered = true;
            break;
          }
        }
        if (!covered) {
          insert_arc(arcs[e.head], img, touch_gap);
          changed = true;
        }
      }
    }
    std::size_t total = 0;
    for (auto& [v, as] : arcs) {
      if (as.size() > cap_per_vertex) {
        coarsen_arcs(as, cap_per_vertex);
        changed = true;
      }
      total += as.size();
      for (const Arc& a : as) {
        if (a.half > M_PI / 2 - 1e-3) {
          if (trace) std::cerr << "[intervals] arc blow-up\n";
          return std::nullopt;
        }
      }
    }
    if (!changed) {
      if (trace) std::cerr << "[intervals] fixpoint after " << round << " rounds, "
                           << total << " arcs\n";
      break;
    }
    if (round == 499) {
      if (trace) std::cerr << "[intervals] no fixpoint\n";
      return std::nullopt;
    }
  }

  // Per-arc fattening weights: the image of each arc must land inside some
  // target arc with slack delta_target >= L * delta_source, L the measured
  // endpoint derivative. Cycles in the arc graph are resolved attractor
  // cycles; their derivative products are the squared eigenvalue ratios of
  // the cycle words, hence < 1 exactly when the representation dominates.
  struct ArcRef {
    int vertex;
    std::size_t index;
  };
  std::vector<ArcRef> arc_list;
  std::map<int, std::vector<std::size_t>> arc_ids;  // vertex -> flat ids
  for (int v : recurrent.vertex_ids) {
    for (std::size_t i = 0; i < arcs[v].size(); ++i) {
      arc_ids[v].push_back(arc_list.size());
      arc_list.push_back({v, i});
    }
  }
  struct ArcEdge {
    std::size_t src, dst;
    double L;
  };
  std::vector<ArcEdge> arc_edges;
  for (const auto& e : recurrent.edges) {
    for (std::size_t i = 0; i < arcs[e.tail].size(); ++i) {
      const Arc& a = arcs[e.tail][i];
      Arc img = apply_arc(rep.image(e.label), a);
      int target = -1;
      for (std::size_t j = 0; j < arcs[e.head].size(); ++j) {
        if (std::abs(center_offset(arcs[e.head][j], img.center)) + img.half <=
            arcs[e.head][j].half + 1e-9) {
          target = static_cast<int>(j);
          break;
        }
      }
      if (target < 0) {
        if (trace) std::cerr << "[intervals] unclosed image arc\n";
        return std::nullopt;
      }
      double L = std::max(
          projective_derivative(rep.image(e.label), a.center - a.half),
          projective_derivative(rep.image(e.label), a.center + a.half));
      arc_edges.push_back({arc_ids[e.tail][i],
                           arc_ids[e.head][static_cast<std::size_t>(target)], L});
    }
  }
  std::vector<double> weight(arc_list.size(), 1.0);
  for (int round = 0; round < 256; ++round) {
    bool changed = false;
    for (const auto& ae : arc_edges) {
      const double need = 1.02 * ae.L * weight[ae.src];
      if (weight[ae.dst] < need) {
        weight[ae.dst] = need;
        changed = true;
      }
    }
    if (!changed) break;
    if (round == 255) {
      if (trace) std::cerr << "[intervals] weights diverge\n";
      return std::nullopt;
    }
  }
  double wmax = 0.0;
  for (double w : weight) wmax = std::max(wmax, w);
  if (wmax > 1e6) {
    if (trace) std::cerr << "[intervals] weight range too large\n";
    return std::nullopt;
  }
  if (trace) std::cerr << "[intervals] wmax " << wmax << "\n";

  for (double eps : {1e-3, 3e-3, 1e-2, 3e-2, 3e-4, 1e-4, 1e-5}) {
    ConeFamily fam;
    fam.automaton = recurrent;
    bool ok = true;
    for (int v : recurrent.vertex_ids) {
      std::vector<Arc> merged;
      for (std::size_t i = 0; i < arcs[v].size(); ++i) {
        Arc a = arcs[v][i];
        a.half += eps * weight[arc_ids[v][i]];
        insert_arc(merged, a, 1e-9);
      }
      std::vector<QuadraticCone> comps;
      try {
        for (const Arc& a : merged) {
          if (a.half >= M_PI / 2 - 1e-6) throw Error("BadInput", "arc too wide");
          const double t2 = std::tan(a.half) * std::tan(a.half);
          Matrix R(2, 2);
          R << std::cos(a.center), -std::sin(a.center), std::sin(a.center),
              std::cos(a.center);
          Matrix Q = Matrix::Zero(2, 2);
          Q.diagonal() << -t2, 1.0;
          comps.emplace_back(R * Q * R.transpose(), 1);
        }
        fam.assignment.emplace(v, Multicone(std::move(comps)));
      } catch (const Error&) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    try {
      VerifyResult vr = verify_family(rep, fam, margin_floor);
      if (trace) std::cerr << "[intervals] eps candidate margin " << vr.min_margin << "\n";
      if (vr.verdict == CertVerdict::Certified) return fam;
    } catch (const Error& err) {
      if (trace) std::cerr << "[intervals] eps candidate failed: " << err.what() << "\n";
    }
  }
  return std::nullopt;
}

}  // namespace

SynthesisResult synthesize_family(const reprcheck::Representation& rep, int p,
                                  const group::GeodesicAutomaton& recurrent,
                                  int R, const SynthesisOptions& opts,
                                  bool throw_on_failure) {
  const int d = rep.dim();
  std::mt19937_64 rng(opts.seed);

  // Empirical limit spaces per vertex: all walks of length in [R/2, R] when
  // that stays small, random walks otherwise.
  std::map<int, std::vector<Subspace>> cu, cs;
  for (int v : recurrent.vertex_ids) {
    std::vector<Matrix> prods_cu, prods_cs;
    for (int L = R / 2; L <= R; ++L) {
      enumerate_walk_products(rep, recurrent, v, L, true, 4096, prods_cu);
      enumerate_walk_products(rep, recurrent, v, L, false, 4096, prods_cs);
    }
    if (prods_cu.empty() || prods_cs.empty()) {
      prods_cu.clear();
      prods_cs.clear();
      for (int s = 0; s < opts.walk_samples; ++s) {
        const int L = R / 2 + static_cast<int>(rng() % std::max(1, R - R / 2 + 1));
        if (auto M = walk_product(rep, recurrent, v, L, true, rng)) {
          prods_cu.push_back(*M);
        }
        if (auto M = walk_product(rep, recurrent, v, L, false, rng)) {
          prods_cs.push_back(*M);
        }
      }
    }
    for (const auto& M : prods_cu) {
      try {
        cu[v].push_back(matgeo::singular_spaces(M, p).first);
      } catch (const Error&) {
      }
    }
    for (const auto& M : prods_cs) {
      try {
        cs[v].push_back(matgeo::singular_spaces(M, p).second);
      } catch (const Error&) {
      }
    }
    if (cu[v].empty() || cs[v].empty()) {
      if (throw_on_failure) {
        fail("NoCandidateCertified", "no gapped walk products at a vertex");
      }
      return {};
    }
  }

  if (d == 2) {
    for (std::size_t cap : {24u, 64u, 160u, 2000u}) {
      if (auto fam = synthesize_intervals(rep, recurrent, cu, opts.margin_floor, cap)) {
        SynthesisResult out;
        out.family = std::move(*fam);
        out.best = verify_family(rep, *out.family, opts.margin_floor);
        out.best_slope = 0.0;
        return out;
      }
    }
  }

  struct VertexData {
    std::vector<Subspace> centers;  // one per cu cluster
    Subspace cs_rep;                // shared (d-p)-dimensional axis
    VertexData(std::vector<Subspace> c, Subspace f)
        : centers(std::move(c)), cs_rep(std::move(f)) {}
  };
  auto cluster_at = [&](double split) {
    std::map<int, VertexData> data;
    for (int v : recurrent.vertex_ids) {
      std::vector<Subspace> centers;
      for (const auto& cluster : cluster_by_distance(cu[v], split)) {
        centers.push_back(average_projector_space(cu[v], cluster, p));
      }
      std::vector<int> all(cs[v].size());
      for (std::size_t i = 0; i < cs[v].size(); ++i) all[i] = static_cast<int>(i);
      data.emplace(v, VertexData(std::move(centers),
                                 average_projector_space(cs[v], all, d - p)));
    }
    return data;
  };

  const int V = static_cast<int>(recurrent.vertex_ids.size());
  std::vector<double> grid(opts.slope_grid);
  for (int i = 0; i < opts.slope_grid; ++i) {
    grid[i] = 0.1 * std::pow(100.0, double(i) / std::max(1, opts.slope_grid - 1));
  }

  // Per-vertex slopes: edges whose label image is an isometry map same-slope
  // cones exactly onto each other, so a single global slope cannot be
  // strictly invariant. Full slope product for few vertices, global
  // otherwise.
  const bool per_vertex = V <= 3;
  const long long combos =
      per_vertex ? static_cast<long long>(std::pow(double(grid.size()), V))
                 : static_cast<long long>(grid.size());

  auto build = [&](const std::map<int, VertexData>& data,
                   const std::vector<double>& slopes,
                   bool use_cs) -> std::optional<ConeFamily> {
    ConeFamily fam;
    fam.automaton = recurrent;
    for (int vi = 0; vi < V; ++vi) {
      const int v = recurrent.vertex_ids[vi];
      const auto& vd = data.at(v);
      const double s = slopes[vi];
      std::vector<QuadraticCone> comps;
      try {
        for (const auto& E : vd.centers) {
          const Matrix piE = E.basis() * E.basis().transpose();
          Matrix piF;
          if (use_cs) {
            piF = vd.cs_rep.basis() * vd.cs_rep.basis().transpose();
          } else {
            piF = Matrix::Identity(d, d) - piE;
          }
          comps.emplace_back(piF - s * s * piE, p);
        }
        fam.assignment.emplace(v, Multicone(std::move(comps)));
      } catch (const Error&) {
        return std::nullopt;
      }
    }
    return fam;
  };

  SynthesisResult out;
  out.best.min_margin = -std::numeric_limits<double>::infinity();
  // Finer splits resolve the cylinder structure of the invariant set; they
  // are needed as the representation approaches the domination threshold.
  std::vector<double> splits{opts.cluster_split, opts.cluster_split / 4,
                             opts.cluster_split / 16};
  for (double split : splits) {
  std::map<int, VertexData> data = cluster_at(split);
  std::size_t total_components = 0;
  for (const auto& [v, vd] : data) total_components += vd.centers.size();
  if (total_components > 64) continue;  // verification cost guard
  for (int variant = 0; variant < 2; ++variant) {
    const bool use_cs = variant == 0;
    for (long long combo = 0; combo < combos; ++combo) {
      std::vector<double> slopes(V);
      long long c = combo;
      for (int vi = 0; vi < V; ++vi) {
        slopes[vi] = per_vertex ? grid[c % grid.size()] : grid[combo];
        c /= grid.size();
      }
      auto fam = build(data, slopes, use_cs);
      if (!fam) continue;
      try {
        VerifyResult vr = verify_family(rep, *fam, opts.margin_floor);
        if (vr.min_margin > out.best.min_margin) {
          out.best = vr;
          out.best_slope = slopes[0];
        }
        if (vr.verdict == CertVerdict::Certified) {
          out.family = std::move(*fam);
          out.best = vr;
          out.best_slope = slopes[0];
          return out;
        }
      } catch (const Error&) {
        continue;
      }
    }
  }
  }
  if (throw_on_failure) {
    fail("NoCandidateCertified",
         "no slope certified; best margin " + std::to_string(out.best.min_margin));
  }
  return out;
}

ConeLimitResult cone_limit_check(const reprcheck::Representation& rep,
                                 const ConeFamily& fam,
                                 const reprcheck::BoundaryRay& ray, int depth,
                                 bool randomize_planes, std::uint64_t seed) {
  VerifyResult vr = verify_family(rep, fam);
  if (vr.verdict != CertVerdict::Certified) {
    fail("NotCertified", "cone family is not certified");
  }
  const int p = fam.assignment.begin()->second.index();
  reprcheck::validate_ray(rep.presentation(), ray);
  auto ct = group::cone_types(rep.presentation(), fam.classification_radius);
  int suffix_len = 2;
  for (const auto& t : ct.types) {
    suffix_len = std::max(suffix_len, static_cast<int>(t.witness.size()) + 1);
  }

  auto xi = reprcheck::limit_map(rep, p, ray, depth + suffix_len + 8);
  std::mt19937_64 rng(seed);

  Matrix M = Matrix::Identity(rep.dim(), rep.dim());
  Word prefix = reprcheck::ray_prefix(ray, depth + suffix_len);
  std::vector<double> residuals;
  Subspace last = xi.space;
  for (int n = 0; n < depth; ++n) {
    if (n > 0) {
      M = (M * rep.image(prefix[n - 1])).eval();
      const double sc = M.cwiseAbs().maxCoeff();
      if (sc > 1e50) M /= sc;
    }
    // cone type of the ray's tail past position n
    Word suffix(prefix.begin() + n, prefix.begin() + n + suffix_len);
    suffix = group::normalize(rep.presentation(), suffix);
    std::string key;
    for (int g : suffix) key.push_back(static_cast<char>(g + 1));
    auto it = ct.classify.find(key);
    if (it == ct.classify.end()) fail("NotCertified", "tail cone type not classified");
    auto fit = fam.assignment.find(it->second);
    if (fit == fam.assignment.end()) {
      fail("AutomatonMismatch", "tail cone type outside the family's automaton");
    }
    const auto& comps = fit->second.components();
    const auto& comp = comps[randomize_planes ? rng() % comps.size() : 0];
    Matrix P = comp.negative_witness().basis();
    if (randomize_planes) {
      // small perturbation kept inside the cone by rejection
      for (int attempt = 0; attempt < 8; ++attempt) {
        Matrix noise(P.rows(), P.cols());
        std::normal_distribution<double> g;
        for (int i = 0; i < noise.rows(); ++i)
          for (int j = 0; j < noise.cols(); ++j) noise(i, j) = g(rng);
        Matrix cand = P + 0.05 * noise;
        Subspace S(cand);
        Eigen::SelfAdjointEigenSolver<Matrix> es(S.basis().transpose() *
                                                 comp.form() * S.basis());
        if (es.eigenvalues().maxCoeff() < 0) {
          P = S.basis();
          break;
        }
      }
    }
    Subspace image(M * P);
    residuals.push_back(matgeo::grassmann_distance(image, xi.space));
    last = image;
  }

  // geometric-mean contraction per step over the measurable tail
  double log_sum = 0.0;
  int count = 0;
  for (std::size_t i = 1; i < residuals.size(); ++i) {
    if (residuals[i] < 1e-14 || residuals[i - 1] < 1e-14) break;
    log_sum += std::log(residuals[i] / residuals[i - 1]);
    ++count;
  }
  const double ratio = count > 0 ? std::exp(log_sum / count) : 0.0;
  return {last, residuals.empty() ? 1.0 : residuals.back(), ratio};
}

}  // namespace domcert::multicone
