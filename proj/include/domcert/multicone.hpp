#pragma once

#include <map>
#include <optional>
#include <random>
#include <vector>

#include "domcert/group.hpp"
#include "domcert/matgeo.hpp"
#include "domcert/reprcheck.hpp"

namespace domcert::multicone {

/// Open projective set {[v] : Q(v) < 0} for a symmetric form Q with exactly
/// `index` negative eigenvalues (and d - index positive ones).
class QuadraticCone {
public:
  QuadraticCone(Matrix form, int index);

  const Matrix& form() const { return form_; }
  int index() const { return index_; }
  int dim() const { return static_cast<int>(form_.rows()); }
  /// The negative eigenspace: a p-plane whose projectivization lies inside.
  const matgeo::Subspace& negative_witness() const { return *negative_; }
  /// The positive eigenspace: a (d-p)-plane missing the cone.
  const matgeo::Subspace& positive_witness() const { return *positive_; }

  double value(const Vector& v) const { return v.dot(form_ * v); }

private:
  Matrix form_;
  int index_;
  std::optional<matgeo::Subspace> negative_, positive_;
};

/// Form A^-T Q A^-1, whose negative set is exactly A({Q < 0}).
QuadraticCone pushforward(const QuadraticCone& Q, const Matrix& A);

/// S-procedure margin: max over t > 0 of -lambda_max(Q2.form - t Q1.form).
/// Positive iff closure({Q1<0}) minus 0 is contained in {Q2<0}.
double strict_containment(const QuadraticCone& Q1, const QuadraticCone& Q2);

/// Multicone: components with pairwise disjoint closures, all of one index.
class Multicone {
public:
  Multicone(std::vector<QuadraticCone> components);

  int index() const { return components_[0].index(); }
  int dim() const { return components_[0].dim(); }
  const std::vector<QuadraticCone>& components() const { return components_; }

private:
  std::vector<QuadraticCone> components_;
};

/// Assignment of one multicone per recurrent automaton vertex.
struct ConeFamily {
  group::GeodesicAutomaton automaton;  // recurrent part
  std::map<int, Multicone> assignment;
  int classification_radius = 8;  // cone_types radius the vertex ids refer to
};

enum class CertVerdict { Certified, NotCertified };

struct EdgeMargin {
  int edge;       // index into automaton.edges
  int component;  // source component index
  double margin;  // best containment margin over target components
};

struct VerifyResult {
  CertVerdict verdict = CertVerdict::NotCertified;
  double min_margin = 0.0;
  std::vector<EdgeMargin> table;
};

/// Checks rho(g)(M(C1)) strictly inside M(C2) for every automaton edge,
/// component by component. Certified iff every margin >= margin_floor.
VerifyResult verify_family(const reprcheck::Representation& rep,
                           const ConeFamily& fam,
                           double margin_floor = defaults::margin_floor);

struct SynthesisOptions {
  int walk_samples = 48;       // empirical limit spaces per vertex
  int slope_grid = 16;         // log-spaced slopes in [0.1, 10]
  double cluster_split = 0.5;  // Grassmann distance that splits clusters
  std::uint64_t seed = 1;
  double margin_floor = defaults::margin_floor;
};

struct SynthesisResult {
  std::optional<ConeFamily> family;  // set iff certified
  VerifyResult best;                 // margins of the best candidate
  double best_slope = 0.0;
};

/// Builds candidate families from empirical limit-space clusters over
/// automaton walks of length in [R/2, R] and returns the first certified
/// one over the slope grid. Throws NoCandidateCertified (carrying nothing;
/// inspect via the returned result when `throw_on_failure` is false).
SynthesisResult synthesize_family(const reprcheck::Representation& rep, int p,
                                  const group::GeodesicAutomaton& recurrent,
                                  int R, const SynthesisOptions& opts = {},
                                  bool throw_on_failure = true);

struct ConeLimitResult {
  matgeo::Subspace limit;
  double residual_vs_limit_map;
  double contraction_ratio;  // geometric-mean per-step ratio, < 1 on success
};

/// Iterates rho(gamma_n)(P_n) with P_n inside the multicone at the cone type
/// of the ray's tail past position n, and checks convergence to limit_map.
ConeLimitResult cone_limit_check(const reprcheck::Representation& rep,
                                 const ConeFamily& fam,
                                 const reprcheck::BoundaryRay& ray, int depth,
                                 bool randomize_planes = false,
                                 std::uint64_t seed = 7);

}  // namespace domcert::multicone
