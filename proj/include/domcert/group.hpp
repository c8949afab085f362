#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "domcert/types.hpp"

namespace domcert::group {

/// A word in the symmetric generating set, stored as generator indices.
using Word = std::vector<int>;

struct AutomatonEdge {
  int tail;
  int label;  // generator index
  int head;
};

/// Labeled directed multigraph whose walks from `start` are the geodesics.
struct GeodesicAutomaton {
  std::vector<int> vertex_ids;
  int start = 0;
  std::vector<AutomatonEdge> edges;
  bool certified = false;  // closed-form classification matched

  std::vector<AutomatonEdge> edges_from(int tail) const;
  bool has_vertex(int id) const;
  /// Number of length-n walks starting at `start`.
  long long count_walks(int n) const;
};

enum class Family { Free, FreeProduct, Surface, Automaton };

/// Supported word-hyperbolic group families with a symmetric generating set.
class GroupPresentation {
public:
  static GroupPresentation free_group(int rank);
  static GroupPresentation free_product(int m, int n);  // Z/m * Z/n
  static GroupPresentation surface(int genus);
  static GroupPresentation from_automaton(GeodesicAutomaton automaton,
                                          std::vector<std::string> labels);

  Family family() const { return family_; }
  int num_generators() const { return static_cast<int>(names_.size()); }
  int inverse(int g) const { return inverse_[g]; }
  const std::string& name(int g) const { return names_[g]; }
  int generator_index(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

  int free_rank() const { return rank_; }
  int factor_m() const { return m_; }
  int factor_n() const { return n_; }
  int genus() const { return genus_; }
  const std::optional<GeodesicAutomaton>& supplied_automaton() const {
    return supplied_;
  }
  const std::vector<Word>& relators() const { return relators_; }

private:
  GroupPresentation() = default;
  Family family_ = Family::Free;
  int rank_ = 0, m_ = 0, n_ = 0, genus_ = 0;
  std::vector<std::string> names_;
  std::vector<int> inverse_;
  std::vector<Word> relators_;
  std::optional<GeodesicAutomaton> supplied_;
};

Word parse_word(const GroupPresentation& pres, const std::vector<std::string>& tokens);
std::string format_word(const GroupPresentation& pres, const Word& w);
Word inverse_word(const GroupPresentation& pres, const Word& w);
Word concat(const Word& a, const Word& b);

/// Geodesic normal form. Canonical per element for Free and FreeProduct;
/// for Surface it is the shortlex-least geodesic found by Dehn reduction
/// plus closure under half-relator exchanges.
Word normalize(const GroupPresentation& pres, const Word& w);

int word_length(const GroupPresentation& pres, const Word& w);

struct BallEntry {
  Word word;  // normalized representative
  int length;
};

/// One representative per group element of length <= R, BFS order.
std::vector<BallEntry> ball(const GroupPresentation& pres, int R,
                            std::size_t cap = defaults::ball_cap);

struct ConeType {
  int id;
  Word witness;                // a shortest word with this cone type
  std::vector<char> profile;   // membership pattern over the probe ball
};

struct ConeTypes {
  std::vector<ConeType> types;
  bool stabilized = false;
  bool certified = false;  // closed-form classification matched
  /// index into `types` for every ball element inspected
  std::map<std::string, int> classify;
};

/// Partition of ball elements by empirical cone type.
ConeTypes cone_types(const GroupPresentation& pres, int R,
                     int r_probe = defaults::cone_probe_radius);

/// Builds the geodesic automaton from stabilized cone types; edges
/// C -g-> gC for every generator g with |g w| = |w| + 1.
GeodesicAutomaton geodesic_automaton(const GroupPresentation& pres, int R);

/// Maximal recurrent subgraph: exactly the edges lying on directed cycles.
GeodesicAutomaton recurrent_subgraph(const GeodesicAutomaton& a);

struct TranslationLengthEstimate {
  double value;        // |gamma^n| / n at n = n_max
  double upper_bound;  // min_k |gamma^k| / k
};

TranslationLengthEstimate translation_length(const GroupPresentation& pres,
                                             const Word& gamma, int n_max);

}  // namespace domcert::group
