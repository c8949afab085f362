#include "domcert/group.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <limits>
#include <set>

namespace domcert::group {

namespace {

std::string word_key(const Word& w) {
  std::string s;
  s.reserve(w.size());
  for (int g : w) s.push_back(static_cast<char>(g + 1));
  return s;
}

bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

std::vector<AutomatonEdge> GeodesicAutomaton::edges_from(int tail) const {
  std::vector<AutomatonEdge> out;
  for (const auto& e : edges)
    if (e.tail == tail) out.push_back(e);
  return out;
}

bool GeodesicAutomaton::has_vertex(int id) const {
  return std::find(vertex_ids.begin(), vertex_ids.end(), id) != vertex_ids.end();
}

long long GeodesicAutomaton::count_walks(int n) const {
  int maxid = 0;
  for (int v : vertex_ids) maxid = std::max(maxid, v);
  std::vector<long long> cur(maxid + 1, 0), nxt(maxid + 1, 0);
  cur[start] = 1;
  for (int step = 0; step < n; ++step) {
    std::fill(nxt.begin(), nxt.end(), 0);
    for (const auto& e : edges) nxt[e.head] += cur[e.tail];
    std::swap(cur, nxt);
  }
  long long total = 0;
  for (long long c : cur) total += c;
  return total;
}

GroupPresentation GroupPresentation::free_group(int rank) {
  if (rank < 1 || rank > 13) fail("BadInput", "free rank out of range");
  GroupPresentation p;
  p.family_ = Family::Free;
  p.rank_ = rank;
  for (int i = 0; i < rank; ++i) p.names_.push_back(std::string(1, char('a' + i)));
  for (int i = 0; i < rank; ++i) p.names_.push_back(std::string(1, char('A' + i)));
  p.inverse_.resize(2 * rank);
  for (int i = 0; i < rank; ++i) {
    p.inverse_[i] = i + rank;
    p.inverse_[i + rank] = i;
  }
  return p;
}

GroupPresentation GroupPresentation::free_product(int m, int n) {
  if (m < 2 || n < 2) fail("BadInput", "free product orders must be >= 2");
  GroupPresentation p;
  p.family_ = Family::FreeProduct;
  p.m_ = m;
  p.n_ = n;
  p.names_.push_back("a");
  p.inverse_.push_back(m == 2 ? 0 : 1);
  if (m > 2) {
    p.names_.push_back("A");
    p.inverse_.push_back(0);
  }
  const int b = static_cast<int>(p.names_.size());
  p.names_.push_back("b");
  p.inverse_.push_back(n == 2 ? b : b + 1);
  if (n > 2) {
    p.names_.push_back("B");
    p.inverse_.push_back(b);
  }
  Word ra(m, 0), rb(n, b);
  p.relators_ = {ra, rb};
  return p;
}

GroupPresentation GroupPresentation::surface(int genus) {
  if (genus < 2) fail("BadInput", "surface genus must be >= 2");
  GroupPresentation p;
  p.family_ = Family::Surface;
  p.genus_ = genus;
  for (int i = 1; i <= genus; ++i) {
    p.names_.push_back("a" + std::to_string(i));
    p.names_.push_back("b" + std::to_string(i));
  }
  for (int i = 1; i <= genus; ++i) {
    p.names_.push_back("A" + std::to_string(i));
    p.names_.push_back("B" + std::to_string(i));
  }
  const int k = 2 * genus;
  p.inverse_.resize(2 * k);
  for (int i = 0; i < k; ++i) {
    p.inverse_[i] = i + k;
    p.inverse_[i + k] = i;
  }
  Word rel;
  for (int i = 0; i < genus; ++i) {
    const int a = 2 * i, b = 2 * i + 1;
    rel.push_back(a);
    rel.push_back(b);
    rel.push_back(a + k);
    rel.push_back(b + k);
  }
  p.relators_ = {rel};
  return p;
}

GroupPresentation GroupPresentation::from_automaton(GeodesicAutomaton automaton,
                                                    std::vector<std::string> labels) {
  GroupPresentation p;
  p.family_ = Family::Automaton;
  p.names_ = std::move(labels);
  p.inverse_.assign(p.names_.size(), -1);
  // pair x with X by case swap; unpaired labels are self-inverse
  for (std::size_t i = 0; i < p.names_.size(); ++i) {
    std::string swapped = p.names_[i];
    for (auto& c : swapped) {
      c = std::isupper(static_cast<unsigned char>(c))
              ? static_cast<char>(std::tolower(c))
              : static_cast<char>(std::toupper(c));
    }
    auto it = std::find(p.names_.begin(), p.names_.end(), swapped);
    p.inverse_[i] =
        it == p.names_.end() ? static_cast<int>(i) : static_cast<int>(it - p.names_.begin());
  }
  p.supplied_ = std::move(automaton);
  return p;
}

int GroupPresentation::generator_index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  fail("BadInput", "unknown generator '" + name + "'");
}

Word parse_word(const GroupPresentation& pres, const std::vector<std::string>& tokens) {
  Word w;
  w.reserve(tokens.size());
  for (const auto& t : tokens) w.push_back(pres.generator_index(t));
  return w;
}

std::string format_word(const GroupPresentation& pres, const Word& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ' ';
    s += pres.name(w[i]);
  }
  return s;
}

Word inverse_word(const GroupPresentation& pres, const Word& w) {
  Word out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(pres.inverse(*it));
  return out;
}

Word concat(const Word& a, const Word& b) {
  Word out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// ---------------------------------------------------------------------------
// normal forms

namespace {

Word free_reduce(const GroupPresentation& pres, const Word& w) {
  Word out;
  for (int g : w) {
    if (!out.empty() && out.back() == pres.inverse(g)) {
      out.pop_back();
    } else {
      out.push_back(g);
    }
  }
  return out;
}

// free product syllables ----------------------------------------------------

struct Syllable {
  int factor;  // 0 for <a>, 1 for <b>
  int exp;     // exponent mod order, in (0, order)
};

int fp_factor(const GroupPresentation& pres, int g) {
  const char c = pres.name(g)[0];
  return (c == 'a' || c == 'A') ? 0 : 1;
}

int fp_order(const GroupPresentation& pres, int factor) {
  return factor == 0 ? pres.factor_m() : pres.factor_n();
}

int fp_exp(const GroupPresentation& pres, int g) {
  const char c = pres.name(g)[0];
  return (c == 'a' || c == 'b') ? 1 : -1;
}

int cyclic_len(int e, int order) {
  const int r = ((e % order) + order) % order;
  return std::min(r, order - r);
}

// The stack alternates factors, so merging can only involve the incoming
// letter and the current top.
std::vector<Syllable> fp_syllables(const GroupPresentation& pres, const Word& w) {
  std::vector<Syllable> stack;
  for (int g : w) {
    const int f = fp_factor(pres, g);
    const int order = fp_order(pres, f);
    int e = fp_exp(pres, g);
    if (!stack.empty() && stack.back().factor == f) {
      e += stack.back().exp;
      stack.pop_back();
    }
    e = ((e % order) + order) % order;
    if (e != 0) stack.push_back({f, e});
  }
  return stack;
}

Word fp_spell(const GroupPresentation& pres, const std::vector<Syllable>& sylls) {
  Word out;
  for (const auto& s : sylls) {
    const int order = fp_order(pres, s.factor);
    const int pos = s.factor == 0 ? pres.generator_index("a") : pres.generator_index("b");
    const int r = s.exp;
    if (r <= order - r) {
      for (int i = 0; i < r; ++i) out.push_back(pos);
    } else {
      const int neg = pres.inverse(pos);
      for (int i = 0; i < order - r; ++i) out.push_back(neg);
    }
  }
  return out;
}

// surface groups --------------------------------------------------------------

struct RelatorSegments {
  // all cyclic rotations of the relator and of its inverse
  std::vector<Word> rotations;
  int length = 0;
};

RelatorSegments surface_segments(const GroupPresentation& pres) {
  RelatorSegments rs;
  const Word& rel = pres.relators()[0];
  rs.length = static_cast<int>(rel.size());
  Word inv = inverse_word(pres, rel);
  for (int s = 0; s < rs.length; ++s) {
    Word r1(rel.begin() + s, rel.end());
    r1.insert(r1.end(), rel.begin(), rel.begin() + s);
    rs.rotations.push_back(r1);
    Word r2(inv.begin() + s, inv.end());
    r2.insert(r2.end(), inv.begin(), inv.begin() + s);
    rs.rotations.push_back(r2);
  }
  return rs;
}

// Replace w[pos, pos+piece) matching rotation[0, piece) by the inverse of
// the rotation's complement rotation[piece, len).
Word apply_relator_swap(const GroupPresentation& pres, const Word& w, int pos,
                        const Word& rotation, int piece) {
  Word out(w.begin(), w.begin() + pos);
  Word tail(rotation.begin() + piece, rotation.end());
  Word repl = inverse_word(pres, tail);
  out.insert(out.end(), repl.begin(), repl.end());
  out.insert(out.end(), w.begin() + pos + piece, w.end());
  return out;
}

// One Dehn step: find a subword longer than half a relator cycle and replace
// it by the shorter complement.
bool dehn_shorten_once(const GroupPresentation& pres, const RelatorSegments& rs,
                       Word& w) {
  const int half = rs.length / 2;
  for (int piece = std::min<int>(rs.length, w.size()); piece > half; --piece) {
    for (int pos = 0; pos + piece <= static_cast<int>(w.size()); ++pos) {
      for (const auto& rot : rs.rotations) {
        if (std::equal(rot.begin(), rot.begin() + piece, w.begin() + pos)) {
          w = free_reduce(pres, apply_relator_swap(pres, w, pos, rot, piece));
          return true;
        }
      }
    }
  }
  return false;
}

Word surface_dehn_reduce(const GroupPresentation& pres, const RelatorSegments& rs,
                         Word w) {
  w = free_reduce(pres, w);
  while (dehn_shorten_once(pres, rs, w)) {
  }
  return w;
}

const RelatorSegments& surface_cache(const GroupPresentation& pres) {
  static thread_local std::map<int, RelatorSegments> cache;
  auto it = cache.find(pres.genus());
  if (it == cache.end()) it = cache.emplace(pres.genus(), surface_segments(pres)).first;
  return it->second;
}

// Shortlex-least geodesic representative: closure of the Dehn-reduced word
// under half-relator exchanges (which preserve length).
Word surface_canonical(const GroupPresentation& pres, const Word& w0) {
  const RelatorSegments& rs = surface_cache(pres);
  Word base = surface_dehn_reduce(pres, rs, w0);
  const int half = rs.length / 2;
  std::set<std::string> seen;
  std::deque<Word> queue;
  Word best = base;
  queue.push_back(base);
  seen.insert(word_key(base));
  while (!queue.empty()) {
    if (seen.size() > 20000) fail("BallTooLarge", "surface canonicalization overflow");
    Word cur = queue.front();
    queue.pop_front();
    if (shortlex_less(cur, best)) best = cur;
    for (int pos = 0; pos + half <= static_cast<int>(cur.size()); ++pos) {
      for (const auto& rot : rs.rotations) {
        if (!std::equal(rot.begin(), rot.begin() + half, cur.begin() + pos)) continue;
        Word next = free_reduce(pres, apply_relator_swap(pres, cur, pos, rot, half));
        if (next.size() < cur.size()) {
          // the exchange exposed a shortening; restart from the shorter word
          return surface_canonical(pres, next);
        }
        auto key = word_key(next);
        if (seen.insert(key).second) queue.push_back(next);
      }
    }
  }
  return best;
}

}  // namespace

Word normalize(const GroupPresentation& pres, const Word& w) {
  for (int g : w) {
    if (g < 0 || g >= pres.num_generators()) fail("BadInput", "letter out of range");
  }
  switch (pres.family()) {
    case Family::Free:
      return free_reduce(pres, w);
    case Family::FreeProduct:
      return fp_spell(pres, fp_syllables(pres, w));
    case Family::Surface:
      return surface_canonical(pres, w);
    case Family::Automaton:
      fail("UnsupportedFamily", "explicit automaton carries no normalization table");
  }
  return {};
}

int word_length(const GroupPresentation& pres, const Word& w) {
  return static_cast<int>(normalize(pres, w).size());
}

std::vector<BallEntry> ball(const GroupPresentation& pres, int R, std::size_t cap) {
  if (R < 0) fail("BadInput", "negative radius");
  std::vector<BallEntry> out;
  if (pres.family() == Family::Automaton) {
    // one entry per walk; assumes the supplied automaton is geodesic
    const auto& autom = *pres.supplied_automaton();
    struct Item {
      int vertex;
      Word word;  // group word: labels in reverse walk order
    };
    std::deque<Item> layer{{autom.start, {}}};
    out.push_back({{}, 0});
    for (int n = 1; n <= R; ++n) {
      std::deque<Item> next;
      for (const auto& item : layer) {
        for (const auto& e : autom.edges_from(item.vertex)) {
          Word w;
          w.push_back(e.label);
          w.insert(w.end(), item.word.begin(), item.word.end());
          next.push_back({e.head, w});
          out.push_back({w, n});
          if (out.size() > cap) fail("BallTooLarge", "ball cap exceeded");
        }
      }
      layer = std::move(next);
    }
    return out;
  }

  std::set<std::string> seen;
  std::deque<Word> layer;
  layer.push_back({});
  seen.insert(word_key({}));
  out.push_back({{}, 0});
  for (int n = 1; n <= R; ++n) {
    std::deque<Word> next;
    for (const auto& w : layer) {
      for (int g = 0; g < pres.num_generators(); ++g) {
        Word cand = w;
        cand.push_back(g);
        Word norm = normalize(pres, cand);
        if (static_cast<int>(norm.size()) != n) continue;
        if (!seen.insert(word_key(norm)).second) continue;
        next.push_back(norm);
        out.push_back({norm, n});
        if (out.size() > cap) fail("BallTooLarge", "ball cap exceeded");
      }
    }
    layer = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// cone types

namespace {

// closed-form cone type keys for the certified families
std::optional<std::string> closed_form_key(const GroupPresentation& pres,
                                           const Word& w) {
  if (pres.family() == Family::Free) {
    return w.empty() ? std::string("id") : "first:" + std::to_string(w[0]);
  }
  if (pres.family() == Family::FreeProduct) {
    if (w.empty()) return std::string("id");
    // determined by the first syllable's factor and its left-extension set
    const int f = fp_factor(pres, w[0]);
    const int order = fp_order(pres, f);
    int e0 = 0;
    for (int g : w) {
      if (fp_factor(pres, g) != f) break;
      e0 += fp_exp(pres, g);
    }
    e0 = ((e0 % order) + order) % order;
    std::string key = "factor:" + std::to_string(f) + ";ext:";
    for (int e = 1; e < order; ++e) {
      if (cyclic_len(e + e0, order) == cyclic_len(e, order) + cyclic_len(e0, order)) {
        key += std::to_string(e) + ",";
      }
    }
    return key;
  }
  return std::nullopt;
}

std::vector<char> cone_profile(const GroupPresentation& pres,
                               const std::vector<BallEntry>& probes, const Word& w) {
  std::vector<char> prof(probes.size());
  const int len = static_cast<int>(w.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const int total = word_length(pres, concat(probes[i].word, w));
    prof[i] = (total == probes[i].length + len) ? 1 : 0;
  }
  return prof;
}

}  // namespace

ConeTypes cone_types(const GroupPresentation& pres, int R, int r_probe) {
  ConeTypes ct;
  if (pres.family() == Family::Automaton) {
    const auto& autom = *pres.supplied_automaton();
    for (int id : autom.vertex_ids) ct.types.push_back({id, {}, {}});
    ct.stabilized = true;
    ct.certified = autom.certified;
    return ct;
  }
  if (R < r_probe + 2) fail("BadInput", "radius too small for the probe");

  auto elements = ball(pres, R - r_probe - 1);
  auto probes = ball(pres, r_probe);
  auto probes_next = ball(pres, r_probe + 1);

  std::map<std::vector<char>, int> classes;       // profile -> type index
  std::map<std::vector<char>, int> classes_next;  // refined partition
  std::map<std::string, int> assign_next;

  for (const auto& el : elements) {
    auto prof = cone_profile(pres, probes, el.word);
    auto [it, inserted] = classes.try_emplace(prof, static_cast<int>(ct.types.size()));
    if (inserted) ct.types.push_back({it->second, el.word, prof});
    ct.classify[word_key(el.word)] = it->second;

    auto prof_next = cone_profile(pres, probes_next, el.word);
    auto [jt, ins2] =
        classes_next.try_emplace(prof_next, static_cast<int>(classes_next.size()));
    (void)ins2;
    assign_next[word_key(el.word)] = jt->second;
  }

  // stabilization: the refined partition must induce the same classes
  bool refinement_consistent = classes.size() == classes_next.size();
  if (refinement_consistent) {
    std::map<int, int> match;
    for (const auto& el : elements) {
      const std::string key = word_key(el.word);
      auto [it, inserted] = match.try_emplace(ct.classify[key], assign_next[key]);
      if (!inserted && it->second != assign_next[key]) refinement_consistent = false;
    }
  }
  ct.stabilized = refinement_consistent;

  // closed-form certification for the built-in families
  if (closed_form_key(pres, {})) {
    bool ok = true;
    std::map<int, std::string> cls_to_key;
    std::set<std::string> used;
    for (const auto& el : elements) {
      auto k = closed_form_key(pres, el.word);
      const int c = ct.classify[word_key(el.word)];
      auto [it, inserted] = cls_to_key.try_emplace(c, *k);
      if (inserted) {
        if (!used.insert(*k).second) ok = false;  // two classes share a key
      } else if (it->second != *k) {
        ok = false;
      }
    }
    ct.certified = ok && ct.stabilized;
  }
  return ct;
}

GeodesicAutomaton geodesic_automaton(const GroupPresentation& pres, int R) {
  if (pres.family() == Family::Automaton) return *pres.supplied_automaton();

  ConeTypes ct = cone_types(pres, R);
  if (!ct.stabilized) fail("NotStabilized", "cone type partition did not stabilize");

  GeodesicAutomaton autom;
  autom.certified = ct.certified;
  for (const auto& t : ct.types) autom.vertex_ids.push_back(t.id);
  autom.start = ct.classify.at(word_key(Word{}));

  int max_witness = 0;
  for (const auto& t : ct.types)
    max_witness = std::max(max_witness, static_cast<int>(t.witness.size()));
  if (max_witness + 1 > R - defaults::cone_probe_radius - 1) {
    fail("NotStabilized", "radius too small to type one-step extensions");
  }

  for (const auto& t : ct.types) {
    for (int g = 0; g < pres.num_generators(); ++g) {
      Word ext = t.witness;
      ext.insert(ext.begin(), g);
      Word norm = normalize(pres, ext);
      if (norm.size() != t.witness.size() + 1) continue;  // g not in C
      auto it = ct.classify.find(word_key(norm));
      if (it == ct.classify.end()) fail("NotStabilized", "extension left the typed ball");
      autom.edges.push_back({t.id, g, it->second});
    }
  }

  // empirical well-definedness: every typed element must route like its type
  auto elements = ball(pres, std::max(0, R - defaults::cone_probe_radius - 2));
  for (const auto& el : elements) {
    const int c = ct.classify.at(word_key(el.word));
    for (int g = 0; g < pres.num_generators(); ++g) {
      Word ext = el.word;
      ext.insert(ext.begin(), g);
      Word norm = normalize(pres, ext);
      const bool extends = norm.size() == el.word.size() + 1;
      const AutomatonEdge* edge = nullptr;
      for (const auto& e : autom.edges) {
        if (e.tail == c && e.label == g) edge = &e;
      }
      if (extends != (edge != nullptr)) {
        fail("NotStabilized", "cone type profile is not left-multiplication aware");
      }
      if (edge) {
        auto it = ct.classify.find(word_key(norm));
        if (it != ct.classify.end() && it->second != edge->head) {
          fail("NotStabilized", "edge target is ambiguous");
        }
      }
    }
  }
  return autom;
}

GeodesicAutomaton recurrent_subgraph(const GeodesicAutomaton& a) {
  int maxid = 0;
  for (int v : a.vertex_ids) maxid = std::max(maxid, v);
  std::vector<std::vector<int>> adj(maxid + 1);
  for (const auto& e : a.edges) adj[e.tail].push_back(e.head);

  // iterative Tarjan SCC
  std::vector<int> index(maxid + 1, -1), low(maxid + 1, 0), comp(maxid + 1, -1);
  std::vector<char> onstack(maxid + 1, 0);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;
  struct Frame {
    int v;
    std::size_t child;
  };
  for (int root : a.vertex_ids) {
    if (index[root] != -1) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    onstack[root] = 1;
    while (!frames.empty()) {
      auto& fr = frames.back();
      if (fr.child < adj[fr.v].size()) {
        const int w = adj[fr.v][fr.child++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          onstack[w] = 1;
          frames.push_back({w, 0});
        } else if (onstack[w]) {
          low[fr.v] = std::min(low[fr.v], index[w]);
        }
      } else {
        if (low[fr.v] == index[fr.v]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            onstack[w] = 0;
            comp[w] = ncomp;
            if (w == fr.v) break;
          }
          ++ncomp;
        }
        const int v = fr.v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
      }
    }
  }

  std::vector<int> comp_size(ncomp, 0);
  std::vector<char> comp_selfloop(ncomp, 0);
  for (int v : a.vertex_ids) comp_size[comp[v]]++;
  for (const auto& e : a.edges) {
    if (e.tail == e.head) comp_selfloop[comp[e.tail]] = 1;
  }

  GeodesicAutomaton out;
  out.certified = a.certified;
  std::set<int> kept;
  for (const auto& e : a.edges) {
    if (comp[e.tail] != comp[e.head]) continue;
    if (comp_size[comp[e.tail]] == 1 && !comp_selfloop[comp[e.tail]]) continue;
    out.edges.push_back(e);
    kept.insert(e.tail);
    kept.insert(e.head);
  }
  if (out.edges.empty()) fail("EmptyRecurrentPart", "no directed cycle in the automaton");
  out.vertex_ids.assign(kept.begin(), kept.end());
  out.start = out.vertex_ids.front();
  return out;
}

TranslationLengthEstimate translation_length(const GroupPresentation& pres,
                                             const Word& gamma, int n_max) {
  Word g = normalize(pres, gamma);
  if (g.empty()) fail("BadInput", "translation length of the trivial element");
  if (n_max < 1) fail("BadInput", "n_max must be positive");
  Word power;
  double best = std::numeric_limits<double>::infinity();
  double last = 0;
  for (int k = 1; k <= n_max; ++k) {
    power = normalize(pres, concat(power, g));
    last = static_cast<double>(power.size()) / k;
    best = std::min(best, last);
  }
  return {last, best};
}

}  // namespace domcert::group
