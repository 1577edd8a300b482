#pragma once

// Radial tree geometries and their atomic-measure encodings.
//
// A radially symmetric metric tree is fully described by its generation
// profile: edge n has a length l_n > 0 and leads to a vertex with branching
// number b_n > 1. The profile is encoded as an atomic measure on the halfline,
//
//     mu = sum_n beta_n * delta_{t_n},   beta_n = (sqrt(b_n)+1)/(sqrt(b_n)-1),
//
// where t_n = l_1 + ... + l_n is the distance of generation n from the root.
// Everything downstream (transfer matrices, Weyl disks, band structure)
// consumes this measure plus a tail descriptor; the tree is never
// materialised as a graph.
//
// Standing assumptions, enforced at construction:
//   * edge lengths bounded away from zero (gap separation gamma > 0),
//   * every branching number strictly greater than 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace treespec {

// Position tolerance for atom-pattern comparisons (tiling, occurrence).
inline constexpr double kPositionTol = 1e-9;
// Guard distance: evaluation points must stay this far from atoms.
inline constexpr double kAtomHitTol = 1e-12;

// Raised when input data violates the standing geometry assumptions.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// ---------------------------------------------------------------------------
// Weight <-> branching conversions
// ---------------------------------------------------------------------------

// beta = (sqrt(b)+1)/(sqrt(b)-1); strictly decreasing bijection (1,inf) -> (1,inf).
inline double weight_from_branching(double b) {
  if (!(b > 1.0))
    throw ValidationError("branching", "weight_from_branching: requires b > 1");
  const double r = std::sqrt(b);
  return (r + 1.0) / (r - 1.0);
}

// Inverse: b = ((beta+1)/(beta-1))^2.
inline double branching_from_weight(double beta) {
  if (!(beta > 1.0))
    throw ValidationError("weight", "branching_from_weight: requires beta > 1");
  const double r = (beta + 1.0) / (beta - 1.0);
  return r * r;
}

// sqrt(b) recovered from the weight without squaring and re-rooting.
inline double sqrt_branching_from_weight(double beta) {
  if (!(beta > 1.0))
    throw ValidationError("weight", "sqrt_branching_from_weight: requires beta > 1");
  return (beta + 1.0) / (beta - 1.0);
}

// ---------------------------------------------------------------------------
// AtomicMeasure
// ---------------------------------------------------------------------------

struct Atom {
  double position;
  double weight;
};

// A finite window of an atomic measure sum_n w_n delta_{p_n}.
//
// Invariants: positions strictly increasing with consecutive gaps >= the
// recorded separation, all weights > 1. Instances are immutable; every
// operation below returns a new value.
class AtomicMeasure {
 public:
  AtomicMeasure() : separation_(1.0), loc_bound_(0.0) {}

  // `separation_hint` <= 0 means "derive from the atom gaps".
  static AtomicMeasure from_atoms(std::vector<Atom> atoms, double separation_hint = 0.0) {
    double sep = separation_hint;
    if (!(sep > 0.0)) {
      sep = std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i < atoms.size(); ++i)
        sep = std::min(sep, atoms[i].position - atoms[i - 1].position);
      if (!std::isfinite(sep)) sep = 1.0;  // empty or singleton window
    }
    return AtomicMeasure(std::move(atoms), sep);
  }

  static AtomicMeasure free_measure() { return AtomicMeasure(); }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double position(std::size_t i) const { return atoms_[i].position; }
  double weight(std::size_t i) const { return atoms_[i].weight; }
  double separation() const { return separation_; }
  double loc_bound() const { return loc_bound_; }

  // Index of the first atom with position strictly greater than x.
  std::size_t first_after(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(atoms_.begin(), atoms_.end(), x,
                         [](double v, const Atom& a) { return v < a.position; }) -
        atoms_.begin());
  }

  // True when x is within `tol` of some atom position.
  bool hits_atom(double x, double tol = kAtomHitTol) const {
    std::size_t i = first_after(x - tol);
    return i < atoms_.size() && std::abs(atoms_[i].position - x) <= tol;
  }

 private:
  AtomicMeasure(std::vector<Atom> atoms, double separation)
      : atoms_(std::move(atoms)), separation_(separation) {
    if (!(separation_ > 0.0))
      throw ValidationError("separation", "AtomicMeasure: separation must be positive");
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!(atoms_[i].weight > 1.0))
        throw ValidationError("weight", "AtomicMeasure: atom weights must exceed 1");
      if (i > 0) {
        const double gap = atoms_[i].position - atoms_[i - 1].position;
        if (!(gap > 0.0))
          throw ValidationError("positions", "AtomicMeasure: positions must strictly increase");
        if (gap < separation_ - 1e-12)
          throw ValidationError("separation", "AtomicMeasure: gap below recorded separation");
      }
    }
    loc_bound_ = compute_norm_loc();
  }

  // Exact sup over closed unit windows [x, x+1]. For an atomic measure the
  // supremum is attained with a window whose left end sits on an atom, so it
  // suffices to anchor at every atom position.
  double compute_norm_loc() const {
    double best = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = i; j < atoms_.size() && atoms_[j].position <= atoms_[i].position + 1.0 + 1e-15;
           ++j)
        sum += atoms_[j].weight;
      best = std::max(best, sum);
    }
    return best;
  }

  std::vector<Atom> atoms_;
  double separation_;
  double loc_bound_;
};

// sup_x |mu|([x, x+1]) over closed unit windows.
inline double norm_loc(const AtomicMeasure& mu) { return mu.loc_bound(); }

// Translate: (S_x mu)(A) = mu(A + x), i.e. atom positions decrease by x.
inline AtomicMeasure shift(const AtomicMeasure& mu, double x) {
  std::vector<Atom> atoms = mu.atoms();
  for (Atom& a : atoms) a.position -= x;
  return AtomicMeasure::from_atoms(std::move(atoms), mu.separation());
}

// Restriction to the half-open interval [lo, hi).
inline AtomicMeasure restrict_to(const AtomicMeasure& mu, double lo, double hi) {
  std::vector<Atom> atoms;
  for (const Atom& a : mu.atoms())
    if (a.position >= lo && a.position < hi) atoms.push_back(a);
  return AtomicMeasure::from_atoms(std::move(atoms), mu.separation());
}

// Atoms strictly to the right of x (the tail measure of a halfline operator).
inline AtomicMeasure tail_from(const AtomicMeasure& mu, double x) {
  std::vector<Atom> atoms;
  for (const Atom& a : mu.atoms())
    if (a.position > x) atoms.push_back(a);
  return AtomicMeasure::from_atoms(std::move(atoms), mu.separation());
}

// ---------------------------------------------------------------------------
// TreeGeometry
// ---------------------------------------------------------------------------

enum class GeometryKind { free_line, explicit_list, eventually_periodic, substitution };

struct Edge {
  double length;
  double branching;
};

// Substitution system over single-character symbols; each symbol names an
// edge type and the rules rewrite symbols into words.
struct SubstitutionSystem {
  std::map<char, Edge> alphabet;
  std::map<char, std::string> rules;
  std::string axiom;
  std::size_t depth = 10;
};

// Validated generation profile of a radial tree. Immutable; expansion of the
// generator to any requested edge count is deterministic.
class TreeGeometry {
 public:
  // The mu = 0 halfline baseline (no branching vertices); used for
  // diagnostics and free-line oracles.
  static TreeGeometry free_line() {
    TreeGeometry g;
    g.kind_ = GeometryKind::free_line;
    g.gamma_ = 1.0;
    g.min_branching_ = std::numeric_limits<double>::infinity();
    g.integral_branchings_ = true;
    return g;
  }

  static TreeGeometry explicit_list(std::vector<Edge> edges) {
    TreeGeometry g;
    g.kind_ = GeometryKind::explicit_list;
    g.edges_ = std::move(edges);
    g.validate_edges(g.edges_);
    g.finish_scalars(g.edges_);
    return g;
  }

  static TreeGeometry eventually_periodic(std::vector<Edge> edges, std::size_t preperiod,
                                          std::size_t period) {
    TreeGeometry g;
    g.kind_ = GeometryKind::eventually_periodic;
    g.edges_ = std::move(edges);
    g.preperiod_ = preperiod;
    g.period_ = period;
    if (period == 0)
      throw ValidationError("period", "eventually periodic geometry needs period >= 1");
    if (g.edges_.size() != preperiod + period)
      throw ValidationError("edges", "edge list must hold exactly preperiod + period entries");
    g.validate_edges(g.edges_);
    g.finish_scalars(g.edges_);
    return g;
  }

  static TreeGeometry substitution(SubstitutionSystem sys) {
    TreeGeometry g;
    g.kind_ = GeometryKind::substitution;
    g.subst_ = std::move(sys);
    const auto& s = *g.subst_;
    if (s.alphabet.empty())
      throw ValidationError("alphabet", "substitution geometry needs a nonempty alphabet");
    if (s.axiom.empty())
      throw ValidationError("axiom", "substitution geometry needs a nonempty axiom");
    std::vector<Edge> edges;
    for (const auto& [sym, e] : s.alphabet) edges.push_back(e);
    g.validate_edges(edges);
    for (char c : s.axiom)
      if (!s.alphabet.count(c))
        throw ValidationError("axiom", std::string("axiom symbol not in alphabet: ") + c);
    for (const auto& [sym, word] : s.rules) {
      if (!s.alphabet.count(sym))
        throw ValidationError("rules", std::string("rule for unknown symbol: ") + sym);
      if (word.empty())
        throw ValidationError("rules", std::string("empty rule for symbol: ") + sym);
      for (char c : word)
        if (!s.alphabet.count(c))
          throw ValidationError("rules", std::string("rule output symbol not in alphabet: ") + c);
    }
    for (const auto& [sym, e] : s.alphabet)
      if (!s.rules.count(sym))
        throw ValidationError("rules", std::string("missing rule for symbol: ") + sym);
    g.finish_scalars(edges);
    g.word_ = g.expand_word(std::max<std::size_t>(s.depth, 1), 0);
    return g;
  }

  GeometryKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  double min_branching() const { return min_branching_; }
  bool integral_branchings() const { return integral_branchings_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t preperiod() const { return preperiod_; }
  std::size_t period() const { return period_; }
  const SubstitutionSystem& substitution_system() const { return *subst_; }

  // True when the generator produces arbitrarily many edges.
  bool unbounded() const {
    return kind_ == GeometryKind::eventually_periodic || kind_ == GeometryKind::substitution;
  }

  // Number of edges an explicit list provides (infinite otherwise).
  std::size_t explicit_count() const { return edges_.size(); }

  // Edge n, 1-based generation index.
  Edge edge(std::size_t n) const {
    if (n == 0) throw std::invalid_argument("edge index is 1-based");
    switch (kind_) {
      case GeometryKind::free_line:
        throw std::invalid_argument("free profile has no edges");
      case GeometryKind::explicit_list:
        if (n > edges_.size())
          throw std::invalid_argument("explicit geometry has no edge " + std::to_string(n));
        return edges_[n - 1];
      case GeometryKind::eventually_periodic:
        if (n <= preperiod_) return edges_[n - 1];
        return edges_[preperiod_ + (n - preperiod_ - 1) % period_];
      case GeometryKind::substitution: {
        const std::string word = n <= word_.size() ? word_ : expand_word(subst_->depth, n);
        return subst_->alphabet.at(word[n - 1]);
      }
    }
    throw std::logic_error("unreachable");
  }

  // First `count` edges of the expansion.
  std::vector<Edge> expand(std::size_t count) const {
    std::vector<Edge> out;
    out.reserve(count);
    if (kind_ == GeometryKind::substitution) {
      const std::string word = count <= word_.size() ? word_ : expand_word(subst_->depth, count);
      for (std::size_t i = 0; i < count; ++i) out.push_back(subst_->alphabet.at(word[i]));
      return out;
    }
    for (std::size_t n = 1; n <= count; ++n) out.push_back(edge(n));
    return out;
  }

  // Substitution word prefix (substitution geometries only).
  std::string word_prefix(std::size_t count) const {
    const std::string word = count <= word_.size() ? word_ : expand_word(subst_->depth, count);
    return word.substr(0, std::min(count, word.size()));
  }

 private:
  TreeGeometry() = default;

  void validate_edges(const std::vector<Edge>& edges) const {
    if (edges.empty()) throw ValidationError("edges", "geometry has no edges");
    for (const Edge& e : edges) {
      if (!(e.length > 0.0))
        throw ValidationError("length", "edge length must be positive (lengths bounded away from 0)");
      if (!(e.branching > 1.0))
        throw ValidationError("branching", "branching must exceed 1 (at least two forward neighbors)");
    }
  }

  void finish_scalars(const std::vector<Edge>& edges) {
    gamma_ = std::numeric_limits<double>::infinity();
    min_branching_ = std::numeric_limits<double>::infinity();
    integral_branchings_ = true;
    for (const Edge& e : edges) {
      gamma_ = std::min(gamma_, e.length);
      min_branching_ = std::min(min_branching_, e.branching);
      if (std::abs(e.branching - std::round(e.branching)) > 1e-9) integral_branchings_ = false;
    }
  }

  // Apply the rules at least `depth` times and until the word covers
  // `min_len` symbols. Pure function of the system; deterministic.
  std::string expand_word(std::size_t depth, std::size_t min_len) const {
    std::string w = subst_->axiom;
    std::size_t iter = 0;
    while (iter < depth || w.size() < min_len) {
      std::string next;
      next.reserve(w.size() * 2);
      for (char c : w) next += subst_->rules.at(c);
      if (next.size() <= w.size() && next == w && w.size() < min_len)
        throw ValidationError("rules", "substitution does not expand");
      w = std::move(next);
      if (++iter > 64)
        throw ValidationError("depth", "substitution expansion exceeded 64 iterations");
      if (w.size() >= min_len && iter >= depth) break;
    }
    return w;
  }

  GeometryKind kind_ = GeometryKind::explicit_list;
  std::vector<Edge> edges_;
  std::size_t preperiod_ = 0;
  std::size_t period_ = 0;
  std::optional<SubstitutionSystem> subst_;
  std::string word_;
  double gamma_ = 0.0;
  double min_branching_ = 0.0;
  bool integral_branchings_ = false;
};

// Materialise the first `count` atoms of the encoding measure.
inline AtomicMeasure build_measure(const TreeGeometry& g, std::size_t count) {
  if (g.kind() == GeometryKind::free_line) return AtomicMeasure::free_measure();
  if (count < 1) throw std::invalid_argument("build_measure: count must be >= 1");
  if (!g.unbounded() && count > g.explicit_count())
    throw std::invalid_argument("build_measure: explicit geometry has only " +
                                std::to_string(g.explicit_count()) + " edges");
  const std::vector<Edge> edges = g.expand(count);
  std::vector<Atom> atoms;
  atoms.reserve(count);
  double t = 0.0;
  for (const Edge& e : edges) {
    t += e.length;
    atoms.push_back({t, weight_from_branching(e.branching)});
  }
  return AtomicMeasure::from_atoms(std::move(atoms), g.gamma());
}

// ---------------------------------------------------------------------------
// Halfline decomposition
// ---------------------------------------------------------------------------

// Dirichlet halfline operator at `origin` with jump atoms strictly to the right.
struct HalflineOperator {
  AtomicMeasure measure;  // atoms at the original tree positions t_n, n > generation
  double origin;          // t_k, Dirichlet endpoint
  std::size_t generation;

  // Shifted copy with the Dirichlet endpoint at 0.
  AtomicMeasure normalized() const { return shift(measure, origin); }
};

struct DecompositionEntry {
  HalflineOperator op;
  // b_1 ... b_{k-1} (b_k - 1); generation 0 has multiplicity 1. Unavailable
  // when branchings are not integers or the product overflows.
  std::optional<std::uint64_t> multiplicity;
};

// Direct-sum decomposition of the tree Laplacian into halfline operators,
// one per generation k = 0..max_generation, each carrying the tail measure
// beyond t_k and the degeneracy of that generation.
inline std::vector<DecompositionEntry> decompose_tree(const TreeGeometry& g,
                                                      std::size_t max_generation,
                                                      std::size_t window_atoms = 0) {
  if (g.kind() == GeometryKind::free_line) {
    if (max_generation > 0)
      throw std::invalid_argument("decompose_tree: free profile has only generation 0");
    return {{{AtomicMeasure::free_measure(), 0.0, 0}, 1}};
  }
  std::size_t count = window_atoms;
  if (count == 0) count = std::max<std::size_t>(max_generation + 32, 64);
  if (!g.unbounded()) count = std::min(count, g.explicit_count());
  if (max_generation >= count)
    throw std::invalid_argument("decompose_tree: window too small for requested generation");

  const AtomicMeasure full = build_measure(g, count);
  const std::vector<Edge> edges = g.expand(count);

  std::vector<DecompositionEntry> out;
  out.reserve(max_generation + 1);
  for (std::size_t k = 0; k <= max_generation; ++k) {
    const double origin = k == 0 ? 0.0 : full.position(k - 1);
    DecompositionEntry entry{{tail_from(full, origin), origin, k}, std::nullopt};
    if (k == 0) {
      entry.multiplicity = 1;
    } else if (g.integral_branchings()) {
      std::uint64_t m = 1;
      bool ok = true;
      for (std::size_t j = 1; j + 1 <= k && ok; ++j) {
        const auto b = static_cast<std::uint64_t>(std::llround(edges[j - 1].branching));
        ok = !__builtin_mul_overflow(m, b, &m);
      }
      if (ok) {
        const auto bk = static_cast<std::uint64_t>(std::llround(edges[k - 1].branching));
        ok = !__builtin_mul_overflow(m, bk - 1, &m);
      }
      if (ok) entry.multiplicity = m;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace treespec
