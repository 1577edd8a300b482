#pragma once

// Finite-local-complexity combinatorics for atomic measures: pieces,
// concatenation, occurrence, greedy tiling against a finite alphabet
// (finite decomposition property), the simple-f.d.p. check, and eventual
// periodicity detection on finite symbol windows.
//
// Conventions: a piece lives on a left-closed right-open interval
// [start, start+length); an atom sitting exactly at the right endpoint
// belongs to the next piece. Atom positions are compared with an absolute
// tolerance of kPositionTol (summed gap coordinates accumulate roundoff),
// weights are compared exactly (they come from a finite alphabet).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treespec/measure.hpp"

namespace treespec {

// ---------------------------------------------------------------------------
// Piece
// ---------------------------------------------------------------------------

struct PieceAtom {
  double offset;  // relative to the interval start, in [0, length)
  double weight;
};

struct Piece {
  double start = 0.0;
  double length = 0.0;
  std::vector<PieceAtom> atoms;  // offsets strictly increasing

  void validate() const {
    if (!(length > 0.0)) throw std::invalid_argument("Piece: length must be positive");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (atoms[i].offset < -kPositionTol || atoms[i].offset >= length)
        throw std::invalid_argument("Piece: atom offset outside [0, length)");
      if (i > 0 && atoms[i].offset <= atoms[i - 1].offset)
        throw std::invalid_argument("Piece: atom offsets must strictly increase");
    }
  }
};

inline Piece normalized(Piece p) {
  p.start = 0.0;
  return p;
}

inline Piece with_start(Piece p, double start) {
  p.start = start;
  return p;
}

// Restriction of mu to [lo, hi) viewed as a piece anchored at lo.
inline Piece extract_piece(const AtomicMeasure& mu, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("extract_piece: needs lo < hi");
  Piece p;
  p.start = lo;
  p.length = hi - lo;
  for (const Atom& a : mu.atoms())
    if (a.position >= lo && a.position < hi) p.atoms.push_back({a.position - lo, a.weight});
  return p;
}

// Glue pieces end to end. The result starts where the first piece starts,
// has the summed length, and piece j's atoms are translated by the total
// length of its predecessors.
inline Piece concatenate(const std::vector<Piece>& pieces) {
  if (pieces.empty()) throw std::invalid_argument("concatenate: empty sequence");
  Piece out;
  out.start = pieces.front().start;
  double shift_by = 0.0;
  for (const Piece& p : pieces) {
    p.validate();
    for (const PieceAtom& a : p.atoms) out.atoms.push_back({shift_by + a.offset, a.weight});
    shift_by += p.length;
  }
  out.length = shift_by;
  return out;
}

// Does the piece occur in mu at x, i.e. is the restriction of mu to
// x + [start, start+length) a translate of the piece?
inline bool occurs(const Piece& piece, const AtomicMeasure& mu, double x) {
  const double lo = x + piece.start;
  const double hi = lo + piece.length;
  std::size_t i = mu.first_after(lo - kPositionTol);
  // include an atom within tolerance of the left (closed) endpoint
  std::size_t k = 0;
  for (; i < mu.size(); ++i) {
    const double pos = mu.position(i);
    if (pos >= hi - kPositionTol) break;  // right-open end
    if (k >= piece.atoms.size()) return false;
    if (std::abs(pos - (lo + piece.atoms[k].offset)) > kPositionTol) return false;
    if (mu.weight(i) != piece.atoms[k].weight) return false;
    ++k;
  }
  return k == piece.atoms.size();
}

// ---------------------------------------------------------------------------
// Alphabet and decompositions
// ---------------------------------------------------------------------------

// Finite set of local pieces, all anchored at 0.
struct PieceAlphabet {
  std::vector<Piece> pieces;

  void validate() const {
    if (pieces.empty()) throw std::invalid_argument("PieceAlphabet: empty");
    for (const Piece& p : pieces) {
      if (p.start != 0.0) throw std::invalid_argument("PieceAlphabet: pieces must start at 0");
      p.validate();
    }
  }
  double max_length() const {
    double m = 0.0;
    for (const Piece& p : pieces) m = std::max(m, p.length);
    return m;
  }
  double min_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Piece& p : pieces) m = std::min(m, p.length);
    return m;
  }
};

// Tiling of [base, covered_until) by alphabet pieces. grid[k] is the start
// of piece k; grid.back() is the first untiled point.
struct Decomposition {
  double base = 0.0;
  std::vector<std::size_t> indices;
  std::vector<double> grid;  // size indices.size() + 1, grid.front() == base
};

enum class FdpStatus { ok, no_match, budget_exceeded };

struct FdpResult {
  FdpStatus status = FdpStatus::no_match;
  Decomposition decomposition;   // valid when status == ok
  double fail_position = 0.0;    // first position with no matching piece
  std::size_t nodes_explored = 0;
  double covered_until = 0.0;
};

// Greedy left-to-right tiling of [x0, window end) with backtracking over the
// alphabet (tried in index order, so the first success is lexicographically
// smallest). A piece is only tested where its interval fits inside the
// materialised window, and tiling stops as soon as the longest alphabet
// piece no longer fits: past that point two pieces can restrict identically
// to the visible window, so any further choice would be window-ambiguous.
inline FdpResult check_fdp(const AtomicMeasure& window, const PieceAlphabet& alphabet, double x0,
                           std::size_t node_budget = 1000000) {
  alphabet.validate();
  const double window_end = window.empty() ? x0 : window.position(window.size() - 1) +
                                                      window.separation();
  const double max_len = alphabet.max_length();

  FdpResult res;
  res.fail_position = x0;

  struct Frame {
    double pos;
    std::size_t next_choice;
  };
  std::vector<Frame> stack{{x0, 0}};
  std::vector<std::size_t> chosen;
  double deepest_fail = x0;

  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.pos + max_len > window_end + kPositionTol) {
      // no further placement is unambiguous: successful (window-relative) tiling
      res.status = FdpStatus::ok;
      res.decomposition.base = x0;
      res.decomposition.indices = chosen;
      res.decomposition.grid.clear();
      res.decomposition.grid.push_back(x0);
      double pos = x0;
      for (std::size_t idx : chosen) {
        pos += alphabet.pieces[idx].length;
        res.decomposition.grid.push_back(pos);
      }
      res.covered_until = pos;
      return res;
    }
    bool advanced = false;
    while (f.next_choice < alphabet.pieces.size()) {
      const std::size_t idx = f.next_choice++;
      const Piece& p = alphabet.pieces[idx];
      if (f.pos + p.length > window_end + kPositionTol) continue;  // does not fit
      if (++res.nodes_explored > node_budget) {
        res.status = FdpStatus::budget_exceeded;
        res.fail_position = f.pos;
        return res;
      }
      if (occurs(p, window, f.pos)) {
        chosen.push_back(idx);
        stack.push_back({f.pos + p.length, 0});
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      deepest_fail = std::max(deepest_fail, f.pos);
      stack.pop_back();
      if (!chosen.empty()) chosen.pop_back();
    }
  }
  res.status = FdpStatus::no_match;
  res.fail_position = deepest_fail;
  return res;
}

// Reassemble the measure window described by a decomposition.
inline Piece reconstruct(const Decomposition& d, const PieceAlphabet& alphabet) {
  if (d.indices.empty()) throw std::invalid_argument("reconstruct: empty decomposition");
  std::vector<Piece> parts;
  parts.reserve(d.indices.size());
  for (std::size_t idx : d.indices) parts.push_back(alphabet.pieces[idx]);
  return with_start(concatenate(parts), d.base);
}

// ---------------------------------------------------------------------------
// Simple finite decomposition property
// ---------------------------------------------------------------------------

struct SfdpWitness {
  std::size_t position_a;  // indices into the decomposition
  std::size_t position_b;
};

struct SfdpResult {
  bool holds = true;
  bool certified = false;  // true only for the single-atom-alphabet fast path
  std::optional<SfdpWitness> witness;
};

// Fast path: an alphabet of single-atom pieces (atom at offset 0) with
// pairwise distinct (length, weight) pairs decomposes simply for any
// ell >= the maximal piece length: an ell-prefix then always reveals the
// first piece's weight and, when present, the position of the next atom.
inline bool sfdp_single_atom_certificate(const PieceAlphabet& alphabet, double ell) {
  alphabet.validate();
  if (!(ell >= alphabet.max_length())) return false;
  for (const Piece& p : alphabet.pieces) {
    if (p.atoms.size() != 1) return false;
    if (std::abs(p.atoms[0].offset) > kPositionTol) return false;
  }
  for (std::size_t i = 0; i < alphabet.pieces.size(); ++i)
    for (std::size_t j = i + 1; j < alphabet.pieces.size(); ++j) {
      const Piece& a = alphabet.pieces[i];
      const Piece& b = alphabet.pieces[j];
      if (std::abs(a.length - b.length) <= kPositionTol && a.atoms[0].weight == b.atoms[0].weight)
        return false;  // indistinguishable duplicate
    }
  return true;
}

namespace detail {
// Measure of the decomposition's pieces on [grid[k], grid[k]+ell), compared
// as translated atom lists.
inline std::vector<PieceAtom> prefix_atoms(const Decomposition& d, const PieceAlphabet& alphabet,
                                           std::size_t k, double ell) {
  std::vector<PieceAtom> out;
  for (std::size_t j = k; j < d.indices.size(); ++j) {
    const double off = d.grid[j] - d.grid[k];
    if (off >= ell) break;
    for (const PieceAtom& a : alphabet.pieces[d.indices[j]].atoms) {
      if (off + a.offset >= ell) break;
      out.push_back({off + a.offset, a.weight});
    }
  }
  return out;
}

inline bool same_atoms(const std::vector<PieceAtom>& a, const std::vector<PieceAtom>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i].offset - b[i].offset) > kPositionTol || a[i].weight != b[i].weight)
      return false;
  return true;
}
}  // namespace detail

// Window-relative simple-f.d.p. check: every pair of decomposition positions
// sharing an identical predecessor run of length >= ell and an equal
// ell-prefix of the continuation must continue with the same piece. The
// result quantifies only over pairs visible in this window.
inline SfdpResult check_sfdp(const Decomposition& d, const PieceAlphabet& alphabet, double ell,
                             const AtomicMeasure& window) {
  if (!(ell > 0.0)) throw std::invalid_argument("check_sfdp: ell must be positive");
  alphabet.validate();
  (void)window;  // prefixes are reconstructed from the decomposition itself

  SfdpResult res;
  const std::size_t n = d.indices.size();
  const double window_end = d.grid.empty() ? d.base : d.grid.back();

  // common predecessor-run length of positions i and j (sum of lengths of
  // trailing equal pieces)
  auto common_pred = [&](std::size_t i, std::size_t j) {
    double len = 0.0;
    std::size_t k = 1;
    while (k <= i && k <= j && d.indices[i - k] == d.indices[j - k]) {
      len += alphabet.pieces[d.indices[i - k]].length;
      if (len >= ell) break;
      ++k;
    }
    return len;
  };

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d.grid[i] + ell > window_end + kPositionTol) break;  // continuation not visible
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d.grid[j] + ell > window_end + kPositionTol) break;
      if (i == 0 || j == 0) continue;  // no predecessor run
      if (d.indices[i - 1] != d.indices[j - 1]) continue;
      if (common_pred(i, j) < ell) continue;
      if (!detail::same_atoms(detail::prefix_atoms(d, alphabet, i, ell),
                              detail::prefix_atoms(d, alphabet, j, ell)))
        continue;
      if (d.indices[i] != d.indices[j]) {
        res.holds = false;
        res.witness = SfdpWitness{i, j};
        return res;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Eventual periodicity on finite windows
// ---------------------------------------------------------------------------

struct PeriodicityHit {
  std::size_t preperiod;
  std::size_t period;
};

// All (p, q) with p + 2q <= n and s_{i+q} = s_i for all i >= p visible in the
// window, minimal period first. Window-relative: a hit never proves
// periodicity of the infinite sequence.
inline std::vector<PeriodicityHit> detect_eventual_periodicity(const std::vector<int>& s) {
  const std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("detect_eventual_periodicity: need length >= 2");
  std::vector<PeriodicityHit> hits;
  for (std::size_t q = 1; 2 * q <= n; ++q) {
    // minimal admissible preperiod for this q: one past the last mismatch
    std::size_t p_min = 0;
    for (std::size_t i = n - q; i-- > 0;) {
      if (s[i + q] != s[i]) {
        p_min = i + 1;
        break;
      }
    }
    for (std::size_t p = p_min; p + 2 * q <= n; ++p) hits.push_back({p, q});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const PeriodicityHit& a, const PeriodicityHit& b) {
    return a.period != b.period ? a.period < b.period : a.preperiod < b.preperiod;
  });
  return hits;
}

// Symbol sequence ((gap_n, weight_n)) of a measure window: gap after atom n
// paired with atom n's weight, matched against previously seen pairs with
// positional tolerance. Returns ids plus the legend of distinct pairs.
struct SymbolSequence {
  std::vector<int> ids;
  std::vector<std::pair<double, double>> legend;  // (gap, weight) per id
};

inline SymbolSequence symbol_sequence(const AtomicMeasure& mu) {
  SymbolSequence out;
  if (mu.size() < 2) return out;
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
    const double gap = mu.position(i + 1) - mu.position(i);
    const double w = mu.weight(i);
    int id = -1;
    for (std::size_t k = 0; k < out.legend.size(); ++k)
      if (std::abs(out.legend[k].first - gap) <= kPositionTol && out.legend[k].second == w) {
        id = static_cast<int>(k);
        break;
      }
    if (id < 0) {
      id = static_cast<int>(out.legend.size());
      out.legend.emplace_back(gap, w);
    }
    out.ids.push_back(id);
  }
  return out;
}

// Canonical alphabet of a measure window: one single-atom piece per distinct
// (gap after atom, atom weight) pair, the atom anchored at offset 0. Tiling
// the window from its first atom with these pieces recovers the symbol
// sequence.
inline PieceAlphabet canonical_alphabet(const AtomicMeasure& mu) {
  const SymbolSequence seq = symbol_sequence(mu);
  if (seq.legend.empty())
    throw std::invalid_argument("canonical_alphabet: window has fewer than two atoms");
  PieceAlphabet a;
  for (const auto& [gap, weight] : seq.legend) {
    Piece p;
    p.start = 0.0;
    p.length = gap;
    p.atoms.push_back({0.0, weight});
    a.pieces.push_back(std::move(p));
  }
  a.validate();
  return a;
}

}  // namespace treespec
