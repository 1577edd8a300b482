#pragma once

// Spectral reporting for halfline operators with sqrt(b) jumps: Floquet band
// structure of periodic profiles, exact m-functions for free and periodic
// tails, numerical essential supports of the absolutely continuous spectrum
// via boundary values Im m(E + iy), harmonic-measure utilities, and
// reflectionless-defect probes.
//
// m-function evaluation picks the strongest available route per tail:
//   * free tail      — beyond the last atom the L2 solution is exp(i sqrt(z) x),
//                      so m at the tail is i sqrt(z); pull back by the inverse
//                      window transfer. Exact up to roundoff.
//   * periodic tail  — the L2 solution is the contracting Floquet solution;
//                      m at the tail is the attracting Moebius fixed point of
//                      the one-period monodromy. Exact up to roundoff.
//   * window only    — truncated Weyl disks with honest enclosure radii.
// The truncated route cannot resolve Im z below ~1/window scale (the disk
// radius is then a genuine obstruction, not an artifact), which is why the
// exact routes exist.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <concepts>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "treespec/measure.hpp"
#include "treespec/transfer.hpp"
#include "treespec/weyl.hpp"

namespace treespec {

// ---------------------------------------------------------------------------
// Monodromy and Floquet bands
// ---------------------------------------------------------------------------

struct PeriodStep {
  double gap;        // free interval before the atom
  double branching;  // b > 1 at the atom
};

// One-period flow J(b_q) T(g_q) ... J(b_1) T(g_1); unit determinant.
inline TransferMatrix monodromy(const std::vector<PeriodStep>& period, Complex z) {
  if (period.empty()) throw std::invalid_argument("monodromy: empty period");
  TransferMatrix M;
  for (const PeriodStep& st : period) {
    if (!(st.gap > 0.0)) throw std::invalid_argument("monodromy: gaps must be positive");
    M = vertex_jump(st.branching) * (free_propagator(z, st.gap) * M);
  }
  return M;
}

inline double floquet_discriminant(const std::vector<PeriodStep>& period, double energy) {
  const TransferMatrix M = monodromy(period, Complex(energy, 0.0));
  return M.a11.real() + M.a22.real();
}

struct BandStructure {
  std::vector<PeriodStep> period;
  std::vector<std::array<double, 2>> bands;  // disjoint closed intervals, ascending
  std::function<double(double)> discriminant;
  std::vector<std::string> warnings;
};

// Bands = {E >= 0 : |tr M(E)| <= 2}, located by sign-change bracketing of
// |tr| - 2 on a uniform grid and bisection on the edges.
inline BandStructure floquet_bands(const std::vector<PeriodStep>& period, double e_min,
                                   double e_max, std::size_t resolution = 2000) {
  if (!(e_min >= 0.0) || !(e_max > e_min))
    throw std::invalid_argument("floquet_bands: requires 0 <= e_min < e_max");
  if (resolution < 2) throw std::invalid_argument("floquet_bands: resolution too small");

  BandStructure out;
  out.period = period;
  out.discriminant = [period](double e) {
    const TransferMatrix M = monodromy(period, Complex(e, 0.0));
    return M.a11.real() + M.a22.real();
  };
  auto g = [&](double e) { return std::abs(out.discriminant(e)) - 2.0; };

  const double step = (e_max - e_min) / static_cast<double>(resolution);
  auto bisect = [&](double lo, double hi) {
    // keeps the invariant g(lo) * g(hi) <= 0
    double flo = g(lo);
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = g(mid);
      if ((flo <= 0.0) == (fm <= 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  double prev_e = e_min;
  double prev_g = g(prev_e);
  bool in_band = prev_g <= 0.0;
  double open_edge = e_min;
  if (in_band) out.warnings.push_back("band truncated at range start");
  for (std::size_t i = 1; i <= resolution; ++i) {
    const double e = e_min + step * static_cast<double>(i);
    const double ge = g(e);
    if ((prev_g <= 0.0) != (ge <= 0.0)) {
      const double edge = bisect(prev_e, e);
      if (ge <= 0.0) {
        open_edge = edge;  // entering a band
        in_band = true;
      } else if (in_band) {
        out.bands.push_back({open_edge, edge});
        in_band = false;
      }
    }
    prev_e = e;
    prev_g = ge;
  }
  if (in_band) {
    out.bands.push_back({open_edge, e_max});
    out.warnings.push_back("band truncated at range end");
  }
  // merge bands whose gap closed to numerical width
  for (std::size_t i = 1; i < out.bands.size();) {
    if (out.bands[i][0] - out.bands[i - 1][1] < 1e-8) {
      out.bands[i - 1][1] = out.bands[i][1];
      out.bands.erase(out.bands.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  if (out.bands.empty())
    out.warnings.push_back("no band bracketed on the grid (resolution may be too coarse)");
  return out;
}

// ---------------------------------------------------------------------------
// Periodic m-functions via the Moebius fixed point
// ---------------------------------------------------------------------------

namespace detail {

// Both fixed points of the monodromy's Moebius action on boundary slopes m:
// solutions of M12 m^2 + (M11 - M22) m - M21 = 0. For Im z > 0 exactly one
// root is Herglotz; it is m_plus at the period start, the other root is
// -m_minus there.
inline std::pair<Complex, Complex> moebius_fixed_points(const TransferMatrix& M) {
  const Complex b = M.a12;
  if (std::abs(b) < 1e-300)
    throw std::runtime_error("m_periodic: degenerate monodromy (M12 ~ 0)");
  const Complex tr = M.a11 + M.a22;
  const Complex disc = std::sqrt(tr * tr - 4.0);
  const Complex r1 = (M.a22 - M.a11 + disc) / (2.0 * b);
  const Complex r2 = (M.a22 - M.a11 - disc) / (2.0 * b);
  return r1.imag() >= r2.imag() ? std::make_pair(r1, r2) : std::make_pair(r2, r1);
}

}  // namespace detail

// m_plus of the periodic halfline profile whose atoms sit at the cumulative
// gap positions, evaluated at the period start. The Floquet multiplier of
// the selected solution satisfies |rho| < 1 (decay at +infinity).
inline Complex m_periodic(const std::vector<PeriodStep>& period, Complex z) {
  detail::require_upper_half(z, "m_periodic");
  const TransferMatrix M = monodromy(period, z);
  const auto [mp, mm] = detail::moebius_fixed_points(M);
  if (!(mp.imag() > 0.0))
    throw std::runtime_error("m_periodic: no Herglotz fixed point (internal)");
  const Complex rho = M.a11 + M.a12 * mp;
  if (std::abs(rho) > 1.0 + 1e-9)
    throw std::runtime_error("m_periodic: selected multiplier not contracting (internal)");
  return mp;
}

// (m_plus, m_minus) of the whole-line periodic operator at the period start;
// the anti-Herglotz fixed point is -m_minus.
inline std::pair<Complex, Complex> m_periodic_pair(const std::vector<PeriodStep>& period,
                                                   Complex z) {
  detail::require_upper_half(z, "m_periodic_pair");
  const auto [mp, mm] = detail::moebius_fixed_points(monodromy(period, z));
  if (!(mp.imag() > 0.0) || !(mm.imag() < 0.0))
    throw std::runtime_error("m_periodic_pair: fixed points not split by the real axis");
  return {mp, -mm};
}

// ---------------------------------------------------------------------------
// Halfline models: window + tail descriptor
// ---------------------------------------------------------------------------

enum class TailKind { free_tail, periodic_tail, window_only };

// A halfline operator known through a finite atom window plus a description
// of everything beyond it. All atoms sit in (0, inf); the Dirichlet origin
// is 0 and m-functions are evaluated at midgap points t >= 0.
struct HalflineModel {
  AtomicMeasure window;
  TailKind tail = TailKind::window_only;
  std::size_t prefix_atoms = 0;        // periodic tail: window atoms before the pattern
  std::vector<PeriodStep> period;      // periodic tail: (gap, branching) of one period
};

// Model of the full tree profile: explicit lists carry a free tail (they
// describe all atoms there are), eventually periodic generators carry their
// period, substitution generators are window-only.
inline HalflineModel halfline_model(const TreeGeometry& g, std::size_t window_atoms = 512) {
  HalflineModel m;
  switch (g.kind()) {
    case GeometryKind::free_line:
      m.tail = TailKind::free_tail;
      break;
    case GeometryKind::explicit_list:
      m.window = build_measure(g, g.explicit_count());
      m.tail = TailKind::free_tail;
      break;
    case GeometryKind::eventually_periodic: {
      const std::size_t count = std::max(window_atoms, g.preperiod() + g.period());
      m.window = build_measure(g, count);
      m.tail = TailKind::periodic_tail;
      m.prefix_atoms = g.preperiod();
      for (std::size_t j = 1; j <= g.period(); ++j) {
        const Edge e = g.edge(g.preperiod() + j);
        m.period.push_back({e.length, e.branching});
      }
      break;
    }
    case GeometryKind::substitution:
      m.window = build_measure(g, window_atoms);
      m.tail = TailKind::window_only;
      break;
  }
  return m;
}

// Model of the generation-k halfline operator: the profile beyond t_k,
// shifted so its Dirichlet origin is 0.
inline HalflineModel generation_model(const TreeGeometry& g, std::size_t k,
                                      std::size_t window_atoms = 512) {
  if (k == 0) return halfline_model(g, window_atoms);
  HalflineModel m;
  switch (g.kind()) {
    case GeometryKind::free_line:
      throw std::invalid_argument("generation_model: free profile has only generation 0");
    case GeometryKind::explicit_list: {
      if (k >= g.explicit_count())
        throw std::invalid_argument("generation_model: generation beyond explicit profile");
      const AtomicMeasure full = build_measure(g, g.explicit_count());
      m.window = shift(tail_from(full, full.position(k - 1)), full.position(k - 1));
      m.tail = TailKind::free_tail;
      break;
    }
    case GeometryKind::eventually_periodic: {
      const std::size_t p = g.preperiod();
      const std::size_t q = g.period();
      std::vector<Edge> edges;
      std::size_t new_p;
      if (k <= p) {
        for (std::size_t j = k + 1; j <= p + q; ++j) edges.push_back(g.edge(j));
        new_p = p - k;
      } else {
        const std::size_t rot = (k - p) % q;  // period rotated by the consumed offset
        for (std::size_t j = 0; j < q; ++j)
          edges.push_back(g.edge(p + 1 + (rot + j) % q));
        new_p = 0;
      }
      return halfline_model(TreeGeometry::eventually_periodic(edges, new_p, q), window_atoms);
    }
    case GeometryKind::substitution: {
      const AtomicMeasure full = build_measure(g, window_atoms + k);
      m.window = shift(tail_from(full, full.position(k - 1)), full.position(k - 1));
      m.tail = TailKind::window_only;
      break;
    }
  }
  return m;
}

namespace detail {

// Moebius pull-back of a tail slope through the window transfer T (t -> x*):
// the tail solution has data proportional to (1, m_tail) at x*, so
// m(t) = (A m_tail - C) / (D - B m_tail) with T = [[A,B],[C,D]].
// Scale-invariant in T, so the flow may be rescaled freely.
inline Complex pull_back_slope(const TransferMatrix& T, Complex m_tail) {
  return (T.a11 * m_tail - T.a21) / (T.a22 - T.a12 * m_tail);
}

// Rescaled window transfer matrix from `from` to `to` (scalar multiples do
// not affect pull_back_slope).
inline TransferMatrix scaled_transfer(const AtomicMeasure& mu, double from, double to, Complex z) {
  TransferMatrix M;
  double x = from;
  auto rescale = [&M]() {
    const double mag = std::max(std::max(std::abs(M.a11), std::abs(M.a12)),
                                std::max(std::abs(M.a21), std::abs(M.a22)));
    if (mag > 1e120) {
      const double inv = 1.0 / mag;
      M.a11 *= inv;
      M.a12 *= inv;
      M.a21 *= inv;
      M.a22 *= inv;
    }
  };
  for (std::size_t i = mu.first_after(from); i < mu.size() && mu.position(i) < to; ++i) {
    M = vertex_jump_from_weight(mu.weight(i)) * (free_propagator(z, mu.position(i) - x) * M);
    rescale();
    x = mu.position(i);
  }
  if (to > x) M = free_propagator(z, to - x) * M;
  return M;
}

}  // namespace detail

// Exact m_plus of a model with a known tail (free or periodic), up to
// floating point: the error bound field is 0 and truncation_used reports the
// hand-off point x* between window transfer and tail formula.
inline MValue m_plus_exact(const HalflineModel& model, double t, Complex z) {
  detail::require_upper_half(z, "m_plus_exact");
  detail::require_clear_endpoint(model.window, t, "m_plus_exact");
  const Complex sqrt_z = std::sqrt(z);  // principal root, Im > 0 on the upper half plane

  if (model.tail == TailKind::free_tail) {
    const AtomicMeasure& w = model.window;
    const std::size_t i0 = w.first_after(t);
    if (i0 == w.size()) return {Complex(0.0, 1.0) * sqrt_z, 0.0, t, true};
    const double x_star = w.position(w.size() - 1) + 0.5 * w.separation();
    const TransferMatrix T = detail::scaled_transfer(w, t, x_star, z);
    return {detail::pull_back_slope(T, Complex(0.0, 1.0) * sqrt_z), 0.0, x_star, true};
  }
  if (model.tail == TailKind::periodic_tail) {
    // phase-aligned period product starting and ending midgap: half of the
    // first period gap, the remaining steps, half of the first gap again
    const std::vector<PeriodStep>& per = model.period;
    if (per.empty()) throw std::invalid_argument("m_plus_exact: periodic tail without period");
    double t_p = 0.0;  // position of the last prefix atom (origin when none)
    if (model.prefix_atoms > 0) {
      if (model.prefix_atoms > model.window.size())
        throw std::invalid_argument("m_plus_exact: prefix exceeds window");
      t_p = model.window.position(model.prefix_atoms - 1);
    }
    const double half = 0.5 * per.front().gap;
    const double x_star = t_p + half;
    if (!(t < x_star))
      throw std::invalid_argument("m_plus_exact: evaluation point beyond the periodic phase start");

    TransferMatrix M = free_propagator(z, half);
    for (std::size_t j = 0; j < per.size(); ++j) {
      M = vertex_jump(per[j].branching) * M;
      const double gap = j + 1 < per.size() ? per[j + 1].gap : half;
      M = free_propagator(z, gap) * M;
    }
    const auto [mp, mm] = detail::moebius_fixed_points(M);
    if (!(mp.imag() > 0.0))
      throw std::runtime_error("m_plus_exact: no Herglotz fixed point (internal)");
    const TransferMatrix T = detail::scaled_transfer(model.window, t, x_star, z);
    return {detail::pull_back_slope(T, mp), 0.0, x_star, true};
  }
  throw std::invalid_argument("m_plus_exact: model has no analytic tail");
}

struct MPlusOptions {
  double tol = 1e-8;
  double b_max = std::numeric_limits<double>::quiet_NaN();  // NaN = origin + 1e4 * separation
  bool force_truncated = false;  // ignore analytic tails (for cross-oracle tests)
};

// Tail-aware m_plus: exact route when the model's tail admits one, truncated
// Weyl disks otherwise.
inline MValue m_plus_model(const HalflineModel& model, double t, Complex z,
                           const MPlusOptions& opt = {}) {
  if (!opt.force_truncated && model.tail != TailKind::window_only)
    return m_plus_exact(model, t, z);
  return m_plus(model.window, t, z, opt.tol, opt.b_max);
}

// ---------------------------------------------------------------------------
// Sigma_ac estimation
// ---------------------------------------------------------------------------

enum class SpectralClass { ac_like, singular_like, undecided };

inline const char* to_string(SpectralClass c) {
  switch (c) {
    case SpectralClass::ac_like: return "ac-like";
    case SpectralClass::singular_like: return "singular-like";
    case SpectralClass::undecided: return "undecided";
  }
  return "undecided";
}

struct ClassifyThresholds {
  double eps_low = 1e-4;
  double eps_high = 1e4;
  // ac-like additionally requires Im m not to collapse proportionally to y
  // between the last two rungs (v_last >= collapse_ratio * v_prev); a
  // boundary value Im m(E+i0) in (0, inf) is y-stable, point masses grow
  // like 1/y, and resolvent-set energies decay like y.
  double collapse_ratio = 0.5;
};

// Classification from the ladder of Im m(E + i y_k), y decreasing:
//   ac-like        last two rungs inside [eps_low, eps_high], not collapsing;
//   singular-like  last rung exits the range monotonically (below and
//                  non-increasing, or above and non-decreasing);
//   undecided      everything else.
inline SpectralClass classify_ladder(const std::vector<double>& im_values,
                                     const ClassifyThresholds& thr) {
  if (im_values.empty()) return SpectralClass::undecided;
  const double v2 = im_values.back();
  const double v1 = im_values.size() >= 2 ? im_values[im_values.size() - 2] : v2;
  const bool in_range = v1 >= thr.eps_low && v1 <= thr.eps_high && v2 >= thr.eps_low &&
                        v2 <= thr.eps_high;
  if (in_range && v2 >= thr.collapse_ratio * v1) return SpectralClass::ac_like;
  if (v2 < thr.eps_low && v2 <= v1) return SpectralClass::singular_like;
  if (v2 > thr.eps_high && v2 >= v1) return SpectralClass::singular_like;
  return SpectralClass::undecided;
}

struct EnergySample {
  double y;
  MValue m;
};

struct EnergyRecord {
  double energy;
  std::vector<EnergySample> ladder;
  SpectralClass cls = SpectralClass::undecided;
};

struct SpectralReport {
  std::vector<double> y_ladder;
  ClassifyThresholds thresholds;
  std::vector<EnergyRecord> records;

  double ac_fraction() const {
    if (records.empty()) return 0.0;
    std::size_t n = 0;
    for (const EnergyRecord& r : records)
      if (r.cls == SpectralClass::ac_like) ++n;
    return static_cast<double>(n) / static_cast<double>(records.size());
  }

  // maximal runs of consecutive ac-like grid energies
  std::vector<std::array<double, 2>> ac_intervals() const {
    std::vector<std::array<double, 2>> out;
    std::optional<double> start;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].cls == SpectralClass::ac_like) {
        if (!start) start = records[i].energy;
        if (i + 1 == records.size()) out.push_back({*start, records[i].energy});
      } else if (start) {
        out.push_back({*start, records[i - 1].energy});
        start.reset();
      }
    }
    return out;
  }
};

inline void validate_ladder(const std::vector<double>& ladder) {
  if (ladder.empty()) throw std::invalid_argument("y ladder must be nonempty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0)) throw std::invalid_argument("y ladder must be positive");
    if (i > 0 && !(ladder[i] < ladder[i - 1]))
      throw std::invalid_argument("y ladder must strictly decrease");
  }
}

// Generic sweep: mfun(z) supplies m_plus values.
template <typename MFun>
  requires std::invocable<MFun&, Complex>
SpectralReport sigma_ac_estimate(MFun&& mfun, const std::vector<double>& e_grid,
                                 const std::vector<double>& y_ladder,
                                 const ClassifyThresholds& thr = {}) {
  validate_ladder(y_ladder);
  if (!(thr.eps_low < thr.eps_high))
    throw std::invalid_argument("sigma_ac_estimate: eps_low must be below eps_high");
  SpectralReport rep;
  rep.y_ladder = y_ladder;
  rep.thresholds = thr;
  rep.records.reserve(e_grid.size());
  for (double e : e_grid) {
    EnergyRecord rec;
    rec.energy = e;
    std::vector<double> ims;
    ims.reserve(y_ladder.size());
    for (double y : y_ladder) {
      const MValue m = mfun(Complex(e, y));
      rec.ladder.push_back({y, m});
      ims.push_back(m.value.imag());
    }
    rec.cls = classify_ladder(ims, thr);
    rep.records.push_back(std::move(rec));
  }
  return rep;
}

inline SpectralReport sigma_ac_estimate(const HalflineModel& model,
                                        const std::vector<double>& e_grid,
                                        const std::vector<double>& y_ladder,
                                        const ClassifyThresholds& thr = {},
                                        const MPlusOptions& opt = {}) {
  return sigma_ac_estimate(
      [&](Complex z) { return m_plus_model(model, 0.0, z, opt); }, e_grid, y_ladder, thr);
}

// ---------------------------------------------------------------------------
// Harmonic measure and value distribution
// ---------------------------------------------------------------------------

struct RealInterval {
  double lo;
  double hi;  // lo < hi; +-infinity allowed
};

// omega_z(S) = (1/pi) int_S y / ((t-x)^2 + y^2) dt, closed form per interval.
inline double harmonic_measure(Complex z, const std::vector<RealInterval>& s) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("harmonic_measure: requires Im z > 0");
  const double x = z.real();
  const double y = z.imag();
  double total = 0.0;
  for (const RealInterval& iv : s) {
    if (!(iv.hi > iv.lo)) throw std::invalid_argument("harmonic_measure: empty interval");
    total += (std::atan((iv.hi - x) / y) - std::atan((iv.lo - x) / y)) / M_PI;
  }
  return total;
}

inline std::vector<RealInterval> negate_intervals(const std::vector<RealInterval>& s) {
  std::vector<RealInterval> out;
  out.reserve(s.size());
  for (const RealInterval& iv : s) out.push_back({-iv.hi, -iv.lo});
  return out;
}

// | int_A omega_{F(t)}(S) dt - int_A omega_{G(t)}(S) dt | by trapezoid rule
// on a shared grid over A.
inline double value_distribution_defect(const std::vector<double>& a_grid,
                                        const std::vector<Complex>& f_vals,
                                        const std::vector<Complex>& g_vals,
                                        const std::vector<RealInterval>& s) {
  if (a_grid.size() < 2 || f_vals.size() != a_grid.size() || g_vals.size() != a_grid.size())
    throw std::invalid_argument("value_distribution_defect: grids must match, length >= 2");
  double intf = 0.0;
  double intg = 0.0;
  for (std::size_t i = 0; i + 1 < a_grid.size(); ++i) {
    const double dt = a_grid[i + 1] - a_grid[i];
    intf += 0.5 * dt * (harmonic_measure(f_vals[i], s) + harmonic_measure(f_vals[i + 1], s));
    intg += 0.5 * dt * (harmonic_measure(g_vals[i], s) + harmonic_measure(g_vals[i + 1], s));
  }
  return std::abs(intf - intg);
}

// ---------------------------------------------------------------------------
// Reflectionless defect
// ---------------------------------------------------------------------------

struct ReflectionlessDefect {
  std::vector<double> energies;
  double y = 0.0;
  std::vector<double> defect;       // |m_plus(E+iy) + conj(m_minus(E+iy))|
  std::vector<Complex> m_plus_vals;
  std::vector<Complex> m_minus_vals;
  std::vector<double> error_bounds;  // summed enclosure radii (0 for exact routes)
};

// Generic two-sided probe at a midgap point t using truncated m-functions on
// either side.
inline ReflectionlessDefect reflectionless_defect(const AtomicMeasure& two_sided, double t,
                                                  const std::vector<double>& energies, double y,
                                                  const MPlusOptions& opt = {}) {
  if (!(y > 0.0)) throw std::invalid_argument("reflectionless_defect: y must be positive");
  ReflectionlessDefect out;
  out.energies = energies;
  out.y = y;
  for (double e : energies) {
    const Complex z(e, y);
    const MValue mp = m_plus(two_sided, t, z, opt.tol, opt.b_max);
    const double b_min = std::isnan(opt.b_max)
                             ? std::numeric_limits<double>::quiet_NaN()
                             : t - (opt.b_max - t);
    const MValue mm = m_minus(two_sided, t, z, opt.tol, b_min);
    out.m_plus_vals.push_back(mp.value);
    out.m_minus_vals.push_back(mm.value);
    out.defect.push_back(std::abs(mp.value + std::conj(mm.value)));
    out.error_bounds.push_back(mp.error_bound + mm.error_bound);
  }
  return out;
}

// Exact probe for the whole-line periodic operator: both m-functions come
// from the monodromy fixed points, so arbitrarily small y is reachable.
inline ReflectionlessDefect reflectionless_defect_periodic(const std::vector<PeriodStep>& period,
                                                           const std::vector<double>& energies,
                                                           double y) {
  if (!(y > 0.0)) throw std::invalid_argument("reflectionless_defect: y must be positive");
  ReflectionlessDefect out;
  out.energies = energies;
  out.y = y;
  for (double e : energies) {
    const auto [mp, mm] = m_periodic_pair(period, Complex(e, y));
    out.m_plus_vals.push_back(mp);
    out.m_minus_vals.push_back(mm);
    out.defect.push_back(std::abs(mp + std::conj(mm)));
    out.error_bounds.push_back(0.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-generation tree report
// ---------------------------------------------------------------------------

struct GenerationReport {
  std::size_t generation = 0;
  double origin = 0.0;
  std::optional<std::uint64_t> multiplicity;
  SpectralReport report;
};

struct TreeSpectrumReport {
  std::vector<double> e_grid;
  std::vector<GenerationReport> generations;
  std::vector<SpectralClass> union_class;  // per grid energy

  double union_ac_fraction() const {
    if (union_class.empty()) return 0.0;
    std::size_t n = 0;
    for (SpectralClass c : union_class)
      if (c == SpectralClass::ac_like) ++n;
    return static_cast<double>(n) / static_cast<double>(union_class.size());
  }
};

// Runs the sigma_ac sweep for every generation k <= max_generation of the
// direct-sum decomposition and aggregates the union classification: ac-like
// when any generation is, singular-like when all are.
inline TreeSpectrumReport tree_spectrum_report(const TreeGeometry& g, std::size_t max_generation,
                                               const std::vector<double>& e_grid,
                                               const std::vector<double>& y_ladder,
                                               const ClassifyThresholds& thr = {},
                                               const MPlusOptions& opt = {},
                                               std::size_t window_atoms = 512) {
  TreeSpectrumReport out;
  out.e_grid = e_grid;
  const auto entries = decompose_tree(g, max_generation, g.unbounded() ? window_atoms : 0);
  for (std::size_t k = 0; k <= max_generation; ++k) {
    GenerationReport gr;
    gr.generation = k;
    gr.origin = entries[k].op.origin;
    gr.multiplicity = entries[k].multiplicity;
    gr.report = sigma_ac_estimate(generation_model(g, k, window_atoms), e_grid, y_ladder, thr, opt);
    out.generations.push_back(std::move(gr));
  }
  out.union_class.assign(e_grid.size(), SpectralClass::singular_like);
  for (std::size_t i = 0; i < e_grid.size(); ++i) {
    bool any_ac = false;
    bool all_sing = true;
    for (const GenerationReport& gr : out.generations) {
      const SpectralClass c = gr.report.records[i].cls;
      any_ac = any_ac || c == SpectralClass::ac_like;
      all_sing = all_sing && c == SpectralClass::singular_like;
    }
    out.union_class[i] = any_ac ? SpectralClass::ac_like
                                : (all_sing ? SpectralClass::singular_like
                                            : SpectralClass::undecided);
  }
  return out;
}

}  // namespace treespec
