#pragma once

// Weyl disks and m-functions for halfline operators with sqrt(b) jump
// conditions, via truncated boundary-value problems.
//
// For Im z > 0 and a truncation point b off the atom set, the values
// m(z,t,b) of all real Robin problems at b fill a circle; its data in terms
// of the Neumann/Dirichlet fundamental pair at b is
//
//   center  M(z,b) = -W(u_N, conj u_D)(b) / W(u_D, conj u_D)(b),
//   radius  r(z,b) =  1 / |W(u_D, conj u_D)(b)|,
//
// with W(u, conj v)(x) = u'(x) conj(v(x)) - u(x) conj(v'(x)). The disks are
// nested and shrink as b grows (limit point case); the limit is the
// m-function m_plus, and r(z,b) is a rigorous enclosure radius for every
// measure that agrees with the window up to b. Leftward truncation gives
// m_minus with center +W(u_N, conj u_D)(a) / W(u_D, conj u_D)(a); both signs
// are pinned by the free-line limits m_pm(z) = i sqrt(z).
//
// The fundamental pair grows like exp(Im sqrt(z) |b - t|), so the joint flow
// is rescaled by a common real factor; disk radii are tracked in log scale.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "treespec/measure.hpp"
#include "treespec/transfer.hpp"

namespace treespec {

struct WeylDisk {
  Complex center;
  double radius = 0.0;
  double truncation = 0.0;  // the b (or leftward a) used
};

struct MValue {
  Complex value;
  double error_bound = 0.0;     // final disk radius
  double truncation_used = 0.0;
  bool converged = true;        // radius < tol was reached before the b range ran out
};

namespace detail {

// Joint Neumann/Dirichlet flow with a shared real rescale factor. The true
// states equal the stored ones times exp(log_scale).
struct PairFlow {
  BoundaryState sN{1.0, 0.0};
  BoundaryState sD{0.0, 1.0};
  double log_scale = 0.0;

  void maybe_rescale() {
    const double m = std::max(std::max(std::abs(sN.u), std::abs(sN.du)),
                              std::max(std::abs(sD.u), std::abs(sD.du)));
    if (m > 1e120) {
      const double inv = 1.0 / m;
      sN.u *= inv;
      sN.du *= inv;
      sD.u *= inv;
      sD.du *= inv;
      log_scale += std::log(m);
    }
  }

  void gap(Complex z, double len, bool leftward) {
    const PhasePair p = phase_functions(z, len);
    if (leftward) {
      advance_free_left(sN, z, p);
      advance_free_left(sD, z, p);
    } else {
      advance_free(sN, z, p);
      advance_free(sD, z, p);
    }
    maybe_rescale();
  }

  void atom(double weight, bool leftward) {
    const double r = sqrt_branching_from_weight(weight);
    if (leftward) {
      cross_atom_left(sN, r);
      cross_atom_left(sD, r);
    } else {
      cross_atom(sN, r);
      cross_atom(sD, r);
    }
  }

  // log10-free log radius and the (scale-invariant) center at the current
  // point; `leftward` flips the center sign.
  WeylDisk disk(double truncation, bool leftward) const {
    const Complex denom = sD.du * std::conj(sD.u) - sD.u * std::conj(sD.du);
    const double mag = std::abs(denom);
    if (!(mag > 0.0) || log_radius(mag) > 700.0)
      throw std::runtime_error("weyl: degenerate disk (|W(u_D, conj u_D)| ~ 0)");
    const Complex numer = sN.du * std::conj(sD.u) - sN.u * std::conj(sD.du);
    const Complex center = (leftward ? 1.0 : -1.0) * numer / denom;
    return {center, std::exp(log_radius(mag)), truncation};
  }

  double log_radius_now() const {
    const double mag = std::abs(sD.du * std::conj(sD.u) - sD.u * std::conj(sD.du));
    return mag > 0.0 ? log_radius(mag) : std::numeric_limits<double>::infinity();
  }

 private:
  double log_radius(double denom_mag) const { return -(std::log(denom_mag) + 2.0 * log_scale); }
};

inline void require_upper_half(Complex z, const char* what) {
  if (!(z.imag() > 0.0))
    throw std::invalid_argument(std::string(what) + ": requires Im z > 0");
}

}  // namespace detail

// Single Weyl disk at truncation b > t (both off the atom set).
inline WeylDisk weyl_disk(const AtomicMeasure& mu, double t, double b, Complex z) {
  detail::require_upper_half(z, "weyl_disk");
  if (!(t < b)) throw std::invalid_argument("weyl_disk: requires t < b");
  detail::require_clear_endpoint(mu, t, "weyl_disk");
  detail::require_clear_endpoint(mu, b, "weyl_disk");
  detail::PairFlow flow;
  double x = t;
  for (std::size_t i = mu.first_after(t); i < mu.size() && mu.position(i) < b; ++i) {
    flow.gap(z, mu.position(i) - x, false);
    flow.atom(mu.weight(i), false);
    x = mu.position(i);
  }
  flow.gap(z, b - x, false);
  return flow.disk(b, false);
}

// A boundary point of the same circle: the truncated m-value of the Robin
// problem cos(beta) u(b) + sin(beta) u'(b) = 0,
//   m = -(u_N(b) cos(beta) + u_N'(b) sin(beta)) / (u_D(b) cos(beta) + u_D'(b) sin(beta)).
inline Complex robin_m_point(const AtomicMeasure& mu, double t, double b, Complex z, double beta) {
  detail::require_upper_half(z, "robin_m_point");
  const auto [sN, sD] = fundamental_pair(mu, t, b, z);
  const double cb = std::cos(beta);
  const double sb = std::sin(beta);
  const Complex denom = sD.u * cb + sD.du * sb;
  const Complex numer = sN.u * cb + sN.du * sb;
  const double scale = std::max({std::abs(sD.u), std::abs(sD.du), 1.0});
  if (std::abs(denom) < 1e-14 * scale)
    throw std::invalid_argument("robin_m_point: tangential boundary angle");
  return -numer / denom;
}

// Disks at the first `count` successive rightward truncation points (gap
// midpoints after each atom beyond t, then one point half a separation past
// the last atom). Shares one flow across all truncations.
inline std::vector<WeylDisk> weyl_disk_sequence(const AtomicMeasure& mu, double t, Complex z,
                                                std::size_t count) {
  detail::require_upper_half(z, "weyl_disk_sequence");
  detail::require_clear_endpoint(mu, t, "weyl_disk_sequence");
  std::vector<double> points;
  const std::size_t i0 = mu.first_after(t);
  for (std::size_t i = i0; i < mu.size() && points.size() < count; ++i) {
    if (i + 1 < mu.size())
      points.push_back(0.5 * (mu.position(i) + mu.position(i + 1)));
    else
      points.push_back(mu.position(i) + 0.5 * mu.separation());
  }
  if (points.empty()) {
    double len = 1.0;
    double p = t;
    while (points.size() < count) {
      p += len;
      points.push_back(p);
      len *= 2.0;
    }
  }

  std::vector<WeylDisk> disks;
  disks.reserve(points.size());
  detail::PairFlow flow;
  double x = t;
  std::size_t i = i0;
  for (double b : points) {
    for (; i < mu.size() && mu.position(i) < b; ++i) {
      flow.gap(z, mu.position(i) - x, false);
      flow.atom(mu.weight(i), false);
      x = mu.position(i);
    }
    flow.gap(z, b - x, false);
    x = b;
    disks.push_back(flow.disk(b, false));
  }
  return disks;
}

// Truncated m-function with rigorous disk enclosure. The truncation point
// advances through gap midpoints, doubling the atom count per refinement,
// until the disk radius drops below tol or the b range is exhausted; the
// last center is returned with the last radius as error bound. The radius is
// a valid enclosure for every continuation of the window, so a
// non-converged value is still meaningful.
inline MValue m_plus(const AtomicMeasure& mu, double t, Complex z, double tol = 1e-8,
                     double b_max = std::numeric_limits<double>::quiet_NaN()) {
  detail::require_upper_half(z, "m_plus");
  if (!(tol > 0.0)) throw std::invalid_argument("m_plus: tol must be positive");
  detail::require_clear_endpoint(mu, t, "m_plus");
  if (std::isnan(b_max)) b_max = t + 1e4 * mu.separation();
  if (!(b_max > t)) throw std::invalid_argument("m_plus: b_max must exceed t");

  // truncation schedule: midgaps after 1, 2, 4, ... atoms plus the last
  // usable point; a free window falls back to doubling interval lengths
  const std::size_t i0 = mu.first_after(t);
  const std::size_t avail = mu.size() - i0;
  std::vector<double> points;
  auto point_after = [&](std::size_t k) {  // midgap after k-th atom beyond t
    const std::size_t i = i0 + k - 1;
    if (i + 1 < mu.size()) return 0.5 * (mu.position(i) + mu.position(i + 1));
    return mu.position(i) + 0.5 * mu.separation();
  };
  if (avail == 0) {
    for (double len = 1.0; t + len <= b_max; len *= 2.0) points.push_back(t + len);
    if (points.empty()) points.push_back(b_max);
  } else {
    for (std::size_t k = 1; k < avail; k *= 2) points.push_back(point_after(k));
    points.push_back(point_after(avail));
    while (!points.empty() && points.back() > b_max) points.pop_back();
    if (points.empty())
      throw std::invalid_argument("m_plus: b_max lies before the first truncation point");
  }

  const double log_tol = std::log(tol);
  detail::PairFlow flow;
  double x = t;
  std::size_t i = i0;
  WeylDisk last;
  for (double b : points) {
    for (; i < mu.size() && mu.position(i) < b; ++i) {
      flow.gap(z, mu.position(i) - x, false);
      flow.atom(mu.weight(i), false);
      x = mu.position(i);
    }
    flow.gap(z, b - x, false);
    x = b;
    if (flow.log_radius_now() < log_tol) {
      last = flow.disk(b, false);
      return {last.center, last.radius, b, true};
    }
    last = flow.disk(b, false);
  }
  return {last.center, last.radius, last.truncation, false};
}

// Leftward mirror for whole-line measures: truncation advances through gap
// midpoints to the left of t; atoms are crossed through the inverse jump
// (the jump conditions stay oriented left-to-right on the whole line).
inline MValue m_minus(const AtomicMeasure& mu, double t, Complex z, double tol = 1e-8,
                      double b_min = std::numeric_limits<double>::quiet_NaN()) {
  detail::require_upper_half(z, "m_minus");
  if (!(tol > 0.0)) throw std::invalid_argument("m_minus: tol must be positive");
  detail::require_clear_endpoint(mu, t, "m_minus");
  if (std::isnan(b_min)) b_min = t - 1e4 * mu.separation();
  if (!(b_min < t)) throw std::invalid_argument("m_minus: b_min must lie below t");

  // atoms strictly below t, walked in decreasing position
  std::vector<std::size_t> below;
  for (std::size_t i = mu.first_after(t - kAtomHitTol); i-- > 0;) below.push_back(i);
  const std::size_t avail = below.size();
  std::vector<double> points;
  auto point_after = [&](std::size_t k) {
    const std::size_t i = below[k - 1];
    if (i > 0) return 0.5 * (mu.position(i) + mu.position(i - 1));
    return mu.position(i) - 0.5 * mu.separation();
  };
  if (avail == 0) {
    for (double len = 1.0; t - len >= b_min; len *= 2.0) points.push_back(t - len);
    if (points.empty()) points.push_back(b_min);
  } else {
    for (std::size_t k = 1; k < avail; k *= 2) points.push_back(point_after(k));
    points.push_back(point_after(avail));
    while (!points.empty() && points.back() < b_min) points.pop_back();
    if (points.empty())
      throw std::invalid_argument("m_minus: b_min lies above the first truncation point");
  }

  const double log_tol = std::log(tol);
  detail::PairFlow flow;
  double x = t;
  std::size_t k = 0;
  WeylDisk last;
  for (double a : points) {
    for (; k < avail && mu.position(below[k]) > a; ++k) {
      flow.gap(z, x - mu.position(below[k]), true);
      flow.atom(mu.weight(below[k]), true);
      x = mu.position(below[k]);
    }
    flow.gap(z, x - a, true);
    x = a;
    if (flow.log_radius_now() < log_tol) {
      last = flow.disk(a, true);
      return {last.center, last.radius, a, true};
    }
    last = flow.disk(a, true);
  }
  return {last.center, last.radius, last.truncation, false};
}

}  // namespace treespec
