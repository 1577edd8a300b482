#pragma once

// Solution flow of -u'' = z u across free intervals and through the sqrt(b)
// vertex jumps. Boundary data (u, u') propagates by 2x2 unit-determinant
// matrices:
//
//   free interval of length l:   [[ c(z,l), s(z,l) ],
//                                 [ -z s(z,l), c(z,l) ]]
//     with c(z,l) = cos(sqrt(z) l), s(z,l) = sin(sqrt(z) l)/sqrt(z),
//     both entire in z (even in sqrt(z), so branch-independent);
//
//   vertex with branching b:     diag(sqrt(b), 1/sqrt(b)).
//
// Values at atoms follow the right-limit convention, u(t) := u(t+);
// propagation endpoints must therefore avoid atom positions.

#include <cmath>
#include <complex>
#include <stdexcept>

#include "treespec/measure.hpp"

namespace treespec {

using Complex = std::complex<double>;

// Value and derivative of a solution at a point (right-sided at atoms).
struct BoundaryState {
  Complex u;
  Complex du;
};

// W(u, v)(t) = u'(t) v(t) - u(t) v'(t), invariant under the flow.
inline Complex wronskian(const BoundaryState& s1, const BoundaryState& s2) {
  return s1.du * s2.u - s1.u * s2.du;
}

struct TransferMatrix {
  Complex a11{1.0}, a12{0.0}, a21{0.0}, a22{1.0};

  Complex det() const { return a11 * a22 - a12 * a21; }

  BoundaryState apply(const BoundaryState& s) const {
    return {a11 * s.u + a12 * s.du, a21 * s.u + a22 * s.du};
  }

  // (A * B) applies B first.
  friend TransferMatrix operator*(const TransferMatrix& A, const TransferMatrix& B) {
    return {A.a11 * B.a11 + A.a12 * B.a21, A.a11 * B.a12 + A.a12 * B.a22,
            A.a21 * B.a11 + A.a22 * B.a21, A.a21 * B.a12 + A.a22 * B.a22};
  }

  // Inverse via the adjugate; exact for unit determinant.
  TransferMatrix adjugate() const { return {a22, -a12, -a21, a11}; }
};

namespace detail {

struct PhasePair {
  Complex c;  // cos(sqrt(z) l)
  Complex s;  // sin(sqrt(z) l)/sqrt(z)
};

// Series fallback keeps c and s smooth through z = 0 (|z| l^2 < 1e-4); the
// truncation error is far below double roundoff there.
inline PhasePair phase_functions(Complex z, double len) {
  const Complex a = z * (len * len);
  if (std::abs(a) < 1e-4) {
    const Complex a2 = a * a;
    const Complex a3 = a2 * a;
    return {1.0 - a / 2.0 + a2 / 24.0 - a3 / 720.0,
            len * (1.0 - a / 6.0 + a2 / 120.0 - a3 / 5040.0)};
  }
  const Complex w = std::sqrt(z);
  return {std::cos(w * len), std::sin(w * len) / w};
}

}  // namespace detail

inline TransferMatrix free_propagator(Complex z, double len) {
  if (!(len > 0.0)) throw std::invalid_argument("free_propagator: length must be positive");
  const auto [c, s] = detail::phase_functions(z, len);
  return {c, s, -z * s, c};
}

inline TransferMatrix vertex_jump(double b) {
  if (!(b > 1.0)) throw std::invalid_argument("vertex_jump: requires b > 1");
  const double r = std::sqrt(b);
  return {r, 0.0, 0.0, 1.0 / r};
}

inline TransferMatrix vertex_jump_from_weight(double beta) {
  const double r = sqrt_branching_from_weight(beta);
  return {r, 0.0, 0.0, 1.0 / r};
}

namespace detail {

// In-place state updates; these are the hot kernels.
inline void advance_free(BoundaryState& s, Complex z, const PhasePair& p) {
  const Complex u = p.c * s.u + p.s * s.du;
  s.du = -z * p.s * s.u + p.c * s.du;
  s.u = u;
}

inline void advance_free_left(BoundaryState& s, Complex z, const PhasePair& p) {
  // inverse of the free step: [[c, -s], [z s, c]]
  const Complex u = p.c * s.u - p.s * s.du;
  s.du = z * p.s * s.u + p.c * s.du;
  s.u = u;
}

inline void cross_atom(BoundaryState& s, double sqrt_b) {
  s.u *= sqrt_b;
  s.du /= sqrt_b;
}

inline void cross_atom_left(BoundaryState& s, double sqrt_b) {
  s.u /= sqrt_b;
  s.du *= sqrt_b;
}

inline void require_clear_endpoint(const AtomicMeasure& mu, double x, const char* what) {
  if (mu.hits_atom(x))
    throw std::invalid_argument(std::string(what) + ": endpoint coincides with an atom");
}

}  // namespace detail

// Propagate boundary data from `from` to `to` (from < to, both off the atom
// set): ordered product of free propagators over the gaps and vertex jumps at
// the atoms in between.
inline BoundaryState propagate(const AtomicMeasure& mu, double from, double to, Complex z,
                               BoundaryState state) {
  if (!(from < to)) throw std::invalid_argument("propagate: requires from < to");
  detail::require_clear_endpoint(mu, from, "propagate");
  detail::require_clear_endpoint(mu, to, "propagate");
  double x = from;
  for (std::size_t i = mu.first_after(from); i < mu.size() && mu.position(i) < to; ++i) {
    detail::advance_free(state, z, detail::phase_functions(z, mu.position(i) - x));
    detail::cross_atom(state, sqrt_branching_from_weight(mu.weight(i)));
    x = mu.position(i);
  }
  detail::advance_free(state, z, detail::phase_functions(z, to - x));
  return state;
}

// Accumulated transfer matrix of the same flow.
inline TransferMatrix transfer_matrix(const AtomicMeasure& mu, double from, double to, Complex z) {
  if (!(from < to)) throw std::invalid_argument("transfer_matrix: requires from < to");
  detail::require_clear_endpoint(mu, from, "transfer_matrix");
  detail::require_clear_endpoint(mu, to, "transfer_matrix");
  TransferMatrix M;
  double x = from;
  for (std::size_t i = mu.first_after(from); i < mu.size() && mu.position(i) < to; ++i) {
    M = vertex_jump_from_weight(mu.weight(i)) * (free_propagator(z, mu.position(i) - x) * M);
    x = mu.position(i);
  }
  return free_propagator(z, to - x) * M;
}

// Neumann/Dirichlet fundamental pair: data at b of the solutions with
// u_N(t) = 1, u_N'(t) = 0 and u_D(t) = 0, u_D'(t) = 1.
inline std::pair<BoundaryState, BoundaryState> fundamental_pair(const AtomicMeasure& mu, double t,
                                                                double b, Complex z) {
  if (!(t < b)) throw std::invalid_argument("fundamental_pair: requires t < b");
  return {propagate(mu, t, b, z, {1.0, 0.0}), propagate(mu, t, b, z, {0.0, 1.0})};
}

}  // namespace treespec
