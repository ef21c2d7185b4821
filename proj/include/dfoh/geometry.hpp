#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dfoh/core.hpp"

namespace dfoh {

/// Interpolation directions around x_k.  `directions` always starts with the
/// zero vector; `null_basis` spans the orthogonal complement of the nonzero
/// directions and has orthonormal columns.  `points` holds the feasible point
/// to evaluate for each direction (x_k first); it equals x_k + d up to
/// rounding and is the candidate itself for reused history points.
struct InterpolationSet {
  std::vector<Vector> directions;
  std::vector<Vector> points;
  Matrix null_basis;
  double radius = 0.0;
  double xi = 0.0;

  std::size_t size() const { return directions.size(); }
  std::size_t n_z() const { return static_cast<std::size_t>(null_basis.cols()); }
  bool complete() const { return null_basis.cols() == 0; }
  /// n_x by (|D| - 1) matrix of the nonzero directions.
  Matrix direction_matrix() const;
};

/// Orthonormal basis of null(D^T) for D with full column rank.
Matrix null_basis(const Matrix& directions, std::size_t n_x);

/// ||Z^T d||_2 / radius.
double pivot_magnitude(const Matrix& z, const Vector& d, double radius);

/// ||Z^T d||_2^2.
double upsilon(const Matrix& z, const Vector& d);

/// Per-coordinate step lengths at which x_k + tau v hits the box.
Vector breakpoints(const Vector& v, const Vector& x_k, const Bounds& bounds);

/// d(v, tau)_j = min(tau, tbar_j) * v_j with 0 * inf = 0.
Vector truncated_direction(const Vector& v, double tau, const Vector& tbar);

/// Step length along v maximizing Upsilon over the breakpoints of d(v, .)
/// that stay inside the trust region, plus the boundary crossing if any.
/// Returns 0 when no coordinate can move.
double opt_step(const Matrix& z, const Vector& v, const Vector& tbar, double radius, NormKind kind);

struct Rejection {
  Vector point;
  std::string reason;
};

struct CandidateScan {
  InterpolationSet set;
  std::vector<Rejection> rejected;
};

/// Greedy selection of candidate points whose normalized projection onto
/// the current null space is at least xi.  Candidates are taken in order.
CandidateScan build_from_candidates(const Vector& x_k, double radius, const std::vector<Vector>& candidates,
                                    double xi, const Bounds& bounds, NormKind kind);

/// Adds one direction maximizing Upsilon along +-z_i, i = 1..n_z.
InterpolationSet next_direction(const InterpolationSet& set, const Vector& x_k, const Bounds& bounds,
                                NormKind kind);

/// Calls next_direction until the set holds n_x + 1 directions.
InterpolationSet complete_set(InterpolationSet set, const Vector& x_k, const Bounds& bounds, NormKind kind);

/// Largest xi for which next_direction always adds a well-poised direction.
double xi_max(std::size_t n_x, const Bounds& bounds, double delta_max, double kappa_tr1);

/// Lambda with ||D^{-1}||_2 <= Lambda / radius for completed sets.
double lambda_bound(std::size_t n_x, double xi, double kappa_tr0);

}  // namespace dfoh
