#pragma once

#include <vector>

#include "dfoh/core.hpp"

namespace dfoh {

/// Linear element models q_i(x_k + s) = values[i] + gradients.col(i)^T s.
struct ElementModels {
  Vector values;     // p
  Matrix gradients;  // n_x by p
  double condition_estimate = 0.0;

  double evaluate(std::size_t i, const Vector& s) const { return values[i] + gradients.col(i).dot(s); }
};

/// m(x_k + s) = f0 + g^T s + 0.5 s^T H s.
struct MasterModel {
  double f0 = 0.0;
  Vector gradient;
  Matrix hessian;

  double evaluate(const Vector& s) const { return f0 + gradient.dot(s) + 0.5 * s.dot(hessian * s); }
  Vector gradient_at(const Vector& s) const { return gradient + hessian * s; }
};

struct StationarityResult {
  double measure = 0.0;
  Vector direction;
};

/// Solves D^T g_i = F_i(x_k + d_j) - F_i(x_k) for every element.  `values`
/// is p by (n_x + 1); column j belongs to directions[j] (column 0 is x_k).
ElementModels fit_linear_elements(const std::vector<Vector>& directions, const Matrix& values);

MasterModel master_model(const ElementModels& elements, const OuterFunction& outer);

/// |min g^T d| over ||d||_tr <= 1, x_k + d in the box.
StationarityResult stationarity(const Vector& g, const Vector& x_k, const Bounds& bounds, NormKind kind);

/// Upper bound on |d^T H d| over the unit ball of the trust-region norm,
/// floored at 1.
double curvature_bound(const MasterModel& model, NormKind kind = NormKind::L2);

struct StepResult {
  Vector step;
  double model_decrease = 0.0;
  double cauchy_decrease = 0.0;
  double required_decrease = 0.0;
  int refinement_steps = 0;
};

/// Cauchy step along the stationarity direction, then projected-gradient
/// refinement.  Throws InternalError if the Cauchy decrease condition fails.
StepResult solve_tr_subproblem(const MasterModel& model, const Vector& x_k, double radius, const Bounds& bounds,
                               double kappa_fcd, const StationarityResult& stat, NormKind kind);

/// Euclidean projection of s onto {l <= s <= u} intersected with the
/// trust-region ball of the given radius (l <= 0 <= u).
Vector project_step(const Vector& s, const Vector& lo, const Vector& hi, double radius, NormKind kind);

}  // namespace dfoh
