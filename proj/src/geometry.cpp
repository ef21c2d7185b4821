#include "dfoh/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace dfoh {

namespace {

// Relative slack for trust-region membership after floating-point rounding.
constexpr double kRadiusSlack = 1e-12;

Vector clamp_step(const Vector& x_k, const Vector& d, const Bounds& bounds) {
  return project_box(x_k + d, bounds) - x_k;
}

}  // namespace

Matrix InterpolationSet::direction_matrix() const {
  const Eigen::Index n = directions.empty() ? 0 : directions.front().size();
  Matrix out(n, static_cast<Eigen::Index>(directions.size()) - 1);
  for (std::size_t j = 1; j < directions.size(); ++j) out.col(static_cast<Eigen::Index>(j) - 1) = directions[j];
  return out;
}

Matrix null_basis(const Matrix& directions, std::size_t n_x) {
  const auto n = static_cast<Eigen::Index>(n_x);
  if (directions.cols() == 0) return Matrix::Identity(n, n);
  if (directions.rows() != n) throw InternalError("null_basis: direction dimension mismatch");
  if (directions.cols() > n) throw InternalError("null_basis: more directions than dimensions");

  Eigen::HouseholderQR<Matrix> qr(directions);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  const double scale = directions.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < directions.cols(); ++j) {
    if (!(std::abs(r(j, j)) > 1e-13 * scale))
      throw InternalError("null_basis: direction matrix is rank deficient");
  }
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - directions.cols());
}

double pivot_magnitude(const Matrix& z, const Vector& d, double radius) {
  if (z.cols() == 0) return 0.0;
  return (z.transpose() * d).norm() / radius;
}

double upsilon(const Matrix& z, const Vector& d) {
  if (z.cols() == 0) return 0.0;
  return (z.transpose() * d).squaredNorm();
}

Vector breakpoints(const Vector& v, const Vector& x_k, const Bounds& bounds) {
  if (!bounds.contains(x_k)) throw ConfigError("breakpoints: x_k is outside the box");
  Vector tbar(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double up = bounds.upper()[j];
    const double lo = bounds.lower()[j];
    if (v[j] > 0 && up < kInf) {
      tbar[j] = (up - x_k[j]) / v[j];
    } else if (v[j] < 0 && lo > -kInf) {
      tbar[j] = (lo - x_k[j]) / v[j];
    } else {
      tbar[j] = kInf;
    }
  }
  return tbar;
}

Vector truncated_direction(const Vector& v, double tau, const Vector& tbar) {
  Vector d(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    // 0 * inf = 0 convention.
    d[j] = v[j] == 0.0 ? 0.0 : std::min(tau, tbar[j]) * v[j];
  }
  return d;
}

double opt_step(const Matrix& z, const Vector& v, const Vector& tbar, double radius, NormKind kind) {
  std::vector<double> sorted;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (v[j] != 0.0 && tbar[j] > 0.0) sorted.push_back(tbar[j]);
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.empty()) return 0.0;

  auto step_norm = [&](double tau) { return norm(truncated_direction(v, tau, tbar), kind); };
  auto argmax = [&](const std::vector<double>& taus) {
    double best_tau = taus.front();
    double best = upsilon(z, truncated_direction(v, best_tau, tbar));
    for (std::size_t j = 1; j < taus.size(); ++j) {
      const double u = upsilon(z, truncated_direction(v, taus[j], tbar));
      if (u > best) {
        best = u;
        best_tau = taus[j];
      }
    }
    return best_tau;
  };

  if (std::isfinite(sorted.back()) && step_norm(sorted.back()) <= radius) return argmax(sorted);

  // Segment [prev, sorted[hat]] on which the step leaves the trust region.
  std::size_t hat = 0;
  double prev = 0.0;
  while (hat < sorted.size() && step_norm(sorted[hat]) < radius) {
    prev = sorted[hat];
    ++hat;
  }
  const double next = sorted[hat];

  double tau_hat = 0.0;
  if (kind == NormKind::L2) {
    double fixed = 0.0;
    double moving = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (v[j] == 0.0) continue;
      if (tbar[j] <= prev) {
        fixed += (tbar[j] * v[j]) * (tbar[j] * v[j]);
      } else {
        moving += v[j] * v[j];
      }
    }
    tau_hat = std::sqrt(std::max(0.0, radius * radius - fixed) / moving);
  } else {
    double moving = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (v[j] != 0.0 && tbar[j] > prev) moving = std::max(moving, std::abs(v[j]));
    }
    tau_hat = radius / moving;
  }
  tau_hat = std::clamp(tau_hat, prev, next);

  std::vector<double> taus(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(hat));
  taus.push_back(tau_hat);
  return argmax(taus);
}

CandidateScan build_from_candidates(const Vector& x_k, double radius, const std::vector<Vector>& candidates,
                                    double xi, const Bounds& bounds, NormKind kind) {
  const auto n = static_cast<std::size_t>(x_k.size());
  CandidateScan out;
  out.set.radius = radius;
  out.set.xi = xi;
  out.set.directions.push_back(Vector::Zero(x_k.size()));
  out.set.points.push_back(x_k);
  out.set.null_basis = Matrix::Identity(x_k.size(), x_k.size());

  for (const Vector& c : candidates) {
    if (out.set.complete()) break;
    if (!bounds.contains(c)) {
      out.rejected.push_back({c, "outside the feasible box"});
      continue;
    }
    const Vector d = c - x_k;
    if (norm(d, kind) > radius * (1.0 + kRadiusSlack)) {
      out.rejected.push_back({c, "outside the trust region"});
      continue;
    }
    if (pivot_magnitude(out.set.null_basis, d, radius) >= xi) {
      out.set.directions.push_back(d);
      out.set.points.push_back(c);
      out.set.null_basis = null_basis(out.set.direction_matrix(), n);
    }
  }
  return out;
}

InterpolationSet next_direction(const InterpolationSet& set, const Vector& x_k, const Bounds& bounds,
                                NormKind kind) {
  if (set.n_z() == 0) throw InternalError("next_direction: interpolation set is already complete");
  const Matrix& z = set.null_basis;

  Vector best = Vector::Zero(x_k.size());
  double best_value = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    for (const double sign : {1.0, -1.0}) {
      const Vector v = sign * z.col(i);
      const Vector tbar = breakpoints(v, x_k, bounds);
      const double tau = opt_step(z, v, tbar, set.radius, kind);
      const Vector d = clamp_step(x_k, truncated_direction(v, tau, tbar), bounds);
      const double value = upsilon(z, d);
      if (value > best_value) {
        best_value = value;
        best = d;
      }
    }
  }
  if (best_value == 0.0) throw InternalError("next_direction: no direction with a nonzero pivot");

  InterpolationSet out = set;
  out.directions.push_back(best);
  out.points.push_back(project_box(x_k + best, bounds));
  out.null_basis = null_basis(out.direction_matrix(), static_cast<std::size_t>(x_k.size()));
  return out;
}

InterpolationSet complete_set(InterpolationSet set, const Vector& x_k, const Bounds& bounds, NormKind kind) {
  while (!set.complete()) set = next_direction(set, x_k, bounds, kind);
  return set;
}

double xi_max(std::size_t n_x, const Bounds& bounds, double delta_max, double kappa_tr1) {
  const double width = bounds.min_width();
  const double box_term = std::isfinite(width) ? width / (2.0 * delta_max) : kInf;
  return std::min(1.0 / kappa_tr1, box_term) / static_cast<double>(n_x);
}

double lambda_bound(std::size_t n_x, double xi, double kappa_tr0) {
  const double n = static_cast<double>(n_x);
  return std::pow(n, (n - 1.0) / 2.0) * std::pow(kappa_tr0, n - 1.0) / std::pow(xi, n);
}

}  // namespace dfoh
