#include "dfoh/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dfoh {

ElementModels fit_linear_elements(const std::vector<Vector>& directions, const Matrix& values) {
  if (directions.empty()) throw ConfigError("fit_linear_elements: no directions");
  const Eigen::Index n = directions.front().size();
  if (static_cast<Eigen::Index>(directions.size()) != n + 1)
    throw ConfigError("fit_linear_elements: need exactly n_x + 1 directions");
  if (values.cols() != n + 1) throw ConfigError("fit_linear_elements: value table has wrong width");

  ElementModels out;
  out.values = values.col(0);
  if (n == 0) {
    out.gradients = Matrix(0, values.rows());
    return out;
  }

  Matrix dt(n, n);
  for (Eigen::Index j = 0; j < n; ++j) dt.row(j) = directions[static_cast<std::size_t>(j) + 1].transpose();
  const Matrix rhs = (values.rightCols(n).colwise() - values.col(0)).transpose();

  Eigen::PartialPivLU<Matrix> lu(dt);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) throw InternalError("fit_linear_elements: interpolation directions are singular");
  out.condition_estimate = 1.0 / rcond;
  out.gradients = lu.solve(rhs);
  return out;
}

MasterModel master_model(const ElementModels& elements, const OuterFunction& outer) {
  MasterModel m;
  m.f0 = outer.value(elements.values);
  const Matrix& g = elements.gradients;
  m.gradient = g * outer.gradient(elements.values);
  const Matrix h = g * outer.hessian(elements.values) * g.transpose();
  m.hessian = 0.5 * (h + h.transpose());
  return m;
}

StationarityResult stationarity(const Vector& g, const Vector& x_k, const Bounds& bounds, NormKind kind) {
  if (!bounds.contains(x_k)) throw ConfigError("stationarity: x_k is outside the box");
  const Eigen::Index n = g.size();
  const Vector lo = (bounds.lower() - x_k).cwiseMax(-1.0);
  const Vector hi = (bounds.upper() - x_k).cwiseMin(1.0);

  Vector d_box(n);
  for (Eigen::Index j = 0; j < n; ++j) d_box[j] = g[j] > 0 ? lo[j] : (g[j] < 0 ? hi[j] : 0.0);

  StationarityResult out;
  if (kind == NormKind::Linf || d_box.norm() <= 1.0) {
    out.direction = d_box;
  } else {
    auto at = [&](double mu) {
      Vector d(n);
      for (Eigen::Index j = 0; j < n; ++j) d[j] = std::clamp(-g[j] / (2.0 * mu), lo[j], hi[j]);
      return d;
    };
    // ||d(mu)|| is nonincreasing in mu; at mu_hi the unclamped step has norm 1.
    double mu_hi = 0.5 * g.norm();
    double mu_lo = mu_hi;
    for (int it = 0; it < 2000 && at(mu_lo).norm() <= 1.0; ++it) mu_lo *= 0.5;
    Vector d = at(mu_hi);
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(mu_lo * mu_hi);
      const Vector dm = at(mid);
      const double nm = dm.norm();
      if (nm <= 1.0) {
        mu_hi = mid;
        d = dm;
        if (1.0 - nm <= 1e-12) break;
      } else {
        mu_lo = mid;
      }
    }
    out.direction = d;
  }
  out.measure = std::abs(g.dot(out.direction));
  return out;
}

double curvature_bound(const MasterModel& model, NormKind kind) {
  const Matrix& h = model.hessian;
  if (h.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (kind == NormKind::Linf) spectral *= static_cast<double>(h.rows());
  return std::max(1.0, spectral);
}

Vector project_step(const Vector& s, const Vector& lo, const Vector& hi, double radius, NormKind kind) {
  if (kind == NormKind::Linf) {
    return s.cwiseMax(lo.cwiseMax(-radius)).cwiseMin(hi.cwiseMin(radius));
  }
  auto at = [&](double nu) { return (s / (1.0 + nu)).cwiseMax(lo).cwiseMin(hi).eval(); };
  Vector d = at(0.0);
  if (d.norm() <= radius) return d;
  double nu_lo = 0.0;
  double nu_hi = std::max(0.0, s.norm() / radius - 1.0);
  d = at(nu_hi);
  for (int it = 0; it < 200 && nu_hi - nu_lo > 1e-15 * (1.0 + nu_hi); ++it) {
    const double mid = 0.5 * (nu_lo + nu_hi);
    const Vector dm = at(mid);
    if (dm.norm() <= radius) {
      nu_hi = mid;
      d = dm;
    } else {
      nu_lo = mid;
    }
  }
  return d;
}

StepResult solve_tr_subproblem(const MasterModel& model, const Vector& x_k, double radius, const Bounds& bounds,
                               double kappa_fcd, const StationarityResult& stat, NormKind kind) {
  const double pi = stat.measure;
  if (!(pi > 0.0)) throw InternalError("solve_tr_subproblem: stationarity measure must be positive");
  const Vector lo = bounds.lower() - x_k;
  const Vector hi = bounds.upper() - x_k;
  auto feasible = [&](const Vector& s) { return (project_box(x_k + s, bounds) - x_k).eval(); };
  // Model change without f0, so tiny decreases are not lost to cancellation.
  auto change = [&](const Vector& s) { return model.gradient.dot(s) + 0.5 * s.dot(model.hessian * s); };
  auto decrease = [&](const Vector& s) { return -change(s); };

  const double kappa = curvature_bound(model, kind);
  const double required = kappa_fcd * pi * std::min({pi / (kappa + 1.0), radius, 1.0});

  // Cauchy step: minimize the 1-D quadratic along d* over t in [0, min(radius, 1)].
  const Vector& dir = stat.direction;
  const double t_max = std::min(radius, 1.0);
  const double curv = dir.dot(model.hessian * dir);
  const double t = curv > 0.0 ? std::min(pi / curv, t_max) : t_max;
  const Vector s_cauchy = feasible(t * dir);

  StepResult out;
  out.step = s_cauchy;
  out.cauchy_decrease = decrease(s_cauchy);
  out.required_decrease = required;
  const double terms = std::abs(model.gradient.dot(s_cauchy)) + std::abs(s_cauchy.dot(model.hessian * s_cauchy));
  if (out.cauchy_decrease < required * (1.0 - 1e-10) - 1e-14 * terms) {
    std::ostringstream os;
    os << "Cauchy decrease " << out.cauchy_decrease << " below required " << required;
    throw InternalError(os.str());
  }

  Vector s = s_cauchy;
  double m_s = change(s);
  Vector prev_s;
  Vector prev_grad;
  for (int it = 0; it < 25; ++it) {
    const Vector grad = model.gradient_at(s);
    double alpha = 1.0 / kappa;
    if (it > 0) {
      const Vector ds = s - prev_s;
      const Vector dg = grad - prev_grad;
      const double sy = ds.dot(dg);
      if (sy > 0) alpha = ds.squaredNorm() / sy;
    }
    Vector trial = project_step(s - alpha * grad, lo, hi, radius, kind);
    double m_trial = change(trial);
    int halvings = 0;
    while (!(m_trial < m_s) && halvings < 30) {
      alpha *= 0.5;
      trial = project_step(s - alpha * grad, lo, hi, radius, kind);
      m_trial = change(trial);
      ++halvings;
    }
    if (!(m_trial < m_s)) break;
    prev_s = s;
    prev_grad = grad;
    const double moved = (trial - s).norm();
    s = trial;
    m_s = m_trial;
    ++out.refinement_steps;
    if (moved <= 1e-15 * (1.0 + s.norm())) break;
  }

  const Vector refined = feasible(s);
  if (norm(refined, kind) <= radius * (1.0 + 1e-12) && decrease(refined) >= out.cauchy_decrease) {
    out.step = refined;
  }
  out.model_decrease = decrease(out.step);
  return out;
}

}  // namespace dfoh
