#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "dfoh/core.hpp"

namespace testsupport {

using dfoh::Bounds;
using dfoh::kInf;
using dfoh::Matrix;
using dfoh::Rng;
using dfoh::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Vector random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = scale * rng.normal();
  return v;
}

// Box mixing two-sided, one-sided and free coordinates, widths spread over
// several decades.
inline Bounds random_box(Rng& rng, Eigen::Index n) {
  Vector lo(n), hi(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double kind = rng.uniform();
    const double a = rng.uniform(-5, 5);
    const double w = std::pow(10.0, rng.uniform(-2, 1.5));
    if (kind < 0.4) {
      lo[j] = a;
      hi[j] = a + w;
    } else if (kind < 0.6) {
      lo[j] = a;
      hi[j] = kInf;
    } else if (kind < 0.8) {
      lo[j] = -kInf;
      hi[j] = a;
    } else {
      lo[j] = -kInf;
      hi[j] = kInf;
    }
  }
  return Bounds(lo, hi);
}

// Feasible point, sometimes on a face of the box.
inline Vector random_point(Rng& rng, const Bounds& b) {
  const Eigen::Index n = static_cast<Eigen::Index>(b.dim());
  Vector x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = b.lower()[j];
    const double hi = b.upper()[j];
    const double face = rng.uniform();
    if (face < 0.15 && std::isfinite(lo)) {
      x[j] = lo;
    } else if (face < 0.3 && std::isfinite(hi)) {
      x[j] = hi;
    } else if (std::isfinite(lo) && std::isfinite(hi)) {
      x[j] = lo + (hi - lo) * rng.uniform();
    } else if (std::isfinite(lo)) {
      x[j] = lo + std::abs(rng.normal()) * 2;
    } else if (std::isfinite(hi)) {
      x[j] = hi - std::abs(rng.normal()) * 2;
    } else {
      x[j] = rng.normal() * 3;
    }
  }
  return x;
}

// Last diagonal magnitude of a Gram-Schmidt QR (with reorthogonalization) of [a_1 .. a_m].
inline double mgs_last_diag(const std::vector<Vector>& cols) {
  std::vector<Vector> q;
  double r = 0.0;
  for (const Vector& a : cols) {
    Vector v = a;
    for (const Vector& qi : q) v -= qi.dot(v) * qi;
    for (const Vector& qi : q) v -= qi.dot(v) * qi;
    r = v.norm();
    q.push_back(v / r);
  }
  return r;
}

// Best g^T d found by sampling the feasible slice of the unit ball:
// clamped sphere points (L2) or box vertices (Linf), then a shrinking local
// search around the incumbent.  Returns the measure |min g^T d|.
inline double sampled_stationarity(const Vector& g, const Vector& x, const Bounds& b, dfoh::NormKind kind,
                                   Rng& rng, int samples) {
  const Eigen::Index n = g.size();
  const Vector lo = (b.lower() - x).cwiseMax(-1.0);
  const Vector hi = (b.upper() - x).cwiseMin(1.0);
  double best = 0.0;
  if (kind == dfoh::NormKind::Linf) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      Vector d(n);
      for (Eigen::Index j = 0; j < n; ++j) d[j] = (mask >> j) & 1 ? hi[j] : lo[j];
      best = std::min(best, g.dot(d));
    }
    return -best;
  }
  auto feasible = [&](Vector d) {
    d = d.cwiseMax(lo).cwiseMin(hi);
    const double len = d.norm();
    if (len > 1.0) d /= len;
    return d;
  };
  Vector incumbent = Vector::Zero(n);
  const int global = samples / 2;
  for (int s = 0; s < global; ++s) {
    Vector u = random_vector(rng, n);
    u /= u.norm();
    const Vector d = feasible(u);
    if (g.dot(d) < best) {
      best = g.dot(d);
      incumbent = d;
    }
  }
  double scale = 0.1;
  for (int s = global; s < samples; ++s) {
    Vector u = incumbent + random_vector(rng, n, scale);
    if (rng.uniform() < 0.5 && u.norm() > 0) u /= u.norm();
    const Vector d = feasible(u);
    if (g.dot(d) < best) {
      best = g.dot(d);
      incumbent = d;
    }
    if ((s - global) % 1000 == 999) scale *= 0.7;
  }
  return -best;
}

// Projection onto the probability simplex by enumerating supports: on
// support S the KKT point is u_S = v_S - (sum v_S - 1)/|S|.
inline Vector simplex_by_enumeration(const Vector& v) {
  const Eigen::Index n = v.size();
  Vector best;
  double best_dist = kInf;
  for (int mask = 1; mask < (1 << n); ++mask) {
    double sum = 0;
    int count = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if ((mask >> j) & 1) {
        sum += v[j];
        ++count;
      }
    const double shift = (sum - 1.0) / count;
    Vector u = Vector::Zero(n);
    bool ok = true;
    for (Eigen::Index j = 0; j < n; ++j)
      if ((mask >> j) & 1) {
        u[j] = v[j] - shift;
        ok = ok && u[j] >= -1e-15;
      }
    if (!ok) continue;
    const double dist = (u - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = u.cwiseMax(0.0);
    }
  }
  return best;
}

// Ridge weights with an unpenalized intercept from the uncentered system,
// through a QR of the stacked matrix [A; sqrt(lambda) Ibar]:
// beta = A R^{-1} R^{-T} [1; theta].
inline Vector uncentered_beta(const std::vector<Vector>& thetas, const Vector& theta, double lambda) {
  const auto n = static_cast<Eigen::Index>(thetas.size());
  const Eigen::Index d = theta.size();
  Matrix b = Matrix::Zero(n + d, d + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    b(j, 0) = 1.0;
    b.row(j).tail(d) = thetas[static_cast<std::size_t>(j)].transpose();
  }
  b.bottomRightCorner(d, d) = Matrix::Identity(d, d) * std::sqrt(lambda);
  Eigen::HouseholderQR<Matrix> qr(b);
  const Matrix r = qr.matrixQR().topRows(d + 1).triangularView<Eigen::Upper>();
  Vector e(d + 1);
  e << 1.0, theta;
  const Vector y = r.transpose().triangularView<Eigen::Lower>().solve(e);
  const Vector a = r.triangularView<Eigen::Upper>().solve(y);
  return b.topRows(n) * a;
}

// Points uniform in the Euclidean ball around center.
inline std::vector<Vector> ball_points(Rng& rng, const Vector& center, double radius, int count) {
  std::vector<Vector> out;
  for (int j = 0; j < count; ++j) {
    Vector u = random_vector(rng, center.size());
    u *= radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(center.size())) / u.norm();
    out.push_back(center + u);
  }
  return out;
}

inline double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace testsupport
