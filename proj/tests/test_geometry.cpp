#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfoh/geometry.hpp"
#include "support.hpp"

using namespace dfoh;
using testsupport::random_box;
using testsupport::random_point;
using testsupport::random_vector;
using testsupport::vec;

namespace {

InterpolationSet empty_set(const Vector& x_k, double radius, double xi, const Bounds& b, NormKind kind) {
  return build_from_candidates(x_k, radius, {}, xi, b, kind).set;
}

// Step length where ||d(v, tau)|| first reaches the radius, by bisection.
double boundary_tau(const Vector& v, const Vector& tbar, double radius, NormKind kind) {
  double hi = 1.0;
  for (int i = 0; i < 200 && norm(truncated_direction(v, hi, tbar), kind) < radius; ++i) hi *= 2;
  if (norm(truncated_direction(v, hi, tbar), kind) < radius) return kInf;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (norm(truncated_direction(v, mid, tbar), kind) < radius ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST_CASE("null_basis examples") {
  Matrix d(2, 1);
  d << 1, 0;
  const Matrix z = null_basis(d, 2);
  REQUIRE(z.cols() == 1);
  CHECK(std::abs(z(0, 0)) < 1e-15);
  CHECK(std::abs(std::abs(z(1, 0)) - 1.0) < 1e-15);
  CHECK(null_basis(Matrix::Identity(3, 3), 3).cols() == 0);
  CHECK(null_basis(Matrix(3, 0), 3) == Matrix::Identity(3, 3));

  Matrix deficient(3, 2);
  deficient << 1, 2, 1, 2, 0, 0;
  CHECK_THROWS_AS(null_basis(deficient, 3), InternalError);
}

TEST_CASE("null_basis is orthonormal and orthogonal to the directions") {
  Rng rng(11);
  for (int s = 0; s < 200; ++s) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 6);
    const Eigen::Index m = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n + 1));
    Matrix d(n, m);
    for (Eigen::Index j = 0; j < m; ++j) d.col(j) = random_vector(rng, n);
    const Matrix z = null_basis(d, static_cast<std::size_t>(n));
    CHECK(z.cols() == n - m);
    if (z.cols() == 0) continue;
    CHECK((z.transpose() * z - Matrix::Identity(n - m, n - m)).cwiseAbs().maxCoeff() < 1e-12);
    if (m > 0) CHECK((d.transpose() * z).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pivot and upsilon examples") {
  Matrix e1(2, 1);
  e1 << 1, 0;
  CHECK(pivot_magnitude(e1, vec({2, 3}), 1.0) == 2.0);
  CHECK(upsilon(e1, vec({2, 3})) == 4.0);
  CHECK(upsilon(Matrix::Identity(2, 2), vec({2, 3})) == doctest::Approx(13.0));
  Matrix e2(2, 1);
  e2 << 0, 1;
  CHECK(upsilon(e2, vec({5, 0})) == 0.0);
  CHECK(pivot_magnitude(e2, vec({5, 0}), 2.0) == 0.0);
}

TEST_CASE("pivot equals the last Gram-Schmidt diagonal") {
  Rng rng(12);
  for (int s = 0; s < 300; ++s) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 5);
    const Eigen::Index m = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
    std::vector<Vector> cols;
    Matrix d(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      cols.push_back(random_vector(rng, n));
      d.col(j) = cols.back();
    }
    const Vector extra = random_vector(rng, n);
    cols.push_back(extra);
    const double radius = std::exp(rng.uniform(-4, 2));
    const double pivot = pivot_magnitude(null_basis(d, static_cast<std::size_t>(n)), extra, radius) * radius;
    const double oracle = testsupport::mgs_last_diag(cols);
    CHECK(std::abs(pivot - oracle) <= 1e-10 * oracle);
  }
}

TEST_CASE("breakpoints examples") {
  const Bounds sq(vec({-1, -1}), vec({1, 1}));
  const Vector t1 = breakpoints(vec({1, 0}), vec({0, 0}), sq);
  CHECK(t1[0] == 1.0);
  CHECK(t1[1] == kInf);
  const Bounds mixed(vec({-1, -kInf}), vec({kInf, 2}));
  const Vector t2 = breakpoints(vec({-0.5, 0.5}), vec({0, 0}), mixed);
  CHECK(t2[0] == 2.0);
  CHECK(t2[1] == 4.0);
  const Vector t3 = breakpoints(vec({0, 0}), vec({0, 0}), sq);
  CHECK(t3[0] == kInf);
  CHECK(t3[1] == kInf);
  CHECK_THROWS_AS(breakpoints(vec({1, 0}), vec({2, 0}), sq), ConfigError);
}

TEST_CASE("breakpoints are infinite exactly in the unblocked cases") {
  Rng rng(13);
  for (int s = 0; s < 300; ++s) {
    const Bounds b = random_box(rng, 4);
    const Vector x = random_point(rng, b);
    Vector v = random_vector(rng, 4);
    if (rng.uniform() < 0.3) v[0] = 0.0;
    const Vector t = breakpoints(v, x, b);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const bool free = v[j] == 0.0 || (v[j] > 0 && b.upper()[j] == kInf) || (v[j] < 0 && b.lower()[j] == -kInf);
      CHECK((t[j] == kInf) == free);
      CHECK(t[j] >= 0.0);
    }
  }
}

TEST_CASE("truncated_direction examples") {
  const Vector tbar = vec({1, kInf, kInf});
  CHECK(truncated_direction(vec({1, 0, 0}), 3.0, tbar) == vec({1, 0, 0}));
  CHECK(truncated_direction(vec({1, 2, 3}), 0.0, tbar) == vec({0, 0, 0}));
  CHECK(truncated_direction(vec({1, 2, 3}), 0.5, tbar) == vec({0.5, 1, 1.5}));
}

TEST_CASE("opt_step examples") {
  const Matrix one = Matrix::Identity(1, 1);
  const Bounds unit(vec({-1}), vec({1}));
  const Vector v = vec({1});
  CHECK(opt_step(one, v, breakpoints(v, vec({0}), unit), 0.5, NormKind::L2) == doctest::Approx(0.5));

  Rng rng(14);
  for (int s = 0; s < 50; ++s) {
    Vector u = random_vector(rng, 3);
    u.normalize();
    const Matrix z = Matrix::Identity(3, 3);
    const double r = std::exp(rng.uniform(-3, 3));
    const Vector tb = breakpoints(u, Vector::Zero(3), Bounds::unbounded(3));
    const double tau = opt_step(z, u, tb, r, NormKind::L2);
    CHECK(norm(truncated_direction(u, tau, tb), NormKind::L2) == doctest::Approx(r).epsilon(1e-12));
  }

  const Bounds small(Vector::Zero(2), Vector::Constant(2, 0.1));
  Vector w = vec({1, 2});
  w.normalize();
  Matrix zw(2, 1);
  zw.col(0) = w;
  const Vector tw = breakpoints(w, Vector::Zero(2), small);
  CHECK(opt_step(zw, w, tw, 10.0, NormKind::L2) == doctest::Approx(tw.maxCoeff()));
  CHECK(opt_step(zw, Vector::Zero(2), breakpoints(Vector::Zero(2), Vector::Zero(2), small), 1.0, NormKind::L2) ==
        0.0);
}

TEST_CASE("opt_step matches a fine grid maximizer of upsilon") {
  Rng rng(15);
  for (NormKind kind : {NormKind::L2, NormKind::Linf}) {
    for (int s = 0; s < 60; ++s) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 3);
      const Bounds b = random_box(rng, n);
      const Vector x = random_point(rng, b);
      Matrix d(n, 1);
      d.col(0) = random_vector(rng, n);
      const Matrix z = null_basis(d, static_cast<std::size_t>(n));
      const Vector v = rng.uniform() < 0.5 ? Vector(z.col(0)) : Vector(-z.col(0));
      const Vector tbar = breakpoints(v, x, b);
      const double radius = std::pow(10.0, rng.uniform(-2, 1));
      const double tau = opt_step(z, v, tbar, radius, kind);
      const Vector step = truncated_direction(v, tau, tbar);
      CHECK(norm(step, kind) <= radius * (1 + 1e-10));

      double finite_max = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::isfinite(tbar[j])) finite_max = std::max(finite_max, tbar[j]);
      double hi = boundary_tau(v, tbar, radius, kind);
      if (finite_max > 0) hi = std::min(hi, finite_max * 1.01);
      if (!std::isfinite(hi)) continue;
      double grid_best = 0.0;
      const int m = 100000;
      for (int g = 0; g <= m; ++g) {
        const double t = hi * g / m;
        const Vector dt = truncated_direction(v, t, tbar);
        if (norm(dt, kind) > radius) continue;
        grid_best = std::max(grid_best, upsilon(z, dt));
      }
      CHECK(upsilon(z, step) >= grid_best - 1e-8 * std::max(1.0, grid_best));
    }
  }
}

TEST_CASE("build_from_candidates examples") {
  const Bounds free3 = Bounds::unbounded(3);
  const Vector x = vec({1, 2, 3});
  const InterpolationSet init = empty_set(x, 1.0, 0.5, free3, NormKind::L2);
  CHECK(init.size() == 1);
  CHECK(init.directions[0] == Vector::Zero(3));
  CHECK(init.points[0] == x);
  CHECK(init.null_basis == Matrix::Identity(3, 3));

  const Vector c1 = x + vec({1, 0, 0});
  const CandidateScan one = build_from_candidates(x, 1.0, {c1}, 0.5, free3, NormKind::L2);
  CHECK(one.set.size() == 2);
  CHECK(one.set.points[1] == c1);
  CHECK(one.set.n_z() == 2);
  CHECK(std::abs(one.set.null_basis.row(0).norm()) < 1e-12);

  const Vector c2 = x + vec({0.5, 0, 0});
  const CandidateScan dep = build_from_candidates(x, 1.0, {c1, c2}, 0.5, free3, NormKind::L2);
  CHECK(dep.set.size() == 2);

  const CandidateScan far = build_from_candidates(x, 1.0, {x + vec({0, 2, 0})}, 0.5, free3, NormKind::L2);
  CHECK(far.set.size() == 1);
  REQUIRE(far.rejected.size() == 1);

  const Bounds pos = Bounds::nonnegative(3);
  const CandidateScan out = build_from_candidates(x, 5.0, {vec({-1, 2, 3})}, 0.5, pos, NormKind::L2);
  CHECK(out.set.size() == 1);
  CHECK(out.rejected.size() == 1);
}

TEST_CASE("every accepted candidate had pivot at least xi") {
  Rng rng(16);
  for (int s = 0; s < 200; ++s) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 4);
    const Bounds b = random_box(rng, n);
    const Vector x = random_point(rng, b);
    const double radius = std::pow(10.0, rng.uniform(-2, 0.5));
    const double xi = 0.2 * rng.uniform();
    std::vector<Vector> cands;
    for (int c = 0; c < 8; ++c) cands.push_back(project_box(x + random_vector(rng, n, radius * 0.5), b));
    const CandidateScan scan = build_from_candidates(x, radius, cands, xi, b, NormKind::L2);
    InterpolationSet replay = empty_set(x, radius, xi, b, NormKind::L2);
    for (std::size_t j = 1; j < scan.set.size(); ++j) {
      CHECK(pivot_magnitude(replay.null_basis, scan.set.directions[j], radius) >= xi);
      replay.directions.push_back(scan.set.directions[j]);
      replay.null_basis = null_basis(replay.direction_matrix(), static_cast<std::size_t>(n));
      CHECK(b.contains(scan.set.points[j]));
    }
  }
}

TEST_CASE("next_direction examples") {
  const Bounds unit(vec({-1}), vec({1}));
  const InterpolationSet s1 = next_direction(empty_set(vec({0}), 0.5, 0.1, unit, NormKind::L2), vec({0}), unit,
                                             NormKind::L2);
  REQUIRE(s1.size() == 2);
  CHECK(s1.directions[1][0] == doctest::Approx(0.5));
  CHECK(s1.complete());

  const Bounds free2 = Bounds::unbounded(2);
  const InterpolationSet base = empty_set(vec({3, -1}), 0.7, 0.1, free2, NormKind::L2);
  const InterpolationSet s2 = next_direction(base, vec({3, -1}), free2, NormKind::L2);
  CHECK(s2.directions[1].norm() == doctest::Approx(0.7));
  CHECK(pivot_magnitude(base.null_basis, s2.directions[1], 0.7) == doctest::Approx(1.0));

  const Bounds quad = Bounds::nonnegative(2);
  const InterpolationSet full = complete_set(empty_set(vec({0, 0}), 1.0, 0.1, quad, NormKind::L2), vec({0, 0}),
                                             quad, NormKind::L2);
  CHECK(full.size() == 3);
  for (const Vector& d : full.directions) CHECK(d.minCoeff() >= 0.0);

  CHECK_THROWS_AS(next_direction(full, vec({0, 0}), quad, NormKind::L2), InternalError);
}

TEST_CASE("next_direction is pure geometry and keeps the acceptance conditions") {
  Rng rng(17);
  for (NormKind kind : {NormKind::L2, NormKind::Linf}) {
    for (int s = 0; s < 200; ++s) {
      const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.uniform() * 5);
      const Bounds b = random_box(rng, n);
      const Vector x = random_point(rng, b);
      const double radius = std::pow(10.0, rng.uniform(-3, 1));
      const double xi = xi_max(static_cast<std::size_t>(n), b, radius, kappa_tr1(n, kind));
      InterpolationSet set = empty_set(x, radius, xi, b, kind);
      while (!set.complete()) {
        const InterpolationSet next = next_direction(set, x, b, kind);
        const Vector& d = next.directions.back();
        CHECK(pivot_magnitude(set.null_basis, d, radius) >= xi * (1 - 1e-12));
        CHECK(norm(d, kind) <= radius * (1 + 1e-12));
        CHECK(b.contains(next.points.back()));
        CHECK(next.size() + next.n_z() == static_cast<std::size_t>(n) + 1);
        set = next;
      }
    }
  }
}

TEST_CASE("xi_max and lambda_bound formulas") {
  CHECK(xi_max(5, Bounds::unbounded(5), 10.0, 1.0) == doctest::Approx(0.2));
  CHECK(1e-3 <= xi_max(5, Bounds::nonnegative(5), 1e3, 1.0));
  const Bounds box(vec({0, 0}), vec({1, 5}));
  CHECK(xi_max(2, box, 10.0, 1.0) == doctest::Approx(0.025));
  CHECK(lambda_bound(1, 0.5, 1.0) == doctest::Approx(2.0));
  CHECK(lambda_bound(2, 0.1, 1.0) == doctest::Approx(std::sqrt(2.0) / 0.01));
}

TEST_CASE("completed sets satisfy the inverse-norm bound") {
  Rng rng(18);
  for (int s = 0; s < 200; ++s) {
    const std::size_t n = std::vector<std::size_t>{1, 2, 3, 5}[static_cast<std::size_t>(rng.uniform() * 4)];
    const Bounds b = random_box(rng, static_cast<Eigen::Index>(n));
    const Vector x = random_point(rng, b);
    const double radius = std::pow(10.0, rng.uniform(-3, 1));
    const double xi = xi_max(n, b, radius, 1.0);
    const InterpolationSet set = complete_set(empty_set(x, radius, xi, b, NormKind::L2), x, b, NormKind::L2);
    const Matrix inv = set.direction_matrix().inverse();
    CHECK(testsupport::spectral_norm(inv) <= lambda_bound(n, xi, 1.0) / radius * (1 + 1e-9));
  }
}
