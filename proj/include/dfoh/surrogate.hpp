#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dfoh/core.hpp"

namespace dfoh {

struct HistoryRecord {
  Vector x;
  Vector w;
  double value = 0.0;
};

struct HistoryQuery {
  /// Only records with index < limit are visible.
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  /// Only records whose w is bitwise equal to the query's w.
  bool same_w = false;
};

/// Exact black-box evaluations keyed by theta = (x, w).
///
/// Records are grouped by distinct x; the distinct x's are bucketed on a
/// fixed grid so radius queries only touch nearby groups.  Below
/// `kLinearScanBelow` records every query is a plain scan.
class HistoryStore {
 public:
  static constexpr std::size_t kLinearScanBelow = 512;
  static constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();

  HistoryStore(std::size_t n_x, std::size_t n_w, double cell_size = 0.25);

  std::size_t n_x() const { return n_x_; }
  std::size_t n_w() const { return n_w_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const HistoryRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<HistoryRecord>& records() const { return records_; }

  /// Appends (x, w, value); a bitwise-identical (x, w) keeps its slot and
  /// takes the new value.
  void record(const Vector& x, const Vector& w, double value);

  std::optional<std::size_t> find(const Vector& x, const Vector& w) const;

  using Query = HistoryQuery;

  /// Indices of records with ||(x_j, w_j) - (x, w)||_2 <= delta, ascending.
  std::vector<std::size_t> query(const Vector& x, const Vector& w, double delta, Query opts = {}) const;
  /// Reference implementation of query by full scan.
  std::vector<std::size_t> query_linear(const Vector& x, const Vector& w, double delta, Query opts = {}) const;
  /// True when query() would return at least `count` records.
  bool has_neighbors(const Vector& x, const Vector& w, double delta, std::size_t count, Query opts = {}) const;

  /// Distinct x's in first-seen order.
  std::size_t distinct_x_count() const { return groups_.size(); }
  const Vector& distinct_x(std::size_t g) const { return groups_[g].x; }
  /// Distinct x's with ||x - center||_2 <= radius, in first-seen order.
  std::vector<std::size_t> distinct_x_within(const Vector& center, double radius) const;

  void save(const std::string& path) const;
  static HistoryStore load(const std::string& path, double cell_size = 0.25);

 private:
  struct Group {
    Vector x;
    std::vector<std::size_t> members;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept;
  };

  std::vector<std::int64_t> cell_of(const Vector& x) const;
  double cell_distance2(const std::vector<std::int64_t>& cell, const Vector& x) const;
  template <typename Visit>
  void visit_groups(const Vector& x, double radius, Visit&& visit) const;
  bool accept(std::size_t idx, const Vector& x, const Vector& w, double delta2, const Query& opts) const;

  std::size_t n_x_;
  std::size_t n_w_;
  double cell_;
  std::vector<HistoryRecord> records_;
  std::vector<Group> groups_;
  std::unordered_map<std::string, std::size_t> by_theta_;
  std::unordered_map<std::string, std::size_t> by_x_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, KeyHash> cells_;
};

struct NeighborSet {
  std::vector<Vector> thetas;
  std::vector<double> values;
  Vector center;
  double radius = 0.0;

  std::size_t size() const { return values.size(); }
};

NeighborSet collect_neighbors(const HistoryStore& store, const Vector& x, const Vector& w, double delta,
                              HistoryStore::Query opts = {});

struct RegressionResult {
  double estimate = 0.0;
  Vector beta;
};

/// Ridge regression with an unregularized intercept, evaluated at `theta`
/// through the centered closed form beta = 1/N + M_d (M_d^T M_d + lambda I)^{-1} (theta - mean).
RegressionResult regress(const NeighborSet& neighbors, const Vector& theta, double lambda);

/// Error factor kappa with |estimate - F| <= kappa * delta for an
/// L-Lipschitz F: L * (1 + 2 N delta / (sigma_min + lambda)), sigma_min the
/// smallest eigenvalue of the centered M_d^T M_d.
double certified_error_factor(const NeighborSet& neighbors, double lambda, double lipschitz);

enum class ValueSource { exact, cached, approx };

std::string to_string(ValueSource s);

/// Everything the approximate-or-evaluate decision needs.
struct GateContext {
  const CompositeProblem& problem;
  CountingOracle& oracle;
  HistoryStore& store;
  /// Records with index >= prior_limit were added by the current solve and
  /// only serve bitwise lookups.
  std::size_t prior_limit = 0;
  bool allow_approx = true;
  int n_min = 1;
  double lambda = 1e-6;
};

struct GateResult {
  double value = 0.0;
  ValueSource source = ValueSource::exact;
  std::size_t neighbors = 0;
};

/// What approximate_or_evaluate would do, without calling the oracle.
ValueSource plan_value(const GateContext& ctx, std::size_t i, const Vector& x, double delta);

GateResult approximate_or_evaluate(GateContext& ctx, std::size_t i, const Vector& x, double delta);

/// History points inside the trust region, filtered by the number of
/// elements obtainable there without an oracle call (>= u_thr) and sorted by
/// Euclidean distance to x_k.  x_k itself is excluded.
std::vector<Vector> score_candidates(const GateContext& ctx, const Vector& x_k, double radius, double delta,
                                     int u_thr, NormKind kind);

/// Score u(x) used by score_candidates.
int candidate_score(const GateContext& ctx, const Vector& x, double delta);

}  // namespace dfoh
