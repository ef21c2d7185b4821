#include "dfoh/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dfoh {

namespace {

std::string bits_of(const Vector& a, const Vector* b = nullptr) {
  const std::size_t na = static_cast<std::size_t>(a.size()) * sizeof(double);
  const std::size_t nb = b ? static_cast<std::size_t>(b->size()) * sizeof(double) : 0;
  std::string key(na + nb, '\0');
  if (na) std::memcpy(key.data(), a.data(), na);
  if (nb) std::memcpy(key.data() + na, b->data(), nb);
  return key;
}

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

Vector concat(const Vector& x, const Vector& w) {
  Vector t(x.size() + w.size());
  t << x, w;
  return t;
}

}  // namespace

std::size_t HistoryStore::KeyHash::operator()(const std::vector<std::int64_t>& k) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (const auto v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

HistoryStore::HistoryStore(std::size_t n_x, std::size_t n_w, double cell_size)
    : n_x_(n_x), n_w_(n_w), cell_(cell_size) {
  if (!(cell_size > 0)) throw ConfigError("history: cell size must be positive");
}

std::vector<std::int64_t> HistoryStore::cell_of(const Vector& x) const {
  std::vector<std::int64_t> key(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j) key[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(std::floor(x[j] / cell_));
  return key;
}

double HistoryStore::cell_distance2(const std::vector<std::int64_t>& cell, const Vector& x) const {
  double d2 = 0.0;
  for (std::size_t j = 0; j < cell.size(); ++j) {
    const double lo = static_cast<double>(cell[j]) * cell_;
    const double hi = lo + cell_;
    const double xj = x[static_cast<Eigen::Index>(j)];
    const double gap = xj < lo ? lo - xj : (xj > hi ? xj - hi : 0.0);
    d2 += gap * gap;
  }
  return d2;
}

void HistoryStore::record(const Vector& x, const Vector& w, double value) {
  if (static_cast<std::size_t>(x.size()) != n_x_ || static_cast<std::size_t>(w.size()) != n_w_)
    throw ConfigError("history: record dimension mismatch");
  if (!x.allFinite() || !w.allFinite() || !std::isfinite(value))
    throw ConfigError("history: records must be finite");

  const std::string key = bits_of(x, &w);
  if (auto it = by_theta_.find(key); it != by_theta_.end()) {
    records_[it->second].value = value;
    return;
  }
  const std::size_t idx = records_.size();
  records_.push_back({x, w, value});
  by_theta_.emplace(key, idx);

  const std::string xkey = bits_of(x);
  auto git = by_x_.find(xkey);
  if (git == by_x_.end()) {
    const std::size_t g = groups_.size();
    groups_.push_back({x, {}});
    git = by_x_.emplace(xkey, g).first;
    cells_[cell_of(x)].push_back(g);
  }
  groups_[git->second].members.push_back(idx);
}

std::optional<std::size_t> HistoryStore::find(const Vector& x, const Vector& w) const {
  if (auto it = by_theta_.find(bits_of(x, &w)); it != by_theta_.end()) return it->second;
  return std::nullopt;
}

template <typename Visit>
void HistoryStore::visit_groups(const Vector& x, double radius, Visit&& visit) const {
  const double r2 = radius * radius;
  for (const auto& [cell, members] : cells_) {
    if (cell_distance2(cell, x) > r2) continue;
    for (const std::size_t g : members) {
      if ((groups_[g].x - x).squaredNorm() <= r2) {
        if (!visit(g)) return;
      }
    }
  }
}

bool HistoryStore::accept(std::size_t idx, const Vector& x, const Vector& w, double delta2,
                          const Query& opts) const {
  if (idx >= opts.limit) return false;
  const HistoryRecord& r = records_[idx];
  if (opts.same_w && !bitwise_equal(r.w, w)) return false;
  const double s = (r.x - x).squaredNorm() + (r.w - w).squaredNorm();
  if (s > delta2) return false;
  if (s >= std::numeric_limits<double>::min()) return true;
  // Squares underflowed: rescale by the largest gap.
  const double m = std::max((r.x - x).cwiseAbs().maxCoeff(), r.w.size() ? (r.w - w).cwiseAbs().maxCoeff() : 0.0);
  if (m == 0.0) return true;
  const double scaled = ((r.x - x) / m).squaredNorm() + ((r.w - w) / m).squaredNorm();
  return m * std::sqrt(scaled) <= std::sqrt(delta2);
}

std::vector<std::size_t> HistoryStore::query_linear(const Vector& x, const Vector& w, double delta,
                                                    Query opts) const {
  std::vector<std::size_t> out;
  const double d2 = delta * delta;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (accept(i, x, w, d2, opts)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> HistoryStore::query(const Vector& x, const Vector& w, double delta, Query opts) const {
  if (records_.size() < kLinearScanBelow) return query_linear(x, w, delta, opts);
  std::vector<std::size_t> out;
  const double d2 = delta * delta;
  visit_groups(x, delta, [&](std::size_t g) {
    for (const std::size_t idx : groups_[g].members) {
      if (accept(idx, x, w, d2, opts)) out.push_back(idx);
    }
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

bool HistoryStore::has_neighbors(const Vector& x, const Vector& w, double delta, std::size_t count,
                                 Query opts) const {
  if (count == 0) return true;
  std::size_t found = 0;
  const double d2 = delta * delta;
  if (records_.size() < kLinearScanBelow) {
    for (std::size_t i = 0; i < records_.size() && found < count; ++i) {
      if (accept(i, x, w, d2, opts)) ++found;
    }
    return found >= count;
  }
  visit_groups(x, delta, [&](std::size_t g) {
    for (const std::size_t idx : groups_[g].members) {
      if (accept(idx, x, w, d2, opts) && ++found >= count) return false;
    }
    return true;
  });
  return found >= count;
}

std::vector<std::size_t> HistoryStore::distinct_x_within(const Vector& center, double radius) const {
  std::vector<std::size_t> out;
  visit_groups(center, radius, [&](std::size_t g) {
    out.push_back(g);
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

void HistoryStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write history file '" + path + "'");
  out << "DFOHIST v1 n_x=" << n_x_ << " n_w=" << n_w_ << "\n";
  char buf[40];
  for (const auto& r : records_) {
    bool first = true;
    auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      if (!first) out << ' ';
      out << buf;
      first = false;
    };
    for (Eigen::Index j = 0; j < r.x.size(); ++j) put(r.x[j]);
    for (Eigen::Index j = 0; j < r.w.size(); ++j) put(r.w[j]);
    put(r.value);
    out << "\n";
  }
  if (!out) throw IoError("failed writing history file '" + path + "'");
}

HistoryStore HistoryStore::load(const std::string& path, double cell_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open history file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ":1: missing header");
  std::size_t n_x = 0;
  std::size_t n_w = 0;
  {
    std::istringstream hs(line);
    std::string magic, version, fx, fw, extra;
    hs >> magic >> version >> fx >> fw;
    if (magic != "DFOHIST" || version != "v1" || fx.rfind("n_x=", 0) != 0 || fw.rfind("n_w=", 0) != 0 ||
        (hs >> extra))
      throw IoError(path + ":1: malformed header (expected 'DFOHIST v1 n_x=<int> n_w=<int>')");
    try {
      std::size_t pos = 0;
      n_x = std::stoul(fx.substr(4), &pos);
      if (pos != fx.size() - 4) throw std::invalid_argument("n_x");
      n_w = std::stoul(fw.substr(4), &pos);
      if (pos != fw.size() - 4) throw std::invalid_argument("n_w");
    } catch (const std::exception&) {
      throw IoError(path + ":1: malformed header dimensions");
    }
  }
  HistoryStore store(n_x, n_w, cell_size);
  const std::size_t width = n_x + n_w + 1;
  std::size_t lineno = 1;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    vals.clear();
    const char* p = line.c_str();
    char* end = nullptr;
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      const double v = std::strtod(p, &end);
      if (end == p) throw IoError(path + ":" + std::to_string(lineno) + ": not a number");
      vals.push_back(v);
      p = end;
    }
    if (vals.size() != width)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) +
                    " values, found " + std::to_string(vals.size()));
    Vector x = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(n_x));
    Vector w = Eigen::Map<const Vector>(vals.data() + n_x, static_cast<Eigen::Index>(n_w));
    try {
      store.record(x, w, vals.back());
    } catch (const ConfigError& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return store;
}

NeighborSet collect_neighbors(const HistoryStore& store, const Vector& x, const Vector& w, double delta,
                              HistoryStore::Query opts) {
  NeighborSet out;
  out.center = concat(x, w);
  out.radius = delta;
  for (const std::size_t idx : store.query(x, w, delta, opts)) {
    const HistoryRecord& r = store[idx];
    out.thetas.push_back(concat(r.x, r.w));
    out.values.push_back(r.value);
  }
  return out;
}

RegressionResult regress(const NeighborSet& neighbors, const Vector& theta, double lambda) {
  const std::size_t n = neighbors.size();
  if (n == 0) throw ConfigError("regress: empty neighbor set");
  RegressionResult out;
  const Vector phi = Eigen::Map<const Vector>(neighbors.values.data(), static_cast<Eigen::Index>(n));
  if (n == 1) {
    out.beta = Vector::Ones(1);
    out.estimate = phi[0];
    return out;
  }

  const Eigen::Index dim = theta.size();
  Vector mean = Vector::Zero(dim);
  for (const Vector& t : neighbors.thetas) mean += t;
  mean /= static_cast<double>(n);
  Matrix md(static_cast<Eigen::Index>(n), dim);
  for (std::size_t j = 0; j < n; ++j) md.row(static_cast<Eigen::Index>(j)) = (neighbors.thetas[j] - mean).transpose();

  Matrix gram = md.transpose() * md;
  gram.diagonal().array() += lambda;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().cwiseAbs().maxCoeff()))
    throw ConfigError("regress: singular normal equations (lambda = 0 with degenerate neighbors)");
  const Vector coef = ldlt.solve(theta - mean);

  // 1^T M_d = 0 exactly; remove the rounding drift so sum(beta) stays 1.
  Vector centered = md * coef;
  centered.array() -= centered.mean();
  out.beta = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)) + centered;
  out.estimate = out.beta.dot(phi);
  return out;
}

double certified_error_factor(const NeighborSet& neighbors, double lambda, double lipschitz) {
  const std::size_t n = neighbors.size();
  if (n == 0) throw ConfigError("certified_error_factor: empty neighbor set");
  const Eigen::Index dim = neighbors.thetas.front().size();
  Vector mean = Vector::Zero(dim);
  for (const Vector& t : neighbors.thetas) mean += t;
  mean /= static_cast<double>(n);
  Matrix md(static_cast<Eigen::Index>(n), dim);
  for (std::size_t j = 0; j < n; ++j) md.row(static_cast<Eigen::Index>(j)) = (neighbors.thetas[j] - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(md.transpose() * md, Eigen::EigenvaluesOnly);
  const double sigma_min = std::max(0.0, eig.eigenvalues().minCoeff());
  const double denom = sigma_min + lambda;
  if (!(denom > 0)) return kInf;
  return lipschitz * (1.0 + 2.0 * static_cast<double>(n) * neighbors.radius / denom);
}

std::string to_string(ValueSource s) {
  switch (s) {
    case ValueSource::exact: return "exact";
    case ValueSource::cached: return "cached";
    case ValueSource::approx: return "approx";
  }
  return "?";
}

namespace {

HistoryStore::Query prior_query(const GateContext& ctx) {
  return {ctx.prior_limit, !ctx.problem.shared_history()};
}

}  // namespace

ValueSource plan_value(const GateContext& ctx, std::size_t i, const Vector& x, double delta) {
  const Vector w = ctx.problem.element_feature(i);
  if (ctx.store.find(x, w)) return ValueSource::cached;
  if (ctx.allow_approx && ctx.prior_limit > 0 &&
      ctx.store.has_neighbors(x, w, delta, static_cast<std::size_t>(ctx.n_min), prior_query(ctx)))
    return ValueSource::approx;
  return ValueSource::exact;
}

GateResult approximate_or_evaluate(GateContext& ctx, std::size_t i, const Vector& x, double delta) {
  if (!ctx.problem.bounds.contains(x)) throw InternalError("approximate_or_evaluate: x is outside the box");
  const Vector w = ctx.problem.element_feature(i);
  GateResult out;
  if (auto idx = ctx.store.find(x, w)) {
    out.value = ctx.store[*idx].value;
    out.source = ValueSource::cached;
    return out;
  }
  if (ctx.allow_approx && ctx.prior_limit > 0) {
    const NeighborSet nb = collect_neighbors(ctx.store, x, w, delta, prior_query(ctx));
    if (nb.size() >= static_cast<std::size_t>(ctx.n_min)) {
      Vector theta(x.size() + w.size());
      theta << x, w;
      out.value = regress(nb, theta, ctx.lambda).estimate;
      out.source = ValueSource::approx;
      out.neighbors = nb.size();
      return out;
    }
  }
  out.value = ctx.oracle(i, x);
  out.source = ValueSource::exact;
  ctx.store.record(x, w, out.value);
  return out;
}

int candidate_score(const GateContext& ctx, const Vector& x, double delta) {
  int u = 0;
  for (std::size_t i = 0; i < ctx.problem.p; ++i) {
    if (plan_value(ctx, i, x, delta) != ValueSource::exact) ++u;
  }
  return u;
}

std::vector<Vector> score_candidates(const GateContext& ctx, const Vector& x_k, double radius, double delta,
                                     int u_thr, NormKind kind) {
  const HistoryStore& store = ctx.store;
  // ||.||_tr <= radius implies ||.||_2 <= kappa_tr0 * radius.
  const double search = radius * kappa_tr0(static_cast<std::size_t>(x_k.size()), kind);
  std::vector<std::pair<double, std::size_t>> kept;
  for (const std::size_t g : store.distinct_x_within(x_k, search)) {
    const Vector& x = store.distinct_x(g);
    if (bitwise_equal(x, x_k)) continue;
    if (!ctx.problem.bounds.contains(x)) continue;
    if (norm(x - x_k, kind) > radius) continue;
    if (candidate_score(ctx, x, delta) < u_thr) continue;
    kept.emplace_back((x - x_k).norm(), g);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Vector> out;
  out.reserve(kept.size());
  for (const auto& [dist, g] : kept) out.push_back(store.distinct_x(g));
  return out;
}

}  // namespace dfoh
