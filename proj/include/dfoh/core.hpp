#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dfoh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a configuration or problem definition is invalid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed or unreadable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an internal guarantee fails (a bug, not bad input).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class NormKind { L2, Linf };

std::string to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& text);

double norm(const Vector& v, NormKind kind);

// Norm-equivalence constants relative to the Euclidean norm:
//   ||v||_2  <= kappa_tr0 * ||v||_tr,   ||v||_tr <= kappa_tr1 * ||v||_2.
double kappa_tr0(std::size_t n, NormKind kind);
double kappa_tr1(std::size_t n, NormKind kind);

/// Box Omega = [lower, upper] with extended-real endpoints.
class Bounds {
 public:
  Bounds() = default;
  Bounds(Vector lower, Vector upper);

  static Bounds unbounded(std::size_t n);
  static Bounds nonnegative(std::size_t n);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool contains(const Vector& x) const;
  // Smallest finite or infinite width min_j (upper_j - lower_j).
  double min_width() const;

 private:
  Vector lower_;
  Vector upper_;
};

Vector project_box(const Vector& x, const Bounds& b);

/// Trust-region and surrogate parameters.  Defaults are standard
/// trust-region values; xi and lambda follow the reported experiment.
struct SolverConfig {
  double delta0 = 1.0;
  double delta_max = 1e3;
  double gamma_dec = 0.5;
  double gamma_inc = 2.0;
  double eta = 0.1;
  double mu = 10.0;
  double eps_c = 1e-2;
  double c_app = 1.0;
  double kappa_fcd = 0.5;
  double xi = 1e-3;
  double lambda = 1e-6;
  // < 0 means "p" (every element must be approximable).
  int u_thr = -1;
  int n_min = 1;
  std::int64_t budget = 1000;
  std::uint64_t seed = 0;
  NormKind tr_norm = NormKind::L2;
  int max_iters = 10000;
  double radius_floor = 1e-12;
  bool use_history = true;

  /// Range checks from the algorithm's requirements.  Throws ConfigError.
  void validate() const;
  /// Range checks plus the well-poisedness ceiling for a concrete box.
  void validate_for(const Bounds& bounds) const;
  int resolved_u_thr(std::size_t p) const { return u_thr < 0 ? static_cast<int>(p) : u_thr; }
};

/// Parses flat `key = value` text ('#' starts a comment).
SolverConfig parse_config(const std::string& text);
SolverConfig load_config(const std::string& path);
std::string format_config(const SolverConfig& cfg);

/// Glass-box outer function h: R^p -> R.
class OuterFunction {
 public:
  virtual ~OuterFunction() = default;
  virtual double value(const Vector& v) const = 0;
  virtual Vector gradient(const Vector& v) const = 0;
  virtual Matrix hessian(const Vector& v) const = 0;
};

/// h(v) = 0.5 * ||v - y||^2.
class LeastSquaresOuter final : public OuterFunction {
 public:
  explicit LeastSquaresOuter(Vector y) : y_(std::move(y)) {}
  double value(const Vector& v) const override;
  Vector gradient(const Vector& v) const override;
  Matrix hessian(const Vector& v) const override;
  const Vector& targets() const { return y_; }

 private:
  Vector y_;
};

/// Black-box element oracle F_i(x).
using ElementOracle = std::function<double(std::size_t i, const Vector& x)>;

/// f(x) = h(F(x)) over a box.  When `features` is non-empty, element i is
/// phi(x, features[i]) and the history is shared across elements; otherwise
/// the history is partitioned by element index.
struct CompositeProblem {
  std::size_t n_x = 0;
  std::size_t p = 0;
  ElementOracle oracle;
  std::shared_ptr<const OuterFunction> outer;
  Bounds bounds;
  std::vector<Vector> features;

  bool shared_history() const { return !features.empty(); }
  std::size_t n_w() const;
  /// History coordinate w attached to element i.
  Vector element_feature(std::size_t i) const;
  void validate() const;
};

/// Wraps an oracle: counts calls and refuses points outside the box.
class CountingOracle {
 public:
  CountingOracle(ElementOracle inner, Bounds bounds);

  double operator()(std::size_t i, const Vector& x);

  std::int64_t calls() const { return calls_.load(); }
  std::int64_t infeasible_requests() const { return infeasible_.load(); }

 private:
  ElementOracle inner_;
  Bounds bounds_;
  std::atomic<std::int64_t> calls_{0};
  std::atomic<std::int64_t> infeasible_{0};
};

/// Seedable generator with platform-independent derived variates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for replication r of an experiment with the given base seed.
  static Rng stream(std::uint64_t base_seed, std::uint64_t r) { return Rng(base_seed + r); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, two uniforms per draw).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace dfoh
