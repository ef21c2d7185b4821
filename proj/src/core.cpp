#include "dfoh/core.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dfoh/geometry.hpp"

namespace dfoh {

std::string to_string(NormKind kind) { return kind == NormKind::L2 ? "l2" : "linf"; }

NormKind parse_norm_kind(const std::string& text) {
  if (text == "l2" || text == "L2" || text == "2") return NormKind::L2;
  if (text == "linf" || text == "Linf" || text == "inf") return NormKind::Linf;
  throw ConfigError("unknown norm '" + text + "' (expected l2 or linf)");
}

double norm(const Vector& v, NormKind kind) {
  if (v.size() == 0) return 0.0;
  return kind == NormKind::L2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

double kappa_tr0(std::size_t n, NormKind kind) {
  return kind == NormKind::L2 ? 1.0 : std::sqrt(static_cast<double>(n));
}

double kappa_tr1(std::size_t, NormKind) { return 1.0; }

Bounds::Bounds(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw ConfigError("bounds: lower/upper dimension mismatch");
  for (Eigen::Index j = 0; j < lower_.size(); ++j) {
    if (std::isnan(lower_[j]) || std::isnan(upper_[j])) throw ConfigError("bounds: NaN endpoint");
    if (!(lower_[j] < upper_[j]))
      throw ConfigError("bounds: lower[" + std::to_string(j) + "] must be < upper");
    if (lower_[j] == kInf || upper_[j] == -kInf) throw ConfigError("bounds: empty interval");
  }
}

Bounds Bounds::unbounded(std::size_t n) {
  return Bounds(Vector::Constant(static_cast<Eigen::Index>(n), -kInf),
                Vector::Constant(static_cast<Eigen::Index>(n), kInf));
}

Bounds Bounds::nonnegative(std::size_t n) {
  return Bounds(Vector::Zero(static_cast<Eigen::Index>(n)),
                Vector::Constant(static_cast<Eigen::Index>(n), kInf));
}

bool Bounds::contains(const Vector& x) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lower_[j] && x[j] <= upper_[j])) return false;
  }
  return true;
}

double Bounds::min_width() const {
  double w = kInf;
  for (Eigen::Index j = 0; j < lower_.size(); ++j) w = std::min(w, upper_[j] - lower_[j]);
  return w;
}

Vector project_box(const Vector& x, const Bounds& b) {
  if (x.size() != b.lower().size()) throw ConfigError("project_box: dimension mismatch");
  return x.cwiseMax(b.lower()).cwiseMin(b.upper());
}

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(delta0 > 0 && std::isfinite(delta0), "delta0 must be in (0, inf)");
  require(delta_max > 0 && std::isfinite(delta_max), "delta_max must be in (0, inf)");
  require(delta0 <= delta_max, "delta0 must not exceed delta_max");
  require(gamma_dec > 0 && gamma_dec < 1, "gamma_dec must be in (0, 1)");
  require(gamma_inc > 1 && std::isfinite(gamma_inc), "gamma_inc must be in (1, inf)");
  require(eta > 0 && std::isfinite(eta), "eta must be in (0, inf)");
  require(mu > 0 && std::isfinite(mu), "mu must be in (0, inf)");
  require(eps_c > 0 && std::isfinite(eps_c), "eps_c must be in (0, inf)");
  require(c_app >= 0 && std::isfinite(c_app), "c_app must be in [0, inf)");
  require(kappa_fcd > 0 && kappa_fcd <= 1, "kappa_fcd must be in (0, 1]");
  require(xi > 0, "xi must be positive");
  require(lambda >= 0 && std::isfinite(lambda), "lambda must be >= 0");
  require(n_min >= 1, "n_min must be >= 1");
  require(budget >= 1, "budget must be >= 1");
  require(max_iters >= 1, "max_iters must be >= 1");
  require(radius_floor > 0, "radius_floor must be positive");
}

void SolverConfig::validate_for(const Bounds& bounds) const {
  validate();
  const std::size_t n = bounds.dim();
  const double ceiling = xi_max(n, bounds, delta_max, kappa_tr1(n, tr_norm));
  if (xi > ceiling) {
    std::ostringstream os;
    os << "config: xi = " << xi << " exceeds the well-poisedness ceiling " << ceiling
       << " for this box and delta_max";
    throw ConfigError(os.str());
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw ConfigError("config: '" + key + "' expects an integer");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false");
}

}  // namespace

SolverConfig parse_config(const std::string& text) {
  SolverConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "delta0") cfg.delta0 = to_double(key, val);
    else if (key == "delta_max") cfg.delta_max = to_double(key, val);
    else if (key == "gamma_dec") cfg.gamma_dec = to_double(key, val);
    else if (key == "gamma_inc") cfg.gamma_inc = to_double(key, val);
    else if (key == "eta") cfg.eta = to_double(key, val);
    else if (key == "mu") cfg.mu = to_double(key, val);
    else if (key == "eps_c") cfg.eps_c = to_double(key, val);
    else if (key == "c_app") cfg.c_app = to_double(key, val);
    else if (key == "kappa_fcd") cfg.kappa_fcd = to_double(key, val);
    else if (key == "xi") cfg.xi = to_double(key, val);
    else if (key == "lambda") cfg.lambda = to_double(key, val);
    else if (key == "u_thr") cfg.u_thr = static_cast<int>(to_int(key, val));
    else if (key == "n_min") cfg.n_min = static_cast<int>(to_int(key, val));
    else if (key == "budget") cfg.budget = to_int(key, val);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, val));
    else if (key == "tr_norm") cfg.tr_norm = parse_norm_kind(val);
    else if (key == "max_iters") cfg.max_iters = static_cast<int>(to_int(key, val));
    else if (key == "radius_floor") cfg.radius_floor = to_double(key, val);
    else if (key == "use_history") cfg.use_history = to_bool(key, val);
    else
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SolverConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const SolverConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "delta0 = " << cfg.delta0 << "\n"
     << "delta_max = " << cfg.delta_max << "\n"
     << "gamma_dec = " << cfg.gamma_dec << "\n"
     << "gamma_inc = " << cfg.gamma_inc << "\n"
     << "eta = " << cfg.eta << "\n"
     << "mu = " << cfg.mu << "\n"
     << "eps_c = " << cfg.eps_c << "\n"
     << "c_app = " << cfg.c_app << "\n"
     << "kappa_fcd = " << cfg.kappa_fcd << "\n"
     << "xi = " << cfg.xi << "\n"
     << "lambda = " << cfg.lambda << "\n"
     << "u_thr = " << cfg.u_thr << "\n"
     << "n_min = " << cfg.n_min << "\n"
     << "budget = " << cfg.budget << "\n"
     << "seed = " << cfg.seed << "\n"
     << "tr_norm = " << to_string(cfg.tr_norm) << "\n"
     << "max_iters = " << cfg.max_iters << "\n"
     << "radius_floor = " << cfg.radius_floor << "\n"
     << "use_history = " << (cfg.use_history ? "true" : "false") << "\n";
  return os.str();
}

double LeastSquaresOuter::value(const Vector& v) const { return 0.5 * (v - y_).squaredNorm(); }

Vector LeastSquaresOuter::gradient(const Vector& v) const { return v - y_; }

Matrix LeastSquaresOuter::hessian(const Vector& v) const {
  return Matrix::Identity(v.size(), v.size());
}

std::size_t CompositeProblem::n_w() const {
  return shared_history() ? static_cast<std::size_t>(features.front().size()) : 1;
}

Vector CompositeProblem::element_feature(std::size_t i) const {
  if (shared_history()) return features.at(i);
  Vector w(1);
  w[0] = static_cast<double>(i);
  return w;
}

void CompositeProblem::validate() const {
  if (n_x == 0 || p == 0) throw ConfigError("problem: n_x and p must be positive");
  if (!oracle) throw ConfigError("problem: missing element oracle");
  if (!outer) throw ConfigError("problem: missing outer function");
  if (bounds.dim() != n_x) throw ConfigError("problem: bounds dimension differs from n_x");
  if (shared_history()) {
    if (features.size() != p) throw ConfigError("problem: need one feature vector per element");
    for (const auto& w : features)
      if (w.size() != features.front().size()) throw ConfigError("problem: ragged feature vectors");
  }
}

CountingOracle::CountingOracle(ElementOracle inner, Bounds bounds)
    : inner_(std::move(inner)), bounds_(std::move(bounds)) {}

double CountingOracle::operator()(std::size_t i, const Vector& x) {
  if (!bounds_.contains(x)) {
    ++infeasible_;
    throw InternalError("oracle requested outside the feasible box");
  }
  ++calls_;
  const double v = inner_(i, x);
  if (!std::isfinite(v)) throw std::runtime_error("oracle returned a non-finite value");
  return v;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace dfoh
