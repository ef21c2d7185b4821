#include "dfoh/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dfoh {

LsEvaluation ls_outer(const Vector& v, const Vector& y) {
  if (v.size() != y.size()) throw ConfigError("ls_outer: dimension mismatch");
  LsEvaluation out;
  out.gradient = v - y;
  out.value = 0.5 * out.gradient.squaredNorm();
  out.hessian = Matrix::Identity(v.size(), v.size());
  return out;
}

Vector methanol_reference() {
  Vector x(5);
  x << 1.78, 2.17, 1.86, 1.80, 0.0;
  return x;
}

State3 methanol_rhs(const Vector& x, const State3& v) {
  if (x.size() != 5) throw ConfigError("methanol_rhs: expected 5 parameters");
  if (v[0] == 0.0) return State3::Zero();
  const double d = (x[1] + x[4]) * v[0] + v[1];
  if (d == 0.0) throw ConfigError("methanol_rhs: denominator is zero");
  State3 dv;
  dv[0] = -(2.0 * x[1] - x[0] * v[1] / d + x[2] + x[3]) * v[0];
  dv[1] = x[0] * v[0] * (x[1] * v[0] - v[1]) / d + x[2] * v[0];
  dv[2] = x[0] * v[0] * (v[1] + x[4] * v[0]) / d + x[3] * v[0];
  return dv;
}

State3 integrate(const Vector& x, const State3& v0, double tau_end, double h) {
  if (!(tau_end >= 0.0) || !std::isfinite(tau_end)) throw ConfigError("integrate: tau_end must be >= 0");
  if (!(h > 0.0)) throw ConfigError("integrate: step must be positive");
  if (!v0.allFinite()) throw ConfigError("integrate: initial state is not finite");
  State3 v = v0;
  if (tau_end == 0.0) return v;

  auto rk4 = [&](const State3& s, double step) {
    const State3 k1 = methanol_rhs(x, s);
    const State3 k2 = methanol_rhs(x, s + 0.5 * step * k1);
    const State3 k3 = methanol_rhs(x, s + 0.5 * step * k2);
    const State3 k4 = methanol_rhs(x, s + step * k3);
    return State3(s + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };

  // Full steps whose end stays short of tau_end by more than rounding.
  const double slack = 1e-9 * h;
  long full = static_cast<long>(std::floor(tau_end / h));
  while (full > 0 && static_cast<double>(full) * h > tau_end - slack) --full;
  for (long k = 0; k < full; ++k) {
    v = rk4(v, h);
    if (!v.allFinite()) throw ConfigError("integrate: state became non-finite");
  }
  const double last = tau_end - static_cast<double>(full) * h;
  if (last > 0.0) v = rk4(v, last);
  if (!v.allFinite()) throw ConfigError("integrate: state became non-finite");
  return v;
}

double phi(const Vector& x, const Vector& w, double h) {
  if (w.size() != 4) throw ConfigError("phi: w must be [tau, v0(3)]");
  const State3 v0(w[1], w[2], w[3]);
  return integrate(x, v0, w[0], h)[2];
}

Vector simplex_project(const Vector& v) {
  const Eigen::Index n = v.size();
  if (n == 0) return v;
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Vector ball_sample(Rng& rng, double radius, int dim) {
  if (!(radius >= 0.0)) throw ConfigError("ball_sample: radius must be >= 0");
  Vector g(dim);
  for (int j = 0; j < dim; ++j) g[j] = rng.normal();
  const double u = rng.uniform();
  const double nrm = g.norm();
  if (radius == 0.0 || nrm == 0.0) return Vector::Zero(dim);
  return g * (radius * std::pow(u, 1.0 / dim) / nrm);
}

std::array<State3, 7> methanol_base_states() {
  return {State3(1.0, 0.0, 0.0),   State3(0.75, 0.25, 0.0), State3(0.75, 0.0, 0.25), State3(0.5, 0.5, 0.0),
          State3(0.5, 0.0, 0.5),   State3(0.25, 0.75, 0.0), State3(0.25, 0.0, 0.75)};
}

MethanolInstance generate_instance(int /*t*/, Rng& rng, const Vector& x_ref) {
  if (x_ref.size() != 5) throw ConfigError("generate_instance: reference must have 5 entries");
  const auto bases = methanol_base_states();
  std::array<Vector, 7> initial;
  for (std::size_t l = 0; l < bases.size(); ++l) {
    const Vector perturbed = Vector(bases[l]) + ball_sample(rng, 0.1, 3);
    initial[l] = simplex_project(perturbed);
  }
  MethanolInstance out;
  out.x_true = x_ref;
  for (Eigen::Index j = 0; j < 5; ++j) out.x_true[j] += rng.uniform();

  const std::size_t p = kMethanolTimes.size() * initial.size();
  out.data.y.resize(static_cast<Eigen::Index>(p));
  out.data.w.reserve(p);
  for (std::size_t j = 0; j < kMethanolTimes.size(); ++j) {
    for (std::size_t l = 0; l < initial.size(); ++l) {
      Vector w(4);
      w << kMethanolTimes[j], initial[l][0], initial[l][1], initial[l][2];
      out.data.w.push_back(w);
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    const double u = rng.uniform(-0.1, 0.1);
    const double clean = phi(out.x_true, out.data.w[i]);
    out.data.y[static_cast<Eigen::Index>(i)] = clean + std::abs(clean) * u;
  }
  return out;
}

std::vector<MethanolInstance> generate_sequence(std::uint64_t seed, int count, const Vector& x_ref) {
  Rng rng(seed);
  std::vector<MethanolInstance> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int t = 0; t < count; ++t) out.push_back(generate_instance(t, rng, x_ref));
  return out;
}

CompositeProblem make_methanol_problem(const LeastSquaresData& data, double x2_floor) {
  if (data.p() == 0 || data.n_w() != 4 || static_cast<std::size_t>(data.y.size()) != data.p())
    throw ConfigError("make_methanol_problem: expected p rows of w in R^4 and p targets");
  CompositeProblem prob;
  prob.n_x = 5;
  prob.p = data.p();
  prob.features = data.w;
  prob.outer = std::make_shared<LeastSquaresOuter>(data.y);
  if (!(x2_floor >= 0.0) || !std::isfinite(x2_floor)) throw ConfigError("make_methanol_problem: bad x2 floor");
  Vector lower = Vector::Zero(5);
  lower[1] = x2_floor;
  prob.bounds = Bounds(lower, Vector::Constant(5, kInf));
  const std::vector<Vector> features = data.w;
  prob.oracle = [features](std::size_t i, const Vector& x) { return phi(x, features[i]); };
  return prob;
}

std::string format_instance(const LeastSquaresData& data) {
  std::ostringstream os;
  char buf[40];
  os << data.p() << " " << data.n_w() << "\n";
  for (std::size_t i = 0; i < data.p(); ++i) {
    for (Eigen::Index k = 0; k < data.w[i].size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.w[i][k]);
      os << buf << " ";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[static_cast<Eigen::Index>(i)]);
    os << buf << "\n";
  }
  return os.str();
}

void save_instance(const LeastSquaresData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write instance file '" + path + "'");
  out << format_instance(data);
  if (!out) throw IoError("failed writing instance file '" + path + "'");
}

LeastSquaresData load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file '" + path + "'");
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) { throw IoError(path + ":" + std::to_string(lineno) + ": " + what); };

  long p = -1;
  long n_w = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream hs(line);
    if (!(hs >> p >> n_w) || p <= 0 || n_w <= 0) fail("header must be 'p n_w' with positive integers");
    break;
  }
  if (p < 0) fail("missing header");

  LeastSquaresData data;
  data.y.resize(p);
  while (static_cast<long>(data.w.size()) < p && std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream rs(line);
    Vector w(n_w);
    for (long k = 0; k < n_w; ++k)
      if (!(rs >> w[k]) || !std::isfinite(w[k])) fail("expected " + std::to_string(n_w + 1) + " numbers");
    double y = 0.0;
    if (!(rs >> y) || !std::isfinite(y)) fail("expected " + std::to_string(n_w + 1) + " numbers");
    std::string extra;
    if (rs >> extra) fail("trailing data");
    data.y[static_cast<Eigen::Index>(data.w.size())] = y;
    data.w.push_back(w);
  }
  if (static_cast<long>(data.w.size()) != p) fail("expected " + std::to_string(p) + " rows");
  return data;
}

}  // namespace dfoh
