#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfoh/core.hpp"

namespace dfoh {

struct LsEvaluation {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// 0.5 * ||v - y||^2 with its derivatives.
LsEvaluation ls_outer(const Vector& v, const Vector& y);

using State3 = Eigen::Vector3d;

/// Reference rate constants for the methanol benchmark.
Vector methanol_reference();

/// Right-hand side of the methanol-to-hydrocarbons kinetics.  x has five
/// rate constants.  Every term carries v_1, so v_1 = 0 gives zero; otherwise
/// throws ConfigError when the denominator vanishes.
State3 methanol_rhs(const Vector& x, const State3& v);

/// Classical RK4 with fixed step `h` up to tau_end, the last step shortened
/// to land on tau_end.
State3 integrate(const Vector& x, const State3& v0, double tau_end, double h = 1e-3);

/// Third state component at time w[0] starting from w[1..3].
double phi(const Vector& x, const Vector& w, double h = 1e-3);

/// Euclidean projection onto the probability simplex.
Vector simplex_project(const Vector& v);

/// Uniform sample from the closed L2 ball of the given radius.
Vector ball_sample(Rng& rng, double radius, int dim);

/// Rows w_i in R^{n_w} and targets y_i.
struct LeastSquaresData {
  std::vector<Vector> w;
  Vector y;

  std::size_t p() const { return w.size(); }
  std::size_t n_w() const { return w.empty() ? 0 : static_cast<std::size_t>(w.front().size()); }
};

struct MethanolInstance {
  LeastSquaresData data;
  Vector x_true;
};

inline constexpr std::array<double, 3> kMethanolTimes = {0.1, 0.4, 0.8};

/// Base initial conditions before perturbation.
std::array<State3, 7> methanol_base_states();

/// Draws the next instance from rng.  Element i pairs time j = i / 7 with
/// initial condition l = i % 7.  Draw order: 7 ball samples, 5 uniforms for
/// the hidden parameters, 21 uniforms for the noise.
MethanolInstance generate_instance(int t, Rng& rng, const Vector& x_ref);

/// Instances 0..count-1 of one replication stream.
std::vector<MethanolInstance> generate_sequence(std::uint64_t seed, int count, const Vector& x_ref);

/// Lower bound on x_2 in the benchmark box.  On the face x_2 + x_5 = 0 the
/// kinetics are singular, and close to it the fixed-step integrator is stiff.
inline constexpr double kMethanolX2Floor = 1e-2;

/// Least-squares composite with element i = phi(x, w_i) over x >= 0 with
/// x_2 >= x2_floor.
CompositeProblem make_methanol_problem(const LeastSquaresData& data, double x2_floor = kMethanolX2Floor);

/// Text format: "p n_w" then p rows "w_1 .. w_nw y".
void save_instance(const LeastSquaresData& data, const std::string& path);
std::string format_instance(const LeastSquaresData& data);
LeastSquaresData load_instance(const std::string& path);

}  // namespace dfoh
