#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfoh/core.hpp"
#include "dfoh/surrogate.hpp"

namespace dfoh {

enum class StepType { criticality, successful, unsuccessful };
enum class Termination { budget, radius_floor, max_iters };
enum class HistoryMode { with_history, no_history };

std::string to_string(StepType s);
std::string to_string(Termination t);

/// One row per completed iteration.  radius/delta/f describe the state at
/// the start of iteration k; the counters are cumulative after it.
struct TraceRow {
  int k = 0;
  double radius = 0.0;
  double delta = 0.0;
  double pi_m = 0.0;
  double rho = 0.0;
  StepType step = StepType::criticality;
  std::int64_t exact_evals = 0;
  std::int64_t approx_uses = 0;
  std::int64_t cached_uses = 0;
  double f = 0.0;
  double model_decrease = 0.0;
};

struct SolverReport {
  Vector x;
  Vector elements;
  double f = 0.0;
  std::vector<TraceRow> trace;
  Termination reason = Termination::budget;
  std::int64_t exact_evals = 0;
  std::int64_t approx_uses = 0;
  std::int64_t cached_uses = 0;
  std::int64_t infeasible_requests = 0;
  double final_radius = 0.0;
};

/// (f_k - f_trial) / (m(x_k) - m(x_k + s_k)); throws InternalError on a
/// nonpositive predicted decrease.
double ratio(double f_k, double f_trial, double m_at_xk, double m_at_trial);

/// Trust-region loop with approximate values at interpolation points.
/// `store` is read for candidates and approximations and receives every
/// exact evaluation.  Records present before the call are the only ones
/// used for regression.
SolverReport solve(const CompositeProblem& problem, const Vector& x0, const SolverConfig& config,
                   HistoryStore& store);

/// solve() with the approximation gate forced on (with_history) or off.
SolverReport run_mode(const CompositeProblem& problem, const Vector& x0, const SolverConfig& config,
                      HistoryMode mode, HistoryStore& store);

/// Tab-separated trace with '#' summary lines and a header row.
std::string format_report(const SolverReport& report);
void save_report(const SolverReport& report, const std::string& path);

}  // namespace dfoh
