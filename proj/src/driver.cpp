#include "dfoh/driver.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dfoh/geometry.hpp"
#include "dfoh/models.hpp"

namespace dfoh {

std::string to_string(StepType s) {
  switch (s) {
    case StepType::criticality: return "criticality";
    case StepType::successful: return "successful";
    case StepType::unsuccessful: return "unsuccessful";
  }
  return "?";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::budget: return "budget";
    case Termination::radius_floor: return "radius_floor";
    case Termination::max_iters: return "max_iters";
  }
  return "?";
}

double ratio(double f_k, double f_trial, double m_at_xk, double m_at_trial) {
  const double predicted = m_at_xk - m_at_trial;
  if (!(predicted > 0.0)) throw InternalError("ratio: predicted decrease must be positive");
  return (f_k - f_trial) / predicted;
}

namespace {

// Exact value of element i at x: reuse a stored record or call the oracle.
double exact_value(GateContext& ctx, std::size_t i, const Vector& x, std::int64_t& cached) {
  const Vector w = ctx.problem.element_feature(i);
  if (auto idx = ctx.store.find(x, w)) {
    ++cached;
    return ctx.store[*idx].value;
  }
  const double v = ctx.oracle(i, x);
  ctx.store.record(x, w, v);
  return v;
}

std::int64_t uncached_count(const GateContext& ctx, const Vector& x) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < ctx.problem.p; ++i) {
    if (!ctx.store.find(x, ctx.problem.element_feature(i))) ++n;
  }
  return n;
}

}  // namespace

SolverReport solve(const CompositeProblem& problem, const Vector& x0, const SolverConfig& config,
                   HistoryStore& store) {
  problem.validate();
  config.validate_for(problem.bounds);
  if (x0.size() != static_cast<Eigen::Index>(problem.n_x) || !problem.bounds.contains(x0))
    throw ConfigError("solve: x0 must lie in the feasible box");
  const std::size_t n = problem.n_x;
  const std::size_t p = problem.p;
  if (config.budget <= static_cast<std::int64_t>(p * (n + 1)))
    throw ConfigError("solve: budget must exceed p * (n_x + 1) exact element evaluations");
  if (store.n_x() != n || store.n_w() != problem.n_w())
    throw ConfigError("solve: history store dimensions do not match the problem");

  const NormKind kind = config.tr_norm;
  const int u_thr = config.resolved_u_thr(p);
  CountingOracle oracle(problem.oracle, problem.bounds);
  GateContext ctx{problem, oracle, store, store.size(), config.use_history, config.n_min, config.lambda};

  SolverReport report;
  Vector x = x0;
  double radius = config.delta0;

  auto finish = [&](Termination why, const Vector& fx, double f) {
    report.reason = why;
    report.x = x;
    report.elements = fx;
    report.f = f;
    report.exact_evals = oracle.calls();
    report.infeasible_requests = oracle.infeasible_requests();
    report.final_radius = radius;
    return report;
  };

  if (uncached_count(ctx, x) > config.budget) return finish(Termination::budget, Vector(), kInf);
  Vector fx(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) fx[static_cast<Eigen::Index>(i)] = exact_value(ctx, i, x, report.cached_uses);
  double f = problem.outer->value(fx);

  for (int k = 0;; ++k) {
    if (k >= config.max_iters) return finish(Termination::max_iters, fx, f);
    if (radius < config.radius_floor) return finish(Termination::radius_floor, fx, f);
    const double delta = config.c_app * radius * radius;

    const std::vector<Vector> candidates = score_candidates(ctx, x, radius, delta, u_thr, kind);
    InterpolationSet set = build_from_candidates(x, radius, candidates, config.xi, problem.bounds, kind).set;
    set = complete_set(std::move(set), x, problem.bounds, kind);

    // Budget ledger: exact calls for the model plus a full trial point.
    std::int64_t needed = static_cast<std::int64_t>(p);
    for (std::size_t j = 1; j < set.size(); ++j) {
      const Vector& point = set.points[j];
      for (std::size_t i = 0; i < p; ++i)
        if (plan_value(ctx, i, point, delta) == ValueSource::exact) ++needed;
    }
    if (oracle.calls() + needed > config.budget) return finish(Termination::budget, fx, f);

    Matrix values(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n + 1));
    values.col(0) = fx;
    for (std::size_t j = 1; j < set.size(); ++j) {
      const Vector& point = set.points[j];
      for (std::size_t i = 0; i < p; ++i) {
        const GateResult r = approximate_or_evaluate(ctx, i, point, delta);
        if (r.source == ValueSource::approx) ++report.approx_uses;
        if (r.source == ValueSource::cached) ++report.cached_uses;
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.value;
      }
    }

    const ElementModels elements = fit_linear_elements(set.directions, values);
    const MasterModel model = master_model(elements, *problem.outer);
    const StationarityResult stat = stationarity(model.gradient, x, problem.bounds, kind);

    TraceRow row;
    row.k = k;
    row.radius = radius;
    row.delta = delta;
    row.pi_m = stat.measure;
    row.f = f;

    if (stat.measure <= config.eps_c && radius > config.mu * stat.measure) {
      row.step = StepType::criticality;
      row.rho = 0.0;
      radius *= config.gamma_dec;
    } else {
      const StepResult step =
          solve_tr_subproblem(model, x, radius, problem.bounds, config.kappa_fcd, stat, kind);
      const Vector trial = project_box(x + step.step, problem.bounds);
      Vector ft(static_cast<Eigen::Index>(p));
      for (std::size_t i = 0; i < p; ++i)
        ft[static_cast<Eigen::Index>(i)] = exact_value(ctx, i, trial, report.cached_uses);
      const double f_trial = problem.outer->value(ft);
      row.model_decrease = step.model_decrease;
      // Model shifted by -f0: m(x_k) - m(trial) is the decrease itself, without cancellation.
      row.rho = step.model_decrease > 0.0 ? ratio(f, f_trial, step.model_decrease, 0.0) : 0.0;
      if (row.rho >= config.eta) {
        row.step = StepType::successful;
        x = trial;
        fx = ft;
        f = f_trial;
        radius = std::min(config.gamma_inc * radius, config.delta_max);
      } else {
        row.step = StepType::unsuccessful;
        radius *= config.gamma_dec;
      }
    }
    row.exact_evals = oracle.calls();
    row.approx_uses = report.approx_uses;
    row.cached_uses = report.cached_uses;
    report.trace.push_back(row);
  }
}

SolverReport run_mode(const CompositeProblem& problem, const Vector& x0, const SolverConfig& config,
                      HistoryMode mode, HistoryStore& store) {
  SolverConfig cfg = config;
  cfg.use_history = mode == HistoryMode::with_history;
  return solve(problem, x0, cfg, store);
}

std::string format_report(const SolverReport& report) {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "# termination\t" << to_string(report.reason) << "\n";
  os << "# final_f\t" << num(report.f) << "\n";
  os << "# final_x";
  for (Eigen::Index j = 0; j < report.x.size(); ++j) os << "\t" << num(report.x[j]);
  os << "\n";
  os << "# exact_evals\t" << report.exact_evals << "\n";
  os << "# approx_uses\t" << report.approx_uses << "\n";
  os << "# cached_uses\t" << report.cached_uses << "\n";
  os << "k\tradius\tdelta\tpi_m\trho\tstep\texact_evals\tapprox_uses\tcached_uses\tf\n";
  for (const TraceRow& r : report.trace) {
    os << r.k << "\t" << num(r.radius) << "\t" << num(r.delta) << "\t" << num(r.pi_m) << "\t" << num(r.rho)
       << "\t" << to_string(r.step) << "\t" << r.exact_evals << "\t" << r.approx_uses << "\t" << r.cached_uses
       << "\t" << num(r.f) << "\n";
  }
  return os.str();
}

void save_report(const SolverReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report file '" + path + "'");
  out << format_report(report);
  if (!out) throw IoError("failed writing report file '" + path + "'");
}

}  // namespace dfoh
