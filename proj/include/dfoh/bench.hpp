#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfoh/core.hpp"
#include "dfoh/driver.hpp"

namespace dfoh {

enum class BenchMode { history, nohistory, compare };

std::string to_string(BenchMode m);
BenchMode parse_bench_mode(const std::string& s);

/// Solver settings used by the methanol benchmark unless a config is given:
/// delta_max = 1, c_app = 0.1, eps_c = 1e-4, everything else default.
SolverConfig methanol_bench_config();

struct BenchPlan {
  int reps = 5;
  int instances = 20;
  double budget_multiplier = 2.0;
  std::uint64_t seed = 0;
  BenchMode mode = BenchMode::compare;
  SolverConfig config = methanol_bench_config();
  /// 0 picks the hardware concurrency.
  int threads = 0;
  /// Keep full solver reports in the result (audits, tests).
  bool keep_reports = false;

  void validate() const;
  /// budget_multiplier * p * (n_x + 1), rounded.
  std::int64_t budget(std::size_t p, std::size_t n_x) const;
};

struct RunRow {
  int rep = 0;
  int t = 0;
  HistoryMode mode = HistoryMode::with_history;
  double final_f = 0.0;
  std::int64_t exact_evals = 0;
  std::int64_t approx_uses = 0;
  double wall_ms = 0.0;
  SolverReport report;
};

/// Per-instance averages over replications.  Columns that need the other
/// mode are NaN outside compare mode.
struct AggregateRow {
  int t = 0;
  double fbar_history = 0.0;
  double fbar_nohistory = 0.0;
  double cumulative_improvement = 0.0;
  double half_width = 0.0;
  double mbar = 0.0;
};

struct BenchResult {
  std::vector<RunRow> rows;
  std::vector<AggregateRow> aggregates;
};

/// Methanol sequence: replications in parallel, instances in order.  The
/// history-mode store persists across instances of a replication; the
/// no-history runs get a fresh store per instance.
BenchResult run_compare(const BenchPlan& plan);

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows, int reps, int instances);

/// rep,t,mode,final_f,exact_evals,approx_uses,wall_ms
std::string format_runs_csv(const std::vector<RunRow>& rows);
/// t,fbar_history,fbar_nohistory,cumulative_improvement,half_width,mbar
std::string format_aggregate_csv(const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> parse_aggregate_csv(const std::string& text);

/// Path of the aggregate file written next to the per-run csv.
std::string aggregate_path(const std::string& runs_csv);
void write_bench(const BenchResult& result, const std::string& runs_csv);

struct PlotFiles {
  std::string improvement;
  std::string approximations;
};

/// Two SVGs from an aggregate csv: cumulative improvement with its band, and
/// mean approximation count.  Each embeds its numbers in a DATA comment.
PlotFiles emit_plot(const std::string& aggregate_csv, const std::string& out_dir);
std::string render_improvement_svg(const std::vector<AggregateRow>& rows);
std::string render_approximations_svg(const std::vector<AggregateRow>& rows);
/// Rows of the DATA block: t followed by the plotted values.
std::vector<std::vector<double>> parse_plot_data(const std::string& svg);

}  // namespace dfoh
