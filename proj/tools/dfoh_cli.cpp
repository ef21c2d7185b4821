#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dfoh/bench.hpp"
#include "dfoh/driver.hpp"
#include "dfoh/problems.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kIo = 2, kInternal = 3 };

int run_solve(const std::string& problem_path, const std::string& config_path, const std::string& history_path,
              const std::string& out_path) {
  const dfoh::LeastSquaresData data = dfoh::load_instance(problem_path);
  const dfoh::SolverConfig cfg = dfoh::load_config(config_path);
  const dfoh::CompositeProblem problem = dfoh::make_methanol_problem(data);

  dfoh::HistoryStore store(problem.n_x, problem.n_w());
  if (!history_path.empty() && std::filesystem::exists(history_path)) store = dfoh::HistoryStore::load(history_path);

  const dfoh::SolverReport report = dfoh::solve(problem, dfoh::methanol_reference(), cfg, store);
  dfoh::save_report(report, out_path);
  if (!history_path.empty()) store.save(history_path);
  std::cout << "termination=" << dfoh::to_string(report.reason) << " f=" << report.f
            << " exact_evals=" << report.exact_evals << " approx_uses=" << report.approx_uses << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derivative-free trust-region solver for composite problems with evaluation history"};
  app.require_subcommand(1);

  std::string problem_path, config_path, history_path, out_path;
  auto* solve = app.add_subcommand("solve", "Solve one least-squares instance file");
  solve->add_option("--problem", problem_path, "Instance file (header 'p n_w', rows w_i y_i)")->required();
  solve->add_option("--config", config_path, "Solver config (key = value)")->required();
  solve->add_option("--history", history_path, "History file read before and written after the solve");
  solve->add_option("--out", out_path, "Trace output (tab-separated)")->required();

  auto* bench = app.add_subcommand("bench", "Sequential benchmark");
  auto* methanol = bench->add_subcommand("methanol", "Methanol-to-hydrocarbons sequence");
  bench->require_subcommand(1);
  dfoh::BenchPlan plan;
  std::string mode = "compare", csv_path, plot_dir, bench_config;
  methanol->add_option("--reps", plan.reps, "Replications")->capture_default_str();
  methanol->add_option("--instances", plan.instances, "Instances per replication")->capture_default_str();
  methanol->add_option("--seed", plan.seed, "Base seed; replication r uses seed + r")->capture_default_str();
  methanol->add_option("--budget-mult", plan.budget_multiplier, "Budget in simplex gradients")->capture_default_str();
  methanol->add_option("--mode", mode, "history | nohistory | compare")->capture_default_str();
  methanol->add_option("--out-csv", csv_path, "Per-run csv; aggregates go to <stem>_aggregate.csv")->required();
  methanol->add_option("--plot", plot_dir, "Directory for SVG plots");
  methanol->add_option("--config", bench_config, "Solver config; budget is overridden");
  methanol->add_option("--threads", plan.threads, "Worker threads (0 = hardware)")->capture_default_str();

  std::string plot_csv, plot_out;
  auto* plot = app.add_subcommand("plot", "Render SVG plots from an aggregate csv");
  plot->add_option("--csv", plot_csv, "Aggregate csv")->required();
  plot->add_option("--out", plot_out, "Output directory")->required();

  std::uint64_t inst_seed = 0;
  int inst_index = 0;
  std::string inst_out;
  auto* instance = app.add_subcommand("instance", "Write one generated methanol instance");
  instance->add_option("--seed", inst_seed, "Replication seed")->capture_default_str();
  instance->add_option("--index", inst_index, "Instance index t in the sequence")->capture_default_str();
  instance->add_option("--out", inst_out, "Instance file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*solve) return run_solve(problem_path, config_path, history_path, out_path);
    if (*methanol) {
      plan.mode = dfoh::parse_bench_mode(mode);
      if (!bench_config.empty()) plan.config = dfoh::load_config(bench_config);
      const dfoh::BenchResult result = dfoh::run_compare(plan);
      dfoh::write_bench(result, csv_path);
      if (!plot_dir.empty()) dfoh::emit_plot(dfoh::aggregate_path(csv_path), plot_dir);
      const auto& last = result.aggregates.back();
      std::cout << "t=" << last.t << " cumulative_improvement=" << last.cumulative_improvement
                << " mbar=" << last.mbar << "\n";
      return kOk;
    }
    if (*plot) {
      dfoh::emit_plot(plot_csv, plot_out);
      return kOk;
    }
    if (*instance) {
      if (inst_index < 0) throw dfoh::ConfigError("--index must be >= 0");
      const auto seq = dfoh::generate_sequence(inst_seed, inst_index + 1, dfoh::methanol_reference());
      dfoh::save_instance(seq.back().data, inst_out);
      return kOk;
    }
  } catch (const dfoh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const dfoh::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
