#include "dfoh/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dfoh/problems.hpp"

namespace dfoh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace

std::string to_string(BenchMode m) {
  switch (m) {
    case BenchMode::history: return "history";
    case BenchMode::nohistory: return "nohistory";
    case BenchMode::compare: return "compare";
  }
  return "?";
}

BenchMode parse_bench_mode(const std::string& s) {
  if (s == "history") return BenchMode::history;
  if (s == "nohistory") return BenchMode::nohistory;
  if (s == "compare") return BenchMode::compare;
  throw ConfigError("unknown bench mode '" + s + "'");
}

SolverConfig methanol_bench_config() {
  SolverConfig cfg;
  // delta = c_app * Delta^2 stays below the spread of the initial conditions.
  cfg.delta_max = 1.0;
  cfg.c_app = 0.1;
  cfg.eps_c = 1e-4;
  return cfg;
}

void BenchPlan::validate() const {
  if (reps < 1) throw ConfigError("bench: reps must be >= 1");
  if (instances < 1) throw ConfigError("bench: instances must be >= 1");
  if (!(budget_multiplier > 0.0) || !std::isfinite(budget_multiplier))
    throw ConfigError("bench: budget multiplier must be positive");
  if (threads < 0) throw ConfigError("bench: threads must be >= 0");
  config.validate();
}

std::int64_t BenchPlan::budget(std::size_t p, std::size_t n_x) const {
  return std::llround(budget_multiplier * static_cast<double>(p) * static_cast<double>(n_x + 1));
}

BenchResult run_compare(const BenchPlan& plan) {
  plan.validate();
  const Vector x_ref = methanol_reference();
  const bool want_h = plan.mode != BenchMode::nohistory;
  const bool want_0 = plan.mode != BenchMode::history;

  std::vector<std::vector<RunRow>> per_rep(static_cast<std::size_t>(plan.reps));
  auto run_rep = [&](int rep) {
    std::vector<RunRow>& out = per_rep[static_cast<std::size_t>(rep)];
    const auto sequence = generate_sequence(plan.seed + static_cast<std::uint64_t>(rep), plan.instances, x_ref);
    HistoryStore kept(5, 4);
    for (int t = 0; t < plan.instances; ++t) {
      const CompositeProblem problem = make_methanol_problem(sequence[static_cast<std::size_t>(t)].data);
      SolverConfig cfg = plan.config;
      cfg.budget = plan.budget(problem.p, problem.n_x);
      auto one = [&](HistoryMode mode, HistoryStore& store) {
        const auto start = std::chrono::steady_clock::now();
        RunRow row;
        row.report = run_mode(problem, x_ref, cfg, mode, store);
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        row.rep = rep;
        row.t = t;
        row.mode = mode;
        row.final_f = row.report.f;
        row.exact_evals = row.report.exact_evals;
        row.approx_uses = row.report.approx_uses;
        if (!plan.keep_reports) row.report.trace.clear();
        out.push_back(std::move(row));
      };
      if (want_h) one(HistoryMode::with_history, kept);
      if (want_0) {
        HistoryStore fresh(5, 4);
        one(HistoryMode::no_history, fresh);
      }
    }
  };

  int workers = plan.threads > 0 ? plan.threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, plan.reps);
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (int k = 0; k < workers; ++k) {
    pool.emplace_back([&] {
      for (int rep = next++; rep < plan.reps; rep = next++) {
        try {
          run_rep(rep);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  BenchResult result;
  for (auto& rows : per_rep)
    for (auto& r : rows) result.rows.push_back(std::move(r));
  result.aggregates = aggregate(result.rows, plan.reps, plan.instances);
  return result;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRow>& rows, int reps, int instances) {
  const auto R = static_cast<std::size_t>(reps);
  const auto T = static_cast<std::size_t>(instances);
  std::vector<double> fh(R * T, kNaN), f0(R * T, kNaN), m(R * T, 0.0);
  bool have_h = false;
  bool have_0 = false;
  for (const RunRow& r : rows) {
    const std::size_t k = static_cast<std::size_t>(r.rep) * T + static_cast<std::size_t>(r.t);
    if (r.mode == HistoryMode::with_history) {
      fh[k] = r.final_f;
      m[k] = static_cast<double>(r.approx_uses);
      have_h = true;
    } else {
      f0[k] = r.final_f;
      have_0 = true;
    }
  }

  std::vector<AggregateRow> out;
  std::vector<double> cum(R, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    AggregateRow a;
    a.t = static_cast<int>(t);
    double sh = 0.0, s0 = 0.0, sm = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      sh += fh[r * T + t];
      s0 += f0[r * T + t];
      sm += m[r * T + t];
      cum[r] += f0[r * T + t] - fh[r * T + t];
    }
    a.fbar_history = have_h ? sh / static_cast<double>(R) : kNaN;
    a.fbar_nohistory = have_0 ? s0 / static_cast<double>(R) : kNaN;
    a.mbar = sm / static_cast<double>(R);
    if (have_h && have_0) {
      double mean = 0.0;
      for (double c : cum) mean += c;
      mean /= static_cast<double>(R);
      double var = 0.0;
      for (double c : cum) var += (c - mean) * (c - mean);
      var = R > 1 ? var / static_cast<double>(R - 1) : 0.0;
      a.cumulative_improvement = mean;
      a.half_width = 1.96 * std::sqrt(var) / std::sqrt(static_cast<double>(R));
    } else {
      a.cumulative_improvement = kNaN;
      a.half_width = kNaN;
    }
    out.push_back(a);
  }
  return out;
}

std::string format_runs_csv(const std::vector<RunRow>& rows) {
  std::ostringstream os;
  os << "rep,t,mode,final_f,exact_evals,approx_uses,wall_ms\n";
  for (const RunRow& r : rows) {
    os << r.rep << "," << r.t << "," << (r.mode == HistoryMode::with_history ? "history" : "nohistory") << ","
       << num(r.final_f) << "," << r.exact_evals << "," << r.approx_uses << "," << num(r.wall_ms) << "\n";
  }
  return os.str();
}

std::string format_aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "t,fbar_history,fbar_nohistory,cumulative_improvement,half_width,mbar\n";
  for (const AggregateRow& a : rows) {
    os << a.t << "," << num(a.fbar_history) << "," << num(a.fbar_nohistory) << "," << num(a.cumulative_improvement)
       << "," << num(a.half_width) << "," << num(a.mbar) << "\n";
  }
  return os.str();
}

std::vector<AggregateRow> parse_aggregate_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<AggregateRow> out;
  auto fail = [&](const std::string& what) {
    throw ConfigError("aggregate csv line " + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(in, line)) fail("missing header");
  ++lineno;
  if (line.rfind("t,fbar_history,fbar_nohistory,cumulative_improvement,half_width,mbar", 0) != 0)
    fail("unexpected header");
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) fail("expected 6 columns");
    AggregateRow a;
    double vals[6];
    for (std::size_t k = 0; k < 6; ++k) {
      char* end = nullptr;
      vals[k] = std::strtod(cells[k].c_str(), &end);
      if (end == cells[k].c_str()) fail("not a number: '" + cells[k] + "'");
    }
    a.t = static_cast<int>(vals[0]);
    a.fbar_history = vals[1];
    a.fbar_nohistory = vals[2];
    a.cumulative_improvement = vals[3];
    a.half_width = vals[4];
    a.mbar = vals[5];
    out.push_back(a);
  }
  return out;
}

std::string aggregate_path(const std::string& runs_csv) {
  std::filesystem::path p(runs_csv);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + "_aggregate.csv")).string();
}

void write_bench(const BenchResult& result, const std::string& runs_csv) {
  spit(runs_csv, format_runs_csv(result.rows));
  spit(aggregate_path(runs_csv), format_aggregate_csv(result.aggregates));
}

namespace {

struct Series {
  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> lo;
  std::vector<double> hi;
};

std::string render_svg(const std::string& title, const std::string& ylabel, const Series& s, bool band) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double tmin = 0, tmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const double lo = band ? s.lo[k] : s.y[k];
    const double hi = band ? s.hi[k] : s.y[k];
    if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
    if (!any) {
      tmin = tmax = s.t[k];
      ymin = lo;
      ymax = hi;
      any = true;
    }
    tmin = std::min(tmin, s.t[k]);
    tmax = std::max(tmax, s.t[k]);
    ymin = std::min(ymin, lo);
    ymax = std::max(ymax, hi);
  }
  ymin = std::min(ymin, 0.0);
  ymax = std::max(ymax, 0.0);
  if (tmax == tmin) tmax = tmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double t) { return L + (t - tmin) / (tmax - tmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<!-- DATA\n";
  os << (band ? "t,value,lower,upper\n" : "t,value\n");
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    os << num(s.t[k]) << "," << num(s.y[k]);
    if (band) os << "," << num(s.lo[k]) << "," << num(s.hi[k]);
    os << "\n";
  }
  os << "-->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">instance t</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << ylabel << "</text>\n";
  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    std::snprintf(buf, sizeof(buf), "%.3g", yv);
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << buf << "</text>\n";
    const double tv = tmin + (tmax - tmin) * k / 4.0;
    std::snprintf(buf, sizeof(buf), "%.3g", tv);
    os << "<text x=\"" << px(tv) << "\" y=\"" << H - B + 14
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << buf << "</text>\n";
  }
  if (any) {
    if (band) {
      os << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
      for (std::size_t k = 0; k < s.t.size(); ++k)
        if (std::isfinite(s.hi[k])) os << px(s.t[k]) << "," << py(s.hi[k]) << " ";
      for (std::size_t k = s.t.size(); k-- > 0;)
        if (std::isfinite(s.lo[k])) os << px(s.t[k]) << "," << py(s.lo[k]) << " ";
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.t.size(); ++k)
      if (std::isfinite(s.y[k])) os << px(s.t[k]) << "," << py(s.y[k]) << " ";
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string render_improvement_svg(const std::vector<AggregateRow>& rows) {
  Series s;
  for (const AggregateRow& a : rows) {
    s.t.push_back(a.t);
    s.y.push_back(a.cumulative_improvement);
    s.lo.push_back(a.cumulative_improvement - a.half_width);
    s.hi.push_back(a.cumulative_improvement + a.half_width);
  }
  return render_svg("Cumulative improvement of history over no history", "sum of fbar_0 - fbar_H", s, true);
}

std::string render_approximations_svg(const std::vector<AggregateRow>& rows) {
  Series s;
  for (const AggregateRow& a : rows) {
    s.t.push_back(a.t);
    s.y.push_back(a.mbar);
  }
  return render_svg("Mean approximated values per solve", "mean approximations", s, false);
}

PlotFiles emit_plot(const std::string& aggregate_csv, const std::string& out_dir) {
  const auto rows = parse_aggregate_csv(slurp(aggregate_csv));
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create plot directory '" + out_dir + "'");
  PlotFiles files;
  files.improvement = (std::filesystem::path(out_dir) / "cumulative_improvement.svg").string();
  files.approximations = (std::filesystem::path(out_dir) / "approximations.svg").string();
  spit(files.improvement, render_improvement_svg(rows));
  spit(files.approximations, render_approximations_svg(rows));
  return files;
}

std::vector<std::vector<double>> parse_plot_data(const std::string& svg) {
  const auto begin = svg.find("<!-- DATA\n");
  if (begin == std::string::npos) throw ConfigError("plot has no DATA block");
  const auto end = svg.find("-->", begin);
  if (end == std::string::npos) throw ConfigError("unterminated DATA block");
  std::istringstream in(svg.substr(begin + 10, end - begin - 10));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace dfoh
