#pragma once

#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "blevy/format.hpp"
#include "blevy/model.hpp"
#include "blevy/sim.hpp"
#include "blevy/stats.hpp"

// Writers for the files the CLI emits. CSV numbers use the shortest
// round-trip representation so bodies are byte-stable; an optional first
// line starting with '#' carries anything run-specific such as timestamps.

namespace blevy {

namespace detail {
inline std::string opt(const std::optional<double>& x) { return x ? format_double(*x) : ""; }

inline void comment_line(std::ostream& out, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << "\n";
}

inline nlohmann::json json_number(const std::optional<double>& x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}
}  // namespace detail

inline void write_summary_csv(std::ostream& out, const McSummary& summary,
                              const std::string& comment = {}) {
  detail::comment_line(out, comment);
  out << "t,observable,n_eff,estimate,se,oracle,z,verdict,variant\n";
  for (const auto& c : summary.cells) {
    out << format_double(c.t) << ',' << c.observable << ',' << c.n_effective << ','
        << format_double(c.estimate) << ',' << format_double(c.std_error) << ','
        << detail::opt(c.oracle) << ',' << detail::opt(c.z_score) << ',' << to_string(c.verdict)
        << ',' << c.variant << '\n';
  }
}

inline nlohmann::json summary_json(const McSummary& summary, const DerivedConstants& dc) {
  nlohmann::json j;
  j["n_total"] = summary.n_total;
  j["n_capped"] = summary.n_capped;
  j["n_extinct"] = summary.n_extinct;
  j["master_seed"] = summary.master_seed;
  j["variant"] = std::string(to_string(summary.variant));
  j["all_pass"] = summary.all_pass();
  j["constants"] = {{"lambda_hat", dc.lambda_hat}, {"r", dc.r},           {"kappa", dc.kappa},
                    {"c1", dc.c1},                 {"c2", dc.c2},         {"c1_corr", dc.c1_corr},
                    {"c2_corr", dc.c2_corr},       {"q_ext", dc.q_ext}};
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : summary.cells) {
    cells.push_back({{"t", c.t},
                     {"observable", c.observable},
                     {"n_effective", c.n_effective},
                     {"estimate", c.estimate},
                     {"std_error", c.std_error},
                     {"oracle", detail::json_number(c.oracle)},
                     {"z_score", detail::json_number(c.z_score)},
                     {"verdict", std::string(to_string(c.verdict))},
                     {"threshold", c.threshold},
                     {"variant", c.variant}});
  }
  return j;
}

inline void write_run_csv(std::ostream& out, const RunResult& run, const std::string& comment = {}) {
  detail::comment_line(out, comment);
  out << "t,pop,sum_pos,centered_sum,martingale,w_stat,mean_dev,survived,capped,seed\n";
  for (std::size_t c = 0; c < run.checkpoints.size(); ++c) {
    out << format_double(run.checkpoints[c]) << ',';
    if (const auto& s = run.stats[c]) {
      out << s->pop << ',' << format_double(s->sum_pos) << ',' << format_double(s->centered_sum)
          << ',' << format_double(s->martingale) << ',' << format_double(s->w_stat) << ','
          << detail::opt(s->mean_dev);
    } else {
      out << ",,,,,";
    }
    out << ',' << (run.survived ? 1 : 0) << ',' << (run.capped ? 1 : 0) << ',' << run.seed << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const ConvergenceReport& report,
                            std::span<const SurvivingReplicate> runs,
                            const std::string& comment = {}) {
  detail::comment_line(out, comment);
  out << "run,attempts,t,pop,y\n";
  for (std::size_t i = 0; i < report.traces.size(); ++i) {
    for (std::size_t c = 0; c < report.grid.size(); ++c) {
      const auto& s = runs[i].run.stats[c];
      out << i << ',' << runs[i].attempts << ',' << format_double(report.grid[c]) << ','
          << (s ? std::to_string(s->pop) : "") << ',' << detail::opt(report.traces[i][c]) << '\n';
    }
  }
}

inline nlohmann::json convergence_json(const ConvergenceReport& report) {
  nlohmann::json j;
  j["grid"] = report.grid;
  j["n_runs"] = report.traces.size();
  j["n_excluded"] = report.n_excluded;
  auto& gaps = j["median_gaps"] = nlohmann::json::array();
  for (std::size_t k = 0; k < report.median_gaps.size(); ++k) {
    gaps.push_back({{"from", report.grid[k]}, {"to", report.grid[k + 1]},
                    {"median_abs_gap", report.median_gaps[k]}});
  }
  j["medians_strictly_decreasing"] = report.medians_strictly_decreasing();
  j["shrink_fraction"] = detail::json_number(report.shrink_fraction);
  return j;
}

inline void write_constants(std::ostream& out, const DerivedConstants& dc) {
  out << "lambda_hat = " << format_double(dc.lambda_hat) << "\n"
      << "r = " << format_double(dc.r) << "\n"
      << "kappa = " << format_double(dc.kappa) << "\n"
      << "c1 = " << format_double(dc.c1) << "\n"
      << "c2 = " << format_double(dc.c2) << "\n"
      << "c1_corr = " << format_double(dc.c1_corr) << "\n"
      << "c2_corr = " << format_double(dc.c2_corr) << "\n"
      << "q_ext = " << format_double(dc.q_ext) << "\n";
}

}  // namespace blevy
