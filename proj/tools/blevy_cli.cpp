// blevy: command-line front end for the branching Levy process simulator.
//
// Exit codes: 0 success / all verdicts pass, 1 a statistical verdict failed,
// 2 usage or configuration error.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "blevy/blevy.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> cap;
  std::string checkpoints;
  std::string variant;
  std::size_t workers = 1;
  std::string out_dir;
  std::optional<std::size_t> max_attempts;
  double oracle_scale = 1.0;
};

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::vector<double> parse_checkpoint_flag(const std::string& text) {
  std::vector<double> out;
  std::string_view s = text;
  while (true) {
    const auto comma = s.find(',');
    const auto v = blevy::parse_double(blevy::trim(s.substr(0, comma)));
    if (!v) throw blevy::Error(blevy::ErrorKind::ParseError, "--checkpoints", "not a comma-separated list of numbers");
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

// Builds the experiment from --config or --preset, then applies flag
// overrides. Seed precedence: --seed, then BLEVY_SEED, then the file.
blevy::ExperimentSpec load_experiment(const CommonOptions& o) {
  blevy::ExperimentSpec spec;
  if (!o.config_path.empty() && !o.preset.empty()) {
    throw blevy::Error(blevy::ErrorKind::ParseError, "--config", "give either --config or --preset, not both");
  }
  if (!o.config_path.empty()) {
    spec = blevy::parse_experiment(blevy::read_file(o.config_path));
  } else if (!o.preset.empty()) {
    const auto p = blevy::find_preset(o.preset);
    if (!p) throw blevy::Error(blevy::ErrorKind::ParseError, "--preset", "unknown preset '" + o.preset + "'");
    spec.model = p->model;
  } else {
    throw blevy::Error(blevy::ErrorKind::ParseError, "--config", "a --config file or --preset is required");
  }

  if (const char* env = std::getenv("BLEVY_SEED"); env && *env) {
    const auto s = blevy::parse_integer<std::uint64_t>(env);
    if (!s) throw blevy::Error(blevy::ErrorKind::ParseError, "BLEVY_SEED", "not an unsigned 64-bit integer");
    spec.master_seed = *s;
  }
  if (o.seed) spec.master_seed = *o.seed;
  if (o.replicates) spec.replicates = *o.replicates;
  if (o.cap) spec.cap = *o.cap;
  if (o.max_attempts) spec.max_attempts = *o.max_attempts;
  if (!o.checkpoints.empty()) spec.checkpoints = parse_checkpoint_flag(o.checkpoints);
  if (!o.variant.empty()) spec.variant = blevy::detail::parse_variant("--variant", o.variant);
  if (!o.out_dir.empty()) spec.output_dir = o.out_dir;

  if (spec.replicates < 1) throw blevy::Error(blevy::ErrorKind::InvalidParameter, "replicates", "must be >= 1");
  if (spec.cap < 1) throw blevy::Error(blevy::ErrorKind::InvalidParameter, "cap", "must be >= 1");
  if (spec.max_attempts < 1) {
    throw blevy::Error(blevy::ErrorKind::InvalidParameter, "max_attempts", "must be >= 1");
  }
  blevy::validate_checkpoints(spec.checkpoints);
  return spec;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw blevy::Error(blevy::ErrorKind::InvalidParameter, "--out", "cannot write " + path.string());
  return out;
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    const auto p = blevy::find_preset(show);
    if (!p) {
      std::cerr << "error: unknown preset '" << show << "'\n";
      return kExitUsage;
    }
    std::cout << "# " << p->description << "\n" << blevy::write_model_config(p->model);
    return kExitPass;
  }
  for (const auto& p : blevy::presets()) std::cout << p.name << "\t" << p.description << "\n";
  return kExitPass;
}

int cmd_constants(const CommonOptions& o) {
  const auto spec = load_experiment(o);
  blevy::write_constants(std::cout, blevy::derived_constants(spec.model));
  return kExitPass;
}

int cmd_simulate(const CommonOptions& o) {
  const auto spec = load_experiment(o);
  auto rng = blevy::make_stream(spec.master_seed, 0);
  blevy::RunResult run = blevy::simulate(spec.model, spec.checkpoints, spec.cap, rng);
  run.seed = rng.seed();
  auto out = open_output(spec.output_dir, "run.csv");
  blevy::write_run_csv(out, run,
                       "blevy simulate seed=" + std::to_string(spec.master_seed) + " generated=" + timestamp());
  std::cout << "wrote " << (std::filesystem::path(spec.output_dir) / "run.csv").string() << "\n";
  return kExitPass;
}

int cmd_verify(const CommonOptions& o) {
  const auto spec = load_experiment(o);
  const auto dc = blevy::derived_constants(spec.model);
  const auto variant = spec.variant.value_or(blevy::default_variant(dc));

  const auto runs = blevy::run_replicates(spec.model, spec.checkpoints, spec.replicates, spec.cap,
                                          spec.master_seed, o.workers);
  blevy::SummaryOptions options;
  options.oracle_scale = o.oracle_scale;
  options.master_seed = spec.master_seed;
  blevy::McSummary summary = blevy::summarize(runs, dc, variant, options);

  const std::size_t uncapped = summary.n_total - summary.n_capped;
  if (spec.checkpoints.size() >= 2 && uncapped >= blevy::kMinDiagnosticReplicates) {
    const auto diag = blevy::martingale_diagnostics(runs, options.thresholds.first_moment, o.oracle_scale);
    for (const auto& p : diag.pairs) {
      summary.cells.push_back(p.increment_mean);
      summary.cells.push_back(p.increment_covariance);
    }
  } else {
    std::cerr << "note: martingale diagnostics skipped (need >= 2 checkpoints and >= "
              << blevy::kMinDiagnosticReplicates << " uncapped runs)\n";
  }

  const std::string comment =
      "blevy verify seed=" + std::to_string(spec.master_seed) + " generated=" + timestamp();
  {
    auto out = open_output(spec.output_dir, "summary.csv");
    blevy::write_summary_csv(out, summary, comment);
  }
  {
    auto out = open_output(spec.output_dir, "summary.json");
    out << blevy::summary_json(summary, dc).dump(2) << "\n";
  }

  std::size_t failures = 0;
  for (const auto& c : summary.cells) {
    if (c.verdict == blevy::Verdict::Fail) {
      ++failures;
      std::cout << "FAIL t=" << blevy::format_double(c.t) << " " << c.observable
                << " estimate=" << blevy::format_double(c.estimate)
                << " oracle=" << blevy::format_double(c.oracle.value_or(0.0))
                << " z=" << blevy::format_double(c.z_score.value_or(0.0)) << "\n";
    }
  }
  std::cout << "replicates=" << summary.n_total << " capped=" << summary.n_capped
            << " extinct=" << summary.n_extinct << " variant=" << blevy::to_string(variant)
            << " cells=" << summary.cells.size() << " failed=" << failures << "\n";
  return failures == 0 ? kExitPass : kExitFail;
}

int cmd_converge(const CommonOptions& o) {
  auto spec = load_experiment(o);
  if (spec.checkpoints.size() < 4) {
    throw blevy::Error(blevy::ErrorKind::InvalidCheckpoints, "checkpoints",
                       "converge needs at least 4 checkpoints");
  }
  const auto runs = blevy::run_surviving_replicates(spec.model, spec.checkpoints, spec.replicates,
                                                    spec.cap, spec.max_attempts, spec.master_seed,
                                                    o.workers);
  const auto report = blevy::convergence_trace(std::span<const blevy::SurvivingReplicate>(runs));
  const std::string comment =
      "blevy converge seed=" + std::to_string(spec.master_seed) + " generated=" + timestamp();
  {
    auto out = open_output(spec.output_dir, "trace.csv");
    blevy::write_trace_csv(out, report, runs, comment);
  }
  {
    auto out = open_output(spec.output_dir, "convergence.json");
    out << blevy::convergence_json(report).dump(2) << "\n";
  }
  for (std::size_t k = 0; k < report.median_gaps.size(); ++k) {
    std::cout << "median |Y(" << blevy::format_double(report.grid[k + 1]) << ") - Y("
              << blevy::format_double(report.grid[k]) << ")| = "
              << blevy::format_double(report.median_gaps[k]) << "\n";
  }
  if (report.shrink_fraction) {
    std::cout << "runs with last gap < half first gap: " << blevy::format_double(*report.shrink_fraction)
              << "\n";
  }
  std::cout << "runs=" << report.traces.size() << " excluded=" << report.n_excluded << "\n";
  return kExitPass;
}

void add_model_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (model.* and experiment.* keys)");
  cmd->add_option("--preset", o.preset, "Built-in model (see `blevy presets`)");
}

void add_run_options(CLI::App* cmd, CommonOptions& o) {
  add_model_options(cmd, o);
  cmd->add_option("--seed", o.seed, "Master seed (default: BLEVY_SEED, then the config file)");
  cmd->add_option("--checkpoints", o.checkpoints, "Comma-separated increasing times");
  cmd->add_option("--cap", o.cap, "Live population cap per run");
  cmd->add_option("--out", o.out_dir, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and moment verification for supercritical branching Levy processes"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string show_preset;

  auto* presets_cmd = app.add_subcommand("presets", "List built-in models");
  presets_cmd->add_option("--show", show_preset, "Print one preset as a config file");

  auto* constants_cmd = app.add_subcommand("constants", "Print derived model constants");
  add_model_options(constants_cmd, opts);

  auto* simulate_cmd = app.add_subcommand("simulate", "Dump one run to run.csv");
  add_run_options(simulate_cmd, opts);

  auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo moments against closed forms");
  add_run_options(verify_cmd, opts);
  verify_cmd->add_option("--replicates", opts.replicates, "Number of replicates");
  verify_cmd->add_option("--variant", opts.variant, "Second-moment oracle: paper, corrected or auto")
      ->check(CLI::IsMember({"paper", "corrected", "auto"}));
  verify_cmd->add_option("--workers", opts.workers, "Worker threads (does not affect results)");
  // Test hook, hidden from --help.
  verify_cmd->add_option("--oracle-scale", opts.oracle_scale)->group("");

  auto* converge_cmd = app.add_subcommand("converge", "Trace the empirical mean position on surviving runs");
  add_run_options(converge_cmd, opts);
  converge_cmd->add_option("--replicates", opts.replicates, "Number of surviving runs");
  converge_cmd->add_option("--max-attempts", opts.max_attempts, "Rejection attempts per run");
  converge_cmd->add_option("--workers", opts.workers, "Worker threads (does not affect results)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*presets_cmd) return cmd_presets(show_preset);
    if (*constants_cmd) return cmd_constants(opts);
    if (*simulate_cmd) return cmd_simulate(opts);
    if (*verify_cmd) return cmd_verify(opts);
    if (*converge_cmd) return cmd_converge(opts);
  } catch (const blevy::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
