#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "blevy/error.hpp"
#include "blevy/model.hpp"
#include "blevy/oracle.hpp"
#include "blevy/rng.hpp"
#include "blevy/sim.hpp"
#include "blevy/summation.hpp"

namespace blevy {

// ---------------------------------------------------------------------------
// Replicate execution
// ---------------------------------------------------------------------------

namespace detail {

// Calls body(i) for i in [0, count) on `workers` threads. Work is claimed
// dynamically; callers must write results by index so scheduling cannot
// change the output.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// R independent runs; replicate i uses make_stream(master_seed, i).
inline std::vector<RunResult> run_replicates(const ModelConfig& config,
                                             std::span<const double> checkpoints,
                                             std::size_t replicates, std::size_t cap,
                                             std::uint64_t master_seed, std::size_t workers = 1) {
  if (replicates < 1) throw Error(ErrorKind::InvalidParameter, "replicates", "must be >= 1");
  validate(config);
  validate_checkpoints(checkpoints);
  std::vector<RunResult> results(replicates);
  detail::parallel_for(replicates, workers, [&](std::size_t i) {
    Xoshiro256 rng = make_stream(master_seed, i);
    RunResult run = simulate(config, checkpoints, cap, rng);
    run.seed = rng.seed();
    run.replicate = i;
    results[i] = std::move(run);
  });
  return results;
}

struct SurvivingReplicate {
  RunResult run;
  std::size_t attempts = 0;
};

// R runs conditioned on survival to the final checkpoint. Replicate i retries
// within its own stream, so attempt counts are reproducible too.
inline std::vector<SurvivingReplicate> run_surviving_replicates(
    const ModelConfig& config, std::span<const double> checkpoints, std::size_t replicates,
    std::size_t cap, std::size_t max_attempts, std::uint64_t master_seed,
    std::size_t workers = 1) {
  if (replicates < 1) throw Error(ErrorKind::InvalidParameter, "replicates", "must be >= 1");
  validate(config);
  validate_checkpoints(checkpoints);
  std::vector<SurvivingReplicate> results(replicates);
  detail::parallel_for(replicates, workers, [&](std::size_t i) {
    Xoshiro256 rng = make_stream(master_seed, i);
    SurvivingRun s = simulate_surviving(config, checkpoints, cap, max_attempts, rng);
    s.run.seed = rng.seed();
    s.run.replicate = i;
    results[i] = {std::move(s.run), s.attempts};
  });
  return results;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

struct Estimate {
  std::size_t n = 0;
  double value = 0.0;
  double std_error = 0.0;
};

// Sample mean with standard error sd / sqrt(n). Compensated two-pass sums in
// input order, so the result is a pure function of the sequence.
inline Estimate mean_estimate(std::span<const double> xs) {
  Estimate e;
  e.n = xs.size();
  if (e.n == 0) return e;
  CompensatedSum sum;
  for (double x : xs) sum += x;
  e.value = sum.value() / static_cast<double>(e.n);
  if (e.n < 2) return e;
  CompensatedSum sq;
  for (double x : xs) sq += (x - e.value) * (x - e.value);
  const double var = sq.value() / static_cast<double>(e.n - 1);
  e.std_error = std::sqrt(var / static_cast<double>(e.n));
  return e;
}

// Unbiased sample variance. The standard error treats (x - mean)^2 as the
// sampled quantity, which needs finite fourth moments.
inline Estimate variance_estimate(std::span<const double> xs) {
  const Estimate m = mean_estimate(xs);
  Estimate e;
  e.n = xs.size();
  if (e.n < 2) return e;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m.value) * (xs[i] - m.value);
  const Estimate s = mean_estimate(sq);
  const double n = static_cast<double>(e.n);
  e.value = s.value * n / (n - 1.0);
  e.std_error = s.std_error * n / (n - 1.0);
  return e;
}

// Unbiased sample covariance with the standard error of the mean of the
// centered products.
inline Estimate covariance_estimate(std::span<const double> xs, std::span<const double> ys) {
  const Estimate mx = mean_estimate(xs);
  const Estimate my = mean_estimate(ys);
  Estimate e;
  e.n = xs.size();
  if (e.n < 2) return e;
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = (xs[i] - mx.value) * (ys[i] - my.value);
  const Estimate p = mean_estimate(prod);
  const double n = static_cast<double>(e.n);
  e.value = p.value * n / (n - 1.0);
  e.std_error = p.std_error * n / (n - 1.0);
  return e;
}

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

enum class Verdict { Pass, Fail, Informational };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Informational: return "informational";
  }
  return "informational";
}

struct Thresholds {
  double first_moment = 4.0;
  double second_moment = 5.0;
};

struct SummaryCell {
  double t = 0.0;
  std::string observable;
  std::size_t n_effective = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::optional<double> oracle;
  std::optional<double> z_score;
  Verdict verdict = Verdict::Informational;
  double threshold = 0.0;
  std::string variant;  // oracle variant, empty when it does not apply
};

// Compares an estimate against an oracle value. Zero standard error passes
// only on exact agreement.
inline SummaryCell make_cell(double t, std::string observable, const Estimate& e,
                             std::optional<double> oracle, double threshold,
                             std::string variant = {}) {
  SummaryCell c;
  c.t = t;
  c.observable = std::move(observable);
  c.n_effective = e.n;
  c.estimate = e.value;
  c.std_error = e.std_error;
  c.oracle = oracle;
  c.threshold = threshold;
  c.variant = std::move(variant);
  if (!oracle) {
    c.verdict = Verdict::Informational;
    return c;
  }
  const double diff = e.value - *oracle;
  if (diff == 0.0) {
    c.z_score = 0.0;
  } else if (e.std_error > 0.0) {
    c.z_score = diff / e.std_error;
  } else {
    c.z_score = std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  c.verdict = std::abs(*c.z_score) <= threshold ? Verdict::Pass : Verdict::Fail;
  return c;
}

struct McSummary {
  std::vector<SummaryCell> cells;
  std::size_t n_total = 0;
  std::size_t n_capped = 0;
  std::size_t n_extinct = 0;  // uncapped runs with no particles at the final checkpoint
  std::uint64_t master_seed = 0;
  MomentVariant variant = MomentVariant::PaperStated;

  bool all_pass() const {
    return std::none_of(cells.begin(), cells.end(),
                        [](const SummaryCell& c) { return c.verdict == Verdict::Fail; });
  }

  const SummaryCell* find(std::string_view observable, double t) const {
    for (const auto& c : cells) {
      if (c.observable == observable && c.t == t) return &c;
    }
    return nullptr;
  }
};

struct SummaryOptions {
  Thresholds thresholds{};
  double oracle_scale = 1.0;  // test hook: multiplies every oracle value
  std::uint64_t master_seed = 0;
};

namespace detail {
// Uncapped runs ordered by replicate index, so every reduction sees the same
// sequence whatever order the results arrive in.
inline std::vector<const RunResult*> uncapped(std::span<const RunResult> results) {
  std::vector<const RunResult*> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    if (!r.capped) out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(), [](const RunResult* a, const RunResult* b) {
    return a->replicate < b->replicate;
  });
  return out;
}
}  // namespace detail

/// Cross-replicate estimates at every checkpoint, each paired with its
/// closed-form value. Capped runs are excluded; extinct runs contribute zeros
/// to the population and centered-sum cells, and are left out of mean_dev.
inline McSummary summarize(std::span<const RunResult> results, const DerivedConstants& dc,
                           MomentVariant variant, const SummaryOptions& options = {}) {
  const auto runs = detail::uncapped(results);
  if (runs.size() < 2) {
    throw Error(ErrorKind::InsufficientReplicates, "replicates",
                "need at least 2 uncapped runs, have " + std::to_string(runs.size()));
  }

  McSummary summary;
  summary.n_total = results.size();
  summary.n_capped = results.size() - runs.size();
  summary.master_seed = options.master_seed;
  summary.variant = variant;
  for (const auto* r : runs) {
    if (r->stats.back() && r->stats.back()->pop == 0) ++summary.n_extinct;
  }

  const double scale = options.oracle_scale;
  const double first = options.thresholds.first_moment;
  const double second = options.thresholds.second_moment;
  const std::string vname(to_string(variant));
  const std::string alt_name(to_string(other(variant)));
  const bool variants_differ = dc.motion_var != 0.0;

  const std::size_t k = runs.front()->checkpoints.size();
  std::vector<double> pop(runs.size()), pop2(runs.size()), cs(runs.size()), cs2(runs.size()),
      mart(runs.size());
  for (std::size_t c = 0; c < k; ++c) {
    const double t = runs.front()->checkpoints[c];
    std::vector<double> dev;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const CheckpointStats& s = *runs[i]->stats[c];
      const double p = static_cast<double>(s.pop);
      pop[i] = p;
      pop2[i] = p * p;
      cs[i] = s.centered_sum;
      cs2[i] = s.centered_sum * s.centered_sum;
      mart[i] = s.martingale;
      if (s.mean_dev) dev.push_back(*s.mean_dev);
    }
    auto& cells = summary.cells;
    cells.push_back(make_cell(t, "pop_mean", mean_estimate(pop),
                              scale * expected_population(dc, t), first));
    cells.push_back(make_cell(t, "pop_sq_mean", mean_estimate(pop2),
                              scale * population_second_moment(dc, t), second));
    cells.push_back(make_cell(t, "centered_mean", mean_estimate(cs),
                              scale * centered_sum_mean(t), first));
    const Estimate cs2_est = mean_estimate(cs2);
    cells.push_back(make_cell(t, "centered_sq_mean", cs2_est,
                              scale * centered_sum_second_moment(dc, t, variant), second, vname));
    if (variants_differ) {
      SummaryCell alt = make_cell(t, "centered_sq_mean_alt", cs2_est,
                                  scale * centered_sum_second_moment(dc, t, other(variant)),
                                  second, alt_name);
      alt.verdict = Verdict::Informational;
      cells.push_back(std::move(alt));
    }
    cells.push_back(make_cell(t, "martingale_mean", mean_estimate(mart), scale * 0.0, first));
    const Estimate mvar = variance_estimate(mart);
    cells.push_back(make_cell(t, "martingale_var", mvar,
                              scale * martingale_variance(dc, t, variant), second, vname));
    if (variants_differ) {
      SummaryCell alt = make_cell(t, "martingale_var_alt", mvar,
                                  scale * martingale_variance(dc, t, other(variant)), second,
                                  alt_name);
      alt.verdict = Verdict::Informational;
      cells.push_back(std::move(alt));
    }
    if (dev.size() >= 2) {
      cells.push_back(make_cell(t, "mean_dev", mean_estimate(dev), std::nullopt, 0.0));
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Martingale diagnostics
// ---------------------------------------------------------------------------

struct MartingalePair {
  double s = 0.0;
  double t = 0.0;
  SummaryCell increment_mean;        // E[M_t - M_s] = 0
  SummaryCell increment_covariance;  // Cov(M_s, M_t - M_s) = 0
  // Var(M_t) - Var(M_s) against the sample variance of M_t - M_s; equal for
  // orthogonal increments.
  double variance_gap = 0.0;
  double increment_variance = 0.0;
  bool flagged = false;
};

struct MartingaleReport {
  std::vector<MartingalePair> pairs;
  bool any_flagged() const {
    return std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.flagged; });
  }
};

inline constexpr std::size_t kMinDiagnosticReplicates = 1000;

inline MartingaleReport martingale_diagnostics(std::span<const RunResult> results,
                                               double threshold = 4.0,
                                               double oracle_scale = 1.0) {
  const auto runs = detail::uncapped(results);
  if (runs.size() < kMinDiagnosticReplicates) {
    throw Error(ErrorKind::InsufficientReplicates, "replicates",
                "martingale diagnostics need at least 1000 uncapped runs");
  }
  const std::size_t k = runs.front()->checkpoints.size();
  if (k < 2) {
    throw Error(ErrorKind::InvalidCheckpoints, "checkpoints",
                "martingale diagnostics need at least 2 checkpoints");
  }
  MartingaleReport report;
  std::vector<double> level(runs.size()), next(runs.size()), incr(runs.size());
  for (std::size_t c = 0; c + 1 < k; ++c) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      level[i] = runs[i]->stats[c]->martingale;
      next[i] = runs[i]->stats[c + 1]->martingale;
      incr[i] = next[i] - level[i];
    }
    MartingalePair p;
    p.s = runs.front()->checkpoints[c];
    p.t = runs.front()->checkpoints[c + 1];
    const double oracle = oracle_scale * 0.0;
    p.increment_mean = make_cell(p.t, "martingale_increment_mean", mean_estimate(incr), oracle,
                                 threshold);
    p.increment_covariance = make_cell(p.t, "martingale_increment_cov",
                                       covariance_estimate(level, incr), oracle, threshold);
    p.variance_gap = variance_estimate(next).value - variance_estimate(level).value;
    p.increment_variance = variance_estimate(incr).value;
    p.flagged = p.increment_mean.verdict == Verdict::Fail ||
                p.increment_covariance.verdict == Verdict::Fail;
    report.pairs.push_back(std::move(p));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Convergence of the empirical mean position
// ---------------------------------------------------------------------------

struct ConvergenceReport {
  std::vector<double> grid;
  // Y_t per run and checkpoint; absent where undefined.
  std::vector<std::vector<std::optional<double>>> traces;
  std::vector<std::size_t> attempts;  // rejection attempts per run, when known
  std::size_t n_excluded = 0;         // capped or extinct runs left out of the gap statistics
  // Median over runs of |Y_{k+1} - Y_k|; empty with fewer than 2 usable runs.
  std::vector<double> median_gaps;
  // Fraction of usable runs whose last gap is below half their first gap.
  std::optional<double> shrink_fraction;

  bool medians_strictly_decreasing() const {
    if (median_gaps.size() < 2) return false;
    for (std::size_t i = 1; i < median_gaps.size(); ++i) {
      if (!(median_gaps[i] < median_gaps[i - 1])) return false;
    }
    return true;
  }
};

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline ConvergenceReport convergence_trace(std::span<const RunResult> surviving) {
  if (surviving.empty()) {
    throw Error(ErrorKind::InsufficientReplicates, "replicates", "no runs to trace");
  }
  ConvergenceReport report;
  report.grid = surviving.front().checkpoints;
  const std::size_t k = report.grid.size();
  if (k < 4) {
    throw Error(ErrorKind::InvalidCheckpoints, "checkpoints",
                "convergence trace needs at least 4 checkpoints");
  }

  std::vector<std::vector<double>> gaps(k - 1);
  std::size_t usable = 0, shrunk = 0;
  for (const auto& run : surviving) {
    std::vector<std::optional<double>> trace(k);
    bool complete = true;
    for (std::size_t c = 0; c < k; ++c) {
      if (run.stats[c] && run.stats[c]->mean_dev) {
        trace[c] = run.stats[c]->mean_dev;
      } else {
        complete = false;
      }
    }
    if (complete) {
      ++usable;
      for (std::size_t c = 0; c + 1 < k; ++c) gaps[c].push_back(std::abs(*trace[c + 1] - *trace[c]));
      if (gaps.back().back() < 0.5 * gaps.front().back()) ++shrunk;
    } else {
      ++report.n_excluded;
    }
    report.traces.push_back(std::move(trace));
  }

  if (usable >= 2) {
    for (auto& g : gaps) report.median_gaps.push_back(median(g));
    report.shrink_fraction = static_cast<double>(shrunk) / static_cast<double>(usable);
  }
  return report;
}

inline ConvergenceReport convergence_trace(std::span<const SurvivingReplicate> surviving) {
  std::vector<RunResult> runs;
  runs.reserve(surviving.size());
  for (const auto& s : surviving) runs.push_back(s.run);
  ConvergenceReport report = convergence_trace(std::span<const RunResult>(runs));
  for (const auto& s : surviving) report.attempts.push_back(s.attempts);
  return report;
}

}  // namespace blevy
