#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "blevy/error.hpp"
#include "blevy/levy.hpp"
#include "blevy/model.hpp"
#include "blevy/summation.hpp"

namespace blevy {

inline constexpr std::size_t kDefaultCap = 1'000'000;

// A live particle as exposed by genealogy snapshots. `id` is the Ulam-Harris
// label: the root is the empty path and child i of v is v extended by i
// (1-based).
struct Particle {
  std::vector<std::uint32_t> id;
  double birth_time = 0.0;
  double birth_position = 0.0;
  double death_time = 0.0;
  double current_position = 0.0;
  std::size_t node = 0;  // index into Genealogy::nodes
};

// Every particle that ever lived, in creation order. Kept only on request.
struct Genealogy {
  struct Node {
    std::int64_t parent = -1;  // -1 for the root
    std::uint32_t child_index = 0;
    double birth_time = 0.0;
    double death_time = 0.0;
    double birth_position = 0.0;
    std::int64_t offspring_count = -1;  // -1 while alive
  };
  std::vector<Node> nodes;

  std::vector<std::uint32_t> label(std::size_t node) const {
    std::vector<std::uint32_t> path;
    for (std::int64_t v = static_cast<std::int64_t>(node); nodes[v].parent >= 0;
         v = nodes[v].parent) {
      path.push_back(nodes[v].child_index);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }
};

// Observables of one run at one checkpoint time.
struct CheckpointStats {
  double t = 0.0;
  std::uint64_t pop = 0;
  double sum_pos = 0.0;
  double centered_sum = 0.0;
  double martingale = 0.0;
  double w_stat = 0.0;
  std::optional<double> mean_dev;  // absent when pop == 0
};

struct RunResult {
  std::vector<double> checkpoints;
  // One entry per checkpoint; absent past the point where a capped run stopped.
  std::vector<std::optional<CheckpointStats>> stats;
  bool survived = false;
  bool capped = false;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  // Present only with SimOptions::retain_genealogy.
  std::optional<Genealogy> genealogy;
  std::vector<std::vector<Particle>> snapshots;

  friend bool operator==(const RunResult& a, const RunResult& b) {
    auto same = [](const std::optional<CheckpointStats>& x,
                   const std::optional<CheckpointStats>& y) {
      if (x.has_value() != y.has_value()) return false;
      if (!x) return true;
      return x->t == y->t && x->pop == y->pop && x->sum_pos == y->sum_pos &&
             x->centered_sum == y->centered_sum && x->martingale == y->martingale &&
             x->w_stat == y->w_stat && x->mean_dev == y->mean_dev;
    };
    if (a.checkpoints != b.checkpoints || a.stats.size() != b.stats.size()) return false;
    for (std::size_t i = 0; i < a.stats.size(); ++i) {
      if (!same(a.stats[i], b.stats[i])) return false;
    }
    return a.survived == b.survived && a.capped == b.capped && a.seed == b.seed &&
           a.replicate == b.replicate;
  }
};

struct SimOptions {
  std::size_t cap = kDefaultCap;
  bool retain_genealogy = false;
};

inline void validate_checkpoints(std::span<const double> checkpoints) {
  if (checkpoints.empty()) {
    throw Error(ErrorKind::InvalidCheckpoints, "checkpoints", "at least one checkpoint required");
  }
  if (!(checkpoints.front() >= 0.0) || !std::isfinite(checkpoints.back())) {
    throw Error(ErrorKind::InvalidCheckpoints, "checkpoints", "times must be finite and >= 0");
  }
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] > checkpoints[i - 1])) {
      throw Error(ErrorKind::InvalidCheckpoints, "checkpoints", "times must be strictly increasing");
    }
  }
}

namespace detail {

struct LiveParticle {
  double death_time;
  double offset;     // position net of drift, as of last_time
  double last_time;  // time the offset was last brought up to date
  std::int64_t node;
};

struct LaterDeath {
  bool operator()(const LiveParticle& a, const LiveParticle& b) const noexcept {
    return a.death_time > b.death_time;
  }
};

template <class Rng>
double sample_lifetime(double lambda, Rng& rng) {
  std::exponential_distribution<double> exp(lambda);
  double a = exp(rng);
  while (a <= 0.0) a = exp(rng);
  return a;
}

}  // namespace detail

/// Exact event-driven simulation of the branching process started from one
/// particle at the origin at time 0.
///
/// Live particles sit in a min-heap keyed on death time. Deaths are processed
/// in order up to each checkpoint; at a checkpoint every live particle's
/// position is advanced by an independent motion increment from the time it
/// was last updated. Since increments over disjoint intervals are
/// independent, this reproduces the position of each particle in
/// distribution without storing paths.
///
/// If the live population would exceed `options.cap` the run stops: `capped`
/// is set and the remaining checkpoints are left empty.
template <class Rng>
RunResult simulate(const ModelConfig& config, std::span<const double> checkpoints,
                   const SimOptions& options, Rng& rng) {
  validate(config);
  validate_checkpoints(checkpoints);
  if (options.cap < 1) throw Error(ErrorKind::InvalidParameter, "cap", "must be >= 1");

  const GrowthRates rates = growth_rates(config);
  // Positions are stored net of drift: X(t) = offset + drift * t. Only the
  // noise part of the motion is sampled.
  const double drift = config.motion.drift;
  LevySpec noise = config.motion;
  noise.drift = 0.0;
  const bool noisy = !is_zero_process(noise);
  const bool shared = config.displacement.coupling == Coupling::Shared;

  RunResult result;
  result.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  result.stats.resize(checkpoints.size());
  if (options.retain_genealogy) {
    result.genealogy.emplace();
    result.snapshots.resize(checkpoints.size());
  }

  std::vector<detail::LiveParticle> heap;
  heap.reserve(64);
  {
    detail::LiveParticle root{detail::sample_lifetime(config.lambda, rng), 0.0, 0.0, -1};
    if (result.genealogy) {
      result.genealogy->nodes.push_back({-1, 0, 0.0, root.death_time, 0.0, -1});
      root.node = 0;
    }
    heap.push_back(root);
  }

  const detail::LaterDeath later;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const double t = checkpoints[c];

    // A particle dying exactly at t is no longer alive at t.
    while (!heap.empty() && heap.front().death_time <= t) {
      std::pop_heap(heap.begin(), heap.end(), later);
      const detail::LiveParticle parent = heap.back();
      heap.pop_back();

      double death_offset = parent.offset;
      if (noisy) death_offset += sample_increment(noise, parent.death_time - parent.last_time, rng);

      const std::int64_t n = sample_offspring(config.offspring, rng);
      if (result.genealogy) result.genealogy->nodes[parent.node].offspring_count = n;
      if (heap.size() + static_cast<std::size_t>(n) > options.cap) {
        result.capped = true;
        result.survived = true;
        return result;
      }

      const double common = shared ? sample_displacement(config.displacement.marginal, rng) : 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double d = shared ? common : sample_displacement(config.displacement.marginal, rng);
        detail::LiveParticle child{parent.death_time + detail::sample_lifetime(config.lambda, rng),
                                   death_offset + d, parent.death_time, -1};
        if (result.genealogy) {
          auto& nodes = result.genealogy->nodes;
          child.node = static_cast<std::int64_t>(nodes.size());
          nodes.push_back({parent.node, static_cast<std::uint32_t>(i + 1), parent.death_time,
                           child.death_time, child.offset + drift * parent.death_time, -1});
        }
        heap.push_back(child);
        std::push_heap(heap.begin(), heap.end(), later);
      }
    }

    CompensatedSum offsets;
    for (auto& p : heap) {
      if (noisy) {
        p.offset += sample_increment(noise, t - p.last_time, rng);
        p.last_time = t;
      }
      offsets += p.offset;
    }

    CheckpointStats s;
    s.t = t;
    s.pop = heap.size();
    const double pop = static_cast<double>(s.pop);
    const double offset_sum = offsets.value();
    s.sum_pos = offset_sum + drift * t * pop;
    s.centered_sum = s.sum_pos - rates.r * t * pop;
    const double discount = std::exp(-rates.lambda_hat * t);
    s.martingale = discount * s.centered_sum;
    s.w_stat = discount * pop;
    if (s.pop > 0) s.mean_dev = offset_sum / pop + drift * t - rates.r * t;
    result.stats[c] = s;

    if (result.genealogy) {
      auto& snap = result.snapshots[c];
      snap.reserve(heap.size());
      for (const auto& p : heap) {
        const auto& node = result.genealogy->nodes[p.node];
        snap.push_back({result.genealogy->label(p.node), node.birth_time, node.birth_position,
                        node.death_time, p.offset + drift * t, static_cast<std::size_t>(p.node)});
      }
    }
  }

  result.survived = !heap.empty();
  return result;
}

template <class Rng>
RunResult simulate(const ModelConfig& config, std::span<const double> checkpoints, std::size_t cap,
                   Rng& rng) {
  return simulate(config, checkpoints, SimOptions{cap, false}, rng);
}

struct SurvivingRun {
  RunResult run;
  std::size_t attempts = 0;
};

// Rejection sampler for runs with a live population at the final checkpoint.
// Attempts draw successively from the same stream.
template <class Rng>
SurvivingRun simulate_surviving(const ModelConfig& config, std::span<const double> checkpoints,
                                const SimOptions& options, std::size_t max_attempts, Rng& rng) {
  if (max_attempts < 1) throw Error(ErrorKind::InvalidParameter, "max_attempts", "must be >= 1");
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    RunResult run = simulate(config, checkpoints, options, rng);
    if (run.survived) return {std::move(run), attempt};
  }
  throw MaxAttemptsExhausted(max_attempts);
}

template <class Rng>
SurvivingRun simulate_surviving(const ModelConfig& config, std::span<const double> checkpoints,
                                std::size_t cap, std::size_t max_attempts, Rng& rng) {
  return simulate_surviving(config, checkpoints, SimOptions{cap, false}, max_attempts, rng);
}

}  // namespace blevy
