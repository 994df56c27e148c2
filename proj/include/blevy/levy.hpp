#pragma once

#include <cmath>
#include <random>
#include <variant>

#include "blevy/error.hpp"

namespace blevy {

namespace jump {
struct Zero {
  friend bool operator==(const Zero&, const Zero&) = default;
};
struct Deterministic {
  double value = 0.0;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};
struct Gaussian {
  double mean = 0.0;
  double var = 0.0;
  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};
}  // namespace jump

using JumpLaw = std::variant<jump::Zero, jump::Deterministic, jump::Gaussian>;

// Jump-diffusion: drift + Brownian motion + compound Poisson jumps.
// A default-constructed spec is the zero process.
struct LevySpec {
  double drift = 0.0;          // position per unit time
  double diffusion_var = 0.0;  // Brownian variance per unit time
  double jump_rate = 0.0;      // jumps per unit time
  JumpLaw jump_law = jump::Zero{};

  friend bool operator==(const LevySpec&, const LevySpec&) = default;
};

struct LevyMoments {
  double mean_rate = 0.0;  // E[Z_1]
  double var_rate = 0.0;   // Var(Z_1)
};

inline double jump_mean(const JumpLaw& law) {
  return std::visit(
      [](const auto& j) -> double {
        using T = std::decay_t<decltype(j)>;
        if constexpr (std::is_same_v<T, jump::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, jump::Deterministic>) {
          return j.value;
        } else {
          return j.mean;
        }
      },
      law);
}

inline double jump_second_moment(const JumpLaw& law) {
  return std::visit(
      [](const auto& j) -> double {
        using T = std::decay_t<decltype(j)>;
        if constexpr (std::is_same_v<T, jump::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, jump::Deterministic>) {
          return j.value * j.value;
        } else {
          return j.var + j.mean * j.mean;
        }
      },
      law);
}

inline void validate(const LevySpec& spec) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidParameter, field, what);
  };
  require(std::isfinite(spec.drift), "motion.drift", "must be finite");
  require(std::isfinite(spec.diffusion_var) && spec.diffusion_var >= 0.0,
          "motion.diffusion_var", "must be finite and >= 0");
  require(std::isfinite(spec.jump_rate) && spec.jump_rate >= 0.0, "motion.jump_rate",
          "must be finite and >= 0");
  if (const auto* g = std::get_if<jump::Gaussian>(&spec.jump_law)) {
    require(std::isfinite(g->mean), "motion.jump.mean", "must be finite");
    require(std::isfinite(g->var) && g->var >= 0.0, "motion.jump.var",
            "must be finite and >= 0");
  } else if (const auto* d = std::get_if<jump::Deterministic>(&spec.jump_law)) {
    require(std::isfinite(d->value), "motion.jump.value", "must be finite");
  }
}

inline LevyMoments levy_moments(const LevySpec& spec) {
  return {spec.drift + spec.jump_rate * jump_mean(spec.jump_law),
          spec.diffusion_var + spec.jump_rate * jump_second_moment(spec.jump_law)};
}

// True when every increment is identically zero; the simulator skips
// sampling entirely in that case.
inline bool is_zero_process(const LevySpec& spec) {
  const bool no_jumps = spec.jump_rate == 0.0 || std::holds_alternative<jump::Zero>(spec.jump_law);
  return spec.drift == 0.0 && spec.diffusion_var == 0.0 && no_jumps;
}

// One draw of Z_{t+dt} - Z_t. Consumes no randomness when dt == 0 or when
// the relevant component is absent, so zero-motion runs are unaffected by
// the motion sampler.
template <class Rng>
double sample_increment(const LevySpec& spec, double dt, Rng& rng) {
  if (!(dt >= 0.0)) throw Error(ErrorKind::NegativeDuration, "dt", "duration must be >= 0");
  if (dt == 0.0) return 0.0;

  double z = spec.drift * dt;
  if (spec.diffusion_var > 0.0) {
    z += std::sqrt(spec.diffusion_var * dt) * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  if (spec.jump_rate > 0.0 && !std::holds_alternative<jump::Zero>(spec.jump_law)) {
    const long count = std::poisson_distribution<long>(spec.jump_rate * dt)(rng);
    if (const auto* d = std::get_if<jump::Deterministic>(&spec.jump_law)) {
      z += static_cast<double>(count) * d->value;
    } else if (const auto* g = std::get_if<jump::Gaussian>(&spec.jump_law)) {
      // Sum of `count` iid Gaussians is one Gaussian with scaled moments.
      if (count > 0) {
        const double n = static_cast<double>(count);
        z += n * g->mean;
        if (g->var > 0.0) {
          z += std::sqrt(n * g->var) * std::normal_distribution<double>(0.0, 1.0)(rng);
        }
      }
    }
  }
  return z;
}

}  // namespace blevy
