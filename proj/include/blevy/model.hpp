#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <variant>

#include "blevy/error.hpp"
#include "blevy/levy.hpp"

namespace blevy {

// ---------------------------------------------------------------------------
// Offspring laws
// ---------------------------------------------------------------------------

namespace offspring {
struct Deterministic {
  std::int64_t k = 2;
  friend bool operator==(const Deterministic&, const Deterministic&) = default;
};
// N = 0 with probability p0, otherwise N = k.
struct TwoPoint {
  double p0 = 0.0;
  std::int64_t k = 2;
  friend bool operator==(const TwoPoint&, const TwoPoint&) = default;
};
// Geometric on {0, 1, 2, ...} with the given mean.
struct Geometric {
  double mean = 1.0;
  friend bool operator==(const Geometric&, const Geometric&) = default;
};
}  // namespace offspring

using OffspringLaw = std::variant<offspring::Deterministic, offspring::TwoPoint, offspring::Geometric>;

struct OffspringMoments {
  double mean = 0.0;            // E[N]
  double second = 0.0;          // E[N^2]
  double factorial = 0.0;       // E[N(N-1)]
  double excess_mean = 0.0;     // E[N-1]
  double excess_second = 0.0;   // E[(N-1)^2]
};

inline OffspringMoments offspring_moments(const OffspringLaw& law) {
  OffspringMoments m;
  std::visit(
      [&m](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, offspring::Deterministic>) {
          const double k = static_cast<double>(l.k);
          m.mean = k;
          m.second = k * k;
        } else if constexpr (std::is_same_v<T, offspring::TwoPoint>) {
          const double k = static_cast<double>(l.k);
          m.mean = (1.0 - l.p0) * k;
          m.second = (1.0 - l.p0) * k * k;
        } else {
          // Var = mean (1 + mean) for the geometric law on {0,1,...}.
          m.mean = l.mean;
          m.second = l.mean + 2.0 * l.mean * l.mean;
        }
      },
      law);
  m.factorial = m.second - m.mean;
  m.excess_mean = m.mean - 1.0;
  m.excess_second = m.second - 2.0 * m.mean + 1.0;
  return m;
}

// Probability generating function E[s^N].
inline double offspring_pgf(const OffspringLaw& law, double s) {
  return std::visit(
      [s](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, offspring::Deterministic>) {
          return std::pow(s, static_cast<double>(l.k));
        } else if constexpr (std::is_same_v<T, offspring::TwoPoint>) {
          return l.p0 + (1.0 - l.p0) * std::pow(s, static_cast<double>(l.k));
        } else {
          const double p = 1.0 / (1.0 + l.mean);
          return p / (1.0 - (1.0 - p) * s);
        }
      },
      law);
}

inline bool has_mass_at_zero(const OffspringLaw& law) {
  return std::visit(
      [](const auto& l) -> bool {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, offspring::Deterministic>) {
          return l.k == 0;
        } else if constexpr (std::is_same_v<T, offspring::TwoPoint>) {
          return l.p0 > 0.0;
        } else {
          return true;
        }
      },
      law);
}

template <class Rng>
std::int64_t sample_offspring(const OffspringLaw& law, Rng& rng) {
  return std::visit(
      [&rng](const auto& l) -> std::int64_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, offspring::Deterministic>) {
          return l.k;
        } else if constexpr (std::is_same_v<T, offspring::TwoPoint>) {
          return std::bernoulli_distribution(l.p0)(rng) ? 0 : l.k;
        } else {
          return std::geometric_distribution<std::int64_t>(1.0 / (1.0 + l.mean))(rng);
        }
      },
      law);
}

// ---------------------------------------------------------------------------
// Displacement laws
// ---------------------------------------------------------------------------

namespace displacement {
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
struct Poisson {
  double mean = 1.0;
  friend bool operator==(const Poisson&, const Poisson&) = default;
};
}  // namespace displacement

using DisplacementMarginal =
    std::variant<displacement::Zero, displacement::Deterministic, displacement::Gaussian,
                 displacement::Poisson>;

// IID: children draw independent displacements. Shared: one draw per
// branching event, given to every child.
enum class Coupling { IID, Shared };

struct DisplacementLaw {
  DisplacementMarginal marginal = displacement::Zero{};
  Coupling coupling = Coupling::IID;

  friend bool operator==(const DisplacementLaw&, const DisplacementLaw&) = default;
};

inline double displacement_mean(const DisplacementMarginal& d) {
  return std::visit(
      [](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, displacement::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, displacement::Deterministic>) {
          return l.value;
        } else {
          return l.mean;
        }
      },
      d);
}

inline double displacement_second_moment(const DisplacementMarginal& d) {
  return std::visit(
      [](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, displacement::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, displacement::Deterministic>) {
          return l.value * l.value;
        } else if constexpr (std::is_same_v<T, displacement::Gaussian>) {
          return l.var + l.mean * l.mean;
        } else {
          return l.mean + l.mean * l.mean;
        }
      },
      d);
}

template <class Rng>
double sample_displacement(const DisplacementMarginal& d, Rng& rng) {
  return std::visit(
      [&rng](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, displacement::Zero>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, displacement::Deterministic>) {
          return l.value;
        } else if constexpr (std::is_same_v<T, displacement::Gaussian>) {
          if (l.var == 0.0) return l.mean;
          return l.mean + std::sqrt(l.var) * std::normal_distribution<double>(0.0, 1.0)(rng);
        } else {
          return static_cast<double>(std::poisson_distribution<long>(l.mean)(rng));
        }
      },
      d);
}

// Moments of the offspring displacement point process.
struct AggregateMoments {
  double sum = 0.0;             // E[sum D_i]
  double sum_of_squares = 0.0;  // E[sum D_i^2]
  double square_of_sum = 0.0;   // E[(sum D_i)^2]
  double count_weighted = 0.0;  // E[N sum D_i]
};

inline AggregateMoments aggregate_displacement_moments(const OffspringLaw& offspring,
                                                       const DisplacementLaw& displacement) {
  const OffspringMoments n = offspring_moments(offspring);
  const double d1 = displacement_mean(displacement.marginal);
  const double d2 = displacement_second_moment(displacement.marginal);
  AggregateMoments a;
  a.sum = n.mean * d1;
  a.sum_of_squares = n.mean * d2;
  a.square_of_sum = displacement.coupling == Coupling::IID
                        ? n.mean * d2 + n.factorial * d1 * d1
                        : n.second * d2;
  a.count_weighted = n.second * d1;
  return a;
}

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

struct ModelConfig {
  double lambda = 1.0;  // lifetime rate
  OffspringLaw offspring = offspring::Deterministic{2};
  DisplacementLaw displacement{};
  LevySpec motion{};

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

namespace detail {
inline void require(bool ok, const char* field, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidParameter, field, what);
}
}  // namespace detail

inline void validate(const OffspringLaw& law) {
  using detail::require;
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, offspring::Deterministic>) {
          require(l.k >= 0, "offspring.k", "must be >= 0");
        } else if constexpr (std::is_same_v<T, offspring::TwoPoint>) {
          require(std::isfinite(l.p0) && l.p0 >= 0.0 && l.p0 <= 1.0, "offspring.p0",
                  "must be a probability");
          require(l.k >= 2, "offspring.k", "must be >= 2");
        } else {
          require(std::isfinite(l.mean) && l.mean > 0.0, "offspring.mean",
                  "must be finite and > 0");
        }
      },
      law);
}

inline void validate(const DisplacementLaw& law) {
  using detail::require;
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, displacement::Deterministic>) {
          require(std::isfinite(l.value), "displacement.value", "must be finite");
        } else if constexpr (std::is_same_v<T, displacement::Gaussian>) {
          require(std::isfinite(l.mean), "displacement.mean", "must be finite");
          require(std::isfinite(l.var) && l.var >= 0.0, "displacement.var",
                  "must be finite and >= 0");
        } else if constexpr (std::is_same_v<T, displacement::Poisson>) {
          require(std::isfinite(l.mean) && l.mean > 0.0, "displacement.mean",
                  "must be finite and > 0");
        }
      },
      law.marginal);
}

// Throws Error(InvalidParameter) naming the field, or
// Error(SubcriticalOrCritical) when E[N] <= 1.
inline void validate(const ModelConfig& config) {
  detail::require(std::isfinite(config.lambda) && config.lambda > 0.0, "lambda",
                  "must be finite and > 0");
  validate(config.offspring);
  validate(config.displacement);
  validate(config.motion);
  const OffspringMoments n = offspring_moments(config.offspring);
  if (!(n.mean > 1.0)) {
    throw Error(ErrorKind::SubcriticalOrCritical, "offspring",
                "E[N] = " + std::to_string(n.mean) + " must exceed 1");
  }
}

// Smallest fixed point of the offspring pgf, by iteration from 0.
inline double extinction_probability(const OffspringLaw& law, double tolerance = 1e-12,
                                     std::size_t max_steps = 1'000'000) {
  if (!has_mass_at_zero(law)) return 0.0;
  double q = 0.0;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const double next = offspring_pgf(law, q);
    if (std::abs(next - q) <= tolerance) return next;
    q = next;
  }
  throw Error(ErrorKind::NoConvergence, "offspring",
              "extinction fixed-point iteration did not converge");
}

struct DerivedConstants {
  double lambda = 0.0;      // lifetime rate, carried for convenience
  double lambda_hat = 0.0;  // effective branching rate lambda E[N-1]
  double r = 0.0;           // movement rate
  double kappa = 0.0;       // E[(N-1)^2] / E[N-1]
  double c1 = 0.0;          // second-moment constants, as stated
  double c2 = 0.0;
  double c1_corr = 0.0;     // with the motion-variance contribution
  double c2_corr = 0.0;
  double q_ext = 0.0;
  double motion_var = 0.0;  // Var(Z_1)
  // Forcing coefficients of the second-moment ODE
  //   y' = lambda_hat y + a e^{2 lambda_hat t} + b e^{lambda_hat t},
  // assembled from model moments rather than from c1, c2.
  double a = 0.0;
  double b = 0.0;
  double a_corr = 0.0;
  double b_corr = 0.0;

  friend bool operator==(const DerivedConstants&, const DerivedConstants&) = default;
};

struct GrowthRates {
  double lambda_hat = 0.0;
  double r = 0.0;
};

// The two first-order rates, without the extinction solve.
inline GrowthRates growth_rates(const ModelConfig& config) {
  const OffspringMoments n = offspring_moments(config.offspring);
  const AggregateMoments d = aggregate_displacement_moments(config.offspring, config.displacement);
  return {config.lambda * n.excess_mean, levy_moments(config.motion).mean_rate + config.lambda * d.sum};
}

inline DerivedConstants derived_constants(const ModelConfig& config) {
  validate(config);
  const OffspringMoments n = offspring_moments(config.offspring);
  const AggregateMoments d = aggregate_displacement_moments(config.offspring, config.displacement);
  const LevyMoments z = levy_moments(config.motion);
  const GrowthRates rates = growth_rates(config);

  DerivedConstants dc;
  dc.lambda = config.lambda;
  dc.lambda_hat = rates.lambda_hat;
  dc.r = rates.r;
  dc.kappa = n.excess_second / n.excess_mean;
  const double ratio = n.excess_second / (n.excess_mean * n.excess_mean);
  dc.c1 = ratio * d.sum_of_squares + d.square_of_sum / n.excess_mean;
  dc.c2 = dc.lambda_hat * ratio * d.sum_of_squares;
  dc.motion_var = z.var_rate;
  dc.c1_corr = dc.c1 + (1.0 + dc.kappa) * z.var_rate / dc.lambda_hat;
  dc.c2_corr = dc.c2 + dc.kappa * z.var_rate;
  dc.a = config.lambda * (dc.kappa * d.sum_of_squares + d.square_of_sum);
  dc.b = -config.lambda * dc.kappa * d.sum_of_squares;
  dc.a_corr = dc.a + (1.0 + dc.kappa) * z.var_rate;
  dc.b_corr = dc.b - dc.kappa * z.var_rate;
  dc.q_ext = extinction_probability(config.offspring);
  return dc;
}

}  // namespace blevy
