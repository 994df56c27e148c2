#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "blevy/model.hpp"

namespace blevy {

// Which pair of second-moment constants to use. PaperStated omits the
// contribution of the motion variance; MotionCorrected includes it. The two
// coincide whenever Var(Z_1) = 0.
enum class MomentVariant { PaperStated, MotionCorrected };

inline std::string_view to_string(MomentVariant v) {
  return v == MomentVariant::PaperStated ? "paper" : "corrected";
}

inline MomentVariant other(MomentVariant v) {
  return v == MomentVariant::PaperStated ? MomentVariant::MotionCorrected
                                         : MomentVariant::PaperStated;
}

// PaperStated when the motion has no variance, MotionCorrected otherwise.
inline MomentVariant default_variant(const DerivedConstants& dc) {
  return dc.motion_var == 0.0 ? MomentVariant::PaperStated : MomentVariant::MotionCorrected;
}

struct SecondMomentConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double a = 0.0;
  double b = 0.0;
};

inline SecondMomentConstants second_moment_constants(const DerivedConstants& dc, MomentVariant v) {
  if (v == MomentVariant::PaperStated) return {dc.c1, dc.c2, dc.a, dc.b};
  return {dc.c1_corr, dc.c2_corr, dc.a_corr, dc.b_corr};
}

// E|T_t|
inline double expected_population(const DerivedConstants& dc, double t) {
  return std::exp(dc.lambda_hat * t);
}

// E[|T_t|^2] = (1 + kappa) e^{2 lh t} - kappa e^{lh t}
inline double population_second_moment(const DerivedConstants& dc, double t) {
  const double g = std::exp(dc.lambda_hat * t);
  return (1.0 + dc.kappa) * g * g - dc.kappa * g;
}

// E[sum (X - r t)] vanishes identically.
inline double centered_sum_mean(double /*t*/) { return 0.0; }

// E[(sum (X - r t))^2] = c1 e^{2 lh t} - c2 t e^{lh t} - c1 e^{lh t}
inline double centered_sum_second_moment(const DerivedConstants& dc, double t, MomentVariant v) {
  const auto k = second_moment_constants(dc, v);
  const double g = std::exp(dc.lambda_hat * t);
  return k.c1 * g * g - k.c2 * t * g - k.c1 * g;
}

// Var(M_t) = c1 - c2 t e^{-lh t} - c1 e^{-lh t}; increases to c1.
inline double martingale_variance(const DerivedConstants& dc, double t, MomentVariant v) {
  const auto k = second_moment_constants(dc, v);
  const double g = std::exp(-dc.lambda_hat * t);
  return k.c1 - k.c2 * t * g - k.c1 * g;
}

// Central-difference derivative of the closed form minus the ODE right-hand
// side. Near zero when the closed form solves the ODE.
inline double ode_residual(const DerivedConstants& dc, double t, double h, MomentVariant v) {
  const auto k = second_moment_constants(dc, v);
  const double derivative = (centered_sum_second_moment(dc, t + h, v) -
                             centered_sum_second_moment(dc, t - h, v)) /
                            (2.0 * h);
  const double g = std::exp(dc.lambda_hat * t);
  const double rhs =
      dc.lambda_hat * centered_sum_second_moment(dc, t, v) + k.a * g * g + k.b * g;
  return derivative - rhs;
}

/// Second moment of the centered sum obtained by integrating the joint moment
/// system with classical RK4, starting from the one-particle state at t = 0.
///
/// State: E|T|, E|T|^2, E[C], E[|T| C], E[C^2] where C is the centered sum.
/// Each derivative comes from conditioning on what happens in [0, h]: either
/// the root only moves (rate 1 - lambda h), or it branches once (rate
/// lambda h) into N independent copies of the process displaced by D_i. The
/// motion-variance term is kept. Nothing here uses the closed forms above.
inline double brute_force_second_moment(const ModelConfig& config, double t,
                                        std::size_t n_steps = 10'000) {
  const OffspringMoments n = offspring_moments(config.offspring);
  const AggregateMoments d = aggregate_displacement_moments(config.offspring, config.displacement);
  const LevyMoments z = levy_moments(config.motion);
  const double lambda = config.lambda;
  const double r = growth_rates(config).r;
  // Drift of the centered sum per particle; zero when r is the movement rate.
  const double net = z.mean_rate + lambda * d.sum - r;
  const double excess_weighted = d.count_weighted - d.sum;  // E[(N-1) sum D]

  using State = std::array<double, 5>;
  enum { kPop, kPop2, kMean, kCross, kSecond };

  auto rhs = [&](const State& y) {
    const double m = y[kPop], p = y[kPop2], ec = y[kMean], g = y[kCross], s = y[kSecond];
    State dy{};
    dy[kPop] = -lambda * m + lambda * n.mean * m;
    dy[kPop2] = -lambda * p + lambda * (n.mean * p + n.factorial * m * m);
    dy[kMean] = -lambda * ec + net * m + lambda * (n.mean * ec);
    dy[kCross] = -lambda * g + net * p +
                 lambda * (n.mean * g + n.factorial * m * ec + excess_weighted * m * m);
    dy[kSecond] = -lambda * s + 2.0 * net * g + z.var_rate * p +
                  lambda * (n.mean * s + n.factorial * ec * ec + 2.0 * excess_weighted * ec * m +
                            d.sum_of_squares * p + (d.square_of_sum - d.sum_of_squares) * m * m);
    return dy;
  };

  State y{1.0, 1.0, 0.0, 0.0, 0.0};
  if (t <= 0.0) return y[kSecond];
  const double h = t / static_cast<double>(n_steps);
  auto axpy = [](const State& base, double scale, const State& dir) {
    State out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + scale * dir[i];
    return out;
  };
  for (std::size_t step = 0; step < n_steps; ++step) {
    const State k1 = rhs(y);
    const State k2 = rhs(axpy(y, 0.5 * h, k1));
    const State k3 = rhs(axpy(y, 0.5 * h, k2));
    const State k4 = rhs(axpy(y, h, k3));
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  return y[kSecond];
}

}  // namespace blevy
