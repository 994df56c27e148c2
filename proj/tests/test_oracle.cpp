#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "blevy/oracle.hpp"
#include "test_support.hpp"

namespace blevy {
namespace {

using testing::preset;
using testing::relative_error;

constexpr double kE = std::numbers::e;

DerivedConstants with_growth(double lambda_hat, double kappa) {
  DerivedConstants dc;
  dc.lambda_hat = lambda_hat;
  dc.kappa = kappa;
  return dc;
}

TEST(ExpectedPopulation, Values) {
  EXPECT_EQ(expected_population(with_growth(1.0, 1.0), 0.0), 1.0);
  EXPECT_NEAR(expected_population(with_growth(1.0, 1.0), 1.0), 2.718281828459045, 1e-15);
  EXPECT_DOUBLE_EQ(expected_population(with_growth(2.0, 1.0), 3.0), std::exp(6.0));
}

TEST(PopulationSecondMoment, Values) {
  EXPECT_DOUBLE_EQ(population_second_moment(with_growth(1.0, 1.0), 0.0), 1.0);
  EXPECT_NEAR(population_second_moment(with_growth(1.0, 1.0), 1.0), 12.059830369402255, 1e-12);
  testing::ConfigGenerator gen(8);
  for (int i = 0; i < 100; ++i) {
    const auto dc = derived_constants(gen());
    for (double t : {0.0, 0.3, 1.0, 2.5, 5.0}) {
      const double m = expected_population(dc, t);
      EXPECT_GE(population_second_moment(dc, t), m * m * (1 - 1e-14));
    }
  }
}

TEST(CenteredSumMean, IsZero) {
  for (double t : {0.0, 1.0, 100.0}) EXPECT_EQ(centered_sum_mean(t), 0.0);
}

TEST(CenteredSumSecondMoment, Values) {
  const auto gen = derived_constants(preset("generation"));
  for (auto v : {MomentVariant::PaperStated, MomentVariant::MotionCorrected}) {
    EXPECT_EQ(centered_sum_second_moment(gen, 0.0, v), 0.0);
  }
  EXPECT_NEAR(centered_sum_second_moment(gen, 1.0, MomentVariant::PaperStated),
              6 * kE * kE - 8 * kE, 1e-12);
  EXPECT_NEAR(centered_sum_second_moment(gen, 1.0, MomentVariant::PaperStated), 22.58808196591154,
              1e-12);

  const auto bm = derived_constants(preset("brownian-only"));
  for (double t : {0.5, 1.0, 3.0}) {
    EXPECT_EQ(centered_sum_second_moment(bm, t, MomentVariant::PaperStated), 0.0);
  }
  EXPECT_NEAR(centered_sum_second_moment(bm, 1.0, MomentVariant::MotionCorrected),
              6.623266712484165, 1e-12);
}

TEST(MartingaleVariance, Values) {
  const auto gen = derived_constants(preset("generation"));
  const auto v = MomentVariant::PaperStated;
  EXPECT_EQ(martingale_variance(gen, 0.0, v), 0.0);
  EXPECT_NEAR(martingale_variance(gen, 4.0, v), 6.0 - 14.0 * std::exp(-4.0), 1e-14);
  EXPECT_NEAR(martingale_variance(gen, 4.0, v), 5.743581055557722, 1e-12);
  EXPECT_NEAR(martingale_variance(gen, 60.0, v), 6.0, 1e-12);
}

TEST(MartingaleVariance, BoundedByAndConvergesToC1) {
  testing::ConfigGenerator gen(19);
  for (int i = 0; i < 200; ++i) {
    const ModelConfig m = gen();
    const auto dc = derived_constants(m);
    for (auto v : {MomentVariant::PaperStated, MomentVariant::MotionCorrected}) {
      const double c1 = second_moment_constants(dc, v).c1;
      double previous = 0.0;
      for (double t : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double mv = martingale_variance(dc, t, v);
        EXPECT_LE(mv, c1 * (1 + 1e-12));
        EXPECT_GE(mv, previous - 1e-12 * c1);
        previous = mv;
      }
      if (dc.lambda_hat >= 1.0) {
        EXPECT_NEAR(martingale_variance(dc, 20.0, v), c1, 1e-6);
      }
    }
  }
}

TEST(OdeResidual, NullConfigIsExactlyZero) {
  const auto dc = derived_constants(preset("null"));
  for (double t : {0.5, 1.0, 2.0}) {
    EXPECT_EQ(ode_residual(dc, t, 1e-5, MomentVariant::PaperStated), 0.0);
    EXPECT_EQ(ode_residual(dc, t, 1e-5, MomentVariant::MotionCorrected), 0.0);
  }
}

TEST(OdeResidual, GenerationAtOne) {
  const auto dc = derived_constants(preset("generation"));
  EXPECT_LT(std::abs(ode_residual(dc, 1.0, 1e-5, MomentVariant::PaperStated)), 1e-5);
}

TEST(OdeResidual, SmallOnRandomConfigs) {
  testing::ConfigGenerator gen(4);
  for (int i = 0; i < 200; ++i) {
    const auto dc = derived_constants(gen());
    for (auto v : {MomentVariant::PaperStated, MomentVariant::MotionCorrected}) {
      const auto k = second_moment_constants(dc, v);
      for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double g = std::exp(dc.lambda_hat * t);
        const double rhs = dc.lambda_hat * centered_sum_second_moment(dc, t, v) + k.a * g * g + k.b * g;
        EXPECT_LE(std::abs(ode_residual(dc, t, 1e-5, v)), 1e-6 * (1 + std::abs(rhs)));
      }
    }
  }
}

TEST(Variants, AgreeWithoutMotionVariance) {
  testing::ConfigGenerator gen(12);
  for (int i = 0; i < 200; ++i) {
    const auto dc = derived_constants(gen(false));
    ASSERT_EQ(dc.motion_var, 0.0);
    for (double t : {0.0, 0.25, 1.0, 3.0, 6.0}) {
      const double p = centered_sum_second_moment(dc, t, MomentVariant::PaperStated);
      const double c = centered_sum_second_moment(dc, t, MomentVariant::MotionCorrected);
      EXPECT_LE(relative_error(p, c), 1e-12);
      EXPECT_GE(p, -1e-12 * (1 + std::abs(p)));
    }
  }
}

TEST(Variants, CorrectedIsNonNegative) {
  testing::ConfigGenerator gen(13);
  for (int i = 0; i < 200; ++i) {
    const auto dc = derived_constants(gen());
    for (double t : {0.0, 0.1, 1.0, 3.0, 6.0}) {
      const double s = centered_sum_second_moment(dc, t, MomentVariant::MotionCorrected);
      EXPECT_GE(s, -1e-12 * (1 + std::abs(s)));
    }
  }
}

TEST(BruteForce, NullIsZero) {
  for (double t : {0.0, 1.0, 3.0}) EXPECT_EQ(brute_force_second_moment(preset("null"), t, 1000), 0.0);
}

TEST(BruteForce, GenerationMatchesClosedForm) {
  const auto dc = derived_constants(preset("generation"));
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    EXPECT_LE(relative_error(brute_force_second_moment(preset("generation"), t, 10'000),
                             centered_sum_second_moment(dc, t, MomentVariant::PaperStated)),
              1e-6);
  }
}

// The integrator keeps the motion-variance term, so it picks out one variant.
TEST(BruteForce, BrownianOnlySelectsCorrectedVariant) {
  const ModelConfig m = preset("brownian-only");
  const auto dc = derived_constants(m);
  const double brute = brute_force_second_moment(m, 1.0, 10'000);
  EXPECT_LE(relative_error(brute, centered_sum_second_moment(dc, 1.0, MomentVariant::MotionCorrected)),
            1e-6);
  EXPECT_EQ(centered_sum_second_moment(dc, 1.0, MomentVariant::PaperStated), 0.0);
  EXPECT_GT(brute, 6.0);
}

TEST(BruteForce, CrossValidatesOnRandomConfigs) {
  testing::ConfigGenerator gen(21);
  for (int i = 0; i < 60; ++i) {
    const ModelConfig m = gen();
    const auto dc = derived_constants(m);
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
      const double closed = centered_sum_second_moment(dc, t, MomentVariant::MotionCorrected);
      const double brute = brute_force_second_moment(m, t, 10'000);
      EXPECT_LE(std::abs(brute - closed), 1e-6 * std::max(1.0, std::abs(closed)))
          << "config " << i << " t=" << t;
    }
  }
}

}  // namespace
}  // namespace blevy
