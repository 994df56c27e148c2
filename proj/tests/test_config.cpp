#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "blevy/config.hpp"
#include "blevy/presets.hpp"
#include "blevy/report.hpp"
#include "test_support.hpp"

namespace blevy {
namespace {

std::string error_field(std::string_view text) {
  try {
    parse_experiment(text);
  } catch (const Error& e) {
    return e.field();
  }
  return "ok";
}

constexpr std::string_view kMinimal =
    "model.lambda = 1\n"
    "model.offspring.kind = deterministic\n"
    "model.offspring.k = 2\n";

TEST(ParseConfig, MinimalModelUsesDefaults) {
  const ModelConfig m = parse_model_config(kMinimal);
  EXPECT_EQ(m, testing::yule());
}

TEST(ParseConfig, CommentsAndWhitespace) {
  const std::string text =
      "# header\n\n  model.lambda=1   # trailing\n"
      "model.offspring.kind = deterministic\r\nmodel.offspring.k = 2\n"
      "model.displacement.kind = deterministic\nmodel.displacement.value = 1\n";
  EXPECT_EQ(parse_model_config(text), testing::preset("generation"));
}

TEST(ParseConfig, ExperimentKeys) {
  const std::string text = std::string(kMinimal) +
                           "experiment.checkpoints = 0.5, 1 ,2\n"
                           "experiment.replicates = 123\n"
                           "experiment.cap = 456\n"
                           "experiment.seed = 18446744073709551615\n"
                           "experiment.variant = corrected\n"
                           "experiment.max_attempts = 7\n"
                           "experiment.output_dir = out/dir\n";
  const ExperimentSpec spec = parse_experiment(text);
  EXPECT_EQ(spec.checkpoints, (std::vector<double>{0.5, 1.0, 2.0}));
  EXPECT_EQ(spec.replicates, 123u);
  EXPECT_EQ(spec.cap, 456u);
  EXPECT_EQ(spec.master_seed, 18446744073709551615ull);
  EXPECT_EQ(spec.variant, MomentVariant::MotionCorrected);
  EXPECT_EQ(spec.max_attempts, 7u);
  EXPECT_EQ(spec.output_dir, "out/dir");
}

TEST(ParseConfig, ModelParserRejectsExperimentKeys) {
  EXPECT_THROW(parse_model_config(std::string(kMinimal) + "experiment.replicates = 5\n"), Error);
}

TEST(ParseConfig, ErrorsNameTheKey) {
  const std::string base(kMinimal);
  EXPECT_EQ(error_field(base + "model.lamda = 2\n"), "model.lamda");
  EXPECT_EQ(error_field(base + "model.lambda = 2\n"), "model.lambda");
  EXPECT_EQ(error_field("model.offspring.kind = deterministic\nmodel.offspring.k = 2\n"), "model.lambda");
  EXPECT_EQ(error_field("model.lambda = abc\nmodel.offspring.kind = deterministic\nmodel.offspring.k = 2\n"),
            "model.lambda");
  EXPECT_EQ(error_field("model.lambda = -1\nmodel.offspring.kind = deterministic\nmodel.offspring.k = 2\n"),
            "model.lambda");
  EXPECT_EQ(error_field("model.lambda = 1\nmodel.offspring.kind = binary\n"), "model.offspring.kind");
  EXPECT_EQ(error_field("model.lambda = 1\nmodel.offspring.kind = deterministic\nmodel.offspring.k = 1\n"),
            "model.offspring");
  EXPECT_EQ(error_field(base + "model.offspring.p0 = 0.5\n"), "model.offspring.p0");
  EXPECT_EQ(error_field(base + "model.displacement.coupling = both\n"), "model.displacement.coupling");
  EXPECT_EQ(error_field(base + "experiment.replicates = -3\n"), "experiment.replicates");
  EXPECT_EQ(error_field(base + "experiment.checkpoints = 1,,2\n"), "experiment.checkpoints");
  EXPECT_EQ(error_field(base + "experiment.variant = best\n"), "experiment.variant");
  EXPECT_EQ(error_field(base + "just some words\n"), "line 4");
}

TEST(ParseConfig, ErrorMessageContainsKey) {
  try {
    parse_experiment(std::string(kMinimal) + "model.motion.drift = fast\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("model.motion.drift"), std::string::npos);
  }
}

TEST(ConfigRoundTrip, RandomModels) {
  testing::ConfigGenerator gen(55);
  for (int i = 0; i < 500; ++i) {
    const ModelConfig m = gen();
    EXPECT_EQ(parse_model_config(write_model_config(m)), m) << write_model_config(m);
  }
}

TEST(ConfigRoundTrip, Experiments) {
  testing::ConfigGenerator gen(56);
  for (int i = 0; i < 100; ++i) {
    ExperimentSpec spec;
    spec.model = gen();
    spec.checkpoints = {0.1 * (i + 1), 1.0 + i, 3.7 + i};
    spec.replicates = 1 + i;
    spec.master_seed = 0x9e3779b97f4a7c15ull * (i + 1);
    if (i % 3 == 1) spec.variant = MomentVariant::PaperStated;
    if (i % 3 == 2) spec.variant = MomentVariant::MotionCorrected;
    EXPECT_EQ(parse_experiment(write_experiment(spec)), spec);
  }
}

TEST(Presets, ListAndRoundTrip) {
  std::vector<std::string> names;
  for (const auto& p : presets()) {
    names.push_back(p.name);
    EXPECT_NO_THROW(validate(p.model));
    EXPECT_EQ(parse_model_config(write_model_config(p.model)), p.model);
  }
  for (const char* expected : {"generation", "cancer-poisson", "phylo-walk", "brownian-only", "null", "twopoint"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
  }
  EXPECT_FALSE(find_preset("nope").has_value());
}

TEST(Presets, DerivedConstants) {
  const auto gen = derived_constants(testing::preset("generation"));
  EXPECT_EQ(gen.r, 2.0);
  EXPECT_EQ(gen.c1, 6.0);
  EXPECT_EQ(gen.c2, 2.0);
  const auto null = derived_constants(testing::preset("null"));
  EXPECT_EQ(null.r, 0.0);
  EXPECT_EQ(null.c1, 0.0);
  EXPECT_EQ(null.c2, 0.0);
  const auto bm = derived_constants(testing::preset("brownian-only"));
  EXPECT_EQ(bm.c1, 0.0);
  EXPECT_DOUBLE_EQ(bm.c1_corr, 2.0);
  EXPECT_NEAR(derived_constants(testing::preset("twopoint")).q_ext, 0.25, 1e-11);
}

TEST(Report, ConstantsAreLabeledLines) {
  std::ostringstream out;
  write_constants(out, derived_constants(testing::preset("generation")));
  const std::string s = out.str();
  for (const char* line : {"lambda_hat = 1\n", "r = 2\n", "kappa = 1\n", "c1 = 6\n", "c2 = 2\n",
                           "c1_corr = 6\n", "c2_corr = 2\n", "q_ext = 0\n"}) {
    EXPECT_NE(s.find(line), std::string::npos) << line;
  }
}

TEST(Format, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 6.0, -2.5e-300, 1e21, 22.58808196591154}) {
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(6.0), "6");
}

}  // namespace
}  // namespace blevy
