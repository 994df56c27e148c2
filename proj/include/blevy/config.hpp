#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blevy/error.hpp"
#include "blevy/format.hpp"
#include "blevy/model.hpp"
#include "blevy/oracle.hpp"
#include "blevy/sim.hpp"

// Flat key/value config files:
//
//   # comment
//   model.lambda = 1
//   model.offspring.kind = deterministic
//   model.offspring.k = 2
//   experiment.checkpoints = 1,2,4
//
// Keys are documented in the README. Unknown keys, duplicate keys, and keys
// that do not apply to the selected kind are errors that name the key.

namespace blevy {

struct ExperimentSpec {
  ModelConfig model{};
  std::vector<double> checkpoints{1.0, 2.0, 4.0};
  std::size_t replicates = 10'000;
  std::size_t cap = kDefaultCap;
  std::uint64_t master_seed = 0;
  std::optional<MomentVariant> variant;  // empty: choose from the model
  std::size_t max_attempts = 1000;
  std::string output_dir = ".";

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

using KeyValues = std::map<std::string, std::string, std::less<>>;

inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no), "expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no), "empty key");
    }
    if (!kv.emplace(key, value).second) throw Error(ErrorKind::ParseError, key, "duplicate key");
  }
  return kv;
}

namespace detail {

class KeyReader {
 public:
  explicit KeyReader(const KeyValues& kv) : kv_(kv) {}

  bool has(std::string_view key) const { return kv_.find(key) != kv_.end(); }

  std::string text(const std::string& key) {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw Error(ErrorKind::ParseError, key, "missing required key");
    used_.insert(key);
    return it->second;
  }

  double real(const std::string& key) {
    const auto v = parse_double(text(key));
    if (!v) throw Error(ErrorKind::ParseError, key, "not a number");
    return *v;
  }

  double real_or(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }

  template <class Int>
  Int integer(const std::string& key) {
    const auto v = parse_integer<Int>(text(key));
    if (!v) throw Error(ErrorKind::ParseError, key, "not an integer");
    return *v;
  }

  std::vector<double> real_list(const std::string& key) {
    std::vector<double> out;
    const std::string value = text(key);
    std::string_view s = value;
    while (true) {
      const auto comma = s.find(',');
      const auto item = trim(s.substr(0, comma));
      const auto v = parse_double(item);
      if (!v) throw Error(ErrorKind::ParseError, key, "not a comma-separated list of numbers");
      out.push_back(*v);
      if (comma == std::string_view::npos) break;
      s = s.substr(comma + 1);
    }
    return out;
  }

  // Every key in the file must have been consumed.
  void finish() const {
    for (const auto& [key, value] : kv_) {
      if (!used_.count(key)) throw Error(ErrorKind::ParseError, key, "unknown or unused key");
    }
  }

 private:
  const KeyValues& kv_;
  std::set<std::string, std::less<>> used_;
};

inline OffspringLaw read_offspring(KeyReader& in) {
  const std::string kind = in.text("model.offspring.kind");
  if (kind == "deterministic") return offspring::Deterministic{in.integer<std::int64_t>("model.offspring.k")};
  if (kind == "twopoint") {
    return offspring::TwoPoint{in.real("model.offspring.p0"),
                               in.integer<std::int64_t>("model.offspring.k")};
  }
  if (kind == "geometric") return offspring::Geometric{in.real("model.offspring.mean")};
  throw Error(ErrorKind::ParseError, "model.offspring.kind", "unknown kind '" + kind + "'");
}

inline DisplacementLaw read_displacement(KeyReader& in) {
  DisplacementLaw law;
  const std::string kind = in.has("model.displacement.kind") ? in.text("model.displacement.kind") : "zero";
  if (kind == "zero") {
    law.marginal = displacement::Zero{};
  } else if (kind == "deterministic") {
    law.marginal = displacement::Deterministic{in.real("model.displacement.value")};
  } else if (kind == "gaussian") {
    law.marginal = displacement::Gaussian{in.real("model.displacement.mean"),
                                          in.real("model.displacement.var")};
  } else if (kind == "poisson") {
    law.marginal = displacement::Poisson{in.real("model.displacement.mean")};
  } else {
    throw Error(ErrorKind::ParseError, "model.displacement.kind", "unknown kind '" + kind + "'");
  }
  if (in.has("model.displacement.coupling")) {
    const std::string c = in.text("model.displacement.coupling");
    if (c == "iid") {
      law.coupling = Coupling::IID;
    } else if (c == "shared") {
      law.coupling = Coupling::Shared;
    } else {
      throw Error(ErrorKind::ParseError, "model.displacement.coupling", "expected iid or shared");
    }
  }
  return law;
}

inline LevySpec read_motion(KeyReader& in) {
  LevySpec spec;
  spec.drift = in.real_or("model.motion.drift", 0.0);
  spec.diffusion_var = in.real_or("model.motion.diffusion_var", 0.0);
  spec.jump_rate = in.real_or("model.motion.jump_rate", 0.0);
  const std::string kind = in.has("model.motion.jump.kind") ? in.text("model.motion.jump.kind") : "zero";
  if (kind == "zero") {
    spec.jump_law = jump::Zero{};
  } else if (kind == "deterministic") {
    spec.jump_law = jump::Deterministic{in.real("model.motion.jump.value")};
  } else if (kind == "gaussian") {
    spec.jump_law = jump::Gaussian{in.real("model.motion.jump.mean"), in.real("model.motion.jump.var")};
  } else {
    throw Error(ErrorKind::ParseError, "model.motion.jump.kind", "unknown kind '" + kind + "'");
  }
  return spec;
}

inline ModelConfig read_model(KeyReader& in) {
  ModelConfig config;
  config.lambda = in.real("model.lambda");
  config.offspring = read_offspring(in);
  config.displacement = read_displacement(in);
  config.motion = read_motion(in);
  try {
    validate(config);
  } catch (const Error& e) {
    // Report the config key rather than the bare field name.
    throw Error(e.kind(), "model." + e.field(), e.message());
  }
  return config;
}

inline std::optional<MomentVariant> parse_variant(const std::string& key, std::string_view s) {
  if (s == "paper") return MomentVariant::PaperStated;
  if (s == "corrected") return MomentVariant::MotionCorrected;
  if (s == "auto") return std::nullopt;
  throw Error(ErrorKind::ParseError, key, "expected paper, corrected or auto");
}

}  // namespace detail

// Model only; experiment.* keys are rejected.
inline ModelConfig parse_model_config(std::string_view text) {
  const KeyValues kv = parse_key_values(text);
  detail::KeyReader in(kv);
  ModelConfig config = detail::read_model(in);
  in.finish();
  return config;
}

// Model plus optional experiment.* keys; absent keys keep their defaults.
inline ExperimentSpec parse_experiment(std::string_view text) {
  const KeyValues kv = parse_key_values(text);
  detail::KeyReader in(kv);
  ExperimentSpec spec;
  spec.model = detail::read_model(in);
  if (in.has("experiment.checkpoints")) spec.checkpoints = in.real_list("experiment.checkpoints");
  if (in.has("experiment.replicates")) spec.replicates = in.integer<std::size_t>("experiment.replicates");
  if (in.has("experiment.cap")) spec.cap = in.integer<std::size_t>("experiment.cap");
  if (in.has("experiment.seed")) spec.master_seed = in.integer<std::uint64_t>("experiment.seed");
  if (in.has("experiment.max_attempts")) {
    spec.max_attempts = in.integer<std::size_t>("experiment.max_attempts");
  }
  if (in.has("experiment.variant")) {
    spec.variant = detail::parse_variant("experiment.variant", in.text("experiment.variant"));
  }
  if (in.has("experiment.output_dir")) spec.output_dir = in.text("experiment.output_dir");
  in.finish();
  return spec;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string write_model_config(const ModelConfig& config) {
  std::ostringstream out;
  out << "model.lambda = " << format_double(config.lambda) << "\n";
  std::visit(
      [&out](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, offspring::Deterministic>) {
          out << "model.offspring.kind = deterministic\nmodel.offspring.k = " << l.k << "\n";
        } else if constexpr (std::is_same_v<T, offspring::TwoPoint>) {
          out << "model.offspring.kind = twopoint\nmodel.offspring.p0 = " << format_double(l.p0)
              << "\nmodel.offspring.k = " << l.k << "\n";
        } else {
          out << "model.offspring.kind = geometric\nmodel.offspring.mean = "
              << format_double(l.mean) << "\n";
        }
      },
      config.offspring);
  std::visit(
      [&out](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, displacement::Zero>) {
          out << "model.displacement.kind = zero\n";
        } else if constexpr (std::is_same_v<T, displacement::Deterministic>) {
          out << "model.displacement.kind = deterministic\nmodel.displacement.value = "
              << format_double(l.value) << "\n";
        } else if constexpr (std::is_same_v<T, displacement::Gaussian>) {
          out << "model.displacement.kind = gaussian\nmodel.displacement.mean = "
              << format_double(l.mean) << "\nmodel.displacement.var = " << format_double(l.var)
              << "\n";
        } else {
          out << "model.displacement.kind = poisson\nmodel.displacement.mean = "
              << format_double(l.mean) << "\n";
        }
      },
      config.displacement.marginal);
  out << "model.displacement.coupling = "
      << (config.displacement.coupling == Coupling::IID ? "iid" : "shared") << "\n";
  const LevySpec& m = config.motion;
  out << "model.motion.drift = " << format_double(m.drift) << "\n"
      << "model.motion.diffusion_var = " << format_double(m.diffusion_var) << "\n"
      << "model.motion.jump_rate = " << format_double(m.jump_rate) << "\n";
  std::visit(
      [&out](const auto& j) {
        using T = std::decay_t<decltype(j)>;
        if constexpr (std::is_same_v<T, jump::Zero>) {
          out << "model.motion.jump.kind = zero\n";
        } else if constexpr (std::is_same_v<T, jump::Deterministic>) {
          out << "model.motion.jump.kind = deterministic\nmodel.motion.jump.value = "
              << format_double(j.value) << "\n";
        } else {
          out << "model.motion.jump.kind = gaussian\nmodel.motion.jump.mean = "
              << format_double(j.mean) << "\nmodel.motion.jump.var = " << format_double(j.var)
              << "\n";
        }
      },
      m.jump_law);
  return out.str();
}

inline std::string write_experiment(const ExperimentSpec& spec) {
  std::ostringstream out;
  out << write_model_config(spec.model) << "experiment.checkpoints = ";
  for (std::size_t i = 0; i < spec.checkpoints.size(); ++i) {
    out << (i ? "," : "") << format_double(spec.checkpoints[i]);
  }
  out << "\nexperiment.replicates = " << spec.replicates << "\nexperiment.cap = " << spec.cap
      << "\nexperiment.seed = " << spec.master_seed
      << "\nexperiment.max_attempts = " << spec.max_attempts << "\nexperiment.variant = "
      << (spec.variant ? std::string(to_string(*spec.variant)) : std::string("auto"))
      << "\nexperiment.output_dir = " << spec.output_dir << "\n";
  return out.str();
}

}  // namespace blevy
