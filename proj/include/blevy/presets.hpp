#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blevy/model.hpp"

namespace blevy {

struct Preset {
  std::string name;
  std::string description;
  ModelConfig model;
};

// Built-in models. All branch at rate 1.
inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> p;
    {
      ModelConfig m;
      m.offspring = offspring::Deterministic{2};
      m.displacement = {displacement::Deterministic{1.0}, Coupling::IID};
      p.push_back({"generation", "binary splitting, each child displaced by +1: position = generation", m});
    }
    {
      ModelConfig m;
      m.offspring = offspring::Deterministic{2};
      m.displacement = {displacement::Poisson{1.0}, Coupling::IID};
      p.push_back({"cancer-poisson", "binary splitting, Poisson(1) new mutations per daughter cell", m});
    }
    {
      ModelConfig m;
      m.offspring = offspring::Deterministic{2};
      m.motion.diffusion_var = 0.5;
      m.motion.jump_rate = 1.0;
      m.motion.jump_law = jump::Gaussian{0.0, 1.0};
      p.push_back({"phylo-walk", "speciation tree, trait follows a jump-diffusion along lineages", m});
    }
    {
      ModelConfig m;
      m.offspring = offspring::Deterministic{2};
      m.motion.diffusion_var = 1.0;
      p.push_back({"brownian-only", "binary branching Brownian motion with unit variance, no displacement", m});
    }
    {
      ModelConfig m;
      m.offspring = offspring::Deterministic{2};
      p.push_back({"null", "binary splitting with no displacement and no motion", m});
    }
    {
      ModelConfig m;
      m.offspring = offspring::TwoPoint{0.2, 2};
      m.displacement = {displacement::Deterministic{1.0}, Coupling::IID};
      p.push_back({"twopoint", "0 or 2 offspring (p0 = 0.2), extinction probability 1/4", m});
    }
    return p;
  }();
  return all;
}

inline std::optional<Preset> find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

}  // namespace blevy
