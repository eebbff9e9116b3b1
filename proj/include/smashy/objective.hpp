#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "smashy/error.hpp"
#include "smashy/param_space.hpp"

namespace smashy {

// Fidelity-parameterized cost c(config; r). `model` receives a canonical,
// validated config; evaluate() enforces the contract around it.
struct Objective {
  using Model = std::function<double(const Config&, double r, std::uint64_t seed)>;

  std::string name;
  ParamSpace space;
  double r_min = 1.0;
  Model model;
  std::optional<double> known_optimum;
  // A config attaining known_optimum at r = 1, when one is planted.
  std::optional<Config> optimum_config;
  // Noise-free cost at fidelity r, when the objective can state it.
  std::function<double(const Config&, double r)> expected;

  std::size_t dimension() const { return space.size(); }

  void validate() const {
    if (space.empty()) throw ObjectiveError("objective '" + name + "' has an empty space");
    if (!(r_min > 0.0 && r_min <= 1.0)) throw ObjectiveError("r_min must lie in (0, 1]");
    if (!model) throw ObjectiveError("objective '" + name + "' has no model");
  }

  // Deterministic in (c, r, seed). Values of inactive parameters are ignored.
  double evaluate(const Config& c, double r, std::uint64_t seed) const {
    if (!(r >= r_min * (1.0 - 1e-9) && r <= 1.0)) {
      throw ObjectiveError("fidelity " + detail::format_double(r) + " outside [r_min, 1]");
    }
    Config canon = space.canonical(c);
    if (auto why = space.check(canon)) throw ObjectiveError("invalid config: " + *why);
    return model(canon, std::min(r, 1.0), seed);
  }
};

}  // namespace smashy
