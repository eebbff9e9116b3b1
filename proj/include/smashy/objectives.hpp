#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smashy/error.hpp"
#include "smashy/objective.hpp"
#include "smashy/param_space.hpp"
#include "smashy/rng.hpp"

namespace smashy {

// Synthetic multifidelity problems. Every instance follows
//   cost(c, r) = f(c) + (1 - r) * bias(c) + sigma0 * sqrt((1 - r) / r) * z,
// with bias >= 0, z ~ N(0, 1) seeded by (seed, c, r), and a planted optimum
// f(c*) = known_optimum.

inline constexpr double kScenarioRMin = 1.0 / 32.0;

struct FidelityModel {
  std::function<double(const Config&)> f;
  std::function<double(const Config&)> bias;
  double sigma0 = 0.0;

  double expected(const Config& c, double r) const { return f(c) + (1.0 - r) * bias(c); }
  double sigma(double r) const { return sigma0 * std::sqrt(std::max(0.0, 1.0 - r) / r); }
};

inline std::uint64_t config_hash(const Config& c) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (double v : config_key(c)) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

inline Objective make_objective(std::string name, ParamSpace space, double r_min,
                                std::shared_ptr<const FidelityModel> m, std::optional<double> optimum,
                                std::optional<Config> optimum_config = std::nullopt) {
  Objective o;
  o.name = std::move(name);
  o.space = std::move(space);
  o.r_min = r_min;
  o.known_optimum = optimum;
  o.optimum_config = std::move(optimum_config);
  o.model = [m](const Config& c, double r, std::uint64_t seed) {
    double y = m->expected(c, r);
    if (r < 1.0 && m->sigma0 > 0.0) {
      Rng rng(mix64(seed ^ mix64(config_hash(c) ^ std::bit_cast<std::uint64_t>(r))));
      y += m->sigma(r) * rng.normal();
    }
    return y;
  };
  o.expected = [m](const Config& c, double r) { return m->expected(c, r); };
  return o;
}

struct InstanceSet {
  std::string name;
  std::uint64_t master_seed = 0;
  std::vector<Objective> instances;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  std::vector<Objective> subset(const std::vector<std::size_t>& ids) const {
    std::vector<Objective> out;
    for (auto i : ids) out.push_back(instances.at(i));
    return out;
  }
};

namespace detail {

// Noise and bias scales are set from the spread of f so that low fidelity
// stays informative (rank correlation with r = 1 well above 0.5).
inline void calibrate(FidelityModel& m, const ParamSpace& space, double bias_scale, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> ys;
  for (int k = 0; k < 256; ++k) ys.push_back(m.f(space.sample_one(rng)));
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double var = 0.0;
  for (double y : ys) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / static_cast<double>(ys.size() - 1));
  m.sigma0 = 0.05 * sd;
  auto raw = m.bias;
  const double scale = bias_scale * sd;
  m.bias = [raw, scale](const Config& c) { return scale * raw(c); };
}

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
inline std::vector<std::vector<double>> random_rotation(std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    while (true) {
      for (auto& v : q[j]) v = rng.normal();
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += q[j][i] * q[k][i];
        for (std::size_t i = 0; i < d; ++i) q[j][i] -= dot * q[k][i];
      }
      double norm = 0.0;
      for (double v : q[j]) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-8) continue;
      for (auto& v : q[j]) v /= norm;
      break;
    }
  }
  return q;
}

inline ParamSpace numeric7_space() {
  return ParamSpace({
      ParamDef::continuous("learning_rate", 1e-4, 1e-1, Scale::log),
      ParamDef::continuous("momentum", 0.1, 0.99),
      ParamDef::continuous("weight_decay", 1e-5, 1e-1, Scale::log),
      ParamDef::continuous("dropout", 0.0, 1.0),
      ParamDef::continuous("width", 16.0, 1024.0, Scale::log),
      ParamDef::continuous("depth", 1.0, 5.0),
      ParamDef::continuous("grad_clip", 0.1, 10.0, Scale::log),
  });
}

// Shifted, rotated, ill-conditioned quadratic plus a Rastrigin ripple, on the
// unit-cube encoding of the space.
inline Objective numeric7_instance(std::size_t index, std::uint64_t seed) {
  auto space = numeric7_space();
  const std::size_t d = space.size();
  Rng rng(seed);
  std::vector<double> center(d);
  for (auto& c : center) c = rng.uniform(0.2, 0.8);
  auto rot = random_rotation(d, rng);
  std::vector<double> weight(d);
  for (std::size_t i = 0; i < d; ++i) weight[i] = std::pow(10.0, static_cast<double>(i) / static_cast<double>(d - 1));
  std::vector<double> bias_dir(d);
  for (auto& v : bias_dir) v = rng.normal();
  const double offset = rng.uniform(0.0, 1.0);
  auto m = std::make_shared<FidelityModel>();
  auto rotated = [space, center, rot](const Config& c) {
    std::vector<double> z(center.size(), 0.0);
    for (std::size_t j = 0; j < z.size(); ++j) {
      for (std::size_t i = 0; i < z.size(); ++i) z[j] += rot[j][i] * (space.to_unit(i, c.values[i]) - center[i]);
    }
    return z;
  };
  m->f = [rotated, weight, offset](const Config& c) {
    const auto z = rotated(c);
    double y = offset;
    for (std::size_t j = 0; j < z.size(); ++j) {
      y += 10.0 * weight[j] * z[j] * z[j] + 1.0 - std::cos(2.0 * std::numbers::pi * 3.0 * z[j]);
    }
    return y;
  };
  m->bias = [space, bias_dir](const Config& c) {
    double a = 0.0;
    for (std::size_t i = 0; i < bias_dir.size(); ++i) a += bias_dir[i] * (space.to_unit(i, c.values[i]) - 0.5);
    return 1.0 + std::tanh(a);
  };
  calibrate(*m, space, 0.3, derive_seed(seed, "calibrate"));
  Config at{std::vector<double>(d), std::vector<bool>(d, true)};
  for (std::size_t i = 0; i < d; ++i) at.values[i] = space.from_unit(i, center[i]);
  return make_objective("numeric7/" + std::to_string(index), std::move(space), kScenarioRMin, m, offset, at);
}

inline constexpr std::array<std::size_t, 6> kBlockSizes{7, 6, 6, 6, 6, 6};

// One selector with six levels, each gating its own block of children.
inline ParamSpace mixed_hier_space() {
  std::vector<std::string> learners;
  for (std::size_t k = 0; k < kBlockSizes.size(); ++k) learners.push_back("learner" + std::to_string(k));
  std::vector<ParamDef> defs{ParamDef::categorical("learner", learners)};
  for (std::size_t k = 0; k < kBlockSizes.size(); ++k) {
    for (std::size_t j = 0; j < kBlockSizes[k]; ++j) {
      const std::string name = "b" + std::to_string(k) + "_p" + std::to_string(j);
      ParamDef p;
      switch (j % 4) {
        case 0: p = ParamDef::continuous(name, 0.0, 1.0); break;
        case 1: p = ParamDef::continuous(name, 1e-3, 10.0, Scale::log); break;
        case 2: p = ParamDef::integer(name, 1, 16 + static_cast<double>(k), Scale::linear); break;
        default: p = ParamDef::categorical(name, {"a", "b", "c", "d"}); break;
      }
      defs.push_back(p.when("learner", {learners[k]}));
    }
  }
  return ParamSpace(std::move(defs));
}

inline Objective mixed_hier_instance(std::size_t index, std::uint64_t seed) {
  auto space = mixed_hier_space();
  Rng rng(seed);
  const std::size_t d = space.size();
  std::vector<double> target(d, 0.0), weight(d, 0.0);
  std::vector<std::vector<double>> table(d);
  for (std::size_t i = 1; i < d; ++i) {
    const auto& p = space[i];
    weight[i] = rng.uniform(1.0, 5.0);
    if (p.kind == ParamKind::categorical) {
      table[i].resize(p.levels.size());
      for (auto& t : table[i]) t = rng.uniform(0.2, 1.0);
      table[i][rng.below(p.levels.size())] = 0.0;
    } else if (p.kind == ParamKind::integer) {
      const auto span = static_cast<std::uint64_t>(p.upper - p.lower) + 1;
      target[i] = space.to_unit(i, p.lower + static_cast<double>(rng.below(span)));
    } else {
      target[i] = rng.uniform(0.1, 0.9);
    }
  }
  std::vector<double> offset(kBlockSizes.size());
  for (auto& o : offset) o = rng.uniform(0.0, 2.0);
  const double best = *std::min_element(offset.begin(), offset.end());
  std::vector<double> bias_dir(d);
  for (auto& v : bias_dir) v = rng.normal();

  auto m = std::make_shared<FidelityModel>();
  m->f = [space, target, weight, table, offset](const Config& c) {
    const auto block = static_cast<std::size_t>(c.values[0]);
    double y = offset[block];
    double prev = 0.0;
    bool have_prev = false;
    for (std::size_t i = 1; i < c.size(); ++i) {
      if (!c.active[i]) continue;
      if (space[i].kind == ParamKind::categorical) {
        y += weight[i] * table[i][static_cast<std::size_t>(c.values[i])];
        continue;
      }
      const double dev = space.to_unit(i, c.values[i]) - target[i];
      y += weight[i] * dev * dev;
      if (have_prev) y += 2.0 * (dev - prev) * (dev - prev);
      prev = dev;
      have_prev = true;
    }
    return y;
  };
  m->bias = [space, bias_dir](const Config& c) {
    double a = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.active[i]) a += bias_dir[i] * (space.to_unit(i, c.values[i]) - 0.5);
    }
    return 1.0 + std::tanh(a);
  };
  calibrate(*m, space, 0.3, derive_seed(seed, "calibrate"));
  Config at{std::vector<double>(d, kInactive), std::vector<bool>(d, false)};
  at.values[0] = static_cast<double>(std::min_element(offset.begin(), offset.end()) - offset.begin());
  at.active[0] = true;
  for (std::size_t i = 1; i < d; ++i) {
    if (!space.condition_met(at, i)) continue;
    at.active[i] = true;
    if (space[i].kind == ParamKind::categorical) {
      at.values[i] = static_cast<double>(std::min_element(table[i].begin(), table[i].end()) - table[i].begin());
    } else {
      at.values[i] = space.from_unit(i, target[i]);
    }
  }
  return make_objective("mixed-hier/" + std::to_string(index), std::move(space), kScenarioRMin, m, best, at);
}

// 34 categorical axes: 10 roots and 24 children, each child conditioned on a
// subset of an earlier parameter's levels. The structure is fixed; instances
// differ in their cost tables.
inline ParamSpace categorical_space() {
  Rng rng(derive_seed(0x5eed, "categorical-structure"));
  std::vector<ParamDef> defs;
  for (std::size_t i = 0; i < 34; ++i) {
    const std::size_t n_levels = 2 + rng.below(4);
    std::vector<std::string> levels;
    for (std::size_t l = 0; l < n_levels; ++l) levels.push_back("v" + std::to_string(l));
    auto p = ParamDef::categorical("c" + std::to_string(i), levels);
    if (i >= 10) {
      const auto& parent = defs[rng.below(i)];
      const std::size_t keep = 1 + rng.below(parent.levels.size() - 1);
      std::vector<std::string> allowed(parent.levels.begin(), parent.levels.end());
      for (std::size_t k = allowed.size(); k > 1; --k) std::swap(allowed[k - 1], allowed[rng.below(k)]);
      allowed.resize(keep);
      p = p.when(parent.name, allowed);
    }
    defs.push_back(std::move(p));
  }
  return ParamSpace(std::move(defs));
}

inline Objective categorical_instance(std::size_t index, std::uint64_t seed) {
  auto space = categorical_space();
  Rng rng(seed);
  const std::size_t d = space.size();
  const Config planted = space.sample_one(rng);
  std::vector<std::size_t> star(d);
  for (std::size_t i = 0; i < d; ++i) {
    star[i] = planted.active[i] ? static_cast<std::size_t>(planted.values[i]) : rng.below(space.num_levels(i));
  }
  std::vector<std::vector<double>> unary(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double w = i < 10 ? 2.0 : 1.0;
    unary[i].resize(space.num_levels(i));
    for (auto& u : unary[i]) u = w * rng.uniform(0.1, 1.0);
    unary[i][star[i]] = 0.0;
  }
  struct Pair {
    std::size_t a, b;
    double w;
    std::vector<double> t;  // levels(a) x levels(b)
  };
  std::vector<Pair> pairs;
  for (int k = 0; k < 48; ++k) {
    const std::size_t a = rng.below(d);
    std::size_t b = rng.below(d - 1);
    if (b >= a) ++b;
    Pair p{a, b, rng.uniform(0.2, 1.0), {}};
    const std::size_t la = space.num_levels(a), lb = space.num_levels(b);
    p.t.resize(la * lb);
    for (auto& v : p.t) v = rng.uniform(0.0, 1.0);
    p.t[star[a] * lb + star[b]] = 0.0;
    pairs.push_back(std::move(p));
  }
  const double offset = rng.uniform(0.0, 1.0);
  std::vector<double> bias_w(d);
  for (auto& v : bias_w) v = rng.uniform(0.0, 1.0);

  auto m = std::make_shared<FidelityModel>();
  m->f = [space, unary, pairs, offset](const Config& c) {
    double y = offset;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.active[i]) y += unary[i][static_cast<std::size_t>(c.values[i])];
    }
    for (const auto& p : pairs) {
      if (!c.active[p.a] || !c.active[p.b]) continue;
      const auto la = static_cast<std::size_t>(c.values[p.a]);
      const auto lb = static_cast<std::size_t>(c.values[p.b]);
      y += p.w * p.t[la * space.num_levels(p.b) + lb];
    }
    return y;
  };
  m->bias = [bias_w](const Config& c) {
    double a = 0.0, n = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c.active[i]) continue;
      a += bias_w[i] * (static_cast<std::size_t>(c.values[i]) % 2 == 0 ? 1.0 : 0.0);
      n += 1.0;
    }
    return n > 0 ? 0.5 + a / n : 0.5;
  };
  calibrate(*m, space, 0.3, derive_seed(seed, "calibrate"));
  return make_objective("categorical/" + std::to_string(index), std::move(space), kScenarioRMin, m, offset, planted);
}

}  // namespace detail

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"numeric7", "mixed-hier", "categorical"};
  return names;
}

inline std::size_t default_instance_count(std::string_view name) {
  if (name == "numeric7") return 10;
  if (name == "mixed-hier") return 12;
  if (name == "categorical") return 1;
  throw SpecError("unknown scenario '" + std::string(name) + "'");
}

// Instances are derived from master_seed. The last `test` instances form the
// test split: 2 of 10 for numeric7, 4 of 12 for mixed-hier; a single
// categorical instance is test-only. Other counts keep a 1/5 (numeric7) or
// 1/3 (mixed-hier) test share.
inline InstanceSet make_scenario(std::string_view name, std::size_t n_instances = 0,
                                 std::uint64_t master_seed = 1) {
  const std::size_t n = n_instances ? n_instances : default_instance_count(name);
  InstanceSet set;
  set.name = std::string(name);
  set.master_seed = master_seed;
  Objective (*make)(std::size_t, std::uint64_t) = nullptr;
  std::size_t n_test = 0;
  if (name == "numeric7") {
    make = detail::numeric7_instance;
    n_test = std::max<std::size_t>(1, n / 5);
  } else if (name == "mixed-hier") {
    make = detail::mixed_hier_instance;
    n_test = std::max<std::size_t>(1, n / 3);
  } else if (name == "categorical") {
    make = detail::categorical_instance;
    n_test = n == 1 ? 1 : std::max<std::size_t>(1, n / 5);
  } else {
    throw SpecError("unknown scenario '" + std::string(name) + "'");
  }
  if (name != "categorical" && n < 2) throw SpecError("scenario '" + std::string(name) + "' needs at least 2 instances");
  for (std::size_t i = 0; i < n; ++i) {
    set.instances.push_back(make(i, derive_seed(master_seed, name, {i})));
  }
  for (std::size_t i = 0; i < n; ++i) (i + n_test < n ? set.train : set.test).push_back(i);
  return set;
}

}  // namespace smashy
