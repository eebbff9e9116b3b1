#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smashy/error.hpp"
#include "smashy/objective.hpp"
#include "smashy/optimizer.hpp"
#include "smashy/param_space.hpp"
#include "smashy/regret.hpp"
#include "smashy/rng.hpp"
#include "smashy/surrogate.hpp"

namespace smashy {

// -- search space over optimizer configurations ---------------------------------

inline std::vector<ParamDef> optimizer_param_defs() {
  return {
      ParamDef::integer("mu", 2, 200, Scale::log),
      ParamDef::categorical("batch_method", {"equal", "HB"}),
      ParamDef::continuous("eta_fid", std::pow(2.0, 0.25), 16.0, Scale::loglog),
      ParamDef::continuous("eta_surv", 1.0, kInfinity, Scale::reciprocal),
      ParamDef::categorical("filter_method", {"tournament", "progressive"}),
      ParamDef::categorical("sample", {"uniform", "KDE"}),
      ParamDef::categorical("surrogate_learner", {"KNN1", "KKNN7", "TPE", "RF"}),
      ParamDef::integer("n_trn_0", 1, 10, Scale::log),
      ParamDef::integer("n_trn_1", 1, 10, Scale::log),
      ParamDef::continuous("ns0_0", 1.0, 1000.0, Scale::log),
      ParamDef::continuous("ns0_1", 1.0, 1000.0, Scale::log),
      ParamDef::continuous("ns1_0", 1.0, 1000.0, Scale::log),
      ParamDef::continuous("ns1_1", 1.0, 1000.0, Scale::log),
      ParamDef::continuous("rho_0", 0.0, 1.0),
      ParamDef::continuous("rho_1", 0.0, 1.0),
      ParamDef::categorical("filter_mb", {"TRUE", "FALSE"}),
      ParamDef::categorical("rho_random", {"TRUE", "FALSE"}),
  };
}

enum class Variant { gamma_star, g1, g2, g3, g4, g5, g6, g7 };

inline std::string_view to_string(Variant v) {
  static constexpr std::string_view names[] = {"gamma_star", "g1", "g2", "g3", "g4", "g5", "g6", "g7"};
  return names[static_cast<int>(v)];
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Variant::g7); ++i) {
    if (to_string(static_cast<Variant>(i)) == s) return static_cast<Variant>(i);
  }
  return std::nullopt;
}

// Whether the variant is obtained by (constrained) optimization rather than
// by substituting values into an optimized configuration.
inline bool is_optimized(Variant v) {
  return v == Variant::gamma_star || v == Variant::g2 || v == Variant::g3;
}

// Fixings (field -> value token) and ties (follower -> leader) of a variant.
struct Restriction {
  std::map<std::string, std::string> fixed;
  std::vector<std::pair<std::string, std::string>> ties;
  double budget_factor = 1.0;
};

inline Restriction restriction(Variant v, std::optional<SurrogateKind> surrogate = {}) {
  Restriction r;
  switch (v) {
    case Variant::gamma_star:
      break;
    case Variant::g1:
      r.fixed["eta_fid"] = "inf";
      break;
    case Variant::g2:
      r.ties = {{"n_trn_1", "n_trn_0"}, {"ns0_1", "ns0_0"}, {"ns1_1", "ns1_0"}, {"rho_1", "rho_0"}};
      break;
    case Variant::g3:
      r.fixed["filter_method"] = "tournament";
      r.fixed["n_trn_0"] = "1";
      r.fixed["n_trn_1"] = "1";
      r.ties = {{"ns0_1", "ns0_0"}, {"ns1_0", "ns0_0"}, {"ns1_1", "ns0_0"}, {"rho_1", "rho_0"}};
      break;
    case Variant::g4:
      if (!surrogate) throw SpecError("variant g4 needs a surrogate learner to substitute");
      r.fixed["batch_method"] = "equal";
      r.fixed["surrogate_learner"] = std::string(to_string(*surrogate));
      break;
    case Variant::g5:
    case Variant::g6:
      r.fixed["batch_method"] = "equal";
      r.fixed["rho_0"] = "0";
      r.fixed["rho_1"] = "0";
      if (v == Variant::g6) r.fixed["sample"] = "uniform";
      break;
    case Variant::g7:
      r.fixed["batch_method"] = "equal";
      r.fixed["mu"] = "32";
      r.budget_factor = 4.0;
      break;
  }
  return r;
}

// Meta search space: the free dimensions as a ParamSpace plus the fixings and
// ties that complete a configuration into an OptimizerSpec.
class MetaSearchSpace {
public:
  MetaSearchSpace() : MetaSearchSpace(Restriction{}) {}

  explicit MetaSearchSpace(Restriction r) : restriction_(std::move(r)), free_(build_free()) {}

  const ParamSpace& space() const { return free_; }
  const Restriction& restriction() const { return restriction_; }
  std::size_t dimension() const { return free_.size(); }

  OptimizerSpec to_spec(const Config& c) const {
    OptimizerSpec s;
    for (std::size_t i = 0; i < free_.size(); ++i) set_spec_field(s, free_[i].name, token(free_, i, c.values[i]));
    apply(s);
    s.validate();
    return s;
  }

  // Applies fixings and ties to an arbitrary spec.
  void apply(OptimizerSpec& s) const {
    for (const auto& [k, v] : restriction_.fixed) set_spec_field(s, k, v);
    for (const auto& [follower, leader] : restriction_.ties) set_spec_field(s, follower, field(s, leader));
  }

  // Free-coordinate config matching a spec (values outside the space are
  // clamped onto its bounds).
  Config from_spec(const OptimizerSpec& s) const {
    Config c{std::vector<double>(free_.size(), kInactive), std::vector<bool>(free_.size(), true)};
    for (std::size_t i = 0; i < free_.size(); ++i) {
      const auto& p = free_[i];
      const auto v = field(s, p.name);
      if (p.kind == ParamKind::categorical) {
        const auto idx = p.level_index(v);
        if (!idx) throw SpecError("value '" + v + "' of '" + p.name + "' is not a level");
        c.values[i] = static_cast<double>(*idx);
      } else {
        c.values[i] = std::clamp(detail::parse_double(v), p.lower, p.upper);
      }
    }
    return c;
  }

private:
  static std::string field(const OptimizerSpec& s, const std::string& name) {
    for (const auto& [k, v] : spec_fields(s)) {
      if (k == name) return v;
    }
    throw SpecError("unknown optimizer field '" + name + "'");
  }

  static std::string token(const ParamSpace& space, std::size_t i, double x) {
    const auto& p = space[i];
    if (p.kind == ParamKind::categorical) return p.levels[static_cast<std::size_t>(x)];
    if (p.kind == ParamKind::integer) return std::to_string(static_cast<long long>(std::llround(x)));
    return detail::format_double(x);
  }

  ParamSpace build_free() const {
    std::vector<ParamDef> defs;
    for (auto& p : optimizer_param_defs()) {
      if (restriction_.fixed.count(p.name)) continue;
      const bool follower = std::any_of(restriction_.ties.begin(), restriction_.ties.end(),
                                        [&](const auto& t) { return t.first == p.name; });
      if (!follower) defs.push_back(std::move(p));
    }
    return ParamSpace(std::move(defs));
  }

  Restriction restriction_;
  ParamSpace free_;
};

// Composes a variant's restriction with the space's existing one.
inline MetaSearchSpace restrict(const MetaSearchSpace& base, Variant v,
                                std::optional<SurrogateKind> surrogate = {}) {
  Restriction r = base.restriction();
  const Restriction add = restriction(v, surrogate);
  for (const auto& [k, val] : add.fixed) r.fixed[k] = val;
  for (const auto& t : add.ties) {
    if (std::find(r.ties.begin(), r.ties.end(), t) == r.ties.end()) r.ties.push_back(t);
  }
  r.budget_factor = std::max(r.budget_factor, add.budget_factor);
  return MetaSearchSpace(std::move(r));
}

// Non-optimized variants: the variant's modifications substituted into a
// given configuration.
inline OptimizerSpec substitute(OptimizerSpec s, Variant v, std::optional<SurrogateKind> surrogate = {}) {
  MetaSearchSpace(restriction(v, surrogate)).apply(s);
  s.validate();
  return s;
}

// -- meta objective -----------------------------------------------------------------

struct MetaEvalResult {
  OptimizerSpec spec;
  std::vector<double> final_costs;  // incumbent cost per instance
  std::vector<double> normalized;   // normalized regret per instance
  double aggregate = 0.0;           // mean of normalized
  double wallclock_s = 0.0;
};

struct MetaOptions {
  double budget_mult = 30.0;  // budget per instance, in multiples of its dimension
  double budget_factor = 1.0;
  std::size_t threads = 1;    // concurrent instance runs
};

// Runs the optimizer once per instance with budget budget_mult * d and
// averages the normalized regret of the final incumbents.
inline MetaEvalResult meta_objective(const OptimizerSpec& spec, const std::vector<Objective>& instances,
                                     const std::vector<InstanceRefs>& refs, std::uint64_t seed,
                                     const MetaOptions& opts = {}) {
  if (instances.empty() || instances.size() != refs.size()) {
    throw SpecError("meta objective needs one reference pair per instance");
  }
  const auto start = std::chrono::steady_clock::now();
  MetaEvalResult res;
  res.spec = spec;
  res.final_costs.assign(instances.size(), 0.0);
  auto run_one = [&](std::size_t i) {
    OptimizerSpec s = spec;
    s.budget = opts.budget_mult * opts.budget_factor * static_cast<double>(instances[i].dimension());
    const auto archive = run(s, instances[i], derive_seed(seed, "instance", {i}));
    res.final_costs[i] = incumbent(archive)->cost;
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, instances.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < instances.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < instances.size(); i += threads) run_one(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    res.normalized.push_back(normalized_regret(res.final_costs[i], refs[i]));
    res.aggregate += res.normalized.back();
  }
  res.aggregate /= static_cast<double>(instances.size());
  res.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

// -- generic tuner ------------------------------------------------------------------

enum class TuneMethod { random, bo_lcb };

inline std::string_view to_string(TuneMethod m) { return m == TuneMethod::random ? "random" : "bo_lcb"; }
inline std::optional<TuneMethod> parse_tune_method(std::string_view s) {
  if (s == "random") return TuneMethod::random;
  if (s == "bo_lcb") return TuneMethod::bo_lcb;
  return std::nullopt;
}

struct TuneOptions {
  double kappa = 1.0;
  std::size_t candidates = 1000;
  std::size_t random_every = 3;  // every k-th model-based step is uniform instead
  ForestOptions forest{};
};

struct TuneRecord {
  Config config;
  double value = 0.0;
  bool random = true;  // drawn uniformly rather than proposed by the model
};

struct TuneResult {
  std::vector<TuneRecord> records;
  std::size_t best = 0;  // earliest minimum
};

inline std::size_t initial_design_size(std::size_t dim, std::size_t n) {
  return std::max<std::size_t>(1, std::min(2 * dim + 1, n / 2));
}

// Minimizes f over `space` with n evaluations. bo_lcb: uniform initial
// design, then argmin over uniform candidates of mean - kappa * sd of a
// random forest fit to all results so far (sd across trees).
inline TuneResult tune(const ParamSpace& space, const std::function<double(const Config&, std::size_t)>& f,
                       std::size_t n, TuneMethod method, std::uint64_t seed, const TuneOptions& opts = {}) {
  if (n == 0) throw SpecError("tune needs at least one evaluation");
  Rng rng(derive_seed(seed, "tune"));
  TuneResult res;
  const std::size_t init = method == TuneMethod::random ? n : initial_design_size(space.size(), n);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t k = 0; k < n; ++k) {
    Config c;
    bool random = true;
    const std::size_t step = k + 1 - init;  // 1-based model step once k >= init
    if (k < init || (opts.random_every > 0 && step % opts.random_every == 0)) {
      c = space.sample_one(rng);
    } else {
      RandomForest forest;
      forest.fit(x, y, derive_seed(seed, "forest", {k}), opts.forest);
      std::optional<Config> best;
      double best_lcb = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < opts.candidates; ++j) {
        Config cand = space.sample_one(rng);
        const auto [m, sd] = forest.predict_mean_sd(space.encode(cand));
        const double lcb = m - opts.kappa * sd;
        if (!best || lcb < best_lcb) {
          best = std::move(cand);
          best_lcb = lcb;
        }
      }
      c = std::move(*best);
      random = false;
    }
    const double v = f(c, k);
    x.push_back(space.encode(c));
    y.push_back(v);
    if (res.records.empty() || v < res.records[res.best].value) res.best = res.records.size();
    res.records.push_back({std::move(c), v, random});
  }
  return res;
}

// -- tuning the optimizer -----------------------------------------------------------

struct MetaRecord {
  std::size_t repeat = 0;
  std::size_t index = 0;
  bool random = true;
  Config config;
  MetaEvalResult result;
};

struct MetaTuneResult {
  OptimizerSpec best;
  double best_aggregate = 0.0;
  std::vector<MetaRecord> archive;  // all repeats, pooled
};

struct MetaTuneOptions {
  MetaOptions eval{};
  std::size_t repeats = 1;
  TuneOptions tune{};
};

// Tunes the optimizer on training instances. Repeats run independently and
// their archives are pooled; the best aggregate over the pool wins.
inline MetaTuneResult tune_optimizer(const MetaSearchSpace& meta, const std::vector<Objective>& train,
                                     const std::vector<InstanceRefs>& refs, std::size_t n, TuneMethod method,
                                     std::uint64_t seed, const MetaTuneOptions& opts = {}) {
  MetaTuneResult out;
  MetaOptions eval = opts.eval;
  eval.budget_factor *= meta.restriction().budget_factor;
  std::optional<std::size_t> best;
  for (std::size_t rep = 0; rep < std::max<std::size_t>(1, opts.repeats); ++rep) {
    const std::uint64_t rep_seed = derive_seed(seed, "repeat", {rep});
    std::vector<MetaEvalResult> results;
    auto f = [&](const Config& c, std::size_t k) {
      results.push_back(meta_objective(meta.to_spec(c), train, refs, derive_seed(rep_seed, "meta-eval", {k}), eval));
      return results.back().aggregate;
    };
    const auto tr = tune(meta.space(), f, n, method, rep_seed, opts.tune);
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
      out.archive.push_back({rep, k, tr.records[k].random, tr.records[k].config, std::move(results[k])});
      if (!best || out.archive.back().result.aggregate < out.archive[*best].result.aggregate) {
        best = out.archive.size() - 1;
      }
    }
  }
  out.best = out.archive[*best].result.spec;
  out.best_aggregate = out.archive[*best].result.aggregate;
  return out;
}

inline nlohmann::ordered_json meta_record_to_json(const MetaRecord& r) {
  nlohmann::ordered_json j;
  j["repeat"] = r.repeat;
  j["index"] = r.index;
  j["proposal"] = r.random ? "random" : "model";
  j["gamma"] = spec_to_json(r.result.spec);
  j["aggregate"] = detail::number_json(r.result.aggregate);
  nlohmann::ordered_json costs = nlohmann::ordered_json::array(), norm = nlohmann::ordered_json::array();
  for (double c : r.result.final_costs) costs.push_back(detail::number_json(c));
  for (double c : r.result.normalized) norm.push_back(detail::number_json(c));
  j["final_costs"] = std::move(costs);
  j["normalized"] = std::move(norm);
  j["wallclock_s"] = r.result.wallclock_s;
  return j;
}

inline std::string meta_archive_to_jsonl(const std::vector<MetaRecord>& archive) {
  std::string out;
  for (const auto& r : archive) out += meta_record_to_json(r).dump() + '\n';
  return out;
}

// One row of the best-configuration table: which variant, on which scenario.
struct GammaRow {
  std::string variant;
  std::string scenario;
  OptimizerSpec spec;
  double aggregate = 0.0;
};

// CSV: variant, scenario, aggregate, then every optimizer field.
inline std::string gamma_table(const std::vector<GammaRow>& rows) {
  std::string out = "variant,scenario,aggregate";
  for (const auto& [k, v] : spec_fields(OptimizerSpec{})) out += ',' + k;
  out += '\n';
  for (const auto& r : rows) {
    out += r.variant + ',' + r.scenario + ',' + detail::format_double(r.aggregate);
    for (const auto& [k, v] : spec_fields(r.spec)) out += ',' + v;
    out += '\n';
  }
  return out;
}

// Two-dimensional toy landscape (Branin) for checking the tuner itself.
inline ParamSpace branin_space() {
  return ParamSpace({ParamDef::continuous("x1", -5.0, 10.0), ParamDef::continuous("x2", 0.0, 15.0)});
}

inline double branin(const Config& c) {
  const double x1 = c.values[0], x2 = c.values[1];
  const double pi = std::acos(-1.0);
  const double b = 5.1 / (4.0 * pi * pi), cc = 5.0 / pi, t = 1.0 / (8.0 * pi);
  const double u = x2 - b * x1 * x1 + cc * x1 - 6.0;
  return u * u + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

}  // namespace smashy
