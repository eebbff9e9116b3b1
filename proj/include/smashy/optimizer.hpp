#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "smashy/archive.hpp"
#include "smashy/error.hpp"
#include "smashy/objective.hpp"
#include "smashy/param_space.hpp"
#include "smashy/rng.hpp"
#include "smashy/sampler.hpp"
#include "smashy/surrogate.hpp"

namespace smashy {

enum class BatchMethod { equal, hb };

inline std::string_view to_string(BatchMethod m) { return m == BatchMethod::equal ? "equal" : "HB"; }
inline std::optional<BatchMethod> parse_batch_method(std::string_view s) {
  if (s == "equal") return BatchMethod::equal;
  if (s == "HB") return BatchMethod::hb;
  return std::nullopt;
}

inline const double kMinEtaFid = std::pow(2.0, 0.25);
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Full configuration of the optimizer. Fields suffixed _0/_1 are the values
// at expended budget fraction t = 0 and t = 1.
struct OptimizerSpec {
  std::size_t mu = 27;  // first-bracket batch size
  BatchMethod batch_method = BatchMethod::hb;
  double eta_fid = 3.0;   // +inf: single fidelity stage
  double eta_surv = 3.0;  // +inf: keep one survivor
  FilterMethod filter_method = FilterMethod::tournament;
  GeneratingKind sample = GeneratingKind::uniform;
  SurrogateKind surrogate_learner = SurrogateKind::knn1;
  std::size_t n_trn_0 = 1;
  std::size_t n_trn_1 = 1;
  double ns0_0 = 1.0;
  double ns0_1 = 1.0;
  double ns1_0 = 1.0;
  double ns1_1 = 1.0;
  double rho_0 = 1.0;
  double rho_1 = 1.0;
  bool filter_mb = true;
  bool rho_random = false;

  double budget = 30.0;  // B, in full-fidelity evaluations
  bool refill = true;    // equal batches: top up after elimination
  double good_fraction = 0.15;
  std::optional<std::size_t> min_good;
  double penalty = 1e12;  // cost recorded when an evaluation fails

  friend bool operator==(const OptimizerSpec&, const OptimizerSpec&) = default;

  void validate() const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (mu < 1) throw SpecError("mu must be at least 1");
    if (!(eta_fid >= kMinEtaFid * (1.0 - 1e-12))) throw SpecError("eta_fid must be >= 2^(1/4)");
    if (!(eta_surv >= 1.0)) throw SpecError("eta_surv must be >= 1");
    if (n_trn_0 < 1 || n_trn_0 > 10 || n_trn_1 < 1 || n_trn_1 > 10) {
      throw SpecError("n_trn endpoints must lie in {1..10}");
    }
    for (double ns : {ns0_0, ns0_1, ns1_0, ns1_1}) {
      if (!in(ns, 1.0, 1000.0)) throw SpecError("Ns endpoints must lie in [1, 1000]");
    }
    if (!in(rho_0, 0.0, 1.0) || !in(rho_1, 0.0, 1.0)) throw SpecError("rho endpoints must lie in [0, 1]");
    if (!(budget > 0.0) || !std::isfinite(budget)) throw SpecError("budget must be positive and finite");
    if (!(good_fraction > 0.0 && good_fraction < 1.0)) throw SpecError("good_fraction must lie in (0, 1)");
    if (!std::isfinite(penalty)) throw SpecError("penalty must be finite");
  }
};

enum class InterpolationMode { linear, geometric };

inline double interpolate_param(double v0, double v1, double t, InterpolationMode mode) {
  if (!(t >= 0.0 && t <= 1.0)) throw SpecError("interpolation fraction must lie in [0, 1]");
  if (mode == InterpolationMode::linear) return v0 + t * (v1 - v0);
  if (!(v0 > 0.0 && v1 > 0.0)) throw SpecError("geometric interpolation needs positive endpoints");
  if (v0 == v1) return v0;
  return std::pow(v0, 1.0 - t) * std::pow(v1, t);
}

// Sample settings materialized at budget fraction t: rho linear, Ns and
// n_trn geometric (n_trn rounded, at least 1).
inline SampleSpec sample_spec_at(const OptimizerSpec& spec, double t) {
  SampleSpec s;
  s.filter_method = spec.filter_method;
  s.rho = std::clamp(interpolate_param(spec.rho_0, spec.rho_1, t, InterpolationMode::linear), 0.0, 1.0);
  s.ns0 = interpolate_param(spec.ns0_0, spec.ns0_1, t, InterpolationMode::geometric);
  s.ns1 = interpolate_param(spec.ns1_0, spec.ns1_1, t, InterpolationMode::geometric);
  const double n_trn = interpolate_param(static_cast<double>(spec.n_trn_0),
                                         static_cast<double>(spec.n_trn_1), t,
                                         InterpolationMode::geometric);
  s.n_trn = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n_trn + 0.5)));
  s.rho_random = spec.rho_random;
  s.surrogate = spec.surrogate_learner;
  s.filter_mb = spec.filter_mb;
  s.generating = spec.sample;
  s.good_fraction = spec.good_fraction;
  s.min_good = spec.min_good;
  return s;
}

// s = floor(-log_eta(r_min)) + 1.
inline std::size_t stage_count(double eta_fid, double r_min) {
  if (!(r_min > 0.0 && r_min <= 1.0)) throw SpecError("r_min must lie in (0, 1]");
  if (!(eta_fid > 1.0)) throw SpecError("eta_fid must exceed 1");
  if (r_min >= 1.0 || std::isinf(eta_fid)) return 1;
  const double steps = -std::log(r_min) / std::log(eta_fid);
  return static_cast<std::size_t>(std::floor(steps + 1e-9)) + 1;
}

// Fidelity of stage j (0-based) in bracket b (1-based): eta^(b - s + j).
inline double stage_fidelity(double eta_fid, std::size_t s, std::size_t b, std::size_t j) {
  const auto down = static_cast<long>(s) - static_cast<long>(b) - static_cast<long>(j);
  if (down <= 0) return 1.0;
  return std::pow(eta_fid, -static_cast<double>(down));
}

// Survivor count after one elimination step: round(n / eta_surv), at least 1.
inline std::size_t survivors(std::size_t n, double eta_surv) {
  const double k = std::floor(static_cast<double>(n) / eta_surv + 0.5);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, std::max<std::size_t>(n, 1));
}

// Initial batch sizes mu(1..s) for HB brackets. Bracket b's cost per
// initial member under geometric survival is
//   u(b) = sum_{j=0}^{s-b} eta_surv^-j * eta_fid^(b-s+j),
// and mu(b) = ceil(mu1 * u(1) / u(b)) makes brackets spend about the same
// budget. For eta_surv == eta_fid = eta this is mu1 * s eta^(1-b)/(s-b+1),
// i.e. Hyperband's ceil(s eta^(s-b)/(s-b+1)) scaled to mu(1) = mu1.
inline std::vector<std::size_t> hb_batch_sizes(std::size_t mu1, std::size_t s, double eta_surv,
                                               double eta_fid) {
  if (s == 0) throw SpecError("stage count must be positive");
  auto unit_cost = [&](std::size_t b) {
    double u = 0.0;
    for (std::size_t j = 0; j + b <= s; ++j) {
      const double keep = std::isinf(eta_surv) ? (j == 0 ? 1.0 : 0.0) : std::pow(eta_surv, -static_cast<double>(j));
      u += keep * stage_fidelity(eta_fid, s, b, j);
    }
    return u;
  };
  const double target = static_cast<double>(mu1) * unit_cost(1);
  std::vector<std::size_t> mu(s);
  mu[0] = mu1;
  for (std::size_t b = 2; b <= s; ++b) {
    const double x = target / unit_cost(b);
    const double c = std::ceil(x - 1e-9 * std::max(1.0, x));
    mu[b - 1] = std::max<std::size_t>(1, static_cast<std::size_t>(c));
  }
  return mu;
}

struct BracketPlan {
  std::size_t bracket = 1;
  std::vector<double> fidelities;
  std::vector<std::size_t> stage_sizes;
};

struct Schedule {
  std::size_t stages = 1;
  std::vector<std::size_t> mu;
  std::vector<BracketPlan> brackets;
};

// Static evaluation plan per bracket. Under batch_method=equal there is one
// repeating bracket whose stages all hold mu (mu shrinking by elimination
// when refill is off).
inline Schedule plan_schedule(const OptimizerSpec& spec, double r_min) {
  Schedule sc;
  sc.stages = stage_count(spec.eta_fid, r_min);
  const std::size_t s = sc.stages;
  if (spec.batch_method == BatchMethod::hb) {
    sc.mu = hb_batch_sizes(spec.mu, s, spec.eta_surv, spec.eta_fid);
  } else {
    sc.mu.assign(1, spec.mu);
  }
  for (std::size_t b = 1; b <= sc.mu.size(); ++b) {
    BracketPlan plan;
    plan.bracket = b;
    std::size_t n = sc.mu[b - 1];
    for (std::size_t j = 0; j + b <= s; ++j) {
      plan.fidelities.push_back(stage_fidelity(spec.eta_fid, s, b, j));
      plan.stage_sizes.push_back(n);
      const std::size_t kept = survivors(n, spec.eta_surv);
      n = (spec.batch_method == BatchMethod::equal && spec.refill) ? spec.mu : kept;
    }
    sc.brackets.push_back(std::move(plan));
  }
  return sc;
}

struct BatchMember {
  Config config;
  double cost = 0.0;
  std::size_t archive_index = 0;
};

// Keeps the round(|C| / eta_surv) (at least 1) members with the lowest latest
// cost, ties toward the earlier archive entry; survivors come back best first.
inline std::vector<BatchMember> select_top(std::vector<BatchMember> batch, double eta_surv) {
  if (batch.empty()) throw SpecError("select_top on an empty batch");
  const std::size_t k = survivors(batch.size(), eta_surv);
  std::stable_sort(batch.begin(), batch.end(), [](const BatchMember& a, const BatchMember& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.archive_index < b.archive_index;
  });
  batch.resize(k);
  return batch;
}

struct RunOptions {
  std::size_t threads = 1;  // concurrent evaluations within a stage
};

namespace detail {

inline double safe_evaluate(const Objective& obj, const Config& c, double r, std::uint64_t seed,
                            double penalty) {
  try {
    const double y = obj.evaluate(c, r, seed);
    return std::isfinite(y) ? y : penalty;
  } catch (const ObjectiveError&) {
    throw;
  } catch (const std::exception&) {
    return penalty;
  }
}

inline std::vector<double> evaluate_stage(const Objective& obj, const std::vector<BatchMember>& batch,
                                          double r, const std::vector<std::uint64_t>& seeds,
                                          double penalty, std::size_t threads) {
  std::vector<double> out(batch.size());
  threads = std::max<std::size_t>(1, std::min(threads, batch.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = safe_evaluate(obj, batch[i].config, r, seeds[i], penalty);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < batch.size(); i += threads) {
          out[i] = safe_evaluate(obj, batch[i].config, r, seeds[i], penalty);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace detail

// Multifidelity optimization loop. Starts a batch whenever the previous one
// reached r = 1, otherwise raises the fidelity by eta_fid and keeps the best
// 1/eta_surv of the batch (refilling to mu under equal batches). Every stage
// is evaluated, appended to the archive in member order, and charged
// r * |C| / B to the budget fraction t. Stops once t >= 1.
inline Archive run(const OptimizerSpec& spec, const Objective& obj, std::uint64_t seed,
                   const RunOptions& opts = {}) {
  spec.validate();
  obj.validate();
  const std::size_t s = stage_count(spec.eta_fid, obj.r_min);
  const std::vector<std::size_t> mu = spec.batch_method == BatchMethod::hb
                                          ? hb_batch_sizes(spec.mu, s, spec.eta_surv, spec.eta_fid)
                                          : std::vector<std::size_t>{spec.mu};
  Rng rng(derive_seed(seed, "sample"));
  Archive archive;
  std::vector<BatchMember> batch;
  double spent = 0.0;
  std::size_t next_bracket = 1, bracket = 1, stage = 0, stages_in_batch = 0;
  std::int64_t batch_id = -1;
  std::uint64_t evaluations = 0;

  while (spent < spec.budget) {
    const double t = spent / spec.budget;
    double r;
    if (batch.empty() || stage + 1 >= stages_in_batch) {
      bracket = next_bracket;
      stage = 0;
      stages_in_batch = s - bracket + 1;
      r = stage_fidelity(spec.eta_fid, s, bracket, 0);
      batch.clear();
      for (auto& c : sample(obj.space, archive, mu[bracket - 1], r, sample_spec_at(spec, t), obj.r_min, rng)) {
        batch.push_back({std::move(c), 0.0, 0});
      }
      ++batch_id;
      if (spec.batch_method == BatchMethod::hb) next_bracket = next_bracket % s + 1;
    } else {
      ++stage;
      r = stage_fidelity(spec.eta_fid, s, bracket, stage);
      batch = select_top(std::move(batch), spec.eta_surv);
      if (spec.batch_method == BatchMethod::equal && spec.refill && batch.size() < mu[0]) {
        for (auto& c : sample(obj.space, archive, mu[0] - batch.size(), r, sample_spec_at(spec, t), obj.r_min, rng)) {
          batch.push_back({std::move(c), 0.0, 0});
        }
      }
    }

    std::vector<std::uint64_t> seeds(batch.size());
    for (auto& sd : seeds) sd = derive_seed(seed, "eval", {evaluations++});
    const auto costs = detail::evaluate_stage(obj, batch, r, seeds, spec.penalty, opts.threads);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch[i].cost = costs[i];
      batch[i].archive_index = archive.size();
      archive.append({batch[i].config, r, costs[i], t, batch_id,
                      static_cast<std::int64_t>(bracket), static_cast<std::int64_t>(stage), seeds[i]});
    }
    spent += r * static_cast<double>(batch.size());
  }
  return archive;
}

// Final answer: best full-fidelity record if one exists, else best overall.
inline std::optional<EvalRecord> incumbent(const Archive& a) {
  if (auto full = a.best(true)) return full;
  return a.best(false);
}

// -- spec file format ----------------------------------------------------------
//
// Line oriented like the space format: `<key> <value>` per line, '#' starts a
// comment. Keys absent from the file keep their defaults. Booleans are TRUE /
// FALSE; unbounded etas are written `inf`; min_good may be `auto`.

namespace detail {

inline std::string bool_token(bool b) { return b ? "TRUE" : "FALSE"; }

inline bool parse_bool_token(const std::string& v) {
  if (v == "TRUE" || v == "true") return true;
  if (v == "FALSE" || v == "false") return false;
  throw ParseError("expected TRUE or FALSE, got '" + v + "'");
}

inline std::size_t parse_count(const std::string& v) {
  const double d = parse_double(v);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1e15) throw ParseError("expected a count, got '" + v + "'");
  return static_cast<std::size_t>(d);
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> spec_fields(const OptimizerSpec& s) {
  using detail::format_double;
  return {
      {"mu", std::to_string(s.mu)},
      {"batch_method", std::string(to_string(s.batch_method))},
      {"eta_fid", format_double(s.eta_fid)},
      {"eta_surv", format_double(s.eta_surv)},
      {"filter_method", std::string(to_string(s.filter_method))},
      {"sample", std::string(to_string(s.sample))},
      {"surrogate_learner", std::string(to_string(s.surrogate_learner))},
      {"n_trn_0", std::to_string(s.n_trn_0)},
      {"n_trn_1", std::to_string(s.n_trn_1)},
      {"ns0_0", format_double(s.ns0_0)},
      {"ns0_1", format_double(s.ns0_1)},
      {"ns1_0", format_double(s.ns1_0)},
      {"ns1_1", format_double(s.ns1_1)},
      {"rho_0", format_double(s.rho_0)},
      {"rho_1", format_double(s.rho_1)},
      {"filter_mb", detail::bool_token(s.filter_mb)},
      {"rho_random", detail::bool_token(s.rho_random)},
      {"budget", format_double(s.budget)},
      {"refill", detail::bool_token(s.refill)},
      {"good_fraction", format_double(s.good_fraction)},
      {"min_good", s.min_good ? std::to_string(*s.min_good) : "auto"},
      {"penalty", format_double(s.penalty)},
  };
}

inline void set_spec_field(OptimizerSpec& s, const std::string& key, const std::string& v) {
  using detail::parse_bool_token;
  using detail::parse_count;
  using detail::parse_double;
  auto need = [&](auto opt) {
    if (!opt) throw ParseError("invalid value '" + v + "' for '" + key + "'");
    return *opt;
  };
  if (key == "mu") s.mu = parse_count(v);
  else if (key == "batch_method") s.batch_method = need(parse_batch_method(v));
  else if (key == "eta_fid") s.eta_fid = parse_double(v);
  else if (key == "eta_surv") s.eta_surv = parse_double(v);
  else if (key == "filter_method") s.filter_method = need(parse_filter_method(v));
  else if (key == "sample") s.sample = need(parse_generating_kind(v));
  else if (key == "surrogate_learner") s.surrogate_learner = need(parse_surrogate_kind(v));
  else if (key == "n_trn_0") s.n_trn_0 = parse_count(v);
  else if (key == "n_trn_1") s.n_trn_1 = parse_count(v);
  else if (key == "ns0_0") s.ns0_0 = parse_double(v);
  else if (key == "ns0_1") s.ns0_1 = parse_double(v);
  else if (key == "ns1_0") s.ns1_0 = parse_double(v);
  else if (key == "ns1_1") s.ns1_1 = parse_double(v);
  else if (key == "rho_0") s.rho_0 = parse_double(v);
  else if (key == "rho_1") s.rho_1 = parse_double(v);
  else if (key == "filter_mb") s.filter_mb = parse_bool_token(v);
  else if (key == "rho_random") s.rho_random = parse_bool_token(v);
  else if (key == "budget") s.budget = parse_double(v);
  else if (key == "refill") s.refill = parse_bool_token(v);
  else if (key == "good_fraction") s.good_fraction = parse_double(v);
  else if (key == "min_good") s.min_good = v == "auto" ? std::nullopt : std::optional(parse_count(v));
  else if (key == "penalty") s.penalty = parse_double(v);
  else throw ParseError("unknown optimizer field '" + key + "'");
}

inline std::string to_text(const OptimizerSpec& s) {
  std::string out;
  for (const auto& [k, v] : spec_fields(s)) out += k + ' ' + v + '\n';
  return out;
}

inline OptimizerSpec parse_spec(std::string_view text, OptimizerSpec base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw ParseError("spec line " + std::to_string(lineno) + ": expected '<key> <value>'");
    try {
      set_spec_field(base, tok[0], tok[1]);
    } catch (const ParseError& e) {
      throw ParseError("spec line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

inline nlohmann::ordered_json spec_to_json(const OptimizerSpec& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : spec_fields(s)) j[k] = v;
  return j;
}

template <typename Json>
OptimizerSpec spec_from_json(const Json& j) {
  OptimizerSpec s;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    std::string text;
    if (v.is_string()) {
      text = v.template get<std::string>();
    } else if (v.is_boolean()) {
      text = v.template get<bool>() ? "TRUE" : "FALSE";
    } else if (v.is_number()) {
      text = detail::format_double(v.template get<double>());
    } else {
      throw ParseError("unsupported JSON value for '" + it.key() + "'");
    }
    set_spec_field(s, it.key(), text);
  }
  return s;
}

inline nlohmann::ordered_json schedule_to_json(const Schedule& sc) {
  nlohmann::ordered_json j;
  j["stages"] = sc.stages;
  j["mu"] = sc.mu;
  nlohmann::ordered_json brackets = nlohmann::ordered_json::array();
  for (const auto& b : sc.brackets) {
    nlohmann::ordered_json bj;
    bj["bracket"] = b.bracket;
    bj["fidelities"] = b.fidelities;
    bj["stage_sizes"] = b.stage_sizes;
    brackets.push_back(std::move(bj));
  }
  j["brackets"] = std::move(brackets);
  return j;
}

}  // namespace smashy
