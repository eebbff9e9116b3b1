#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "smashy/archive.hpp"
#include "smashy/error.hpp"
#include "smashy/objectives.hpp"
#include "smashy/optimizer.hpp"
#include "smashy/regret.hpp"
#include "smashy/rng.hpp"

namespace smashy {

inline constexpr const char* kVersion = "0.1.0";

// Seed tree. Everything random hangs off one global seed:
//   run seed        derive_seed(global, "run", {instance})
//   sweep cell      derive_seed(global, "sweep", {instance, seed_index})
//   inside run()    derive_seed(run_seed, "sample") for proposals,
//                   derive_seed(run_seed, "eval", {k}) for the k-th evaluation
//   instance refs   derive_seed(master_seed, "refs", {instance})
inline std::uint64_t run_seed(std::uint64_t global, std::size_t instance) {
  return derive_seed(global, "run", {instance});
}
inline std::uint64_t sweep_seed(std::uint64_t global, std::size_t instance, std::size_t k) {
  return derive_seed(global, "sweep", {instance, k});
}
inline InstanceRefs instance_refs(const InstanceSet& set, std::size_t instance) {
  return compute_refs(set.instances.at(instance), derive_seed(set.master_seed, "refs", {instance}));
}

// Budget in full evaluations for an objective of dimension d.
inline double budget_for(const Objective& obj, double budget_mult) {
  return budget_mult * static_cast<double>(obj.dimension());
}

// -- manifests ----------------------------------------------------------------------

struct Manifest {
  std::string scenario;
  std::size_t n_instances = 0;
  std::uint64_t master_seed = 1;
  std::size_t instance = 0;
  std::uint64_t seed = 0;      // global seed
  std::uint64_t run_seed = 0;  // seed handed to run()
  std::string label;           // preset name or spec file
  OptimizerSpec spec;          // fully resolved, budget included
};

inline nlohmann::ordered_json manifest_to_json(const Manifest& m, const InstanceSet& set) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["scenario"] = {{"name", m.scenario}, {"n_instances", m.n_instances}, {"master_seed", m.master_seed}};
  j["instance"] = m.instance;
  j["seed"] = m.seed;
  j["run_seed"] = m.run_seed;
  j["label"] = m.label;
  j["spec"] = spec_to_json(m.spec);
  j["schedule"] = schedule_to_json(plan_schedule(m.spec, set.instances.at(m.instance).r_min));
  return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  try {
    m.scenario = j.at("scenario").at("name").get<std::string>();
    m.n_instances = j.at("scenario").at("n_instances").get<std::size_t>();
    m.master_seed = j.at("scenario").at("master_seed").get<std::uint64_t>();
    m.instance = j.at("instance").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.run_seed = j.at("run_seed").get<std::uint64_t>();
    m.label = j.value("label", "");
    m.spec = spec_from_json(j.at("spec"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

// Re-runs the optimization a manifest describes.
inline Archive replay(const Manifest& m) {
  const auto set = make_scenario(m.scenario, m.n_instances, m.master_seed);
  if (m.instance >= set.instances.size()) throw SpecError("manifest instance out of range");
  return run(m.spec, set.instances[m.instance], m.run_seed);
}

// -- text helpers -------------------------------------------------------------------

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  write_file(p.string(), text);
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(detail::split(line, ','));
  }
  return rows;
}

// -- sweeps ---------------------------------------------------------------------------

struct SweepEntry {
  std::string label;
  OptimizerSpec spec;
};

struct SweepOptions {
  std::size_t seeds = 1;
  double budget_mult = 30.0;
  std::uint64_t seed = 1;  // global seed
  std::size_t threads = 1;
  std::optional<std::filesystem::path> out_dir;  // archives + summary when set
  std::size_t grid_points = 64;
};

struct SweepCell {
  std::string label;
  std::size_t instance = 0;
  std::size_t seed_index = 0;
  std::uint64_t run_seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> best;    // best-so-far on the grid
  std::vector<double> regret;  // normalized
};

struct SweepResult {
  std::vector<double> grid;
  std::vector<SweepCell> cells;  // spec-major, then instance, then seed
  std::string summary_csv;
};

inline std::string cell_archive_name(const SweepCell& c) {
  return c.label + "_i" + std::to_string(c.instance) + "_s" + std::to_string(c.seed_index) + ".jsonl";
}

inline std::string summary_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "algorithm,instance,seed,budget,best_so_far,regret,status\n";
  for (const auto& c : r.cells) {
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
      os << c.label << ',' << c.instance << ',' << c.seed_index << ',' << detail::format_double(r.grid[g]) << ',';
      if (c.ok) {
        os << detail::format_double(c.best[g]) << ',' << detail::format_double(c.regret[g]) << ",ok\n";
      } else {
        os << ",,failed\n";
      }
    }
  }
  return os.str();
}

// Runs every spec on every test instance of the scenario for `seeds` seeds.
// Cells run on a worker pool; a failing cell is flagged, not fatal.
inline SweepResult sweep(const std::vector<SweepEntry>& specs, const InstanceSet& set, const SweepOptions& opts) {
  for (const auto& e : specs) {
    if (e.label.empty() || e.label.find_first_of(",\n/") != std::string::npos) {
      throw SpecError("sweep label '" + e.label + "' must be non-empty without ',' or '/'");
    }
  }
  if (set.test.empty()) throw SpecError("scenario has no test instances");
  std::map<std::size_t, InstanceRefs> refs;
  std::size_t dim = 0;
  for (auto i : set.test) {
    refs[i] = instance_refs(set, i);
    dim = std::max(dim, set.instances[i].dimension());
  }
  SweepResult res;
  res.grid = budget_grid(opts.budget_mult * static_cast<double>(dim), opts.grid_points);
  for (const auto& e : specs) {
    for (auto i : set.test) {
      for (std::size_t k = 0; k < opts.seeds; ++k) {
        SweepCell c;
        c.label = e.label;
        c.instance = i;
        c.seed_index = k;
        c.run_seed = sweep_seed(opts.seed, i, k);
        res.cells.push_back(std::move(c));
      }
    }
  }
  if (opts.out_dir) std::filesystem::create_directories(*opts.out_dir);
  const std::size_t per_spec = set.test.size() * opts.seeds;
  auto work = [&](std::size_t idx) {
    auto& c = res.cells[idx];
    try {
      const auto& obj = set.instances[c.instance];
      OptimizerSpec s = specs[idx / per_spec].spec;
      s.budget = budget_for(obj, opts.budget_mult);
      const auto archive = run(s, obj, c.run_seed);
      if (opts.out_dir) write_text(*opts.out_dir / cell_archive_name(c), to_jsonl(obj.space, archive));
      c.best = best_so_far(archive, res.grid);
      c.regret = normalized_regret(c.best, refs.at(c.instance));
      c.ok = true;
    } catch (const std::exception& e) {
      c.ok = false;
      c.error = e.what();
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(opts.threads, res.cells.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < res.cells.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < res.cells.size(); i += threads) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  res.summary_csv = summary_csv(res);
  if (opts.out_dir) {
    write_text(*opts.out_dir / "summary.csv", res.summary_csv);
    nlohmann::ordered_json scen;
    scen["version"] = kVersion;
    scen["scenario"] = {{"name", set.name}, {"n_instances", set.instances.size()}, {"master_seed", set.master_seed}};
    scen["seed"] = opts.seed;
    scen["budget_mult"] = opts.budget_mult;
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (const auto& [i, ref] : refs) {
      r[std::to_string(i)] = {{"min_overall", ref.min_overall}, {"rs_full_median", ref.rs_full_median}};
    }
    scen["refs"] = std::move(r);
    nlohmann::ordered_json sp = nlohmann::ordered_json::object();
    for (const auto& e : specs) sp[e.label] = spec_to_json(e.spec);
    scen["specs"] = std::move(sp);
    nlohmann::ordered_json failed = nlohmann::ordered_json::array();
    for (const auto& c : res.cells) {
      if (!c.ok) failed.push_back({{"cell", cell_archive_name(c)}, {"error", c.error}});
    }
    scen["failed"] = std::move(failed);
    write_text(*opts.out_dir / "manifest.json", scen.dump(2) + "\n");
  }
  return res;
}

// -- ranks ----------------------------------------------------------------------------

// Ranks of values (lower is better); ties share the mean of their positions.
inline std::vector<double> mid_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mean = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean;
    i = j + 1;
  }
  return r;
}

// values[instance][algorithm] -> mean rank per algorithm over instances. Every
// instance must cover the same algorithms.
inline std::map<std::string, double> mean_ranks(
    const std::map<std::string, std::map<std::string, double>>& values) {
  if (values.empty()) throw SpecError("no instances to rank");
  std::set<std::string> algos;
  for (const auto& [inst, row] : values) {
    for (const auto& [a, v] : row) algos.insert(a);
  }
  std::vector<std::string> offenders;
  for (const auto& [inst, row] : values) {
    if (row.size() != algos.size()) offenders.push_back(inst);
  }
  if (!offenders.empty()) {
    std::string msg = "algorithm sets differ across instances; incomplete:";
    for (const auto& o : offenders) msg += " " + o;
    throw SpecError(msg);
  }
  std::map<std::string, double> out;
  for (const auto& [inst, row] : values) {
    std::vector<double> v;
    for (const auto& [a, x] : row) v.push_back(x);
    const auto r = mid_ranks(v);
    std::size_t k = 0;
    for (const auto& [a, x] : row) out[a] += r[k++];
  }
  for (auto& [a, r] : out) r /= static_cast<double>(values.size());
  return out;
}

struct RankRow {
  double checkpoint = 0.0;  // requested budget
  double budget = 0.0;      // grid budget actually used
  std::string algorithm;
  double mean_rank = 0.0;
};

// Mean ranks at each checkpoint from summary CSV text(s). A checkpoint maps
// to the largest grid budget not above it (the final budget if it exceeds
// the grid); per instance, algorithms are ranked by their seed-mean regret.
// Rows from different files are keyed by file index and instance.
inline std::vector<RankRow> ranks_from_summaries(const std::vector<std::string>& summaries,
                                                 const std::vector<double>& checkpoints) {
  // key (file:instance) -> algorithm -> budget -> seed values
  std::map<std::string, std::map<std::string, std::map<double, std::vector<double>>>> data;
  std::set<double> budgets;
  for (std::size_t f = 0; f < summaries.size(); ++f) {
    const auto rows = parse_csv(summaries[f]);
    if (rows.empty() || rows[0].size() < 7 || rows[0][0] != "algorithm") {
      throw ParseError("summary " + std::to_string(f) + " lacks the expected header");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 7) throw ParseError("summary " + std::to_string(f) + " row " + std::to_string(i) + " is short");
      if (r[6] != "ok") continue;
      const double b = detail::parse_double(r[3]);
      budgets.insert(b);
      data[std::to_string(f) + ":" + r[1]][r[0]][b].push_back(detail::parse_double(r[5]));
    }
  }
  if (budgets.empty()) throw ParseError("summaries contain no successful rows");
  std::vector<RankRow> out;
  for (double cp : checkpoints) {
    auto it = budgets.upper_bound(cp + 1e-9);
    if (it == budgets.begin()) continue;
    const double b = *std::prev(it);
    std::map<std::string, std::map<std::string, double>> values;
    for (const auto& [inst, algos] : data) {
      for (const auto& [a, per_budget] : algos) {
        auto bt = per_budget.find(b);
        if (bt == per_budget.end()) continue;
        double m = 0.0;
        for (double v : bt->second) m += v;
        values[inst][a] = m / static_cast<double>(bt->second.size());
      }
    }
    for (const auto& [a, r] : mean_ranks(values)) out.push_back({cp, b, a, r});
  }
  return out;
}

inline std::string ranks_csv(const std::vector<RankRow>& rows) {
  std::string out = "checkpoint,budget,algorithm,mean_rank\n";
  for (const auto& r : rows) {
    out += detail::format_double(r.checkpoint) + ',' + detail::format_double(r.budget) + ',' + r.algorithm + ',' +
           detail::format_double(r.mean_rank) + '\n';
  }
  return out;
}

}  // namespace smashy
