// smashy: run, sweep, tune, ranks, regret.
//
// Errors are reported on stderr as one JSON object {"error": kind,
// "message": text} with a nonzero exit status.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smashy/smashy.hpp"

namespace fs = std::filesystem;
using namespace smashy;

namespace {

struct ScenarioArgs {
  std::string name = "numeric7";
  std::size_t instances = 0;
  std::uint64_t master_seed = 1;

  void add(CLI::App* app) {
    app->add_option("--scenario", name, "numeric7, mixed-hier or categorical")->capture_default_str();
    app->add_option("--instances", instances, "instance count (0: scenario default)");
    app->add_option("--master-seed", master_seed, "seed the instances are derived from")->capture_default_str();
  }
  InstanceSet build() const { return make_scenario(name, instances, master_seed); }
};

struct PresetArgs {
  double eta = 3.0;
  std::size_t mu1 = 0;

  void add(CLI::App* app) {
    app->add_option("--eta", eta, "eta for presets")->capture_default_str();
    app->add_option("--mu1", mu1, "first-bracket size for presets (0: natural size)");
  }
};

// A spec argument is a preset name, a spec file, or label=file.
SweepEntry resolve_spec(const std::string& arg, const PresetArgs& pa, double r_min) {
  if (auto p = parse_preset(arg)) return {arg, preset(*p, pa.eta, r_min, pa.mu1, 1.0)};
  std::string label, path = arg;
  if (auto eq = arg.find('='); eq != std::string::npos) {
    label = arg.substr(0, eq);
    path = arg.substr(eq + 1);
  } else {
    label = fs::path(arg).stem().string();
  }
  auto spec = parse_spec(read_file(path));
  spec.validate();
  return {label, spec};
}

void print_error(std::string_view kind, std::string_view message) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

void write_manifest(const fs::path& path, const Manifest& m, const InstanceSet& set) {
  write_file(path.string(), manifest_to_json(m, set).dump(2) + "\n");
}

std::vector<double> parse_budgets(const std::string& text) {
  std::vector<double> out;
  for (const auto& tok : detail::split(text, ',')) {
    out.push_back(tok == "final" ? std::numeric_limits<double>::max() : detail::parse_double(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multifidelity hyperparameter optimization framework"};
  app.require_subcommand(1);
  set_warning_sink([](std::string_view msg) {
    std::cerr << nlohmann::json{{"warning", msg}}.dump() << '\n';
  });
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  // run
  auto* run_cmd = app.add_subcommand("run", "run one optimization and write its archive");
  std::optional<std::string> run_config, run_preset, run_replay, run_manifest, run_csv;
  std::optional<double> run_budget_mult;
  std::size_t run_instance = 0;
  std::uint64_t run_global_seed = 1;
  std::string run_out;
  ScenarioArgs run_scen;
  PresetArgs run_pa;
  run_cmd->add_option("config", run_config, "optimizer spec file");
  run_cmd->add_option("--preset", run_preset, "RS, SH, HB or BOHB");
  run_cmd->add_option("--replay", run_replay, "manifest to re-run");
  run_scen.add(run_cmd);
  run_pa.add(run_cmd);
  run_cmd->add_option("--instance", run_instance, "instance index")->capture_default_str();
  run_cmd->add_option("--seed", run_global_seed, "global seed")->capture_default_str();
  run_cmd->add_option("--budget-mult", run_budget_mult, "budget in multiples of the dimension (presets: 30)");
  run_cmd->add_option("--out", run_out, "archive JSONL path")->required();
  run_cmd->add_option("--manifest", run_manifest, "manifest path (default: <out>.manifest.json)");
  run_cmd->add_option("--csv", run_csv, "also write the archive as CSV");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run specs x test instances x seeds");
  std::vector<std::string> sweep_specs;
  ScenarioArgs sweep_scen;
  PresetArgs sweep_pa;
  SweepOptions sweep_opts;
  std::string sweep_out;
  sweep_cmd->add_option("--spec", sweep_specs, "preset name, spec file, or label=file")->required();
  sweep_scen.add(sweep_cmd);
  sweep_pa.add(sweep_cmd);
  sweep_cmd->add_option("--seeds", sweep_opts.seeds, "seeds per cell")->capture_default_str();
  sweep_cmd->add_option("--budget-mult", sweep_opts.budget_mult, "budget in multiples of d")->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_opts.seed, "global seed")->capture_default_str();
  sweep_cmd->add_option("--threads", sweep_opts.threads, "worker threads")->capture_default_str();
  sweep_cmd->add_option("--out-dir", sweep_out, "output directory")->required();

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "meta-optimize the optimizer on training instances");
  ScenarioArgs tune_scen;
  std::string tune_variant = "gamma_star", tune_method = "bo_lcb", tune_out;
  std::optional<std::string> tune_base, tune_surrogate, tune_best, tune_report;
  std::size_t tune_n = 60, tune_repeats = 1, tune_threads = 1;
  std::uint64_t tune_seed = 1;
  double tune_budget_mult = 30.0;
  tune_scen.add(tune_cmd);
  tune_cmd->add_option("--variant", tune_variant, "gamma_star, g1 ... g7")->capture_default_str();
  tune_cmd->add_option("--method", tune_method, "random or bo_lcb")->capture_default_str();
  tune_cmd->add_option("--n", tune_n, "meta evaluations per repeat")->capture_default_str();
  tune_cmd->add_option("--repeats", tune_repeats, "independent repeats, pooled")->capture_default_str();
  tune_cmd->add_option("--seed", tune_seed, "global seed")->capture_default_str();
  tune_cmd->add_option("--budget-mult", tune_budget_mult, "inner budget in multiples of d")->capture_default_str();
  tune_cmd->add_option("--threads", tune_threads, "concurrent instance runs")->capture_default_str();
  tune_cmd->add_option("--base", tune_base, "spec file to substitute into (g1, g4 ... g7)");
  tune_cmd->add_option("--surrogate", tune_surrogate, "surrogate learner for g4");
  tune_cmd->add_option("--out", tune_out, "meta-archive JSONL")->required();
  tune_cmd->add_option("--best", tune_best, "write the best spec here");
  tune_cmd->add_option("--report", tune_report, "append a best-configuration row to this CSV");

  // ranks
  auto* ranks_cmd = app.add_subcommand("ranks", "mean ranks from sweep summaries");
  std::vector<std::string> ranks_files;
  std::string ranks_budgets = "1,100,final";
  std::optional<std::string> ranks_out;
  ranks_cmd->add_option("summaries", ranks_files, "summary.csv files")->required();
  ranks_cmd->add_option("--budgets", ranks_budgets, "checkpoints in full evaluations")->capture_default_str();
  ranks_cmd->add_option("--out", ranks_out, "output CSV (default: stdout)");

  // regret
  auto* regret_cmd = app.add_subcommand("regret", "normalized regret curve of one archive");
  std::string regret_archive, regret_manifest;
  std::optional<std::string> regret_out;
  std::size_t regret_points = 64;
  regret_cmd->add_option("--archive", regret_archive, "archive JSONL")->required();
  regret_cmd->add_option("--manifest", regret_manifest, "manifest written by run")->required();
  regret_cmd->add_option("--points", regret_points, "grid points")->capture_default_str();
  regret_cmd->add_option("--out", regret_out, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }
  if (quiet) set_warning_sink({});

  try {
    if (run_cmd->parsed()) {
      const int given = (run_config ? 1 : 0) + (run_preset ? 1 : 0) + (run_replay ? 1 : 0);
      if (given != 1) throw SpecError("give exactly one of a config file, --preset or --replay");
      Manifest m;
      if (run_replay) {
        m = manifest_from_json(nlohmann::json::parse(read_file(*run_replay)));
      } else {
        const auto set = run_scen.build();
        if (run_instance >= set.instances.size()) throw SpecError("instance index out of range");
        const auto& obj = set.instances[run_instance];
        m.scenario = set.name;
        m.n_instances = set.instances.size();
        m.master_seed = set.master_seed;
        m.instance = run_instance;
        m.seed = run_global_seed;
        m.run_seed = run_seed(run_global_seed, run_instance);
        if (run_preset) {
          const auto p = parse_preset(*run_preset);
          if (!p) throw SpecError("unknown preset '" + *run_preset + "'");
          m.label = *run_preset;
          m.spec = preset(*p, run_pa.eta, obj.r_min, run_pa.mu1, budget_for(obj, run_budget_mult.value_or(30.0)));
        } else {
          m.label = *run_config;
          m.spec = parse_spec(read_file(*run_config));
          if (run_budget_mult) m.spec.budget = budget_for(obj, *run_budget_mult);
        }
        m.spec.validate();
      }
      const auto set = make_scenario(m.scenario, m.n_instances, m.master_seed);
      const auto archive = replay(m);
      const auto& space = set.instances.at(m.instance).space;
      write_file(run_out, to_jsonl(space, archive));
      write_manifest(run_manifest.value_or(run_out + ".manifest.json"), m, set);
      if (run_csv) write_file(*run_csv, to_csv(space, archive));
      const auto best = incumbent(archive);
      std::cout << nlohmann::json{{"records", archive.size()}, {"best_cost", best ? best->cost : 0.0}}.dump() << '\n';
    } else if (sweep_cmd->parsed()) {
      const auto set = sweep_scen.build();
      std::vector<SweepEntry> entries;
      for (const auto& s : sweep_specs) entries.push_back(resolve_spec(s, sweep_pa, set.instances.front().r_min));
      sweep_opts.out_dir = sweep_out;
      const auto res = sweep(entries, set, sweep_opts);
      std::size_t failed = 0;
      for (const auto& c : res.cells) failed += c.ok ? 0 : 1;
      std::cout << nlohmann::json{{"cells", res.cells.size()}, {"failed", failed}}.dump() << '\n';
    } else if (tune_cmd->parsed()) {
      const auto variant = parse_variant(tune_variant);
      if (!variant) throw SpecError("unknown variant '" + tune_variant + "'");
      const auto method = parse_tune_method(tune_method);
      if (!method) throw SpecError("unknown tuning method '" + tune_method + "'");
      std::optional<SurrogateKind> surrogate;
      if (tune_surrogate) {
        surrogate = parse_surrogate_kind(*tune_surrogate);
        if (!surrogate) throw SpecError("unknown surrogate '" + *tune_surrogate + "'");
      }
      const auto set = tune_scen.build();
      if (set.train.empty()) throw SpecError("scenario '" + set.name + "' has no training instances");
      const auto train = set.subset(set.train);
      std::vector<InstanceRefs> refs;
      for (auto i : set.train) refs.push_back(instance_refs(set, i));
      MetaTuneOptions mo;
      mo.eval.budget_mult = tune_budget_mult;
      mo.eval.threads = tune_threads;
      mo.repeats = tune_repeats;
      std::vector<MetaRecord> archive;
      OptimizerSpec best;
      double best_aggregate = 0.0;
      if (is_optimized(*variant)) {
        const auto meta = restrict(MetaSearchSpace{}, *variant, surrogate);
        auto res = tune_optimizer(meta, train, refs, tune_n, *method, tune_seed, mo);
        archive = std::move(res.archive);
        best = res.best;
        best_aggregate = res.best_aggregate;
      } else {
        if (!tune_base) throw SpecError("variant " + tune_variant + " substitutes into a spec; pass --base");
        best = substitute(parse_spec(read_file(*tune_base)), *variant, surrogate);
        mo.eval.budget_factor = restriction(*variant, surrogate).budget_factor;
        MetaRecord rec;
        rec.result = meta_objective(best, train, refs, derive_seed(tune_seed, "meta-eval"), mo.eval);
        best_aggregate = rec.result.aggregate;
        archive.push_back(std::move(rec));
      }
      write_file(tune_out, meta_archive_to_jsonl(archive));
      if (tune_best) write_file(*tune_best, to_text(best));
      if (tune_report) {
        const bool exists = fs::exists(*tune_report);
        std::string table = gamma_table({{tune_variant, set.name, best, best_aggregate}});
        if (exists) table = read_file(*tune_report) + table.substr(table.find('\n') + 1);
        write_file(*tune_report, table);
      }
      std::cout << nlohmann::json{{"evaluations", archive.size()}, {"best_aggregate", best_aggregate}}.dump() << '\n';
    } else if (ranks_cmd->parsed()) {
      std::vector<std::string> texts;
      for (const auto& f : ranks_files) texts.push_back(read_file(f));
      const auto csv = ranks_csv(ranks_from_summaries(texts, parse_budgets(ranks_budgets)));
      if (ranks_out) {
        write_file(*ranks_out, csv);
      } else {
        std::cout << csv;
      }
    } else if (regret_cmd->parsed()) {
      const auto m = manifest_from_json(nlohmann::json::parse(read_file(regret_manifest)));
      const auto set = make_scenario(m.scenario, m.n_instances, m.master_seed);
      const auto& obj = set.instances.at(m.instance);
      const auto archive = archive_from_jsonl(obj.space, read_file(regret_archive));
      const auto grid = budget_grid(m.spec.budget, regret_points);
      const auto best = best_so_far(archive, grid);
      const auto regret = normalized_regret(best, instance_refs(set, m.instance));
      std::string csv = "budget,best_so_far,regret\n";
      for (std::size_t g = 0; g < grid.size(); ++g) {
        csv += detail::format_double(grid[g]) + ',' + detail::format_double(best[g]) + ',' +
               detail::format_double(regret[g]) + '\n';
      }
      if (regret_out) {
        write_file(*regret_out, csv);
      } else {
        std::cout << csv;
      }
    }
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    print_error("parse", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
