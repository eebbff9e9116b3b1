// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "smashy/smashy.hpp"

using namespace smashy;

namespace {

// Pinned tolerances and limits.
constexpr double kWeightSumTol = 1e-9;
constexpr double kSignTestAlpha = 0.05;
constexpr std::size_t kSignSeeds = 30;
constexpr std::size_t kMetaSeeds = 10;
constexpr std::size_t kMetaEvals = 60;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> body;
};

// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2), ties dropped.
double sign_test_p(std::size_t wins, std::size_t n) {
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return p;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// Final normalized regret of a spec, averaged over the test instances.
double mean_final_regret(OptimizerSpec spec, const InstanceSet& set, const std::vector<InstanceRefs>& refs,
                         double budget_mult, std::uint64_t seed) {
  double sum = 0.0;
  for (std::size_t k = 0; k < set.test.size(); ++k) {
    const auto& obj = set.instances[set.test[k]];
    spec.budget = budget_for(obj, budget_mult);
    const auto archive = run(spec, obj, sweep_seed(seed, set.test[k], 0));
    const auto grid = budget_grid(spec.budget, 2);
    sum += normalized_regret(best_so_far(archive, grid).back(), refs[k]);
  }
  return sum / static_cast<double>(set.test.size());
}

struct SignResult {
  std::size_t wins = 0, losses = 0;
  double p = 1.0;
  double mean_a = 0.0, mean_b = 0.0;
};

SignResult compare(const OptimizerSpec& a, const OptimizerSpec& b, const InstanceSet& set,
                   const std::vector<InstanceRefs>& refs, double budget_mult) {
  SignResult r;
  for (std::size_t s = 0; s < kSignSeeds; ++s) {
    const double ra = mean_final_regret(a, set, refs, budget_mult, 1000 + s);
    const double rb = mean_final_regret(b, set, refs, budget_mult, 1000 + s);
    r.mean_a += ra / kSignSeeds;
    r.mean_b += rb / kSignSeeds;
    if (ra < rb) ++r.wins;
    if (rb < ra) ++r.losses;
  }
  r.p = sign_test_p(r.wins, r.wins + r.losses);
  return r;
}

std::string describe(const SignResult& r) {
  return "wins " + std::to_string(r.wins) + "/" + std::to_string(r.wins + r.losses) + ", p=" + fmt(r.p) +
         ", mean regret " + fmt(r.mean_a) + " vs " + fmt(r.mean_b);
}

std::vector<InstanceRefs> test_refs(const InstanceSet& set) {
  std::vector<InstanceRefs> refs;
  for (auto i : set.test) refs.push_back(instance_refs(set, i));
  return refs;
}

Outcome hyperband_reduction() {
  const double r_min = 1.0 / 27.0;
  auto spec = preset(Preset::hb, 3.0, r_min, 0, 100.0);
  spec.rho_0 = spec.rho_1 = 1.0;
  const auto j = schedule_to_json(plan_schedule(spec, r_min));
  const auto sc = plan_schedule(spec, r_min);
  // s = floor(-log_3(1/27)) + 1 = 4; mu(b) = ceil(4 * 3^(4-b) / (5-b)).
  const std::vector<std::size_t> want{27, 12, 6, 4};
  bool ok = sc.stages == 4 && sc.mu == want && sc.brackets.size() == 4;
  for (std::size_t b = 1; ok && b <= 4; ++b) {
    ok = sc.brackets[b - 1].fidelities.front() == std::pow(3.0, static_cast<double>(b) - 4.0);
  }
  ok = ok && j["mu"].get<std::vector<std::size_t>>() == want;
  return {ok, "mu " + j["mu"].dump() + ", s=" + std::to_string(sc.stages)};
}

Outcome preset_rows() {
  const double r_min = 1.0 / 27.0;
  const auto rs = project(preset(Preset::rs, 3.0, r_min, 0, 10.0), r_min);
  const auto hb = project(preset(Preset::hb, 3.0, r_min, 0, 10.0), r_min);
  const auto bohb = project(preset(Preset::bohb, 3.0, r_min, 0, 10.0), r_min);
  const std::vector<std::size_t> mu{27, 12, 6, 4};
  const bool rs_ok = !rs.mu && rs.s == 1 && !rs.eta_surv && !rs.eta_budget && !rs.inducer && rs.rho == 1.0 &&
                     !rs.ns && !rs.batch_mode && rs.generating == GeneratingKind::uniform;
  const bool hb_ok = hb.mu == mu && hb.s == 4 && hb.eta_surv == 3.0 && hb.eta_budget == 3.0 && !hb.inducer &&
                     hb.rho == 1.0 && !hb.ns && hb.batch_mode == BatchMethod::hb &&
                     hb.generating == GeneratingKind::uniform;
  const bool bohb_ok = bohb.mu == mu && bohb.s == 4 && bohb.eta_surv == 3.0 && bohb.eta_budget == 3.0 &&
                       bohb.inducer == SurrogateKind::tpe && bohb.rho == 1.0 / 3.0 && bohb.ns == 64.0 &&
                       bohb.batch_mode == BatchMethod::hb && bohb.generating == GeneratingKind::kde;
  return {rs_ok && hb_ok && bohb_ok, std::string("RS ") + (rs_ok ? "ok" : "mismatch") + ", HB " +
                                         (hb_ok ? "ok" : "mismatch") + ", BOHB " + (bohb_ok ? "ok" : "mismatch")};
}

Outcome budget_conservation() {
  const auto set = make_scenario("numeric7");
  const auto& obj = set.instances[0];
  const MetaSearchSpace meta;
  Rng rng(derive_seed(3, "acceptance-gammas"));
  std::size_t runs = 0, bad = 0;
  for (int g = 0; g < 100; ++g) {
    auto spec = meta.to_spec(meta.space().sample_one(rng));
    spec.budget = 2.0 * static_cast<double>(obj.dimension());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto archive = run(spec, obj, seed);
      ++runs;
      double total = 0.0, last = 0.0, t = 0.0;
      bool monotone = true;
      const auto last_batch = archive.records().back().batch_id;
      for (const auto& r : archive.records()) {
        total += r.fidelity;
        if (r.batch_id == last_batch) last += r.fidelity;
        monotone = monotone && r.budget_at >= t;
        t = r.budget_at;
      }
      const double tol = 1e-9 * spec.budget;
      if (!(total >= spec.budget - tol && total <= spec.budget + last + tol && monotone)) ++bad;
    }
  }
  return {bad == 0, std::to_string(runs) + " runs, " + std::to_string(bad) + " violations"};
}

Outcome multifidelity_anytime() {
  const auto set = make_scenario("numeric7");
  const auto refs = test_refs(set);
  const double r_min = set.instances[set.test[0]].r_min;
  const auto hb = preset(Preset::hb, 3.0, r_min, 0, 1.0);
  const auto g1 = substitute(hb, Variant::g1);
  const auto rs = preset(Preset::rs, 3.0, r_min, 0, 1.0);
  const auto vs_g1 = compare(hb, g1, set, refs, 10.0);
  const auto vs_rs = compare(hb, rs, set, refs, 10.0);
  return {vs_g1.p < kSignTestAlpha && vs_rs.p < kSignTestAlpha,
          "vs g1: " + describe(vs_g1) + "; vs RS: " + describe(vs_rs)};
}

Outcome surrogate_filtering() {
  const auto set = make_scenario("numeric7");
  const auto refs = test_refs(set);
  OptimizerSpec filtered;
  filtered.batch_method = BatchMethod::equal;
  filtered.mu = 32;
  filtered.eta_fid = filtered.eta_surv = 3.0;
  filtered.filter_method = FilterMethod::tournament;
  filtered.surrogate_learner = SurrogateKind::knn1;
  filtered.sample = GeneratingKind::uniform;
  filtered.n_trn_0 = filtered.n_trn_1 = 1;
  filtered.ns0_0 = filtered.ns0_1 = filtered.ns1_0 = filtered.ns1_1 = 16.0;
  filtered.rho_0 = filtered.rho_1 = 0.3;
  auto unfiltered = filtered;
  unfiltered.rho_0 = unfiltered.rho_1 = 1.0;
  const auto r = compare(filtered, unfiltered, set, refs, 30.0);
  return {r.p < kSignTestAlpha, describe(r)};
}

Outcome sampler_oracles() {
  const bool ns_ok = ns_schedule(2, 32, 5) == std::vector<std::size_t>{2, 4, 8, 16, 32};
  // Pool [9,1,5,7,2,8], three picks with Ns = 2: best of the first 2, 4 and 6.
  const bool prog_ok = progressive_select({9, 1, 5, 7, 2, 8}, 3, 2, 2) == std::vector<std::size_t>{1, 2, 4};
  const ParamSpace space({ParamDef::categorical("k", {"a", "b", "c"}), ParamDef::continuous("x", 1e-3, 1e3, Scale::log),
                          ParamDef::integer("n", 1, 9).when("k", {"b"})});
  Rng fill(1);
  Archive archive;
  for (int i = 0; i < 40; ++i) {
    EvalRecord e;
    e.config = space.sample_one(fill);
    e.cost = std::abs(std::log10(e.config.values[1]));
    archive.append(e);
  }
  bool rho_ok = true;
  for (auto gen : {GeneratingKind::uniform, GeneratingKind::kde}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SampleSpec spec;
      spec.rho = 1.0;
      spec.ns0 = spec.ns1 = 20;
      spec.generating = gen;
      Rng a(seed), b(seed);
      const auto got = sample(space, archive, 7, 1.0, spec, 1.0, a);
      rho_ok = rho_ok && got == GeneratingDistribution(space, archive, gen).draw(7, b);
    }
  }
  return {ns_ok && prog_ok && rho_ok, std::string("ns_schedule ") + (ns_ok ? "ok" : "mismatch") + ", progressive " +
                                          (prog_ok ? "ok" : "mismatch") + ", rho=1 " + (rho_ok ? "ok" : "mismatch")};
}

Outcome samworth() {
  bool ok = true;
  std::string detail;
  for (std::size_t d : {1, 2, 5, 10}) {
    const auto w = samworth_weights(7, d);
    double sum = 0.0;
    for (double x : w) sum += x;
    bool mono = w.size() == 7;
    for (std::size_t i = 1; i < w.size(); ++i) mono = mono && w[i] <= w[i - 1];
    ok = ok && mono && std::abs(sum - 1.0) <= kWeightSumTol;
    detail += "d=" + std::to_string(d) + " sum-1=" + fmt(sum - 1.0) + (mono ? "" : " not monotone") + "; ";
  }
  return {ok, detail};
}

Outcome regret_normalization() {
  bool anchors = true;
  std::size_t curves = 0, bad = 0;
  const auto set = make_scenario("numeric7");
  for (auto i : set.test) {
    const auto refs = instance_refs(set, i);
    anchors = anchors && normalized_regret(refs.min_overall, refs) == 0.0 &&
              normalized_regret(refs.rs_full_median, refs) == 1.0;
  }
  SweepOptions opts;
  opts.seeds = 3;
  opts.budget_mult = 5.0;
  const double r_min = set.instances.front().r_min;
  std::vector<SweepEntry> specs;
  for (auto p : {Preset::rs, Preset::sh, Preset::hb, Preset::bohb}) {
    specs.push_back(SweepEntry{std::string(to_string(p)), preset(p, 3.0, r_min, 0, 1.0)});
  }
  for (const auto& c : sweep(specs, set, opts).cells) {
    ++curves;
    bool mono = c.ok;
    for (std::size_t g = 1; mono && g < c.regret.size(); ++g) mono = c.regret[g] <= c.regret[g - 1];
    bad += !mono;
  }
  return {anchors && bad == 0, std::string("anchors ") + (anchors ? "exact" : "off") + ", " + std::to_string(curves) +
                                   " curves, " + std::to_string(bad) + " not nonincreasing"};
}

Outcome meta_tuning() {
  const auto space = branin_space();
  const auto f = [](const Config& c, std::size_t) { return branin(c); };
  std::vector<double> bo, rs;
  for (std::uint64_t seed = 0; seed < kMetaSeeds; ++seed) {
    const auto a = tune(space, f, kMetaEvals, TuneMethod::bo_lcb, seed);
    const auto b = tune(space, f, kMetaEvals, TuneMethod::random, seed);
    bo.push_back(a.records[a.best].value);
    rs.push_back(b.records[b.best].value);
  }
  const double mb = median(bo), mr = median(rs);
  return {mb < mr, "median best bo_lcb " + fmt(mb) + " vs random " + fmt(mr)};
}

Outcome determinism() {
  std::size_t checked = 0, differ = 0;
  const MetaSearchSpace meta;
  Rng rng(derive_seed(10, "acceptance-gammas"));
  for (const auto& name : scenario_names()) {
    const auto set = make_scenario(name);
    const auto& obj = set.instances[set.test.front()];
    std::vector<OptimizerSpec> specs;
    for (auto p : {Preset::rs, Preset::sh, Preset::hb, Preset::bohb}) specs.push_back(preset(p, 3.0, obj.r_min, 0, 1.0));
    for (int g = 0; g < 6; ++g) specs.push_back(meta.to_spec(meta.space().sample_one(rng)));
    for (auto spec : specs) {
      spec.budget = budget_for(obj, 2.0);
      for (std::uint64_t seed : {0, 7}) {
        const auto a = to_jsonl(obj.space, run(spec, obj, seed));
        const auto b = to_jsonl(obj.space, run(spec, obj, seed));
        ++checked;
        differ += a != b;
      }
    }
  }
  return {differ == 0, std::to_string(checked) + " runs repeated, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main() {
  set_warning_sink({});
  const std::vector<Criterion> criteria{
      {1, "hyperband reduction", 1.0, hyperband_reduction},
      {2, "preset field equality", 1.0, preset_rows},
      {3, "budget conservation", 120.0, budget_conservation},
      {4, "multifidelity anytime advantage", 600.0, multifidelity_anytime},
      {5, "surrogate filtering helps", 600.0, surrogate_filtering},
      {6, "sampler oracles", 1.0, sampler_oracles},
      {7, "samworth weights", 1.0, samworth},
      {8, "regret normalization", 1.0, regret_normalization},
      {9, "meta-tuning sanity", 900.0, meta_tuning},
      {10, "determinism", 60.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.time_limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
