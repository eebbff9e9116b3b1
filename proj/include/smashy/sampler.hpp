#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smashy/archive.hpp"
#include "smashy/log.hpp"
#include "smashy/param_space.hpp"
#include "smashy/rng.hpp"
#include "smashy/surrogate.hpp"

namespace smashy {

enum class FilterMethod { tournament, progressive };
enum class GeneratingKind { uniform, kde };

inline std::string_view to_string(FilterMethod m) {
  return m == FilterMethod::tournament ? "tournament" : "progressive";
}
inline std::string_view to_string(GeneratingKind g) {
  return g == GeneratingKind::uniform ? "uniform" : "KDE";
}
inline std::optional<FilterMethod> parse_filter_method(std::string_view s) {
  if (s == "tournament") return FilterMethod::tournament;
  if (s == "progressive") return FilterMethod::progressive;
  return std::nullopt;
}
inline std::optional<GeneratingKind> parse_generating_kind(std::string_view s) {
  if (s == "uniform") return GeneratingKind::uniform;
  if (s == "KDE") return GeneratingKind::kde;
  return std::nullopt;
}

// Settings of one Sample call, already materialized at the current budget
// fraction.
struct SampleSpec {
  FilterMethod filter_method = FilterMethod::tournament;
  double rho = 1.0;
  double ns0 = 1.0;
  double ns1 = 1.0;
  std::size_t n_trn = 1;
  bool rho_random = false;
  SurrogateKind surrogate = SurrogateKind::knn1;
  bool filter_mb = true;
  GeneratingKind generating = GeneratingKind::uniform;
  double good_fraction = 0.15;
  std::optional<std::size_t> min_good;  // default: dimension + 1

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw SpecError("rho must lie in [0, 1]");
    if (!(ns0 >= 1.0 && ns0 <= 1000.0) || !(ns1 >= 1.0 && ns1 <= 1000.0)) {
      throw SpecError("Ns must lie in [1, 1000]");
    }
    if (n_trn < 1 || n_trn > 10) throw SpecError("n_trn must lie in {1..10}");
    if (!(good_fraction > 0.0 && good_fraction < 1.0)) throw SpecError("good fraction must lie in (0, 1)");
  }
};

// Number of points drawn without filtering: round(rho*mu) when fixed,
// Binomial(mu, rho) when random. Consumes no randomness for rho in {0, 1}.
inline std::size_t interleave_count(std::size_t mu, double rho, bool rho_random, Rng& rng) {
  if (rho <= 0.0) return 0;
  if (rho >= 1.0) return mu;
  if (rho_random) return rng.binomial(mu, rho);
  return std::min(mu, static_cast<std::size_t>(std::floor(rho * static_cast<double>(mu) + 0.5)));
}

// Geometric interpolation between ns0 (first entry) and ns1 (last entry),
// rounded to nearest and at least 1. A single entry is the geometric mean.
inline std::vector<std::size_t> ns_schedule(double ns0, double ns1, std::size_t n) {
  std::vector<std::size_t> out(n);
  auto rounded = [](double v) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(v + 0.5)));
  };
  if (n == 1) {
    out[0] = rounded(std::sqrt(ns0 * ns1));
    return out;
  }
  const double last = static_cast<double>(n - 1);
  for (std::size_t i = 1; i <= n; ++i) {
    const double a = static_cast<double>(n - i) / last;
    const double b = static_cast<double>(i - 1) / last;
    out[i - 1] = rounded(std::pow(ns0, a) * std::pow(ns1, b));
  }
  return out;
}

// Builds a valid config from an encoded vector that may not respect the
// hierarchy: activity is recomputed top-down, and parameters that become
// active without a value are drawn uniformly.
inline Config config_from_unit(const ParamSpace& space, const std::vector<double>& unit, Rng& rng) {
  Config c{std::vector<double>(space.size(), kInactive), std::vector<bool>(space.size(), false)};
  for (auto i : space.topological_order()) {
    c.active[i] = space.condition_met(c, i);
    if (!c.active[i]) continue;
    c.values[i] = unit[i] == kInactiveCode ? space.sample_param(i, rng) : space.from_unit(i, unit[i]);
  }
  return c;
}

// Proposal distribution before filtering: uniform, or the KDE of the good
// archive points (uniform while fewer than min_good distinct configs exist).
class GeneratingDistribution {
public:
  GeneratingDistribution(const ParamSpace& space, const Archive& archive, GeneratingKind kind,
                         double good_fraction = 0.15, std::optional<std::size_t> min_good = {})
      : space_(&space) {
    if (kind != GeneratingKind::kde || archive.empty()) return;
    const std::size_t need = min_good.value_or(space.size() + 1);
    if (archive.distinct_configs() < need) return;
    const auto split = archive.split_good_bad(good_fraction, need);
    std::vector<std::vector<double>> pts;
    for (auto i : split.good) pts.push_back(space.encode(archive[i].config));
    std::vector<std::size_t> levels(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) levels[i] = space.num_levels(i);
    kde_.emplace(std::move(pts), space.categorical_mask(), std::move(levels));
  }

  bool uses_kde() const { return kde_.has_value(); }

  Config draw(Rng& rng) const {
    if (!kde_) return space_->sample_one(rng);
    return config_from_unit(*space_, kde_->sample(rng), rng);
  }

  std::vector<Config> draw(std::size_t n, Rng& rng) const {
    std::vector<Config> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(draw(rng));
    return out;
  }

private:
  const ParamSpace* space_;
  std::optional<MixedKde> kde_;
};

// Positions of the k smallest scores, ties toward the earlier position.
inline std::vector<std::size_t> top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] < scores[b];
                      return a < b;
                    });
  idx.resize(k);
  return idx;
}

// Prefix rule of progressive sampling: the i-th pick (1-based) is the best
// not-yet-picked pool entry among the first i * ns_i, where ns_i interpolates
// (ns0, ns1) geometrically over the picks.
inline std::vector<std::size_t> progressive_select(const std::vector<double>& pool_scores,
                                                   std::size_t picks, double ns0, double ns1) {
  std::vector<std::size_t> chosen;
  if (picks == 0) return chosen;
  const auto ns = ns_schedule(ns0, ns1, picks);
  std::vector<bool> taken(pool_scores.size(), false);
  for (std::size_t i = 1; i <= picks; ++i) {
    const std::size_t prefix = std::min(pool_scores.size(), i * ns[i - 1]);
    std::optional<std::size_t> best;
    for (std::size_t p = 0; p < prefix; ++p) {
      if (taken[p]) continue;
      if (!best || pool_scores[p] < pool_scores[*best]) best = p;
    }
    if (!best) break;
    taken[*best] = true;
    chosen.push_back(*best);
  }
  return chosen;
}

namespace detail {

struct FilterSetup {
  std::vector<Config> out;
  std::size_t filtered = 0;
  std::optional<SurrogateModel> model;
};

inline FilterSetup prepare_filter(const ParamSpace& space, const Archive& archive, std::size_t mu,
                                  const SampleSpec& spec, const GeneratingDistribution& dist,
                                  double r_min, Rng& rng) {
  spec.validate();
  FilterSetup s;
  const std::size_t n_random = interleave_count(mu, spec.rho, spec.rho_random, rng);
  s.out = dist.draw(n_random, rng);
  s.filtered = mu - n_random;
  if (s.filtered == 0) return s;
  try {
    SurrogateOptions opts;
    opts.r_min = r_min;
    opts.good_fraction = spec.good_fraction;
    opts.min_good = spec.min_good;
    opts.seed = rng.next();
    s.model.emplace(induce(spec.surrogate, space, archive, spec.filter_mb, opts));
  } catch (const InductionError& e) {
    warn(std::string("surrogate unavailable, sampling unfiltered: ") + e.what());
    auto rest = dist.draw(s.filtered, rng);
    s.out.insert(s.out.end(), rest.begin(), rest.end());
    s.filtered = 0;
  }
  return s;
}

}  // namespace detail

// Survivors kept per tournament round: ceil(filtered/n_trn) rounds of n_trn,
// the last one holding the remainder.
inline std::vector<std::size_t> tournament_round_sizes(std::size_t filtered, std::size_t n_trn) {
  std::vector<std::size_t> out;
  for (std::size_t left = filtered; left > 0; left -= std::min(n_trn, left)) out.push_back(std::min(n_trn, left));
  return out;
}

// Tournament filtering: after the unfiltered share, ceil(mu'/n_trn) rounds;
// round i draws n_trn * ns_i candidates and keeps the best
// min(n_trn, remaining) by surrogate score at fidelity r.
inline std::vector<Config> sample_tournament(const ParamSpace& space, const Archive& archive,
                                             std::size_t mu, double r, const SampleSpec& spec,
                                             double r_min, Rng& rng) {
  const GeneratingDistribution dist(space, archive, spec.generating, spec.good_fraction, spec.min_good);
  auto s = detail::prepare_filter(space, archive, mu, spec, dist, r_min, rng);
  if (s.filtered == 0) return std::move(s.out);
  const auto keep = tournament_round_sizes(s.filtered, spec.n_trn);
  const auto ns = ns_schedule(spec.ns0, spec.ns1, keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    auto candidates = dist.draw(spec.n_trn * ns[i], rng);
    const auto scores = s.model->score(space, candidates, r);
    for (auto k : top_k(scores, keep[i])) s.out.push_back(std::move(candidates[k]));
  }
  return std::move(s.out);
}

// Progressive filtering: one pool of mu' * max(ceil(ns0), ceil(ns1)) draws,
// scored once; picks follow progressive_select.
inline std::vector<Config> sample_progressive(const ParamSpace& space, const Archive& archive,
                                              std::size_t mu, double r, const SampleSpec& spec,
                                              double r_min, Rng& rng) {
  const GeneratingDistribution dist(space, archive, spec.generating, spec.good_fraction, spec.min_good);
  auto s = detail::prepare_filter(space, archive, mu, spec, dist, r_min, rng);
  if (s.filtered == 0) return std::move(s.out);
  const auto width = static_cast<std::size_t>(std::max(std::ceil(spec.ns0), std::ceil(spec.ns1)));
  auto pool = dist.draw(s.filtered * width, rng);
  const auto scores = s.model->score(space, pool, r);
  for (auto k : progressive_select(scores, s.filtered, spec.ns0, spec.ns1)) {
    s.out.push_back(std::move(pool[k]));
  }
  return std::move(s.out);
}

inline std::vector<Config> sample(const ParamSpace& space, const Archive& archive, std::size_t mu,
                                  double r, const SampleSpec& spec, double r_min, Rng& rng) {
  if (mu == 0) return {};
  return spec.filter_method == FilterMethod::tournament
             ? sample_tournament(space, archive, mu, r, spec, r_min, rng)
             : sample_progressive(space, archive, mu, r, spec, r_min, rng);
}

}  // namespace smashy
