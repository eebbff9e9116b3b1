#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smashy/archive.hpp"
#include "smashy/error.hpp"
#include "smashy/param_space.hpp"
#include "smashy/rng.hpp"

namespace smashy {

enum class SurrogateKind { knn1, kknn7, tpe, rf };

inline std::string_view to_string(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::knn1: return "KNN1";
    case SurrogateKind::kknn7: return "KKNN7";
    case SurrogateKind::tpe: return "TPE";
    case SurrogateKind::rf: return "RF";
  }
  return "?";
}

inline std::optional<SurrogateKind> parse_surrogate_kind(std::string_view s) {
  if (s == "KNN1") return SurrogateKind::knn1;
  if (s == "KKNN7") return SurrogateKind::kknn7;
  if (s == "TPE") return SurrogateKind::tpe;
  if (s == "RF") return SurrogateKind::rf;
  return std::nullopt;
}

// Gower distance between encoded vectors: mean over axes of |a-b| on numeric
// axes and 0/1 mismatch on categorical ones. An inactive code (-1) is at
// distance 1 from any active value and 0 from another inactive code.
inline double gower_distance(std::span<const double> a, std::span<const double> b,
                             const std::vector<bool>& categorical) {
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a[i] == kInactiveCode, ib = b[i] == kInactiveCode;
    if (ia || ib) {
      sum += (ia && ib) ? 0.0 : 1.0;
    } else if (i < categorical.size() && categorical[i]) {
      sum += a[i] == b[i] ? 0.0 : 1.0;
    } else {
      sum += std::abs(a[i] - b[i]);
    }
  }
  return sum / static_cast<double>(a.size());
}

// Rank weights of the optimally weighted k-NN regressor (Samworth 2012):
//   w_i = (1/k) [1 + d/2 - d/(2 k^{2/d}) (i^{1+2/d} - (i-1)^{1+2/d})]
// Negative weights are clamped to zero and the rest renormalized.
inline std::vector<double> samworth_weights(std::size_t k, std::size_t d) {
  if (k == 0 || d == 0) throw InductionError("samworth weights need k >= 1 and d >= 1");
  const double kd = static_cast<double>(k), dd = static_cast<double>(d);
  const double expo = 1.0 + 2.0 / dd;
  const double coef = dd / (2.0 * std::pow(kd, 2.0 / dd));
  std::vector<double> w(k);
  double total = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    const double di = static_cast<double>(i);
    const double raw = (1.0 + dd / 2.0 - coef * (std::pow(di, expo) - std::pow(di - 1.0, expo))) / kd;
    w[i - 1] = std::max(raw, 0.0);
    total += w[i - 1];
  }
  for (auto& x : w) x /= total;
  return w;
}

// Product-kernel density over encoded mixed vectors. Numeric axes use a
// Gaussian kernel with Scott-rule bandwidth n^{-1/(d+4)} * sd, floored at
// 1e-3. Categorical axes use the Aitchison-Aitken kernel with the same rule
// giving the off-level mass lambda, capped so that the own-level probability
// stays in [1/L, 1].
class MixedKde {
public:
  static constexpr double kMinBandwidth = 1e-3;

  MixedKde(std::vector<std::vector<double>> points, std::vector<bool> categorical,
           std::vector<std::size_t> levels)
      : points_(std::move(points)), categorical_(std::move(categorical)), levels_(std::move(levels)) {
    if (points_.empty()) throw InductionError("KDE needs at least one point");
    const std::size_t dim = categorical_.size();
    const double n = static_cast<double>(points_.size());
    const double factor = std::pow(n, -1.0 / (static_cast<double>(dim) + 4.0));
    bandwidth_.assign(dim, kMinBandwidth);
    for (std::size_t a = 0; a < dim; ++a) {
      double sum = 0.0, sq = 0.0, cnt = 0.0;
      for (const auto& p : points_) {
        if (p[a] == kInactiveCode) continue;
        sum += p[a];
        sq += p[a] * p[a];
        cnt += 1.0;
      }
      double sd = 0.0;
      if (cnt > 1.0) sd = std::sqrt(std::max(0.0, (sq - sum * sum / cnt) / (cnt - 1.0)));
      double h = std::max(kMinBandwidth, factor * sd);
      if (categorical_[a]) {
        const double lv = static_cast<double>(levels_[a]);
        h = levels_[a] <= 1 ? 0.0 : std::min(h, 1.0 - 1.0 / lv);
      }
      bandwidth_[a] = h;
    }
  }

  std::size_t size() const { return points_.size(); }
  double bandwidth(std::size_t axis) const { return bandwidth_[axis]; }

  double log_density(std::span<const double> x) const {
    std::vector<double> logs;
    logs.reserve(points_.size());
    for (const auto& p : points_) {
      double lp = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) lp += log_factor(a, x[a], p[a]);
      logs.push_back(lp);
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    if (std::isinf(top)) return top;
    double s = 0.0;
    for (double l : logs) s += std::exp(l - top);
    return top + std::log(s) - std::log(static_cast<double>(points_.size()));
  }

  // Perturbed copy of a uniformly chosen point. Axes the chosen point leaves
  // inactive stay at the inactive code.
  std::vector<double> sample(Rng& rng) const {
    const auto& center = points_[rng.below(points_.size())];
    std::vector<double> out(center);
    for (std::size_t a = 0; a < out.size(); ++a) {
      if (center[a] == kInactiveCode) continue;
      if (categorical_[a]) {
        const std::size_t levels = levels_[a];
        if (levels <= 1 || !rng.bernoulli(bandwidth_[a])) continue;
        const auto own = static_cast<std::size_t>(std::llround(center[a] * static_cast<double>(levels - 1)));
        std::size_t other = rng.below(levels - 1);
        if (other >= own) ++other;
        out[a] = static_cast<double>(other) / static_cast<double>(levels - 1);
      } else {
        double v = center[a];
        int tries = 0;
        do {
          v = center[a] + bandwidth_[a] * rng.normal();
        } while ((v < 0.0 || v > 1.0) && ++tries < 64);
        out[a] = std::clamp(v, 0.0, 1.0);
      }
    }
    return out;
  }

private:
  double log_factor(std::size_t a, double x, double c) const {
    if (x == kInactiveCode) return 0.0;
    if (categorical_[a]) {
      const double levels = static_cast<double>(levels_[a]);
      if (c == kInactiveCode) return -std::log(levels);
      if (levels_[a] <= 1) return 0.0;
      const double lambda = bandwidth_[a];
      return x == c ? std::log(1.0 - lambda) : std::log(lambda / (levels - 1.0));
    }
    if (c == kInactiveCode) return 0.0;
    const double h = bandwidth_[a];
    const double z = (x - c) / h;
    return -0.5 * z * z - std::log(h) - 0.5 * std::log(2.0 * std::numbers::pi);
  }

  std::vector<std::vector<double>> points_;
  std::vector<bool> categorical_;
  std::vector<std::size_t> levels_;
  std::vector<double> bandwidth_;
};

struct ForestOptions {
  std::size_t n_trees = 100;
  std::size_t mtry = 0;  // 0 -> ceil(d/3)
  std::size_t min_node_size = 1;
  bool bootstrap = true;
};

// Regression forest: bootstrap resampling, a fresh random feature subset of
// size mtry at every split, variance-reduction splits, grown until nodes are
// pure or reach min_node_size.
class RandomForest {
public:
  using Options = ForestOptions;

  RandomForest() = default;

  void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
           std::uint64_t seed, Options opts = {}) {
    if (x.empty() || x.size() != y.size()) throw InductionError("forest needs matching, non-empty x and y");
    const std::size_t dim = x.front().size();
    const std::size_t mtry = opts.mtry ? std::min(opts.mtry, dim)
                                       : std::max<std::size_t>(1, (dim + 2) / 3);
    trees_.assign(opts.n_trees, {});
    for (std::size_t t = 0; t < opts.n_trees; ++t) {
      Rng rng(derive_seed(seed, "tree", {t}));
      std::vector<std::size_t> rows(x.size());
      if (opts.bootstrap) {
        for (auto& r : rows) r = rng.below(x.size());
      } else {
        std::iota(rows.begin(), rows.end(), std::size_t{0});
      }
      grow(trees_[t], x, y, std::move(rows), dim, mtry, std::max<std::size_t>(1, opts.min_node_size), rng);
    }
  }

  bool fitted() const { return !trees_.empty(); }

  std::vector<double> predict_trees(std::span<const double> x) const {
    std::vector<double> out;
    out.reserve(trees_.size());
    for (const auto& tree : trees_) {
      std::size_t node = 0;
      while (tree[node].feature >= 0) {
        const auto& nd = tree[node];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
      }
      out.push_back(tree[node].value);
    }
    return out;
  }

  double predict(std::span<const double> x) const { return predict_mean_sd(x).first; }

  // Mean and (population) standard deviation across tree predictions.
  std::pair<double, double> predict_mean_sd(std::span<const double> x) const {
    const auto p = predict_trees(x);
    double m = 0.0;
    for (double v : p) m += v;
    m /= static_cast<double>(p.size());
    double var = 0.0;
    for (double v : p) var += (v - m) * (v - m);
    var /= static_cast<double>(p.size());
    return {m, std::sqrt(var)};
  }

private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double value = 0.0;
  };

  static void grow(std::vector<Node>& tree, const std::vector<std::vector<double>>& x,
                   const std::vector<double>& y, std::vector<std::size_t> rows, std::size_t dim,
                   std::size_t mtry, std::size_t min_node, Rng& rng) {
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> rows;
    };
    tree.clear();
    tree.push_back({});
    std::vector<Pending> stack;
    stack.push_back({0, std::move(rows)});
    std::vector<std::size_t> features(dim);
    std::vector<std::size_t> sorted;
    while (!stack.empty()) {
      auto [node, idx] = std::move(stack.back());
      stack.pop_back();
      double sum = 0.0;
      for (auto r : idx) sum += y[r];
      const double n = static_cast<double>(idx.size());
      tree[node].value = sum / n;
      if (idx.size() <= min_node) continue;
      const bool constant = std::all_of(idx.begin(), idx.end(), [&](std::size_t r) { return y[r] == y[idx[0]]; });
      if (constant) continue;

      std::iota(features.begin(), features.end(), std::size_t{0});
      for (std::size_t k = 0; k < mtry; ++k) {
        std::swap(features[k], features[k + rng.below(dim - k)]);
      }
      // Gains use y centered at the node mean, so the split choice does not
      // drift under y -> a*y + b. Near-equal gains go to the first candidate.
      const double mean = sum / n;
      double node_ss = 0.0;
      for (auto r : idx) node_ss += (y[r] - mean) * (y[r] - mean);
      double best_gain = 1e-12 * node_ss;
      int best_feature = -1;
      double best_threshold = 0.0;
      for (std::size_t k = 0; k < mtry; ++k) {
        const std::size_t f = features[k];
        sorted = idx;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
        double left = 0.0;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
          left += y[sorted[i]] - mean;
          const double xa = x[sorted[i]][f], xb = x[sorted[i + 1]][f];
          if (xa == xb) continue;
          const double nl = static_cast<double>(i + 1), nr = n - nl;
          const double gain = left * left * (1.0 / nl + 1.0 / nr);
          if (gain > best_gain * (1.0 + 1e-9)) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (xa + xb);
            if (best_threshold == xb) best_threshold = xa;
          }
        }
      }
      if (best_feature < 0) continue;
      std::vector<std::size_t> lrows, rrows;
      for (auto r : idx) {
        (x[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows).push_back(r);
      }
      const std::size_t l = tree.size();
      tree.push_back({});
      tree.push_back({});
      tree[node].feature = best_feature;
      tree[node].threshold = best_threshold;
      tree[node].left = l;
      tree[node].right = l + 1;
      stack.push_back({l + 1, std::move(rrows)});
      stack.push_back({l, std::move(lrows)});
    }
  }

  std::vector<std::vector<Node>> trees_;
};

namespace detail {

struct SurrogateImpl {
  virtual ~SurrogateImpl() = default;
  virtual double predict(std::span<const double> features) const = 0;
};

struct KnnImpl final : SurrogateImpl {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<bool> categorical;
  std::vector<double> weights;  // one entry -> plain 1-NN

  double predict(std::span<const double> q) const override {
    const std::size_t k = weights.size();
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d.emplace_back(gower_distance(q, x[i], categorical), i);
    // (distance, index) order breaks ties toward earlier archive rows.
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += weights[i] * y[d[i].second];
    return s;
  }
};

struct TpeImpl final : SurrogateImpl {
  std::optional<MixedKde> good;
  std::optional<MixedKde> bad;  // empty bad set -> uniform density

  double predict(std::span<const double> q) const override {
    const double lg = good->log_density(q);
    const double lb = bad ? bad->log_density(q) : 0.0;
    double diff = lg - lb;
    if (std::isnan(diff)) diff = 0.0;
    return -std::exp(std::clamp(diff, -700.0, 700.0));
  }
};

struct ForestImpl final : SurrogateImpl {
  RandomForest forest;
  double predict(std::span<const double> q) const override { return forest.predict(q); }
};

}  // namespace detail

// Fidelity as an extra numeric feature: log-scaled onto [0, 1] over
// [r_min, 1].
inline double fidelity_feature(double r, double r_min) {
  if (r_min >= 1.0) return 1.0;
  return std::clamp(1.0 - std::log(r) / std::log(r_min), 0.0, 1.0);
}

struct SurrogateOptions {
  double r_min = 1.0;
  double good_fraction = 0.15;
  std::optional<std::size_t> min_good;  // default: dimension + 1
  std::uint64_t seed = 0;               // forest randomness
};

// Candidate scorer induced from an archive; lower scores are predicted better.
class SurrogateModel {
public:
  SurrogateModel(SurrogateKind kind, std::size_t trained_at, bool filter_mb, double r_min,
                 bool uses_fidelity, std::shared_ptr<const detail::SurrogateImpl> impl)
      : kind_(kind), trained_at_(trained_at), filter_mb_(filter_mb), r_min_(r_min),
        uses_fidelity_(uses_fidelity), impl_(std::move(impl)) {}

  SurrogateKind kind() const { return kind_; }
  std::size_t trained_at() const { return trained_at_; }
  bool filter_mb() const { return filter_mb_; }

  // `encoded` is ParamSpace::encode output; r is ignored under filter_mb.
  double predict(std::span<const double> encoded, double r) const {
    if (!uses_fidelity_) return impl_->predict(encoded);
    std::vector<double> f(encoded.begin(), encoded.end());
    f.push_back(fidelity_feature(r, r_min_));
    return impl_->predict(f);
  }

  std::vector<double> score(const ParamSpace& space, const std::vector<Config>& candidates,
                            double r) const {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(predict(space.encode(c), r));
    return out;
  }

private:
  SurrogateKind kind_;
  std::size_t trained_at_;
  bool filter_mb_;
  double r_min_;
  bool uses_fidelity_;
  std::shared_ptr<const detail::SurrogateImpl> impl_;
};

// Fits a surrogate of the given kind on the archive. With filter_mb each
// distinct config contributes only its highest-fidelity record and the query
// fidelity is ignored; otherwise every record is a training row with the
// fidelity appended as a feature. TPE always works on the deduplicated
// good/bad split and ignores fidelity.
inline SurrogateModel induce(SurrogateKind kind, const ParamSpace& space, const Archive& archive,
                             bool filter_mb, const SurrogateOptions& opts = {}) {
  if (archive.empty()) throw InductionError("cannot induce a surrogate from an empty archive");
  const auto categorical = space.categorical_mask();

  if (kind == SurrogateKind::tpe) {
    if (archive.distinct_configs() < 2) throw InductionError("TPE needs at least two distinct configs");
    const std::size_t min_good = opts.min_good.value_or(space.size() + 1);
    const auto split = archive.split_good_bad(opts.good_fraction, min_good);
    std::vector<std::size_t> levels(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) levels[i] = space.num_levels(i);
    auto encode_all = [&](const std::vector<std::size_t>& ids) {
      std::vector<std::vector<double>> pts;
      for (auto i : ids) pts.push_back(space.encode(archive[i].config));
      return pts;
    };
    auto impl = std::make_shared<detail::TpeImpl>();
    impl->good.emplace(encode_all(split.good), categorical, levels);
    if (!split.bad.empty()) impl->bad.emplace(encode_all(split.bad), categorical, levels);
    return SurrogateModel(kind, archive.size(), filter_mb, opts.r_min, false, std::move(impl));
  }

  std::vector<std::size_t> rows;
  if (filter_mb) {
    rows = archive.deduplicated();
  } else {
    rows.resize(archive.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  x.reserve(rows.size());
  for (auto i : rows) {
    auto f = space.encode(archive[i].config);
    if (!filter_mb) f.push_back(fidelity_feature(archive[i].fidelity, opts.r_min));
    x.push_back(std::move(f));
    y.push_back(archive[i].cost);
  }
  auto mask = categorical;
  if (!filter_mb) mask.push_back(false);

  std::shared_ptr<const detail::SurrogateImpl> impl;
  if (kind == SurrogateKind::rf) {
    auto forest = std::make_shared<detail::ForestImpl>();
    forest->forest.fit(x, y, opts.seed);
    impl = std::move(forest);
  } else {
    auto knn = std::make_shared<detail::KnnImpl>();
    const std::size_t k = kind == SurrogateKind::knn1 ? 1 : std::min<std::size_t>(7, x.size());
    knn->weights = k == 1 ? std::vector<double>{1.0} : samworth_weights(k, mask.size());
    knn->x = std::move(x);
    knn->y = std::move(y);
    knn->categorical = std::move(mask);
    impl = std::move(knn);
  }
  return SurrogateModel(kind, archive.size(), filter_mb, opts.r_min, !filter_mb, std::move(impl));
}

}  // namespace smashy
