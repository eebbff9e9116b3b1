#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "smashy/archive.hpp"
#include "smashy/error.hpp"
#include "smashy/objective.hpp"
#include "smashy/rng.hpp"

namespace smashy {

// Per-instance reference points for regret: the lowest cost known for the
// instance and the median cost of uniform random full-fidelity evaluations.
struct InstanceRefs {
  double min_overall = 0.0;
  double rs_full_median = 1.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw SpecError("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// n seeded uniform configs evaluated at r = 1. min_overall is the planted
// optimum when the objective declares one, else the sample minimum.
inline InstanceRefs compute_refs(const Objective& obj, std::uint64_t seed, std::size_t n = 1000) {
  Rng rng(derive_seed(seed, "refs"));
  std::vector<double> ys;
  ys.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    ys.push_back(obj.evaluate(obj.space.sample_one(rng), 1.0, derive_seed(seed, "refs-eval", {k})));
  }
  InstanceRefs refs;
  refs.rs_full_median = median(ys);
  const double sample_min = *std::min_element(ys.begin(), ys.end());
  refs.min_overall = obj.known_optimum ? std::min(*obj.known_optimum, sample_min) : sample_min;
  return refs;
}

inline double normalized_regret(double best_so_far, const InstanceRefs& refs) {
  const double span = refs.rs_full_median - refs.min_overall;
  if (!(span > 0.0)) throw SpecError("degenerate regret references: median must exceed the minimum");
  return (best_so_far - refs.min_overall) / span;
}

inline std::vector<double> normalized_regret(const std::vector<double>& best_so_far, const InstanceRefs& refs) {
  std::vector<double> out;
  out.reserve(best_so_far.size());
  for (double b : best_so_far) out.push_back(normalized_regret(b, refs));
  return out;
}

// n log-spaced budgets from lo to hi inclusive, in full-evaluation units.
inline std::vector<double> budget_grid(double hi, std::size_t n = 64, double lo = 0.1) {
  if (!(hi > lo) || n < 2) throw SpecError("budget grid needs hi > lo and at least two points");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

// Best full-fidelity cost found once cumulative spent fidelity reaches each
// grid budget; +inf before the first full-fidelity record.
inline std::vector<double> best_so_far(const Archive& a, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), std::numeric_limits<double>::infinity());
  double spent = 0.0, best = std::numeric_limits<double>::infinity();
  std::size_t g = 0;
  for (const auto& rec : a.records()) {
    spent += rec.fidelity;
    while (g < grid.size() && grid[g] < spent - 1e-9) out[g++] = best;
    if (rec.fidelity == 1.0) best = std::min(best, rec.cost);
  }
  for (; g < grid.size(); ++g) out[g] = best;
  return out;
}

}  // namespace smashy
