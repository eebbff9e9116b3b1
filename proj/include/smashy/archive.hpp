#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smashy/error.hpp"
#include "smashy/param_space.hpp"

namespace smashy {

struct EvalRecord {
  Config config;
  double fidelity = 1.0;  // r in (0, 1]
  double cost = 0.0;      // lower is better
  double budget_at = 0.0; // expended budget fraction t when scheduled
  std::int64_t batch_id = 0;
  std::int64_t bracket_id = 0;
  std::int64_t stage_id = 0;
  std::uint64_t seed_tag = 0;
};

struct GoodBadSplit {
  std::vector<std::size_t> good;  // archive indices, best first
  std::vector<std::size_t> bad;
};

// Append-only evaluation log. Insertion order is the chronology.
class Archive {
public:
  void append(EvalRecord rec) {
    if (!(rec.fidelity > 0.0 && rec.fidelity <= 1.0)) {
      throw ArchiveError("fidelity must lie in (0, 1]");
    }
    if (!records_.empty() && rec.budget_at < records_.back().budget_at) {
      throw ArchiveError("budget_at must be nondecreasing over insertion order");
    }
    records_.push_back(std::move(rec));
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<EvalRecord>& records() const { return records_; }
  const EvalRecord& operator[](std::size_t i) const { return records_[i]; }

  // Index of the minimal-cost record (earliest on ties), optionally only
  // among full-fidelity records.
  std::optional<std::size_t> best_index(bool at_full_fidelity = false) const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (at_full_fidelity && records_[i].fidelity != 1.0) continue;
      if (!best || records_[i].cost < records_[*best].cost) best = i;
    }
    return best;
  }

  std::optional<EvalRecord> best(bool at_full_fidelity = false) const {
    auto i = best_index(at_full_fidelity);
    if (!i) return std::nullopt;
    return records_[*i];
  }

  // One index per distinct config: its highest-fidelity record (earliest
  // among equal fidelities). Ordered by first appearance of the config.
  std::vector<std::size_t> deduplicated() const {
    std::map<std::vector<double>, std::size_t> slot;
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      auto [it, inserted] = slot.try_emplace(config_key(records_[i].config), chosen.size());
      if (inserted) {
        chosen.push_back(i);
      } else if (records_[i].fidelity > records_[chosen[it->second]].fidelity) {
        chosen[it->second] = i;
      }
    }
    return chosen;
  }

  std::size_t distinct_configs() const { return deduplicated().size(); }

  // Good = best max(ceil(fraction*n), min_good) distinct configs (clamped to
  // n) by cost at their highest fidelity; bad = the rest.
  GoodBadSplit split_good_bad(double fraction, std::size_t min_good) const {
    if (records_.empty()) throw ArchiveError("split_good_bad on an empty archive");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ArchiveError("good fraction must lie in (0, 1)");
    auto ids = deduplicated();
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      if (records_[a].cost != records_[b].cost) return records_[a].cost < records_[b].cost;
      return a < b;
    });
    const std::size_t n = ids.size();
    const auto by_fraction =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    const std::size_t n_good = std::min(n, std::max(by_fraction, min_good));
    GoodBadSplit split;
    split.good.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_good));
    split.bad.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_good), ids.end());
    return split;
  }

  double fidelity_sum() const {
    double s = 0.0;
    for (const auto& r : records_) s += r.fidelity;
    return s;
  }

private:
  std::vector<EvalRecord> records_;
};

// -- serialization -----------------------------------------------------------
//
// JSON lines, one record per line, keys in this order:
//   config, fidelity, cost, budget_at, batch_id, bracket_id, stage_id, seed_tag
// Non-finite numbers are written as the strings "inf", "-inf", "nan".

namespace detail {

inline nlohmann::ordered_json number_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

template <typename Json>
double json_number(const Json& j) {
  if (j.is_string()) {
    const auto s = j.template get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return parse_double(s);
  }
  return j.template get<double>();
}

}  // namespace detail

inline nlohmann::ordered_json record_to_json(const ParamSpace& space, const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["config"] = config_to_json(space, r.config);
  j["fidelity"] = detail::number_json(r.fidelity);
  j["cost"] = detail::number_json(r.cost);
  j["budget_at"] = detail::number_json(r.budget_at);
  j["batch_id"] = r.batch_id;
  j["bracket_id"] = r.bracket_id;
  j["stage_id"] = r.stage_id;
  j["seed_tag"] = r.seed_tag;
  return j;
}

inline EvalRecord record_from_json(const ParamSpace& space, const nlohmann::json& j) {
  EvalRecord r;
  try {
    r.config = config_from_json(space, j.at("config"));
    r.fidelity = detail::json_number(j.at("fidelity"));
    r.cost = detail::json_number(j.at("cost"));
    r.budget_at = detail::json_number(j.at("budget_at"));
    r.batch_id = j.at("batch_id").get<std::int64_t>();
    r.bracket_id = j.at("bracket_id").get<std::int64_t>();
    r.stage_id = j.at("stage_id").get<std::int64_t>();
    r.seed_tag = j.at("seed_tag").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed archive record: ") + e.what());
  }
  return r;
}

inline std::string to_jsonl(const ParamSpace& space, const Archive& a) {
  std::string out;
  for (const auto& r : a.records()) {
    out += record_to_json(space, r).dump();
    out += '\n';
  }
  return out;
}

inline Archive archive_from_jsonl(const ParamSpace& space, std::string_view text) {
  Archive a;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("archive line is not JSON: ") + e.what());
    }
    a.append(record_from_json(space, j));
  }
  return a;
}

// CSV with the JSONL fields, the config flattened to one column per parameter.
inline std::string to_csv(const ParamSpace& space, const Archive& a) {
  std::ostringstream os;
  os << "index";
  for (const auto& p : space.params()) os << ',' << p.name;
  os << ",fidelity,cost,budget_at,batch_id,bracket_id,stage_id,seed_tag\n";
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& r = a[k];
    os << k;
    for (std::size_t i = 0; i < space.size(); ++i) {
      os << ',';
      if (!r.config.active[i]) continue;
      const auto& p = space[i];
      if (p.kind == ParamKind::categorical) {
        os << p.levels[static_cast<std::size_t>(r.config.values[i])];
      } else {
        os << detail::format_double(r.config.values[i]);
      }
    }
    os << ',' << detail::format_double(r.fidelity) << ',' << detail::format_double(r.cost) << ','
       << detail::format_double(r.budget_at) << ',' << r.batch_id << ',' << r.bracket_id << ','
       << r.stage_id << ',' << r.seed_tag << '\n';
  }
  return os.str();
}

}  // namespace smashy
