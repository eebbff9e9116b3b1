#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "smashy/error.hpp"
#include "smashy/rng.hpp"

namespace smashy {

enum class ParamKind { continuous, integer, categorical };

// Transform under which samplers and surrogates see a numeric axis.
//   linear     x
//   log        log x             (lower > 0)
//   loglog     log log x         (lower > 1)
//   reciprocal -1/x              (lower > 0; upper may be +inf)
enum class Scale { linear, log, loglog, reciprocal };

inline constexpr double kInactive = std::numeric_limits<double>::quiet_NaN();
// Code an inactive parameter takes in an encoded vector.
inline constexpr double kInactiveCode = -1.0;

inline std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::continuous: return "continuous";
    case ParamKind::integer: return "integer";
    case ParamKind::categorical: return "categorical";
  }
  return "?";
}

inline std::string_view to_string(Scale s) {
  switch (s) {
    case Scale::linear: return "linear";
    case Scale::log: return "log";
    case Scale::loglog: return "loglog";
    case Scale::reciprocal: return "reciprocal";
  }
  return "?";
}

inline std::optional<Scale> parse_scale(std::string_view s) {
  if (s == "linear") return Scale::linear;
  if (s == "log") return Scale::log;
  if (s == "loglog") return Scale::loglog;
  if (s == "reciprocal") return Scale::reciprocal;
  return std::nullopt;
}

// The parameter is active iff `parent` is active and takes one of `values`.
struct Condition {
  std::string parent;
  std::vector<std::string> values;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct ParamDef {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string> levels;
  Scale scale = Scale::linear;
  std::optional<Condition> condition;

  static ParamDef continuous(std::string name, double lower, double upper,
                             Scale scale = Scale::linear) {
    return {std::move(name), ParamKind::continuous, lower, upper, {}, scale, std::nullopt};
  }
  static ParamDef integer(std::string name, double lower, double upper,
                          Scale scale = Scale::linear) {
    return {std::move(name), ParamKind::integer, lower, upper, {}, scale, std::nullopt};
  }
  static ParamDef categorical(std::string name, std::vector<std::string> levels) {
    return {std::move(name), ParamKind::categorical, 0.0, 0.0, std::move(levels),
            Scale::linear, std::nullopt};
  }

  ParamDef when(std::string parent, std::vector<std::string> values) const {
    ParamDef copy = *this;
    copy.condition = Condition{std::move(parent), std::move(values)};
    return copy;
  }

  bool is_numeric() const { return kind != ParamKind::categorical; }

  std::optional<std::size_t> level_index(std::string_view level) const {
    auto it = std::find(levels.begin(), levels.end(), level);
    if (it == levels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - levels.begin());
  }

  friend bool operator==(const ParamDef&, const ParamDef&) = default;
};

// A point in a ParamSpace. Values are positional (space order). Categorical
// values hold the level index; inactive parameters hold kInactive.
struct Config {
  std::vector<double> values;
  std::vector<bool> active;

  std::size_t size() const { return values.size(); }

  friend bool operator==(const Config& a, const Config& b) {
    if (a.values.size() != b.values.size() || a.active != b.active) return false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      if (a.active[i] && a.values[i] != b.values[i]) return false;
    }
    return true;
  }
};

// Identity key for a config: inactive slots collapse to -inf so that
// hierarchy-equivalent configs compare equal.
inline std::vector<double> config_key(const Config& c) {
  std::vector<double> key(c.values.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    key[i] = c.active[i] ? c.values[i] : -std::numeric_limits<double>::infinity();
  }
  return key;
}

using ParamValue = std::variant<double, std::string>;

namespace detail {

inline double scale_forward(Scale s, double x) {
  switch (s) {
    case Scale::linear: return x;
    case Scale::log: return std::log(x);
    case Scale::loglog: return std::log(std::log(x));
    case Scale::reciprocal: return std::isinf(x) ? 0.0 : -1.0 / x;
  }
  return x;
}

inline double scale_inverse(Scale s, double g) {
  switch (s) {
    case Scale::linear: return g;
    case Scale::log: return std::exp(g);
    case Scale::loglog: return std::exp(std::exp(g));
    case Scale::reciprocal:
      return g >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / g;
  }
  return g;
}

inline bool in_scale_domain(Scale s, double x) {
  switch (s) {
    case Scale::linear: return std::isfinite(x);
    case Scale::log: return x > 0.0 && std::isfinite(x);
    case Scale::loglog: return x > 1.0 && std::isfinite(x);
    case Scale::reciprocal: return x > 0.0;
  }
  return false;
}

inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline double parse_double(const std::string& token) {
  if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + token + "'");
  }
  if (used != token.size()) throw ParseError("not a number: '" + token + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool valid_token(std::string_view s) {
  if (s.empty()) return false;
  return std::none_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '#';
  });
}

}  // namespace detail

// Mixed, hierarchical search space. Immutable once constructed.
class ParamSpace {
public:
  ParamSpace() = default;

  explicit ParamSpace(std::vector<ParamDef> params) : params_(std::move(params)) {
    validate_definitions();
  }

  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }
  const std::vector<ParamDef>& params() const { return params_; }
  const ParamDef& operator[](std::size_t i) const { return params_[i]; }
  const std::vector<std::size_t>& topological_order() const { return order_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t at(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw SpaceError("unknown parameter '" + std::string(name) + "'");
    return *i;
  }

  // Per encoded axis: true where distances use 0/1 mismatch.
  std::vector<bool> categorical_mask() const {
    std::vector<bool> mask(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      mask[i] = params_[i].kind == ParamKind::categorical;
    }
    return mask;
  }

  std::size_t num_levels(std::size_t i) const { return params_[i].levels.size(); }

  friend bool operator==(const ParamSpace& a, const ParamSpace& b) {
    return a.params_ == b.params_;
  }

  // -- activity ------------------------------------------------------------

  // Whether parameter i's condition holds given the parent's current value.
  bool condition_met(const Config& c, std::size_t i) const {
    const auto& cond = params_[i].condition;
    if (!cond) return true;
    const std::size_t p = parent_[i];
    if (!c.active[p]) return false;
    const double v = c.values[p];
    if (!(v >= 0.0 && v < static_cast<double>(params_[p].levels.size()))) return false;
    const auto& level = params_[p].levels[static_cast<std::size_t>(v)];
    return std::find(cond->values.begin(), cond->values.end(), level) != cond->values.end();
  }

  // Recomputes activity top-down and writes the sentinel into inactive slots.
  // Active slots that hold the sentinel are left as-is; callers that may
  // activate a parameter must fill it (see sample_param).
  void resolve_activity(Config& c) const {
    c.active.assign(params_.size(), true);
    for (auto i : order_) {
      c.active[i] = condition_met(c, i);
      if (!c.active[i]) c.values[i] = kInactive;
    }
  }

  // Copy of c with activity recomputed; values of parameters that become
  // inactive are dropped.
  Config canonical(Config c) const {
    check_arity(c);
    resolve_activity(c);
    return c;
  }

  std::optional<std::string> check(const Config& c) const {
    if (c.values.size() != params_.size() || c.active.size() != params_.size()) {
      return "config arity " + std::to_string(c.values.size()) + " != space dimension " +
             std::to_string(params_.size());
    }
    for (auto i : order_) {
      const auto& p = params_[i];
      const bool should = condition_met(c, i);
      if (c.active[i] != should) return "activity of '" + p.name + "' inconsistent with its condition";
      if (!c.active[i]) {
        if (!std::isnan(c.values[i])) return "inactive '" + p.name + "' does not carry the sentinel";
        continue;
      }
      if (auto why = check_value(i, c.values[i])) return why;
    }
    return std::nullopt;
  }

  bool is_valid(const Config& c) const { return !check(c).has_value(); }

  void validate(const Config& c) const {
    if (auto why = check(c)) throw SpaceError("invalid config: " + *why);
  }

  // -- scale transforms ----------------------------------------------------

  // Maps a numeric value to [0, 1] under the axis scale.
  double to_unit(std::size_t i, double x) const {
    const auto& p = params_[i];
    if (p.kind == ParamKind::categorical) {
      const auto levels = p.levels.size();
      return levels <= 1 ? 0.0 : x / static_cast<double>(levels - 1);
    }
    if (x == p.lower) return 0.0;
    if (x == p.upper) return 1.0;
    const double g0 = detail::scale_forward(p.scale, p.lower);
    const double g1 = detail::scale_forward(p.scale, p.upper);
    return (detail::scale_forward(p.scale, x) - g0) / (g1 - g0);
  }

  double from_unit(std::size_t i, double u) const {
    const auto& p = params_[i];
    u = std::clamp(u, 0.0, 1.0);
    if (p.kind == ParamKind::categorical) {
      const auto levels = p.levels.size();
      return levels <= 1 ? 0.0 : std::round(u * static_cast<double>(levels - 1));
    }
    if (u == 0.0) return p.lower;
    if (u == 1.0) return p.upper;
    const double g0 = detail::scale_forward(p.scale, p.lower);
    const double g1 = detail::scale_forward(p.scale, p.upper);
    double x = detail::scale_inverse(p.scale, g0 + u * (g1 - g0));
    x = std::clamp(x, p.lower, p.upper);
    if (p.kind == ParamKind::integer) x = std::round(x);
    return x;
  }

  // -- encoding ------------------------------------------------------------

  // Numeric axes -> [0,1] on their scale; categorical -> index/(L-1);
  // inactive -> kInactiveCode.
  std::vector<double> encode(const Config& c) const {
    if (c.values.size() != params_.size() || c.active.size() != params_.size()) {
      throw EncodingError("config arity does not match space dimension");
    }
    std::vector<double> v(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!c.active[i]) {
        v[i] = kInactiveCode;
        continue;
      }
      if (auto why = check_value(i, c.values[i])) throw EncodingError(*why);
      v[i] = to_unit(i, c.values[i]);
    }
    return v;
  }

  Config decode(std::span<const double> v) const {
    if (v.size() != params_.size()) {
      throw EncodingError("encoded vector has arity " + std::to_string(v.size()) +
                          ", expected " + std::to_string(params_.size()));
    }
    Config c{std::vector<double>(v.size()), std::vector<bool>(v.size())};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == kInactiveCode) {
        c.active[i] = false;
        c.values[i] = kInactive;
        continue;
      }
      if (!(v[i] >= -1e-12 && v[i] <= 1.0 + 1e-12)) {
        throw EncodingError("encoded value out of range on axis '" + params_[i].name + "'");
      }
      c.active[i] = true;
      c.values[i] = from_unit(i, v[i]);
    }
    for (auto i : order_) {
      if (c.active[i] != condition_met(c, i)) {
        throw EncodingError("encoded activity of '" + params_[i].name +
                            "' is inconsistent with its condition");
      }
    }
    return c;
  }

  // -- sampling ------------------------------------------------------------

  // One draw of parameter i, uniform on its scale. Integers are drawn
  // continuously on [lower-0.5, upper+0.5] (where the scale allows), rounded,
  // and rejected when they fall outside the bounds.
  double sample_param(std::size_t i, Rng& rng) const {
    const auto& p = params_[i];
    if (p.kind == ParamKind::categorical) {
      return static_cast<double>(rng.below(p.levels.size()));
    }
    if (p.kind == ParamKind::continuous) return from_unit(i, rng.uniform());
    double lo = p.lower - 0.5, hi = p.upper + 0.5;
    if (!detail::in_scale_domain(p.scale, lo)) lo = p.lower;
    const double g0 = detail::scale_forward(p.scale, lo);
    const double g1 = detail::scale_forward(p.scale, hi);
    while (true) {
      const double x = std::round(detail::scale_inverse(p.scale, g0 + rng.uniform() * (g1 - g0)));
      if (x >= p.lower && x <= p.upper) return x;
    }
  }

  Config sample_one(Rng& rng) const {
    Config c{std::vector<double>(params_.size(), kInactive),
             std::vector<bool>(params_.size(), false)};
    for (auto i : order_) {
      c.active[i] = condition_met(c, i);
      if (c.active[i]) c.values[i] = sample_param(i, rng);
    }
    return c;
  }

  std::vector<Config> sample_uniform(std::size_t n, Rng& rng) const {
    std::vector<Config> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(sample_one(rng));
    return out;
  }

  // -- name based access ---------------------------------------------------

  double value(const Config& c, std::string_view name) const { return c.values[at(name)]; }

  bool is_active(const Config& c, std::string_view name) const { return c.active[at(name)]; }

  const std::string& level(const Config& c, std::string_view name) const {
    const auto i = at(name);
    if (params_[i].kind != ParamKind::categorical) {
      throw SpaceError("'" + std::string(name) + "' is not categorical");
    }
    if (!c.active[i]) throw SpaceError("'" + std::string(name) + "' is inactive");
    return params_[i].levels[static_cast<std::size_t>(c.values[i])];
  }

  // Builds a config from named values. Parameters left unnamed must turn out
  // inactive; named values of inactive parameters are dropped.
  Config make(const std::map<std::string, ParamValue>& named) const {
    for (const auto& [name, v] : named) (void)at(name);
    Config c{std::vector<double>(params_.size(), kInactive),
             std::vector<bool>(params_.size(), false)};
    for (auto i : order_) {
      const auto& p = params_[i];
      c.active[i] = condition_met(c, i);
      if (!c.active[i]) continue;
      auto it = named.find(p.name);
      if (it == named.end()) throw SpaceError("missing value for active parameter '" + p.name + "'");
      if (p.kind == ParamKind::categorical) {
        const auto* s = std::get_if<std::string>(&it->second);
        if (!s) throw SpaceError("categorical '" + p.name + "' needs a level name");
        auto idx = p.level_index(*s);
        if (!idx) throw SpaceError("'" + *s + "' is not a level of '" + p.name + "'");
        c.values[i] = static_cast<double>(*idx);
      } else {
        const auto* x = std::get_if<double>(&it->second);
        if (!x) throw SpaceError("numeric '" + p.name + "' needs a number");
        c.values[i] = *x;
      }
    }
    validate(c);
    return c;
  }

private:
  std::optional<std::string> check_value(std::size_t i, double x) const {
    const auto& p = params_[i];
    if (p.kind == ParamKind::categorical) {
      if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(p.levels.size())) {
        return "value of '" + p.name + "' is not a declared level";
      }
      return std::nullopt;
    }
    if (std::isnan(x) || x < p.lower || x > p.upper) {
      return "value " + detail::format_double(x) + " of '" + p.name + "' outside [" +
             detail::format_double(p.lower) + ", " + detail::format_double(p.upper) + "]";
    }
    if (p.kind == ParamKind::integer && x != std::floor(x)) {
      return "value of integer '" + p.name + "' is not integral";
    }
    return std::nullopt;
  }

  void check_arity(const Config& c) const {
    if (c.values.size() != params_.size() || c.active.size() != params_.size()) {
      throw SpaceError("config arity does not match space dimension");
    }
  }

  void validate_definitions() {
    const std::size_t n = params_.size();
    parent_.assign(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = params_[i];
      if (!detail::valid_token(p.name)) throw SpaceError("invalid parameter name '" + p.name + "'");
      for (std::size_t j = 0; j < i; ++j) {
        if (params_[j].name == p.name) throw SpaceError("duplicate parameter name '" + p.name + "'");
      }
      if (p.kind == ParamKind::categorical) {
        if (p.levels.empty()) throw SpaceError("categorical '" + p.name + "' has no levels");
        for (std::size_t a = 0; a < p.levels.size(); ++a) {
          if (!detail::valid_token(p.levels[a])) {
            throw SpaceError("invalid level '" + p.levels[a] + "' in '" + p.name + "'");
          }
          for (std::size_t b = 0; b < a; ++b) {
            if (p.levels[a] == p.levels[b]) {
              throw SpaceError("duplicate level '" + p.levels[a] + "' in '" + p.name + "'");
            }
          }
        }
        if (p.scale != Scale::linear) throw SpaceError("categorical '" + p.name + "' cannot have a scale");
      } else {
        if (!std::isfinite(p.lower) || std::isnan(p.upper) || !(p.lower < p.upper)) {
          throw SpaceError("'" + p.name + "' needs lower < upper");
        }
        if (std::isinf(p.upper) &&
            !(p.kind == ParamKind::continuous && p.scale == Scale::reciprocal)) {
          throw SpaceError("'" + p.name + "': only continuous reciprocal axes may be unbounded");
        }
        if (p.scale == Scale::log && !(p.lower > 0.0)) {
          throw SpaceError("log-scaled '" + p.name + "' needs lower > 0");
        }
        if (p.scale == Scale::loglog && !(p.lower > 1.0)) {
          throw SpaceError("loglog-scaled '" + p.name + "' needs lower > 1");
        }
        if (p.scale == Scale::reciprocal && !(p.lower > 0.0)) {
          throw SpaceError("reciprocal-scaled '" + p.name + "' needs lower > 0");
        }
        if (p.kind == ParamKind::integer &&
            (p.lower != std::floor(p.lower) || p.upper != std::floor(p.upper))) {
          throw SpaceError("integer '" + p.name + "' needs integral bounds");
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cond = params_[i].condition;
      if (!cond) continue;
      auto pi = index_of(cond->parent);
      if (!pi) throw SpaceError("'" + params_[i].name + "' depends on undeclared '" + cond->parent + "'");
      if (*pi == i) throw SpaceError("'" + params_[i].name + "' depends on itself");
      const auto& parent = params_[*pi];
      if (parent.kind != ParamKind::categorical) {
        throw SpaceError("parent '" + parent.name + "' of '" + params_[i].name + "' is not categorical");
      }
      if (cond->values.empty()) throw SpaceError("condition of '" + params_[i].name + "' lists no values");
      for (const auto& v : cond->values) {
        if (!parent.level_index(v)) {
          throw SpaceError("condition of '" + params_[i].name + "' names unknown level '" + v + "'");
        }
      }
      parent_[i] = *pi;
    }
    // Kahn's algorithm, stable in declaration order.
    order_.clear();
    std::vector<bool> placed(n, false);
    while (order_.size() < n) {
      bool progressed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (placed[i]) continue;
        if (parent_[i] == n || placed[parent_[i]]) {
          placed[i] = true;
          order_.push_back(i);
          progressed = true;
        }
      }
      if (!progressed) throw SpaceError("dependency cycle among parameter conditions");
    }
  }

  std::vector<ParamDef> params_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> order_;
};

// -- text format -------------------------------------------------------------
//
// One parameter per line, '#' starts a comment:
//
//   <name> continuous  <lower> <upper> [<scale>] [if <parent> in <level>,...]
//   <name> integer     <lower> <upper> [<scale>] [if <parent> in <level>,...]
//   <name> categorical <level>,<level>,...       [if <parent> in <level>,...]
//
// <scale> is one of linear (default), log, loglog, reciprocal; an unbounded
// reciprocal upper bound is written `inf`.

inline ParamSpace parse_space(std::string_view text) {
  std::vector<ParamDef> defs;
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
    auto fail = [&](const std::string& why) -> ParseError {
      return ParseError("space line " + std::to_string(lineno) + ": " + why);
    };
    if (tok.size() < 3) throw fail("expected '<name> <kind> <domain>'");
    ParamDef def;
    def.name = tok[0];
    std::size_t pos = 2;
    if (tok[1] == "categorical") {
      def = ParamDef::categorical(tok[0], detail::split(tok[2], ','));
      pos = 3;
    } else if (tok[1] == "continuous" || tok[1] == "integer") {
      def.kind = tok[1] == "continuous" ? ParamKind::continuous : ParamKind::integer;
      if (tok.size() < 4) throw fail("numeric parameter needs lower and upper bounds");
      def.lower = detail::parse_double(tok[2]);
      def.upper = detail::parse_double(tok[3]);
      pos = 4;
      if (pos < tok.size() && tok[pos] != "if") {
        auto s = parse_scale(tok[pos]);
        if (!s) throw fail("unknown scale '" + tok[pos] + "'");
        def.scale = *s;
        ++pos;
      }
    } else {
      throw fail("unknown kind '" + tok[1] + "'");
    }
    if (pos < tok.size()) {
      if (tok.size() != pos + 4 || tok[pos] != "if" || tok[pos + 2] != "in") {
        throw fail("expected 'if <parent> in <levels>'");
      }
      def.condition = Condition{tok[pos + 1], detail::split(tok[pos + 3], ',')};
    }
    defs.push_back(std::move(def));
  }
  return ParamSpace(std::move(defs));
}

inline std::string to_text(const ParamSpace& space) {
  std::ostringstream os;
  for (const auto& p : space.params()) {
    os << p.name << ' ' << to_string(p.kind) << ' ';
    if (p.kind == ParamKind::categorical) {
      for (std::size_t i = 0; i < p.levels.size(); ++i) os << (i ? "," : "") << p.levels[i];
    } else {
      os << detail::format_double(p.lower) << ' ' << detail::format_double(p.upper) << ' '
         << to_string(p.scale);
    }
    if (p.condition) {
      os << " if " << p.condition->parent << " in ";
      for (std::size_t i = 0; i < p.condition->values.size(); ++i) {
        os << (i ? "," : "") << p.condition->values[i];
      }
    }
    os << '\n';
  }
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

// -- JSON --------------------------------------------------------------------

// {name: number | level-string | null}; null marks an inactive parameter.
inline nlohmann::ordered_json config_to_json(const ParamSpace& space, const Config& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space[i];
    if (!c.active[i]) {
      j[p.name] = nullptr;
    } else if (p.kind == ParamKind::categorical) {
      j[p.name] = p.levels[static_cast<std::size_t>(c.values[i])];
    } else if (p.kind == ParamKind::integer) {
      j[p.name] = static_cast<std::int64_t>(c.values[i]);
    } else if (std::isinf(c.values[i])) {
      j[p.name] = "inf";
    } else {
      j[p.name] = c.values[i];
    }
  }
  return j;
}

template <typename Json>
Config config_from_json(const ParamSpace& space, const Json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  std::map<std::string, ParamValue> named;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto i = space.index_of(it.key());
    if (!i) throw ParseError("unknown parameter '" + it.key() + "' in config");
    const auto& v = it.value();
    if (v.is_null()) continue;
    if (space[*i].kind == ParamKind::categorical) {
      named[it.key()] = v.template get<std::string>();
    } else if (v.is_string()) {
      named[it.key()] = detail::parse_double(v.template get<std::string>());
    } else {
      named[it.key()] = v.template get<double>();
    }
  }
  return space.make(named);
}

}  // namespace smashy
