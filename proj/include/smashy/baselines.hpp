#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smashy/error.hpp"
#include "smashy/optimizer.hpp"

namespace smashy {

enum class Preset { rs, sh, hb, bohb };

inline std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::rs: return "RS";
    case Preset::sh: return "SH";
    case Preset::hb: return "HB";
    case Preset::bohb: return "BOHB";
  }
  return "?";
}

inline std::optional<Preset> parse_preset(std::string_view s) {
  if (s == "RS") return Preset::rs;
  if (s == "SH") return Preset::sh;
  if (s == "HB") return Preset::hb;
  if (s == "BOHB") return Preset::bohb;
  return std::nullopt;
}

// BOHB's own defaults.
inline constexpr double kBohbRho = 1.0 / 3.0;
inline constexpr double kBohbNs = 64.0;

// Hyperband's first-bracket size eta^(s-1) = ceil(s * eta^(s-1) / s).
inline std::size_t hb_first_bracket(double eta, double r_min) {
  const auto s = stage_count(eta, r_min);
  return static_cast<std::size_t>(std::ceil(std::pow(eta, static_cast<double>(s - 1)) - 1e-9));
}

// Named optimizer configurations. mu1 = 0 picks the natural size: 1 for RS,
// eta^(s-1) otherwise.
inline OptimizerSpec preset(Preset p, double eta, double r_min, std::size_t mu1, double budget) {
  if (!(eta > 1.0)) throw SpecError("preset eta must exceed 1");
  OptimizerSpec s;
  s.budget = budget;
  s.filter_method = FilterMethod::tournament;
  s.n_trn_0 = s.n_trn_1 = 1;
  s.ns0_0 = s.ns0_1 = s.ns1_0 = s.ns1_1 = 1.0;
  s.rho_0 = s.rho_1 = 1.0;
  s.sample = GeneratingKind::uniform;
  s.surrogate_learner = SurrogateKind::knn1;
  s.filter_mb = true;
  s.rho_random = true;
  switch (p) {
    case Preset::rs:
      s.mu = mu1 ? mu1 : 1;
      s.batch_method = BatchMethod::equal;
      s.eta_fid = kInfinity;
      s.eta_surv = 1.0;
      break;
    case Preset::sh:
      s.mu = mu1 ? mu1 : hb_first_bracket(eta, r_min);
      s.batch_method = BatchMethod::equal;
      s.refill = false;
      s.eta_fid = s.eta_surv = eta;
      break;
    case Preset::hb:
    case Preset::bohb:
      s.mu = mu1 ? mu1 : hb_first_bracket(eta, r_min);
      s.batch_method = BatchMethod::hb;
      s.eta_fid = s.eta_surv = eta;
      if (p == Preset::bohb) {
        s.sample = GeneratingKind::kde;
        s.surrogate_learner = SurrogateKind::tpe;
        s.rho_0 = s.rho_1 = kBohbRho;
        s.ns0_0 = s.ns0_1 = s.ns1_0 = s.ns1_1 = kBohbNs;
      }
      break;
  }
  s.validate();
  return s;
}

// A spec viewed through the columns of the classic algorithm table. A column
// that cannot influence the run under this spec is empty.
struct AlgorithmRow {
  std::optional<std::vector<std::size_t>> mu;  // mu(b) per bracket
  std::size_t s = 1;
  std::optional<double> eta_surv;
  std::optional<double> eta_budget;
  std::optional<SurrogateKind> inducer;
  double rho = 1.0;
  std::optional<double> ns;  // NaN when the four Ns endpoints differ
  std::optional<BatchMethod> batch_mode;
  GeneratingKind generating = GeneratingKind::uniform;
};

// Only reports settings that can matter: a single stage makes batch sizes,
// etas and batch mode irrelevant; rho = 1 makes the inducer and Ns irrelevant.
// rho is reported from the t = 0 endpoint, or NaN when it varies over time.
inline AlgorithmRow project(const OptimizerSpec& spec, double r_min) {
  AlgorithmRow row;
  const auto sc = plan_schedule(spec, r_min);
  row.s = sc.stages;
  row.rho = spec.rho_0 == spec.rho_1 ? spec.rho_0 : std::nan("");
  row.generating = spec.sample;
  const bool multistage = sc.stages > 1;
  const bool filtered = spec.rho_0 < 1.0 || spec.rho_1 < 1.0;
  if (multistage) {
    row.mu = sc.mu;
    row.eta_surv = spec.eta_surv;
    row.eta_budget = spec.eta_fid;
    row.batch_mode = spec.batch_method;
  }
  if (filtered) {
    row.inducer = spec.surrogate_learner;
    const bool same = spec.ns0_0 == spec.ns0_1 && spec.ns0_0 == spec.ns1_0 && spec.ns0_0 == spec.ns1_1;
    row.ns = same ? spec.ns0_0 : std::nan("");
  }
  return row;
}

}  // namespace smashy
