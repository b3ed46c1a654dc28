#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bidctl {

// ---------------------------------------------------------------------------
// KPIs and levers
// ---------------------------------------------------------------------------

enum class KpiKind { Pacing, Cpc, Cpa, Viewability };
enum class LeverKind { Tolerance, BidMultiplier, ViewabilityThreshold };

inline constexpr std::size_t kKpiCount = 4;
inline constexpr std::size_t kLeverCount = 3;

inline constexpr std::array<KpiKind, kKpiCount> kAllKpis = {
    KpiKind::Pacing, KpiKind::Cpc, KpiKind::Cpa, KpiKind::Viewability};
inline constexpr std::array<LeverKind, kLeverCount> kAllLevers = {
    LeverKind::Tolerance, LeverKind::BidMultiplier,
    LeverKind::ViewabilityThreshold};

inline const char* to_string(KpiKind k) {
  switch (k) {
    case KpiKind::Pacing: return "pacing";
    case KpiKind::Cpc: return "cpc";
    case KpiKind::Cpa: return "cpa";
    case KpiKind::Viewability: return "viewability";
  }
  return "?";
}

inline const char* to_string(LeverKind l) {
  switch (l) {
    case LeverKind::Tolerance: return "tolerance";
    case LeverKind::BidMultiplier: return "bid_multiplier";
    case LeverKind::ViewabilityThreshold: return "viewability_threshold";
  }
  return "?";
}

inline std::optional<KpiKind> parse_kpi(const std::string& s) {
  for (KpiKind k : kAllKpis)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Impression log records
// ---------------------------------------------------------------------------

/// One historical auction opportunity. `clicked`/`viewable`/`converted` are
/// the counterfactual outcomes observed if the impression is won.
struct ImpressionRecord {
  double predicted_ctr = 0.0;                    // in [0, 1]
  std::optional<double> predicted_view_prob;     // in [0, 1] when present
  double clearing_price_cpm = 0.0;               // second-price clearing, >= 0
  bool clicked = false;
  bool viewable = false;
  bool converted = false;
};

// ---------------------------------------------------------------------------
// Goals and campaign configuration
// ---------------------------------------------------------------------------

enum class GoalDirection { AtMost, AtLeast };

struct KpiGoal {
  KpiKind kind = KpiKind::Pacing;
  double goal_value = 1.0;  // GV, strictly positive
  GoalDirection direction = GoalDirection::AtLeast;
};

/// Campaign-level settings. `goals` is ordered by priority: index 0 is the
/// highest-priority KPI (p = 1).
struct CampaignConfig {
  double budget = 0.0;           // total campaign budget, currency units
  double value_per_click = 1.0;  // V in bid = m * V * pCTR * 1000
  double min_bid_cpm = 0.0;
  double max_bid_cpm = 0.0;
  int num_intervals = 1;
  int auctions_per_interval = 1;
  std::vector<KpiGoal> goals;

  std::vector<KpiKind> priority_order() const {
    std::vector<KpiKind> out;
    out.reserve(goals.size());
    for (const auto& g : goals) out.push_back(g.kind);
    return out;
  }

  const KpiGoal* goal_for(KpiKind k) const {
    for (const auto& g : goals)
      if (g.kind == k) return &g;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Lever state
// ---------------------------------------------------------------------------

/// Current values of the three levers. Default-constructed state is the
/// campaign starting point: bid on everything, neutral multiplier, viewability
/// threshold at its floor.
struct LeverState {
  double tolerance = 0.0;
  double bid_multiplier = 1.0;
  double viewability_threshold = 0.01;

  double get(LeverKind l) const {
    switch (l) {
      case LeverKind::Tolerance: return tolerance;
      case LeverKind::BidMultiplier: return bid_multiplier;
      case LeverKind::ViewabilityThreshold: return viewability_threshold;
    }
    return 0.0;
  }

  void set(LeverKind l, double v) {
    switch (l) {
      case LeverKind::Tolerance: tolerance = v; break;
      case LeverKind::BidMultiplier: bid_multiplier = v; break;
      case LeverKind::ViewabilityThreshold: viewability_threshold = v; break;
    }
  }

  bool operator==(const LeverState&) const = default;
};

// ---------------------------------------------------------------------------
// KPI x lever weight matrix
// ---------------------------------------------------------------------------

/// Signed weights w_{k,l}. The sign gives the direction a lever moves to
/// raise the KPI; magnitude scales the move. A zero weight means the lever is
/// not used for that KPI.
class WeightMatrix {
 public:
  WeightMatrix() {
    for (auto& row : w_) row.fill(0.0);
    // Pacing and CPC/CPA: lower tolerance, raise bid multiplier.
    set(KpiKind::Pacing, LeverKind::Tolerance, -0.5);
    set(KpiKind::Pacing, LeverKind::BidMultiplier, 0.5);
    set(KpiKind::Cpc, LeverKind::Tolerance, -0.5);
    set(KpiKind::Cpc, LeverKind::BidMultiplier, 0.5);
    set(KpiKind::Cpa, LeverKind::Tolerance, -0.5);
    set(KpiKind::Cpa, LeverKind::BidMultiplier, 0.5);
    set(KpiKind::Viewability, LeverKind::ViewabilityThreshold, 1.0);
  }

  double at(KpiKind k, LeverKind l) const {
    return w_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
  }

  void set(KpiKind k, LeverKind l, double v) {
    w_[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = v;
  }

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::array<std::array<double, kLeverCount>, kKpiCount> w_;
};

/// Direction sanity for a custom matrix: raising the viewability threshold
/// raises viewability (nonnegative weight); raising tolerance lowers spend
/// (nonpositive weight for pacing).
inline bool weight_directions_ok(const WeightMatrix& w) {
  return w.at(KpiKind::Viewability, LeverKind::ViewabilityThreshold) >= 0.0 &&
         w.at(KpiKind::Pacing, LeverKind::Tolerance) <= 0.0;
}

// ---------------------------------------------------------------------------
// Config validation
// ---------------------------------------------------------------------------

enum class ConfigErrorCode {
  NonPositiveGoal,
  DuplicatePriority,
  BidCapInverted,
  EmptyGoalList,
  NegativeBudget,
  NonPositiveValuePerClick,
  NegativeMinBid,
  InvalidIntervalCount,
  InvalidAuctionsPerInterval,
  InvalidArgument,
};

struct ConfigIssue {
  ConfigErrorCode code;
  std::string message;
};

inline const char* to_string(ConfigErrorCode c) {
  switch (c) {
    case ConfigErrorCode::NonPositiveGoal: return "NonPositiveGoal";
    case ConfigErrorCode::DuplicatePriority: return "DuplicatePriority";
    case ConfigErrorCode::BidCapInverted: return "BidCapInverted";
    case ConfigErrorCode::EmptyGoalList: return "EmptyGoalList";
    case ConfigErrorCode::NegativeBudget: return "NegativeBudget";
    case ConfigErrorCode::NonPositiveValuePerClick:
      return "NonPositiveValuePerClick";
    case ConfigErrorCode::NegativeMinBid: return "NegativeMinBid";
    case ConfigErrorCode::InvalidIntervalCount: return "InvalidIntervalCount";
    case ConfigErrorCode::InvalidAuctionsPerInterval:
      return "InvalidAuctionsPerInterval";
    case ConfigErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "?";
}

/// Checks every CampaignConfig invariant; returns one issue per violation.
/// An empty result means the config is usable as-is.
inline std::vector<ConfigIssue> validate_config(const CampaignConfig& c) {
  std::vector<ConfigIssue> issues;
  auto add = [&](ConfigErrorCode code, std::string msg) {
    issues.push_back({code, std::move(msg)});
  };

  if (!(c.budget >= 0.0) || !std::isfinite(c.budget))
    add(ConfigErrorCode::NegativeBudget, "budget must be finite and >= 0");
  if (!(c.value_per_click > 0.0) || !std::isfinite(c.value_per_click))
    add(ConfigErrorCode::NonPositiveValuePerClick,
        "value_per_click must be finite and > 0");
  if (!(c.min_bid_cpm >= 0.0) || !std::isfinite(c.min_bid_cpm))
    add(ConfigErrorCode::NegativeMinBid, "min_bid_cpm must be finite and >= 0");
  if (c.max_bid_cpm < c.min_bid_cpm || !std::isfinite(c.max_bid_cpm))
    add(ConfigErrorCode::BidCapInverted,
        "max_bid_cpm must be finite and >= min_bid_cpm");
  if (c.num_intervals < 1)
    add(ConfigErrorCode::InvalidIntervalCount, "num_intervals must be >= 1");
  if (c.auctions_per_interval < 1)
    add(ConfigErrorCode::InvalidAuctionsPerInterval,
        "auctions_per_interval must be >= 1");

  if (c.goals.empty()) {
    add(ConfigErrorCode::EmptyGoalList, "at least one KPI goal is required");
  } else {
    std::array<int, kKpiCount> seen{};
    for (const auto& g : c.goals) {
      if (!(g.goal_value > 0.0) || !std::isfinite(g.goal_value))
        add(ConfigErrorCode::NonPositiveGoal,
            std::string("goal for ") + to_string(g.kind) +
                " must be finite and > 0");
      if (++seen[static_cast<std::size_t>(g.kind)] == 2)
        add(ConfigErrorCode::DuplicatePriority,
            std::string("KPI ") + to_string(g.kind) +
                " appears more than once in the priority order");
    }
  }
  return issues;
}

class InvalidConfigError : public std::runtime_error {
 public:
  explicit InvalidConfigError(std::vector<ConfigIssue> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<ConfigIssue>& issues) {
    std::string out = "invalid campaign config:";
    for (const auto& i : issues) {
      out += " [";
      out += to_string(i.code);
      out += "] ";
      out += i.message;
      out += ";";
    }
    return out;
  }
  std::vector<ConfigIssue> issues_;
};

/// Throwing form of validate_config for call sites that cannot proceed.
inline void ensure_valid(const CampaignConfig& c) {
  auto issues = validate_config(c);
  if (!issues.empty()) throw InvalidConfigError(std::move(issues));
}

}  // namespace bidctl
