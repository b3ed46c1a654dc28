#pragma once

#include <algorithm>

#include "bidctl/domain.hpp"

namespace bidctl {

enum class NoBidReason {
  None,
  BelowTolerance,
  BelowViewThreshold,
  NoViewProbability,
  BudgetExhausted,
};

inline const char* to_string(NoBidReason r) {
  switch (r) {
    case NoBidReason::None: return "none";
    case NoBidReason::BelowTolerance: return "below_tolerance";
    case NoBidReason::BelowViewThreshold: return "below_view_threshold";
    case NoBidReason::NoViewProbability: return "no_view_probability";
    case NoBidReason::BudgetExhausted: return "budget_exhausted";
  }
  return "?";
}

struct BidDecision {
  bool is_bid = false;
  double price_cpm = 0.0;
  NoBidReason reason = NoBidReason::None;

  static BidDecision bid(double price) { return {true, price, NoBidReason::None}; }
  static BidDecision no_bid(NoBidReason r) { return {false, 0.0, r}; }

  bool operator==(const BidDecision&) const = default;
};

/// Bid price is linear in predicted CTR: m * V * pCTR, expressed per mille
/// and capped into [min_bid, max_bid]. The tolerance and viewability
/// threshold levers filter the auction out before any price is computed.
/// A record with no view probability is skipped whenever the viewability
/// filter is active (threshold > 0) -- under the standard envelope the
/// threshold floor is 0.01, so such records are biddable only when the
/// filter is explicitly disabled.
inline BidDecision compute_bid(const ImpressionRecord& imp,
                               const LeverState& levers,
                               const CampaignConfig& config,
                               double remaining_budget) {
  if (remaining_budget <= 0.0)
    return BidDecision::no_bid(NoBidReason::BudgetExhausted);
  if (imp.predicted_ctr < levers.tolerance)
    return BidDecision::no_bid(NoBidReason::BelowTolerance);
  if (levers.viewability_threshold > 0.0) {
    if (!imp.predicted_view_prob.has_value())
      return BidDecision::no_bid(NoBidReason::NoViewProbability);
    if (*imp.predicted_view_prob < levers.viewability_threshold)
      return BidDecision::no_bid(NoBidReason::BelowViewThreshold);
  }
  const double raw = levers.bid_multiplier * config.value_per_click *
                     imp.predicted_ctr * 1000.0;
  return BidDecision::bid(
      std::clamp(raw, config.min_bid_cpm, config.max_bid_cpm));
}

}  // namespace bidctl
