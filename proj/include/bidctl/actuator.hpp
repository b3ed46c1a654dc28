#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "bidctl/controller.hpp"
#include "bidctl/domain.hpp"
#include "bidctl/selector.hpp"

namespace bidctl {

class NonFiniteInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LeverConstraint {
  double min_value = 0.0;
  double max_value = 0.0;
  double max_change_per_interval = 0.0;
};

/// Nearest-rank percentile: the value at rank ceil(p/100 * N) of the sorted
/// sample (1-based). Deterministic, no interpolation.
inline double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty())
    throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

/// Hard envelopes per lever. Viewability threshold and bid multiplier use
/// fixed envelopes; the tolerance envelope is derived from the campaign's
/// predicted-CTR distribution (max = p95, max change = p50 / 5).
struct LeverConstraints {
  LeverConstraint tolerance{0.0, 0.0, 0.0};
  LeverConstraint bid_multiplier{0.1, 10.0, 1.0};
  LeverConstraint viewability_threshold{0.01, 0.6, 0.1};

  const LeverConstraint& get(LeverKind l) const {
    switch (l) {
      case LeverKind::Tolerance: return tolerance;
      case LeverKind::BidMultiplier: return bid_multiplier;
      case LeverKind::ViewabilityThreshold: return viewability_threshold;
    }
    return tolerance;
  }

  static LeverConstraints with_tolerance_bounds(double ctr_p95,
                                                double ctr_p50) {
    LeverConstraints c;
    c.tolerance = {0.0, ctr_p95, ctr_p50 / 5.0};
    return c;
  }

  /// Computed once per campaign over the full ingested inventory.
  static LeverConstraints from_inventory(
      std::span<const ImpressionRecord> inventory) {
    std::vector<double> ctrs;
    ctrs.reserve(inventory.size());
    for (const auto& r : inventory) ctrs.push_back(r.predicted_ctr);
    return with_tolerance_bounds(nearest_rank_percentile(ctrs, 95.0),
                                 nearest_rank_percentile(ctrs, 50.0));
  }
};

/// Multiplicative update: the control signal moves the lever in the exponent,
/// scaled and signed by the weight. A zero weight leaves the lever unchanged.
inline double propose_update(double current, double weight, double phi) {
  if (!std::isfinite(current) || !std::isfinite(weight) || !std::isfinite(phi))
    throw NonFiniteInputError("propose_update needs finite inputs");
  if (weight == 0.0) return current;
  return current * std::exp(weight * phi);
}

/// Caps the step size first, then clips into the lever envelope. Both caps
/// hold simultaneously because `previous` is already in range.
inline double clamp_update(double previous, double proposed,
                           const LeverConstraints& constraints,
                           LeverKind lever) {
  const LeverConstraint& c = constraints.get(lever);
  const double delta = std::clamp(proposed - previous,
                                  -c.max_change_per_interval,
                                  c.max_change_per_interval);
  return std::clamp(previous + delta, c.min_value, c.max_value);
}

struct LeverTransition {
  LeverKind lever = LeverKind::Tolerance;
  double previous = 0.0;
  double proposed = 0.0;  // composed proposal before any clamping
  double final_value = 0.0;
  bool change_capped = false;
  bool range_clipped = false;
};

struct ActuationResult {
  LeverState levers;
  std::array<LeverTransition, kLeverCount> transitions;
};

/// Applies the selected KPIs' signals to the levers. Multiple selected KPIs
/// (AllAtOnce) compose multiplicatively in priority order; the per-interval
/// change cap and envelope are enforced once against the interval-start
/// values. A zero tolerance that must rise starts from a floor of 1% of the
/// tolerance maximum, since a multiplicative step cannot leave zero.
inline ActuationResult apply(const Selection& selection,
                             std::span<const ControlSignal> signals,
                             const WeightMatrix& weights,
                             const LeverState& levers,
                             const LeverConstraints& constraints) {
  ActuationResult result;
  result.levers = levers;

  std::array<double, kLeverCount> proposed{};
  for (LeverKind l : kAllLevers)
    proposed[static_cast<std::size_t>(l)] = levers.get(l);

  for (KpiKind kpi : selection.chosen) {
    const ControlSignal& s = find_signal(signals, kpi);
    for (LeverKind l : kAllLevers) {
      const double w = weights.at(kpi, l);
      if (w == 0.0) continue;
      double& value = proposed[static_cast<std::size_t>(l)];
      if (l == LeverKind::Tolerance && value == 0.0 && w * s.phi > 0.0)
        value = 0.01 * constraints.tolerance.max_value;
      value = propose_update(value, w, s.phi);
    }
  }

  for (std::size_t i = 0; i < kLeverCount; ++i) {
    const LeverKind l = kAllLevers[i];
    const LeverConstraint& c = constraints.get(l);
    const double previous = levers.get(l);
    const double raw = proposed[i];
    const double delta = raw - previous;
    const double capped_delta = std::clamp(delta, -c.max_change_per_interval,
                                           c.max_change_per_interval);
    const double after_cap = previous + capped_delta;
    const double final_value = std::clamp(after_cap, c.min_value, c.max_value);

    LeverTransition& t = result.transitions[i];
    t.lever = l;
    t.previous = previous;
    t.proposed = raw;
    t.final_value = final_value;
    t.change_capped = capped_delta != delta;
    t.range_clipped = final_value != after_cap;

    result.levers.set(l, final_value);
  }
  return result;
}

}  // namespace bidctl
