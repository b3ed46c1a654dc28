#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bidctl/actuator.hpp"
#include "bidctl/bidder.hpp"
#include "bidctl/controller.hpp"
#include "bidctl/domain.hpp"
#include "bidctl/selector.hpp"

namespace bidctl {

class InventoryTooSmallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Auction settlement
// ---------------------------------------------------------------------------

struct AuctionOutcome {
  std::size_t impression_index = 0;
  BidDecision decision;
  bool won = false;
  double cost = 0.0;  // clearing price / 1000 when won, else 0
};

/// Second-price settlement: a bid at or above the clearing price wins and
/// pays the clearing price (per impression, so CPM / 1000).
inline AuctionOutcome settle_auction(const BidDecision& decision,
                                     const ImpressionRecord& imp,
                                     std::size_t impression_index = 0) {
  AuctionOutcome out;
  out.impression_index = impression_index;
  out.decision = decision;
  if (decision.is_bid && decision.price_cpm >= imp.clearing_price_cpm) {
    out.won = true;
    out.cost = imp.clearing_price_cpm / 1000.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// KPI measurement
// ---------------------------------------------------------------------------

/// Raw outcome counts; the substrate every KPI is computed from.
struct KpiAggregates {
  std::int64_t bids_placed = 0;
  std::int64_t wins = 0;
  std::int64_t clicks = 0;
  std::int64_t conversions = 0;
  std::int64_t viewable_wins = 0;
  double spend = 0.0;

  void add(const AuctionOutcome& o, const ImpressionRecord& imp) {
    if (o.decision.is_bid) ++bids_placed;
    if (!o.won) return;
    ++wins;
    spend += o.cost;
    if (imp.clicked) ++clicks;
    if (imp.converted) ++conversions;
    if (imp.viewable) ++viewable_wins;
  }
};

/// Cumulative KPI values. Ratios with a zero denominator are absent rather
/// than infinite; the control loop treats absent values as "no new sample".
struct KpiMeasurement {
  KpiAggregates totals;
  std::optional<double> pacing;       // spend / (budget * elapsed_fraction)
  std::optional<double> cpc;          // spend / clicks
  std::optional<double> cpa;          // spend / conversions
  std::optional<double> viewability;  // viewable wins / wins

  std::optional<double> value_for(KpiKind k) const {
    switch (k) {
      case KpiKind::Pacing: return pacing;
      case KpiKind::Cpc: return cpc;
      case KpiKind::Cpa: return cpa;
      case KpiKind::Viewability: return viewability;
    }
    return std::nullopt;
  }
};

inline KpiMeasurement measure_from_aggregates(const KpiAggregates& agg,
                                              const CampaignConfig& config,
                                              double elapsed_fraction) {
  if (!(elapsed_fraction > 0.0) || elapsed_fraction > 1.0)
    throw std::invalid_argument("elapsed_fraction must be in (0, 1]");
  KpiMeasurement m;
  m.totals = agg;
  if (config.budget > 0.0)
    m.pacing = agg.spend / (config.budget * elapsed_fraction);
  if (agg.clicks > 0) m.cpc = agg.spend / static_cast<double>(agg.clicks);
  if (agg.conversions > 0)
    m.cpa = agg.spend / static_cast<double>(agg.conversions);
  if (agg.wins > 0)
    m.viewability =
        static_cast<double>(agg.viewable_wins) / static_cast<double>(agg.wins);
  return m;
}

/// Recomputes every KPI from the full outcome list. `records` is the
/// inventory the outcome indices point into.
inline KpiMeasurement measure_kpis(std::span<const AuctionOutcome> outcomes,
                                   std::span<const ImpressionRecord> records,
                                   const CampaignConfig& config,
                                   double elapsed_fraction) {
  KpiAggregates agg;
  for (const auto& o : outcomes) agg.add(o, records[o.impression_index]);
  return measure_from_aggregates(agg, config, elapsed_fraction);
}

// ---------------------------------------------------------------------------
// Interval replay
// ---------------------------------------------------------------------------

struct IntervalOutcomes {
  std::vector<AuctionOutcome> outcomes;  // one per record, input order
  double spend = 0.0;
};

/// Replays one interval's slice in order. The budget depletes in-flight; a
/// final win may overshoot it, after which every later record is a
/// budget-exhausted no-bid.
inline IntervalOutcomes run_interval(std::span<const ImpressionRecord> slice,
                                     const LeverState& levers,
                                     const CampaignConfig& config,
                                     double remaining_budget,
                                     std::size_t index_base = 0) {
  if (slice.empty())
    throw InventoryTooSmallError("interval slice must be nonempty");
  IntervalOutcomes result;
  result.outcomes.reserve(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const ImpressionRecord& imp = slice[i];
    const BidDecision decision =
        compute_bid(imp, levers, config, remaining_budget);
    AuctionOutcome out = settle_auction(decision, imp, index_base + i);
    remaining_budget -= out.cost;
    result.spend += out.cost;
    result.outcomes.push_back(out);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Campaign loop
// ---------------------------------------------------------------------------

struct KpiIntervalRow {
  KpiKind kpi = KpiKind::Pacing;
  std::optional<double> measured;  // cumulative KPI value, when defined
  std::optional<double> error;     // error sample recorded this interval
  ControlSignal signal;            // zero signal until a first sample exists
  double adjusted_phi = 0.0;       // priority-adjusted signal
};

struct IntervalReport {
  int interval = 0;
  LeverState levers_start;
  LeverState levers_end;
  std::vector<KpiIntervalRow> kpis;  // priority order
  Selection selection;
  KpiAggregates interval_counts;  // this interval only
  KpiMeasurement cumulative;      // campaign-to-date
  std::array<LeverTransition, kLeverCount> transitions{};
};

namespace detail {

inline std::vector<KpiKind> effective_priorities(
    const CampaignConfig& config, const SelectorConfig& selector) {
  std::vector<KpiKind> order = selector.priorities.empty()
                                   ? config.priority_order()
                                   : selector.priorities;
  if (order.size() != config.goals.size())
    throw InvalidConfigError({{ConfigErrorCode::DuplicatePriority,
                               "priority order must cover every goal KPI "
                               "exactly once"}});
  for (const auto& goal : config.goals) {
    std::size_t hits = 0;
    for (KpiKind k : order)
      if (k == goal.kind) ++hits;
    if (hits != 1)
      throw InvalidConfigError({{ConfigErrorCode::DuplicatePriority,
                                 "priority order must cover every goal KPI "
                                 "exactly once"}});
  }
  return order;
}

}  // namespace detail

/// Closed feedback loop over a replay inventory: bid, settle, measure, signal,
/// select, actuate, repeat. One report per interval.
inline std::vector<IntervalReport> run_campaign(
    std::span<const ImpressionRecord> inventory, const CampaignConfig& config,
    const SelectorConfig& selector_config, const WeightMatrix& weights = {},
    const PidSettings& pid = {}) {
  ensure_valid(config);
  if (!(selector_config.exponential_base >= 1.0) ||
      !(selector_config.acceptability_threshold >= 0.0))
    throw InvalidConfigError(
        {{ConfigErrorCode::InvalidArgument,
          "selector needs exponential_base >= 1 and "
          "acceptability_threshold >= 0"}});
  const auto num_intervals = static_cast<std::size_t>(config.num_intervals);
  const std::size_t slice_size = inventory.size() / num_intervals;
  if (slice_size == 0)
    throw InventoryTooSmallError(
        "inventory must hold at least one record per interval");

  SelectorConfig selector = selector_config;
  selector.priorities = detail::effective_priorities(config, selector_config);

  const LeverConstraints constraints =
      LeverConstraints::from_inventory(inventory);
  const int total_kpis = static_cast<int>(selector.priorities.size());

  LeverState levers;
  double remaining = config.budget;
  KpiAggregates cumulative_counts;
  ErrorHistory history;
  std::vector<IntervalReport> reports;
  reports.reserve(num_intervals);

  for (std::size_t i = 0; i < num_intervals; ++i) {
    const std::size_t begin = i * slice_size;
    const std::size_t end =
        (i + 1 == num_intervals) ? inventory.size() : begin + slice_size;

    IntervalReport report;
    report.interval = static_cast<int>(i);
    report.levers_start = levers;

    IntervalOutcomes interval =
        run_interval(inventory.subspan(begin, end - begin), levers, config,
                     remaining, begin);
    remaining -= interval.spend;
    for (const auto& o : interval.outcomes) {
      report.interval_counts.add(o, inventory[o.impression_index]);
      cumulative_counts.add(o, inventory[o.impression_index]);
    }

    const double elapsed =
        static_cast<double>(i + 1) / static_cast<double>(num_intervals);
    report.cumulative =
        measure_from_aggregates(cumulative_counts, config, elapsed);

    std::vector<ControlSignal> signals;
    signals.reserve(selector.priorities.size());
    report.kpis.reserve(selector.priorities.size());
    for (int p = 1; p <= total_kpis; ++p) {
      const KpiKind kind = selector.priorities[static_cast<std::size_t>(p - 1)];
      const KpiGoal& goal = *config.goal_for(kind);

      KpiIntervalRow row;
      row.kpi = kind;
      row.measured = report.cumulative.value_for(kind);
      row.error = record_error_sample(history, kind, goal,
                                      static_cast<int>(i), row.measured);

      row.signal = history.empty(kind)
                       ? ControlSignal{kind, 0.0, 0.0, 0.0, 0.0}
                       : pid_signal(history, kind,
                                    PidGains::for_goal(goal.goal_value,
                                                       pid.integral_window,
                                                       pid.derivative_window));
      row.adjusted_phi = adjusted_signal(row.signal.phi, p, total_kpis,
                                         selector.exponential_base);
      signals.push_back(row.signal);
      report.kpis.push_back(std::move(row));
    }

    report.selection = select(signals, selector);
    ActuationResult actuation =
        apply(report.selection, signals, weights, levers, constraints);
    report.transitions = actuation.transitions;
    report.levers_end = actuation.levers;
    levers = actuation.levers;

    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace bidctl
