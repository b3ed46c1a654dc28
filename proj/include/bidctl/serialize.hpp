#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bidctl/actuator.hpp"
#include "bidctl/controller.hpp"
#include "bidctl/domain.hpp"
#include "bidctl/io.hpp"
#include "bidctl/selector.hpp"
#include "bidctl/simulator.hpp"

namespace bidctl {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

inline void to_json(json& j, const KpiKind& k) { j = to_string(k); }
inline void from_json(const json& j, KpiKind& k) {
  const auto s = j.get<std::string>();
  auto parsed = parse_kpi(s);
  if (!parsed) throw std::invalid_argument("unknown KPI kind '" + s + "'");
  k = *parsed;
}

inline void to_json(json& j, const LeverKind& l) { j = to_string(l); }
inline void from_json(const json& j, LeverKind& l) {
  const auto s = j.get<std::string>();
  for (LeverKind kind : kAllLevers)
    if (s == to_string(kind)) {
      l = kind;
      return;
    }
  throw std::invalid_argument("unknown lever kind '" + s + "'");
}

inline void to_json(json& j, const GoalDirection& d) {
  j = d == GoalDirection::AtMost ? "at_most" : "at_least";
}
inline void from_json(const json& j, GoalDirection& d) {
  const auto s = j.get<std::string>();
  if (s == "at_most") d = GoalDirection::AtMost;
  else if (s == "at_least") d = GoalDirection::AtLeast;
  else throw std::invalid_argument("unknown goal direction '" + s + "'");
}

inline void to_json(json& j, const ControlMethod& m) { j = to_string(m); }
inline void from_json(const json& j, ControlMethod& m) {
  const auto s = j.get<std::string>();
  auto parsed = parse_method(s);
  if (!parsed)
    throw std::invalid_argument("unknown control method '" + s +
                                "' (expected baseline|aao|simple|smart)");
  m = *parsed;
}

// ---------------------------------------------------------------------------
// Campaign configuration
// ---------------------------------------------------------------------------

/// CPC and CPA are cost goals; pacing and viewability are floor goals.
inline GoalDirection default_direction(KpiKind k) {
  return (k == KpiKind::Cpc || k == KpiKind::Cpa) ? GoalDirection::AtMost
                                                  : GoalDirection::AtLeast;
}

inline void to_json(json& j, const KpiGoal& g) {
  j = json{{"kpi", g.kind},
           {"goal_value", g.goal_value},
           {"direction", g.direction}};
}
inline void from_json(const json& j, KpiGoal& g) {
  j.at("kpi").get_to(g.kind);
  j.at("goal_value").get_to(g.goal_value);
  if (j.contains("direction")) j.at("direction").get_to(g.direction);
  else g.direction = default_direction(g.kind);
}

inline void to_json(json& j, const CampaignConfig& c) {
  j = json{{"budget", c.budget},
           {"value_per_click", c.value_per_click},
           {"min_bid_cpm", c.min_bid_cpm},
           {"max_bid_cpm", c.max_bid_cpm},
           {"num_intervals", c.num_intervals},
           {"auctions_per_interval", c.auctions_per_interval},
           {"goals", c.goals}};
}
inline void from_json(const json& j, CampaignConfig& c) {
  j.at("budget").get_to(c.budget);
  j.at("value_per_click").get_to(c.value_per_click);
  j.at("min_bid_cpm").get_to(c.min_bid_cpm);
  j.at("max_bid_cpm").get_to(c.max_bid_cpm);
  j.at("num_intervals").get_to(c.num_intervals);
  j.at("auctions_per_interval").get_to(c.auctions_per_interval);
  c.goals = j.value("goals", std::vector<KpiGoal>{});
}

inline void to_json(json& j, const WeightMatrix& w) {
  j = json::object();
  for (KpiKind k : kAllKpis) {
    json row = json::object();
    for (LeverKind l : kAllLevers) row[to_string(l)] = w.at(k, l);
    j[to_string(k)] = std::move(row);
  }
}
inline void from_json(const json& j, WeightMatrix& w) {
  for (KpiKind k : kAllKpis) {
    if (!j.contains(to_string(k))) continue;
    const json& row = j.at(to_string(k));
    for (LeverKind l : kAllLevers)
      if (row.contains(to_string(l)))
        w.set(k, l, row.at(to_string(l)).get<double>());
  }
}

inline void to_json(json& j, const SelectorConfig& s) {
  j = json{{"method", s.method},
           {"acceptability_threshold", s.acceptability_threshold},
           {"exponential_base", s.exponential_base},
           {"priorities", s.priorities}};
}
inline void from_json(const json& j, SelectorConfig& s) {
  s.method = j.value("method", ControlMethod::SmartSequential);
  s.acceptability_threshold = j.value("acceptability_threshold", 0.05);
  s.exponential_base = j.value("exponential_base", 2.0);
  s.priorities = j.value("priorities", std::vector<KpiKind>{});
}

inline void to_json(json& j, const PidSettings& p) {
  j = json{{"integral_window", p.integral_window},
           {"derivative_window", p.derivative_window}};
}
inline void from_json(const json& j, PidSettings& p) {
  p.integral_window = j.value("integral_window", 10);
  p.derivative_window = j.value("derivative_window", 2);
}

inline void to_json(json& j, const SynthesisParams& p) {
  j = json{{"count", p.count},
           {"seed", p.seed},
           {"ctr_median", p.ctr_median},
           {"ctr_dispersion", p.ctr_dispersion},
           {"view_prob_mean", p.view_prob_mean},
           {"view_prob_concentration", p.view_prob_concentration},
           {"missing_view_prob_rate", p.missing_view_prob_rate},
           {"base_price_cpm", p.base_price_cpm},
           {"price_ctr_coupling", p.price_ctr_coupling},
           {"price_view_coupling", p.price_view_coupling},
           {"price_noise", p.price_noise},
           {"conversion_rate", p.conversion_rate}};
}
inline void from_json(const json& j, SynthesisParams& p) {
  SynthesisParams defaults;
  p.count = j.value("count", defaults.count);
  p.seed = j.value("seed", defaults.seed);
  p.ctr_median = j.value("ctr_median", defaults.ctr_median);
  p.ctr_dispersion = j.value("ctr_dispersion", defaults.ctr_dispersion);
  p.view_prob_mean = j.value("view_prob_mean", defaults.view_prob_mean);
  p.view_prob_concentration =
      j.value("view_prob_concentration", defaults.view_prob_concentration);
  p.missing_view_prob_rate =
      j.value("missing_view_prob_rate", defaults.missing_view_prob_rate);
  p.base_price_cpm = j.value("base_price_cpm", defaults.base_price_cpm);
  p.price_ctr_coupling =
      j.value("price_ctr_coupling", defaults.price_ctr_coupling);
  p.price_view_coupling =
      j.value("price_view_coupling", defaults.price_view_coupling);
  p.price_noise = j.value("price_noise", defaults.price_noise);
  p.conversion_rate = j.value("conversion_rate", defaults.conversion_rate);
}

// ---------------------------------------------------------------------------
// Run reports
// ---------------------------------------------------------------------------

inline void to_json(json& j, const LeverState& s) {
  j = json{{"tolerance", s.tolerance},
           {"bid_multiplier", s.bid_multiplier},
           {"viewability_threshold", s.viewability_threshold}};
}
inline void from_json(const json& j, LeverState& s) {
  j.at("tolerance").get_to(s.tolerance);
  j.at("bid_multiplier").get_to(s.bid_multiplier);
  j.at("viewability_threshold").get_to(s.viewability_threshold);
}

inline void to_json(json& j, const ControlSignal& s) {
  j = json{{"kpi", s.kpi},
           {"phi", s.phi},
           {"p_term", s.p_term},
           {"i_term", s.i_term},
           {"d_term", s.d_term}};
}

inline void to_json(json& j, const KpiAggregates& a) {
  j = json{{"bids_placed", a.bids_placed},
           {"wins", a.wins},
           {"clicks", a.clicks},
           {"conversions", a.conversions},
           {"viewable_wins", a.viewable_wins},
           {"spend", a.spend}};
}

namespace detail {
inline json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}
}  // namespace detail

inline void to_json(json& j, const KpiMeasurement& m) {
  j = json{{"totals", m.totals},
           {"pacing", detail::opt_to_json(m.pacing)},
           {"cpc", detail::opt_to_json(m.cpc)},
           {"cpa", detail::opt_to_json(m.cpa)},
           {"viewability", detail::opt_to_json(m.viewability)}};
}

inline void to_json(json& j, const LeverTransition& t) {
  j = json{{"lever", t.lever},
           {"previous", t.previous},
           {"proposed", t.proposed},
           {"final", t.final_value},
           {"change_capped", t.change_capped},
           {"range_clipped", t.range_clipped}};
}

inline void to_json(json& j, const KpiIntervalRow& r) {
  j = json{{"kpi", r.kpi},
           {"measured", detail::opt_to_json(r.measured)},
           {"error", detail::opt_to_json(r.error)},
           {"signal", r.signal},
           {"adjusted_phi", r.adjusted_phi}};
}

inline void to_json(json& j, const Selection& s) { j = s.chosen; }

inline void to_json(json& j, const IntervalReport& r) {
  j = json{{"interval", r.interval},
           {"levers_start", r.levers_start},
           {"levers_end", r.levers_end},
           {"kpis", r.kpis},
           {"selection", r.selection},
           {"interval_counts", r.interval_counts},
           {"cumulative", r.cumulative},
           {"transitions", r.transitions}};
}

// ---------------------------------------------------------------------------
// Flat time series (one row per interval, for plotting)
// ---------------------------------------------------------------------------

inline std::string timeseries_csv(std::span<const IntervalReport> reports) {
  std::string out;
  out +=
      "interval,tolerance,bid_multiplier,viewability_threshold,bids,wins,"
      "spend,clicks,conversions,viewable_wins,cum_spend,cum_pacing,cum_cpc,"
      "cum_cpa,cum_viewability";
  if (!reports.empty()) {
    for (const auto& row : reports.front().kpis) {
      out += ",phi_";
      out += to_string(row.kpi);
      out += ",adj_phi_";
      out += to_string(row.kpi);
    }
  }
  out += ",selected\n";

  auto opt_field = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& r : reports) {
    out += std::to_string(r.interval);
    out += ',';
    out += format_double(r.levers_start.tolerance);
    out += ',';
    out += format_double(r.levers_start.bid_multiplier);
    out += ',';
    out += format_double(r.levers_start.viewability_threshold);
    out += ',';
    out += std::to_string(r.interval_counts.bids_placed);
    out += ',';
    out += std::to_string(r.interval_counts.wins);
    out += ',';
    out += format_double(r.interval_counts.spend);
    out += ',';
    out += std::to_string(r.interval_counts.clicks);
    out += ',';
    out += std::to_string(r.interval_counts.conversions);
    out += ',';
    out += std::to_string(r.interval_counts.viewable_wins);
    out += ',';
    out += format_double(r.cumulative.totals.spend);
    out += ',';
    out += opt_field(r.cumulative.pacing);
    out += ',';
    out += opt_field(r.cumulative.cpc);
    out += ',';
    out += opt_field(r.cumulative.cpa);
    out += ',';
    out += opt_field(r.cumulative.viewability);
    for (const auto& row : r.kpis) {
      out += ',';
      out += format_double(row.signal.phi);
      out += ',';
      out += format_double(row.adjusted_phi);
    }
    out += ',';
    bool first = true;
    for (KpiKind k : r.selection.chosen) {
      if (!first) out += ';';
      out += to_string(k);
      first = false;
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("failed to parse '" + path + "': " + e.what());
  }
  return j;
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace bidctl
