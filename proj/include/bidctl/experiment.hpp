#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bidctl/serialize.hpp"
#include "bidctl/simulator.hpp"

namespace bidctl {

class MissingBaselineKpiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Goal derivation
// ---------------------------------------------------------------------------

/// One goal-derivation rule: goal = multiplier * baseline measured value.
/// A multiplier above 1 on a floor KPI (raise viewability 20% -> 1.2) or
/// below 1 on a cost KPI (halve CPA -> 0.5).
struct GoalRule {
  KpiKind kind = KpiKind::Pacing;
  double multiplier = 1.0;
  GoalDirection direction = GoalDirection::AtLeast;
};

inline std::vector<KpiGoal> derive_goals(const KpiMeasurement& baseline,
                                         std::span<const GoalRule> rules) {
  std::vector<KpiGoal> goals;
  goals.reserve(rules.size());
  for (const auto& rule : rules) {
    const auto value = baseline.value_for(rule.kind);
    if (!value)
      throw MissingBaselineKpiError(
          std::string("baseline run produced no measurement for KPI ") +
          to_string(rule.kind));
    goals.push_back({rule.kind, rule.multiplier * *value, rule.direction});
  }
  return goals;
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  CampaignConfig campaign;  // goals are derived; any preset goals are ignored
  std::vector<ControlMethod> methods = {ControlMethod::AllAtOnce,
                                        ControlMethod::SimpleSequential,
                                        ControlMethod::SmartSequential};
  std::vector<std::vector<KpiKind>> priority_orders;
  std::vector<GoalRule> goal_rules;
  std::vector<std::uint64_t> seeds = {1};

  SynthesisParams synthesis;               // used when no inventory is given
  bool resample_with_replacement = true;   // used when an inventory is given
  std::size_t sample_count = 0;            // 0 = size of the base inventory

  double acceptability_threshold = 0.05;
  double exponential_base = 2.0;
  WeightMatrix weights;
  PidSettings pid;
};

inline void validate_spec(const ExperimentSpec& spec) {
  if (spec.goal_rules.empty())
    throw InvalidConfigError(
        {{ConfigErrorCode::EmptyGoalList, "experiment needs goal rules"}});
  if (spec.priority_orders.empty())
    throw InvalidConfigError({{ConfigErrorCode::InvalidArgument,
                               "experiment needs at least one priority "
                               "order"}});
  if (spec.seeds.empty())
    throw InvalidConfigError(
        {{ConfigErrorCode::InvalidArgument, "experiment needs seeds"}});
  for (const auto& order : spec.priority_orders) {
    if (order.size() != spec.goal_rules.size())
      throw InvalidConfigError({{ConfigErrorCode::DuplicatePriority,
                                 "each priority order must cover every "
                                 "goal-rule KPI exactly once"}});
    for (const auto& rule : spec.goal_rules) {
      if (std::count(order.begin(), order.end(), rule.kind) != 1)
        throw InvalidConfigError({{ConfigErrorCode::DuplicatePriority,
                                   "each priority order must cover every "
                                   "goal-rule KPI exactly once"}});
    }
  }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

using OptKpiValues = std::array<std::optional<double>, kKpiCount>;

inline std::optional<double>& kpi_slot(OptKpiValues& v, KpiKind k) {
  return v[static_cast<std::size_t>(k)];
}
inline const std::optional<double>& kpi_slot(const OptKpiValues& v,
                                             KpiKind k) {
  return v[static_cast<std::size_t>(k)];
}

struct BaselineResult {
  std::uint64_t seed = 0;
  KpiMeasurement final_kpis;
  std::vector<KpiGoal> derived_goals;
  std::vector<IntervalReport> series;
};

struct CellResult {
  ControlMethod method = ControlMethod::Baseline;
  std::vector<KpiKind> priority;
  std::uint64_t seed = 0;
  KpiMeasurement final_kpis;
  OptKpiValues percent_change;  // vs the same-seed baseline, per rule KPI
  std::vector<IntervalReport> series;
};

struct MeanRow {
  ControlMethod method = ControlMethod::Baseline;
  std::vector<KpiKind> priority;
  OptKpiValues mean_percent_change;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<BaselineResult> baselines;  // one per seed
  std::vector<CellResult> cells;          // method x priority x seed
  std::vector<MeanRow> mean_rows;         // unweighted mean across seeds
};

// ---------------------------------------------------------------------------
// Grid sweep
// ---------------------------------------------------------------------------

namespace detail {

inline OptKpiValues percent_change_vs(const KpiMeasurement& cell,
                                      const KpiMeasurement& baseline,
                                      std::span<const GoalRule> rules) {
  OptKpiValues out{};
  for (const auto& rule : rules) {
    const auto c = cell.value_for(rule.kind);
    const auto b = baseline.value_for(rule.kind);
    if (c && b && *b != 0.0)
      kpi_slot(out, rule.kind) = (*c - *b) / *b * 100.0;
  }
  return out;
}

/// A positive-goal-value placeholder set so the baseline run passes config
/// validation; baseline selection never reads the goals.
inline std::vector<KpiGoal> placeholder_goals(
    std::span<const GoalRule> rules) {
  std::vector<KpiGoal> goals;
  goals.reserve(rules.size());
  for (const auto& rule : rules)
    goals.push_back({rule.kind, 1.0, rule.direction});
  return goals;
}

inline std::vector<KpiGoal> reorder_goals(std::span<const KpiGoal> goals,
                                          std::span<const KpiKind> order) {
  std::vector<KpiGoal> out;
  out.reserve(order.size());
  for (KpiKind k : order)
    for (const auto& g : goals)
      if (g.kind == k) out.push_back(g);
  return out;
}

}  // namespace detail

namespace detail {

struct SeedResults {
  BaselineResult baseline;
  std::vector<CellResult> cells;
};

inline SeedResults run_seed(const ExperimentSpec& spec, std::uint64_t seed,
                            std::span<const ImpressionRecord> base_inventory) {
  std::vector<ImpressionRecord> inventory;
  if (base_inventory.empty()) {
    SynthesisParams params = spec.synthesis;
    params.seed = seed;
    if (params.count == 0)
      params.count =
          static_cast<std::size_t>(spec.campaign.num_intervals) *
          static_cast<std::size_t>(spec.campaign.auctions_per_interval);
    inventory = generate_inventory(params);
  } else {
    const std::size_t count =
        spec.sample_count > 0 ? spec.sample_count : base_inventory.size();
    inventory = sample_inventory(base_inventory, count, seed,
                                 spec.resample_with_replacement);
  }

  // Baseline first: its achieved KPIs parameterize every other cell.
  CampaignConfig baseline_config = spec.campaign;
  baseline_config.goals = placeholder_goals(spec.goal_rules);
  SelectorConfig baseline_selector;
  baseline_selector.method = ControlMethod::Baseline;
  baseline_selector.acceptability_threshold = spec.acceptability_threshold;
  baseline_selector.exponential_base = spec.exponential_base;

  SeedResults result;
  result.baseline.seed = seed;
  result.baseline.series = run_campaign(inventory, baseline_config,
                                        baseline_selector, spec.weights,
                                        spec.pid);
  result.baseline.final_kpis = result.baseline.series.back().cumulative;
  result.baseline.derived_goals =
      derive_goals(result.baseline.final_kpis, spec.goal_rules);

  for (ControlMethod method : spec.methods) {
    if (method == ControlMethod::Baseline) continue;  // always run above
    for (const auto& order : spec.priority_orders) {
      CampaignConfig config = spec.campaign;
      config.goals = reorder_goals(result.baseline.derived_goals, order);

      SelectorConfig selector;
      selector.method = method;
      selector.acceptability_threshold = spec.acceptability_threshold;
      selector.exponential_base = spec.exponential_base;
      selector.priorities = order;

      CellResult cell;
      cell.method = method;
      cell.priority = order;
      cell.seed = seed;
      cell.series =
          run_campaign(inventory, config, selector, spec.weights, spec.pid);
      cell.final_kpis = cell.series.back().cumulative;
      cell.percent_change = percent_change_vs(
          cell.final_kpis, result.baseline.final_kpis, spec.goal_rules);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace detail

/// Runs the full method x priority-order grid on one inventory per seed.
/// Every cell of one seed consumes the identical record sequence; all
/// comparisons are against that seed's baseline run. Seeds execute in
/// parallel (campaigns share no mutable state); the report is assembled
/// single-threaded in seed order, so the output does not depend on
/// scheduling.
inline ExperimentReport run_experiment(
    const ExperimentSpec& spec,
    std::span<const ImpressionRecord> base_inventory = {}) {
  validate_spec(spec);

  ExperimentReport report;
  report.spec = spec;

  std::vector<std::future<detail::SeedResults>> futures;
  futures.reserve(spec.seeds.size());
  for (std::uint64_t seed : spec.seeds)
    futures.push_back(std::async(std::launch::async, [&spec, seed,
                                                      base_inventory] {
      return detail::run_seed(spec, seed, base_inventory);
    }));

  for (auto& future : futures) {
    auto seed_results = future.get();
    report.baselines.push_back(std::move(seed_results.baseline));
    for (auto& cell : seed_results.cells)
      report.cells.push_back(std::move(cell));
  }

  // Unweighted mean across seeds, per (method, priority) cell.
  for (ControlMethod method : spec.methods) {
    if (method == ControlMethod::Baseline) continue;
    for (const auto& order : spec.priority_orders) {
      MeanRow row;
      row.method = method;
      row.priority = order;
      for (const auto& rule : spec.goal_rules) {
        double sum = 0.0;
        int n = 0;
        for (const auto& cell : report.cells) {
          if (cell.method != method || cell.priority != order) continue;
          if (const auto& pc = kpi_slot(cell.percent_change, rule.kind)) {
            sum += *pc;
            ++n;
          }
        }
        if (n > 0)
          kpi_slot(row.mean_percent_change, rule.kind) =
              sum / static_cast<double>(n);
      }
      report.mean_rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void to_json(json& j, const GoalRule& r) {
  j = json{{"kpi", r.kind},
           {"multiplier", r.multiplier},
           {"direction", r.direction}};
}
inline void from_json(const json& j, GoalRule& r) {
  j.at("kpi").get_to(r.kind);
  j.at("multiplier").get_to(r.multiplier);
  if (j.contains("direction")) j.at("direction").get_to(r.direction);
  else r.direction = default_direction(r.kind);
}

inline void to_json(json& j, const ExperimentSpec& s) {
  j = json{{"campaign", s.campaign},
           {"methods", s.methods},
           {"priority_orders", s.priority_orders},
           {"goal_rules", s.goal_rules},
           {"seeds", s.seeds},
           {"synthesis", s.synthesis},
           {"resample_with_replacement", s.resample_with_replacement},
           {"sample_count", s.sample_count},
           {"acceptability_threshold", s.acceptability_threshold},
           {"exponential_base", s.exponential_base},
           {"weights", s.weights},
           {"pid", s.pid}};
}
inline void from_json(const json& j, ExperimentSpec& s) {
  ExperimentSpec defaults;
  if (j.contains("campaign")) j.at("campaign").get_to(s.campaign);
  s.methods = j.value("methods", defaults.methods);
  s.priority_orders =
      j.value("priority_orders", std::vector<std::vector<KpiKind>>{});
  s.goal_rules = j.value("goal_rules", std::vector<GoalRule>{});
  s.seeds = j.value("seeds", defaults.seeds);
  s.synthesis = j.value("synthesis", defaults.synthesis);
  s.resample_with_replacement =
      j.value("resample_with_replacement", defaults.resample_with_replacement);
  s.sample_count = j.value("sample_count", defaults.sample_count);
  s.acceptability_threshold =
      j.value("acceptability_threshold", defaults.acceptability_threshold);
  s.exponential_base = j.value("exponential_base", defaults.exponential_base);
  s.weights = j.value("weights", defaults.weights);
  s.pid = j.value("pid", defaults.pid);
}

namespace detail {

inline json opt_values_to_json(const OptKpiValues& values,
                               std::span<const GoalRule> rules) {
  json j = json::object();
  for (const auto& rule : rules)
    j[to_string(rule.kind)] = opt_to_json(kpi_slot(values, rule.kind));
  return j;
}

}  // namespace detail

inline json experiment_report_json(const ExperimentReport& report) {
  json j;
  j["spec"] = report.spec;

  json baselines = json::array();
  for (const auto& b : report.baselines) {
    baselines.push_back(json{{"seed", b.seed},
                             {"kpis", b.final_kpis},
                             {"derived_goals", b.derived_goals}});
  }
  j["baseline"] = std::move(baselines);

  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back(json{
        {"method", c.method},
        {"priority", c.priority},
        {"seed", c.seed},
        {"kpis", c.final_kpis},
        {"percent_change_vs_baseline",
         detail::opt_values_to_json(c.percent_change,
                                    report.spec.goal_rules)}});
  }
  j["cells"] = std::move(cells);

  json means = json::array();
  for (const auto& m : report.mean_rows) {
    means.push_back(json{{"method", m.method},
                         {"priority", m.priority},
                         {"percent_change",
                          detail::opt_values_to_json(
                              m.mean_percent_change,
                              report.spec.goal_rules)}});
  }
  j["mean_percent_change"] = std::move(means);
  return j;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

inline std::string priority_slug(std::span<const KpiKind> order) {
  std::string out;
  for (KpiKind k : order) {
    if (!out.empty()) out += '-';
    out += to_string(k);
  }
  return out;
}

/// Writes comparison.json plus one time-series CSV per cell, named
/// <method>_<priority>.csv (baseline.csv for the baseline run). With several
/// seeds the files go into seed_<n>/ subdirectories.
inline void write_experiment_outputs(const ExperimentReport& report,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "comparison.json").string(),
                  experiment_report_json(report).dump(2) + "\n");

  const bool multi_seed = report.spec.seeds.size() > 1;
  auto cell_dir = [&](std::uint64_t seed) {
    fs::path dir(out_dir);
    if (multi_seed) dir /= "seed_" + std::to_string(seed);
    fs::create_directories(dir);
    return dir;
  };

  for (const auto& b : report.baselines)
    write_text_file((cell_dir(b.seed) / "baseline.csv").string(),
                    timeseries_csv(b.series));
  for (const auto& c : report.cells) {
    const std::string name = std::string(to_string(c.method)) + "_" +
                             priority_slug(c.priority) + ".csv";
    write_text_file((cell_dir(c.seed) / name).string(),
                    timeseries_csv(c.series));
  }
}

}  // namespace bidctl
