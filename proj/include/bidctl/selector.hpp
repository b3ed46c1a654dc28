#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bidctl/controller.hpp"
#include "bidctl/domain.hpp"

namespace bidctl {

enum class ControlMethod { Baseline, AllAtOnce, SimpleSequential, SmartSequential };

inline const char* to_string(ControlMethod m) {
  switch (m) {
    case ControlMethod::Baseline: return "baseline";
    case ControlMethod::AllAtOnce: return "aao";
    case ControlMethod::SimpleSequential: return "simple";
    case ControlMethod::SmartSequential: return "smart";
  }
  return "?";
}

inline std::optional<ControlMethod> parse_method(const std::string& s) {
  if (s == "baseline") return ControlMethod::Baseline;
  if (s == "aao") return ControlMethod::AllAtOnce;
  if (s == "simple") return ControlMethod::SimpleSequential;
  if (s == "smart") return ControlMethod::SmartSequential;
  return std::nullopt;
}

struct SelectorConfig {
  ControlMethod method = ControlMethod::SmartSequential;
  double acceptability_threshold = 0.05;  // t: |phi| <= t counts as at goal
  double exponential_base = 2.0;          // B in the priority adjustment
  std::vector<KpiKind> priorities;        // index 0 is priority 1 (highest)
};

/// Which KPIs the actuator moves this interval. Empty means no lever changes;
/// the sequential methods select at most one KPI.
struct Selection {
  std::vector<KpiKind> chosen;

  bool empty() const { return chosen.empty(); }
};

class MissingSignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PriorityOutOfRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Priority-adjusted signal phi' = B^(K-p) * phi for priority p of K (p = 1
/// is highest).
inline double adjusted_signal(double phi, int priority, int total_kpis,
                              double base) {
  if (priority < 1 || priority > total_kpis)
    throw PriorityOutOfRangeError("priority must be in [1, total_kpis]");
  if (!(base >= 1.0))
    throw std::invalid_argument("exponential base must be >= 1");
  return std::pow(base, static_cast<double>(total_kpis - priority)) * phi;
}

inline const ControlSignal& find_signal(std::span<const ControlSignal> signals,
                                        KpiKind kpi) {
  for (const auto& s : signals)
    if (s.kpi == kpi) return s;
  throw MissingSignalError(std::string("no control signal for KPI ") +
                           to_string(kpi));
}

/// Lexicographic walk: the first KPI in priority order that is not
/// acceptably close to its goal is chosen; none if all are acceptable.
inline Selection select_simple(std::span<const ControlSignal> signals,
                               const SelectorConfig& config) {
  for (KpiKind kpi : config.priorities) {
    const auto& s = find_signal(signals, kpi);
    if (std::abs(s.phi) > config.acceptability_threshold)
      return Selection{{kpi}};
  }
  return {};
}

/// Chooses the KPI with the largest |phi'| after priority adjustment. Falls
/// back to no action when every raw |phi| is within the acceptability
/// threshold, so levers do not jitter at goal. Ties resolve to the
/// higher-priority KPI.
inline Selection select_smart(std::span<const ControlSignal> signals,
                              const SelectorConfig& config) {
  const int total = static_cast<int>(config.priorities.size());
  bool any_unacceptable = false;
  KpiKind best = KpiKind::Pacing;
  double best_abs = -1.0;
  for (int p = 1; p <= total; ++p) {
    const KpiKind kpi = config.priorities[static_cast<std::size_t>(p - 1)];
    const auto& s = find_signal(signals, kpi);
    if (std::abs(s.phi) > config.acceptability_threshold)
      any_unacceptable = true;
    const double adj =
        std::abs(adjusted_signal(s.phi, p, total, config.exponential_base));
    if (adj > best_abs) {
      best_abs = adj;
      best = kpi;
    }
  }
  if (!any_unacceptable) return {};
  return Selection{{best}};
}

/// Method dispatch. Baseline never acts; AllAtOnce selects every KPI past the
/// threshold, in priority order.
inline Selection select(std::span<const ControlSignal> signals,
                        const SelectorConfig& config) {
  switch (config.method) {
    case ControlMethod::Baseline:
      return {};
    case ControlMethod::AllAtOnce: {
      Selection sel;
      for (KpiKind kpi : config.priorities) {
        const auto& s = find_signal(signals, kpi);
        if (std::abs(s.phi) > config.acceptability_threshold)
          sel.chosen.push_back(kpi);
      }
      return sel;
    }
    case ControlMethod::SimpleSequential:
      return select_simple(signals, config);
    case ControlMethod::SmartSequential:
      return select_smart(signals, config);
  }
  return {};
}

}  // namespace bidctl
