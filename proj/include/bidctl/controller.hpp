#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include "bidctl/domain.hpp"

namespace bidctl {

class EmptyHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteMeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// KPI error is GV - measured for every goal direction; the weight-matrix
/// signs carry the lever direction for at-most KPIs.
inline double compute_error(const KpiGoal& goal, double measured) {
  if (!std::isfinite(measured))
    throw NonFiniteMeasurementError("measured KPI value is not finite");
  return goal.goal_value - measured;
}

struct ErrorSample {
  int interval = 0;
  double error = 0.0;
};

/// Per-KPI error series, one sample per interval at most, intervals strictly
/// increasing. Owned by the campaign loop and appended between intervals.
class ErrorHistory {
 public:
  void record(KpiKind kpi, int interval, double error) {
    if (!std::isfinite(error))
      throw NonFiniteMeasurementError("error sample is not finite");
    auto& samples = per_kpi_[static_cast<std::size_t>(kpi)];
    if (!samples.empty() && interval <= samples.back().interval)
      throw std::invalid_argument(
          "error samples must have strictly increasing interval indices");
    samples.push_back({interval, error});
  }

  std::span<const ErrorSample> samples(KpiKind kpi) const {
    return per_kpi_[static_cast<std::size_t>(kpi)];
  }

  bool empty(KpiKind kpi) const {
    return per_kpi_[static_cast<std::size_t>(kpi)].empty();
  }

 private:
  std::array<std::vector<ErrorSample>, kKpiCount> per_kpi_;
};

/// PID gains. K_P normalizes by the goal value so signals from different
/// KPIs are comparable; K_I = K_P / T_I and K_D = T_D * K_P are derived.
struct PidGains {
  double kp = 1.0;
  int integral_window = 10;   // T_I, samples summed by the integral term
  int derivative_window = 2;  // T_D, scales the derivative gain

  static PidGains for_goal(double goal_value, int t_i = 10, int t_d = 2) {
    if (!(goal_value > 0.0))
      throw std::invalid_argument("PID gains need a positive goal value");
    if (t_i < 1 || t_d < 1)
      throw std::invalid_argument("PID windows must be positive");
    return PidGains{1.0 / goal_value, t_i, t_d};
  }

  double ki() const { return kp / static_cast<double>(integral_window); }
  double kd() const { return static_cast<double>(derivative_window) * kp; }
};

/// Campaign-level PID settings; K_P itself always derives from each goal.
struct PidSettings {
  int integral_window = 10;
  int derivative_window = 2;
};

struct ControlSignal {
  KpiKind kpi = KpiKind::Pacing;
  double phi = 0.0;     // combined, gain-weighted signal
  double p_term = 0.0;  // latest error, pre-gain
  double i_term = 0.0;  // windowed error sum, pre-gain
  double d_term = 0.0;  // latest minus previous error, pre-gain
};

/// Advances the error series by one interval. A present measurement records
/// a fresh error; an absent one carries the previous error forward, so the
/// signal does not falsely read "at goal". Returns the sample recorded, or
/// nothing when the KPI has never been measured.
inline std::optional<double> record_error_sample(
    ErrorHistory& history, KpiKind kpi, const KpiGoal& goal, int interval,
    std::optional<double> measured) {
  if (measured) {
    const double error = compute_error(goal, *measured);
    history.record(kpi, interval, error);
    return error;
  }
  if (!history.empty(kpi)) {
    const double error = history.samples(kpi).back().error;
    history.record(kpi, interval, error);
    return error;
  }
  return std::nullopt;
}

/// Combines the P/I/D terms of the recorded error series into one signal.
/// The integral sums the most recent min(T_I, available) samples with unit
/// interval width; the derivative is 0 until a second sample exists.
inline ControlSignal pid_signal(const ErrorHistory& history, KpiKind kpi,
                                const PidGains& gains) {
  auto samples = history.samples(kpi);
  if (samples.empty())
    throw EmptyHistoryError("no error samples recorded for KPI");

  const std::size_t n = samples.size();
  const double latest = samples[n - 1].error;

  double windowed_sum = 0.0;
  const std::size_t window =
      std::min<std::size_t>(n, static_cast<std::size_t>(gains.integral_window));
  for (std::size_t i = n - window; i < n; ++i) windowed_sum += samples[i].error;

  const double delta = n >= 2 ? latest - samples[n - 2].error : 0.0;

  ControlSignal s;
  s.kpi = kpi;
  s.p_term = latest;
  s.i_term = windowed_sum;
  s.d_term = delta;
  s.phi = gains.kp * s.p_term + gains.ki() * s.i_term + gains.kd() * s.d_term;
  return s;
}

}  // namespace bidctl
