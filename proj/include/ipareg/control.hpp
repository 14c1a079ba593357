#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "ipareg/errors.hpp"
#include "ipareg/interval.hpp"
#include "ipareg/newton.hpp"

namespace ipareg {

/// One control cycle's plant feedback: output estimate and its sample
/// derivative with respect to the applied control.
struct CycleResult {
  double y;
  double dy;
};

/// Anything that can be regulated: resettable to a seed, then driven one
/// control cycle at a time while holding the control constant within a cycle.
template <class P>
concept CyclePlant = requires(P p, double u, std::uint64_t seed) {
  p.reset(seed);
  { p.run_cycle(u) } -> std::convertible_to<CycleResult>;
};

/// Deterministic memoryless plant y = f(u) with known derivative. Used to
/// check the controller against the bare Newton iteration and in scenarios
/// that need a noise-free reference plant.
template <class F, class DF>
class FunctionPlant {
 public:
  FunctionPlant(F f, DF df) : f_(std::move(f)), df_(std::move(df)) {}
  void reset(std::uint64_t) {}
  CycleResult run_cycle(double u) { return {f_(u), df_(u)}; }

 private:
  F f_;
  DF df_;
};

struct SetpointSegment {
  int start_cycle;
  double r;
};

/// Piecewise-constant setpoint: segment k applies from its start_cycle until
/// the next segment begins. Starts must be strictly increasing with the
/// first at cycle 1.
class SetpointSchedule {
 public:
  explicit SetpointSchedule(std::vector<SetpointSegment> segments)
      : segments_(std::move(segments)) {
    if (segments_.empty() || segments_.front().start_cycle != 1)
      throw InvalidParams("schedule must start at cycle 1");
    for (std::size_t i = 1; i < segments_.size(); ++i)
      if (segments_[i].start_cycle <= segments_[i - 1].start_cycle)
        throw InvalidParams("schedule start cycles must strictly increase");
  }

  static SetpointSchedule constant(double r) {
    return SetpointSchedule({{1, r}});
  }

  double setpoint_at(int n) const {
    double r = segments_.front().r;
    for (const auto& s : segments_) {
      if (s.start_cycle > n) break;
      r = s.r;
    }
    return r;
  }

  const std::vector<SetpointSegment>& segments() const { return segments_; }

 private:
  std::vector<SetpointSegment> segments_;
};

enum class GainMode {
  Adaptive,  // A_n = 1 / (previous cycle's derivative estimate)
  Fixed,     // constant integrator gain
  OpenLoop,  // no updates; u stays at u1 (fixed-input baselines)
};

struct ControllerConfig {
  double k_scale = 1.0;
  Interval interval;
  GainMode mode = GainMode::Adaptive;
  double fixed_gain = 0.0;
  double divisor_floor = kDefaultDivisorFloor;

  void validate() const {
    if (!(k_scale > 0.0 && k_scale <= 1.0))
      throw InvalidParams("k_scale must be in (0, 1]");
    if (mode == GainMode::Fixed && !(fixed_gain > 0.0))
      throw InvalidParams("fixed gain must be > 0");
  }
};

/// Completed-cycle controller state; A is the gain to apply at the next
/// update.
struct RegulationState {
  int n;
  double u;
  double y;
  double e;
  double A;
};

/// Integrator gain from a derivative estimate. Adaptive mode inverts the
/// estimate (sign preserved: plants with negative slope get negative gains).
inline double gain(double deriv_estimate, const ControllerConfig& cfg) {
  switch (cfg.mode) {
    case GainMode::Adaptive:
      if (std::abs(deriv_estimate) <= cfg.divisor_floor)
        throw DivisorTooSmall(deriv_estimate);
      return 1.0 / deriv_estimate;
    case GainMode::Fixed:
      return cfg.fixed_gain;
    case GainMode::OpenLoop:
      return 0.0;
  }
  throw InvalidParams("gain: bad mode");
}

/// u_next = project(u + k * A * e).
inline double control_update(const RegulationState& state,
                             const ControllerConfig& cfg) {
  return project(state.u + cfg.k_scale * state.A * state.e, cfg.interval);
}

inline double error_signal(double r, double y) { return r - y; }

struct RunTrace {
  struct Row {
    int n;
    double u;
    double y;
    double e;
    double A;      // gain applied at the start of cycle n (0 for n = 1)
    double deriv;  // plant derivative estimate produced during cycle n
    double r;
  };
  std::vector<Row> rows;

  std::vector<double> y_values() const { return column(&Row::y); }
  std::vector<double> u_values() const { return column(&Row::u); }
  std::vector<double> gain_values() const { return column(&Row::A); }

 private:
  std::vector<double> column(double Row::*field) const {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& row : rows) v.push_back(row.*field);
    return v;
  }
};

/// Closed-loop regulation for n_cycles control cycles.
///
/// Cycle 1 runs open loop at u1; each later cycle first updates the control
/// from the previous cycle's feedback, u_n = P(u_{n-1} + k A_n e), then runs
/// the plant. A_n comes from cycle n-1's derivative estimate, so no quantity
/// is used before the cycle that produces it. A setpoint change takes effect
/// at the start of its cycle: the update error is r_n - y_{n-1}.
template <CyclePlant P>
RunTrace run_regulation(P& plant, const SetpointSchedule& schedule,
                        const ControllerConfig& cfg, double u1, int n_cycles,
                        std::uint64_t seed) {
  cfg.validate();
  if (n_cycles < 1) throw InvalidParams("n_cycles must be >= 1");
  if (!cfg.interval.contains(u1))
    throw InvalidParams("u1 outside the control interval");

  plant.reset(seed);

  RunTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(n_cycles));

  double u = u1;
  double A = 0.0;      // no gain exists before the first plant feedback
  double prev_y = 0.0;
  for (int n = 1; n <= n_cycles; ++n) {
    const double r = schedule.setpoint_at(n);
    if (n > 1 && cfg.mode != GainMode::OpenLoop)
      u = control_update({n - 1, u, prev_y, error_signal(r, prev_y), A}, cfg);

    CycleResult res;
    try {
      res = plant.run_cycle(u);
    } catch (const Error& err) {
      throw PlantCycleError(n, err.what());
    }

    const double e = error_signal(r, res.y);
    trace.rows.push_back({n, u, res.y, e, A, res.dy, r});

    if (cfg.mode != GainMode::OpenLoop) {
      try {
        A = gain(res.dy, cfg);
      } catch (const DivisorTooSmall& d) {
        throw DivisorTooSmall(d.value, n);
      }
    }
    prev_y = res.y;
  }
  return trace;
}

}  // namespace ipareg
