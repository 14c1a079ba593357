#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ipareg/control.hpp"
#include "ipareg/errors.hpp"
#include "ipareg/rng.hpp"

namespace ipareg {

/// Production-inventory fluid net: orders arrive in batches into p1
/// (backorders), parts flow into p2 (inventory) at a threshold-switched rate,
/// and the machine drains both places at a common rate.
struct PetriConfig {
  double V3 = 6.0;    // machine max rate
  double V21 = 2.15;  // parts rate while backorders are at or below the threshold
  double V22 = 6.0;   // parts rate while backorders exceed the threshold
  double order_period = 50.0;
  double order_lo = 30.0;  // batch size range (degenerate lo == hi is allowed)
  double order_hi = 70.0;
  double t_f = 1000.0;
  double m1_0 = 0.0;
  double m2_0 = 0.0;
  bool reset_each_cycle = true;

  enum class Estimator { Propagation, CrnFallback };
  Estimator estimator = Estimator::Propagation;
  double crn_delta = 1e-3;

  void validate() const {
    if (!(V21 >= 0.0 && V21 <= V3 && V3 <= V22))
      throw InvalidParams("petri: need 0 <= V21 <= V3 <= V22");
    if (!(t_f > 0.0)) throw InvalidParams("petri: t_f > 0");
    if (!(order_period > 0.0)) throw InvalidParams("petri: order_period > 0");
    if (order_lo > order_hi || order_lo < 0.0)
      throw InvalidParams("petri: order size range invalid");
    if (m1_0 < 0.0 || m2_0 < 0.0) throw InvalidParams("petri: markings >= 0");
  }
};

/// Instantaneous net state: markings and resolved flow rates.
struct FluidNetState {
  double t = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double v3 = 0.0;
};

struct PetriRates {
  double v1;
  double v2;
  double v3;
};

/// Flow rates for the current markings. Between batches v1 = 0 (orders are
/// impulses); v2 switches at the backorder threshold (weak inequality: at
/// m1 == u the slow rate applies); v3 runs at V3 capped by the inflow of any
/// empty input place. An empty place whose inflow exceeds V3 does not bind:
/// it refills immediately, so v3 <= V3 always.
inline PetriRates rate_resolve(const FluidNetState& s, double u,
                               const PetriConfig& cfg) {
  PetriRates r{};
  r.v1 = 0.0;
  r.v2 = s.m1 <= u ? cfg.V21 : cfg.V22;
  r.v3 = cfg.V3;
  if (s.m1 <= 0.0) r.v3 = std::min(r.v3, r.v1);
  if (s.m2 <= 0.0) r.v3 = std::min(r.v3, r.v2);
  return r;
}

struct PetriBatch {
  double time;
  double amount;
};

/// Carried state for the derivative propagation: markings plus their
/// sensitivities to the threshold.
struct PetriSimState {
  double m1 = 0.0;
  double m2 = 0.0;
  double dm1_du = 0.0;
  double dm2_du = 0.0;
};

struct PetriCycleOutput {
  double integral = 0.0;     // int_0^tf m2 dt
  double integral_du = 0.0;  // d/du of the integral, by event propagation
  PetriSimState final_state;
};

/// Exact event-to-event simulation of one horizon [0, t_f].
///
/// Rates are piecewise constant, so marking trajectories are piecewise linear
/// and every event time (threshold crossing, place emptying, batch, horizon
/// end) is solved in closed form; the m2 integral is accumulated exactly.
///
/// The threshold sensitivity is propagated alongside: within a segment the
/// fixed-time partials dm/du are constant; at an event at time t* with
/// du-derivative t*' the partials jump by (rate_before - rate_after) * t*'.
/// Threshold crossings (m1 = u) have t*' = (1 - dm1/du)/m1dot, place
/// emptyings have t*' = -dm/du / mdot, and batches and the horizon end have
/// t*' = 0. Since m2 is continuous and the horizon endpoints are fixed, the
/// integral's derivative reduces to the sum of dm2/du * segment length.
///
/// Batches landing exactly on another event are applied first.
inline PetriCycleOutput simulate_petri_horizon(
    double u, const PetriConfig& cfg, std::vector<PetriBatch> batches,
    PetriSimState st, std::vector<FluidNetState>* trajectory = nullptr) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double t_f = cfg.t_f;
  PetriCycleOutput out;

  double t = 0.0;
  std::size_t next_batch = 0;
  long guard = 0;
  const long guard_max = 64 + 16 * (static_cast<long>(batches.size()) + 8);

  auto record = [&](const PetriRates& r) {
    if (trajectory) trajectory->push_back({t, st.m1, st.m2, r.v1, r.v2, r.v3});
  };

  while (t < t_f) {
    if (++guard > guard_max)
      throw EventStall("petri: event times failed to advance");

    // batches due now jump m1 before rates are resolved
    while (next_batch < batches.size() && batches[next_batch].time <= t) {
      st.m1 += batches[next_batch].amount;
      ++next_batch;
    }

    const FluidNetState probe{t, st.m1, st.m2, 0.0, 0.0, 0.0};
    const PetriRates rates = rate_resolve(probe, u, cfg);
    record(rates);
    const double m1dot = rates.v1 - rates.v3;
    const double m2dot = rates.v2 - rates.v3;

    enum class Ev { End, Batch, Threshold, M1Empty, M2Empty };
    double te = t_f;
    Ev ev = Ev::End;
    if (next_batch < batches.size() && batches[next_batch].time < te) {
      te = batches[next_batch].time;
      ev = Ev::Batch;
    }
    if (st.m1 > u && m1dot < 0.0) {
      const double tc = t + (st.m1 - u) / (-m1dot);
      if (tc < te) {
        te = tc;
        ev = Ev::Threshold;
      }
    } else if (st.m1 > 0.0 && m1dot < 0.0) {
      const double tc = t + st.m1 / (-m1dot);
      if (tc < te) {
        te = tc;
        ev = Ev::M1Empty;
      }
    }
    if (st.m2 > 0.0 && m2dot < 0.0) {
      const double tc = t + st.m2 / (-m2dot);
      if (tc < te) {
        te = tc;
        ev = Ev::M2Empty;
      }
    }

    const double dt = te - t;
    out.integral += st.m2 * dt + 0.5 * m2dot * dt * dt;
    out.integral_du += st.dm2_du * dt;
    st.m1 += m1dot * dt;
    st.m2 += m2dot * dt;
    // true zero crossings are event-detected; only rounding dust remains
    if (st.m1 < 0.0) st.m1 = 0.0;
    if (st.m2 < 0.0) st.m2 = 0.0;
    t = te;

    // event-time derivative and the resulting partial jumps
    double t_prime = 0.0;
    switch (ev) {
      case Ev::Threshold:
        st.m1 = u;
        t_prime = (1.0 - st.dm1_du) / m1dot;
        break;
      case Ev::M1Empty:
        st.m1 = 0.0;
        t_prime = -st.dm1_du / m1dot;
        break;
      case Ev::M2Empty:
        st.m2 = 0.0;
        t_prime = -st.dm2_du / m2dot;
        break;
      case Ev::Batch:
      case Ev::End:
        break;  // u-independent event times
    }
    if (t_prime != 0.0) {
      const FluidNetState after{t, st.m1, st.m2, 0.0, 0.0, 0.0};
      const PetriRates ra = rate_resolve(after, u, cfg);
      st.dm1_du += (m1dot - (ra.v1 - ra.v3)) * t_prime;
      st.dm2_du += (m2dot - (ra.v2 - ra.v3)) * t_prime;
    }
  }

  // batches at exactly t_f fall into the next horizon
  out.final_state = st;
  if (trajectory) {
    const PetriRates rates =
        rate_resolve({t, st.m1, st.m2, 0.0, 0.0, 0.0}, u, cfg);
    trajectory->push_back({t, st.m1, st.m2, rates.v1, rates.v2, rates.v3});
  }
  return out;
}

/// Deterministic batch schedule of one horizon: arrivals at 0, period,
/// 2*period, ... < t_f, sizes drawn uniformly from [order_lo, order_hi].
inline std::vector<PetriBatch> draw_petri_batches(const PetriConfig& cfg,
                                                  RngStream& stream) {
  std::vector<PetriBatch> batches;
  for (double s = 0.0; s < cfg.t_f; s += cfg.order_period) {
    const double amount = cfg.order_lo < cfg.order_hi
                              ? stream.uniform(cfg.order_lo, cfg.order_hi)
                              : cfg.order_lo;
    batches.push_back({s, amount});
  }
  return batches;
}

/// Average inventory over one horizon for a fixed batch realization.
inline double petri_average_inventory(double u, const PetriConfig& cfg,
                                      const std::vector<PetriBatch>& batches,
                                      const PetriSimState& st = {}) {
  return simulate_petri_horizon(u, cfg, batches, st).integral / cfg.t_f;
}

/// Common-random-numbers central difference of the average inventory:
/// both perturbed runs reuse the batch realization drawn from `seed`.
inline double crn_threshold_derivative(double u, double delta,
                                       const PetriConfig& cfg,
                                       std::uint64_t seed) {
  if (!(delta > 0.0)) throw InvalidParams("crn_threshold_derivative: delta > 0");
  RngStream stream(seed);
  const auto batches = draw_petri_batches(cfg, stream);
  const double hi = petri_average_inventory(u + delta, cfg, batches);
  const double lo = petri_average_inventory(u - delta, cfg, batches);
  return (hi - lo) / (2.0 * delta);
}

/// Threshold-controlled production-inventory plant. Output is the average
/// inventory (1/t_f) int m2 dt; the derivative estimate comes from event
/// propagation or, when configured, from a CRN finite difference on the same
/// batch realization.
class PetriPlant {
 public:
  PetriPlant(PetriConfig cfg, std::uint64_t seed = 0)
      : cfg_(cfg), stream_(seed) {
    cfg_.validate();
  }

  void reset(std::uint64_t seed) {
    stream_ = RngStream(seed);
    carried_ = initial_state();
  }

  CycleResult run_cycle(double u) {
    if (!(u > 0.0)) throw InvalidParams("petri: threshold must be > 0");
    const auto batches = draw_petri_batches(cfg_, stream_);
    const PetriSimState start = cfg_.reset_each_cycle ? initial_state() : carried_;
    const auto out = simulate_petri_horizon(u, cfg_, batches, start);
    carried_ = out.final_state;

    const double y = out.integral / cfg_.t_f;
    double dy = out.integral_du / cfg_.t_f;
    if (cfg_.estimator == PetriConfig::Estimator::CrnFallback) {
      const double d = cfg_.crn_delta;
      const double hi = petri_average_inventory(u + d, cfg_, batches, start);
      const double lo = petri_average_inventory(u - d, cfg_, batches, start);
      dy = (hi - lo) / (2.0 * d);
    }
    return {y, dy};
  }

 private:
  PetriSimState initial_state() const {
    return {cfg_.m1_0, cfg_.m2_0, 0.0, 0.0};
  }

  PetriConfig cfg_;
  RngStream stream_;
  PetriSimState carried_{};
};

}  // namespace ipareg
