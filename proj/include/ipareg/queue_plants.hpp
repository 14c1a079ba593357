#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ipareg/control.hpp"
#include "ipareg/errors.hpp"
#include "ipareg/rng.hpp"

namespace ipareg {

// ---------------------------------------------------------------------------
// Analytic M/D/1 oracle
// ---------------------------------------------------------------------------

/// Stationary mean sojourn time (wait + service) of an M/D/1 queue with
/// service time u and arrival rate lambda: u + lambda u^2 / (2 (1 - lambda u)).
inline double pk_sojourn(double u, double lambda) {
  if (!(u > 0.0) || lambda < 0.0) throw InvalidParams("pk_sojourn: u > 0, lambda >= 0");
  if (lambda * u >= 1.0) throw UnstableQueue("pk_sojourn: lambda * u >= 1");
  return u + lambda * u * u / (2.0 * (1.0 - lambda * u));
}

/// d/du of pk_sojourn: 1 + lambda u (2 - lambda u) / (2 (1 - lambda u)^2).
inline double pk_sojourn_deriv(double u, double lambda) {
  if (!(u > 0.0) || lambda < 0.0)
    throw InvalidParams("pk_sojourn_deriv: u > 0, lambda >= 0");
  if (lambda * u >= 1.0) throw UnstableQueue("pk_sojourn_deriv: lambda * u >= 1");
  const double rho = lambda * u;
  const double one_minus = 1.0 - rho;
  return 1.0 + rho * (2.0 - rho) / (2.0 * one_minus * one_minus);
}

/// Service time whose stationary mean sojourn equals `target`: the smaller
/// root of lambda s^2 - 2 (1 + target lambda) s + 2 target = 0.
inline double pk_service_for_target(double target, double lambda) {
  if (!(target > 0.0)) throw InvalidParams("pk_service_for_target: target > 0");
  if (lambda == 0.0) return target;
  const double b = 1.0 + target * lambda;
  const double disc = b * b - 2.0 * lambda * target;
  return (b - std::sqrt(disc)) / lambda;
}

// ---------------------------------------------------------------------------
// M/D/1/inf delay plant
// ---------------------------------------------------------------------------

/// A job's index within the cycle and the index of the job that opened its
/// busy period.
struct BusyPeriodPosition {
  int job_index;
  int period_start_index;
};

/// Sample delay derivative: mean of (job_index - period_start_index + 1),
/// i.e. each job's position within its busy period.
inline double ipa_delay_derivative(std::span<const BusyPeriodPosition> positions) {
  if (positions.empty()) throw EmptyList("ipa_delay_derivative: no positions");
  double s = 0.0;
  for (const auto& p : positions) s += p.job_index - p.period_start_index + 1;
  return s / static_cast<double>(positions.size());
}

struct Md1DelayConfig {
  double lambda;
  int jobs_per_cycle;        // the paper-style cycle length M
  bool reset_each_cycle = true;

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidParams("md1 delay: lambda > 0");
    if (jobs_per_cycle < 1) throw InvalidParams("md1 delay: jobs_per_cycle >= 1");
  }
};

struct DelayCycleOutput {
  double y;   // mean sojourn of the cycle's jobs
  double dy;  // mean busy-period position
};

/// One delay cycle from explicit absolute arrival times. `prev_completion`
/// and `jobs_in_open_period` carry server state across cycles when the queue
/// is not reset; both are updated in place.
inline DelayCycleOutput md1_delay_cycle_from_arrivals(
    std::span<const double> arrivals, double u, double& prev_completion,
    int& jobs_in_open_period, std::vector<BusyPeriodPosition>* positions = nullptr) {
  double sojourn_sum = 0.0;
  double position_sum = 0.0;
  double completion = prev_completion;
  int in_period = jobs_in_open_period;
  if (positions) positions->clear();
  for (std::size_t m = 0; m < arrivals.size(); ++m) {
    const double t = arrivals[m];
    double start;
    if (t >= completion) {  // server idle: this job opens a busy period
      start = t;
      in_period = 1;
    } else {
      start = completion;
      ++in_period;
    }
    completion = start + u;
    sojourn_sum += completion - t;
    position_sum += in_period;
    if (positions)
      positions->push_back({static_cast<int>(m) + 1,
                            static_cast<int>(m) + 2 - in_period});
  }
  prev_completion = completion;
  jobs_in_open_period = in_period;
  const auto count = static_cast<double>(arrivals.size());
  return {sojourn_sum / count, position_sum / count};
}

/// M/D/1/inf queue regulated through its deterministic service time. Each
/// control cycle serves exactly jobs_per_cycle Poisson arrivals; by default
/// the queue is emptied at the start of every cycle.
class Md1DelayPlant {
 public:
  Md1DelayPlant(Md1DelayConfig cfg, std::uint64_t seed = 0)
      : cfg_(cfg), stream_(seed) {
    cfg_.validate();
  }

  void reset(std::uint64_t seed) {
    stream_ = RngStream(seed);
    clock_ = 0.0;
    completion_ = -std::numeric_limits<double>::infinity();
    open_period_jobs_ = 0;
    unstable_cycles_ = 0;
  }

  CycleResult run_cycle(double u) {
    if (!(u > 0.0)) throw InvalidParams("md1 delay: service time must be > 0");
    if (cfg_.lambda * u >= 1.0) ++unstable_cycles_;  // transient overload: note, keep going

    if (cfg_.reset_each_cycle) {
      clock_ = 0.0;
      completion_ = -std::numeric_limits<double>::infinity();
      open_period_jobs_ = 0;
    }
    arrivals_.clear();
    arrivals_.reserve(static_cast<std::size_t>(cfg_.jobs_per_cycle));
    for (int m = 0; m < cfg_.jobs_per_cycle; ++m) {
      clock_ += stream_.exponential(cfg_.lambda);
      arrivals_.push_back(clock_);
    }
    const auto out = md1_delay_cycle_from_arrivals(arrivals_, u, completion_,
                                                   open_period_jobs_);
    return {out.y, out.dy};
  }

  int unstable_cycle_count() const { return unstable_cycles_; }

 private:
  Md1DelayConfig cfg_;
  RngStream stream_;
  std::vector<double> arrivals_;
  double clock_ = 0.0;
  double completion_ = -std::numeric_limits<double>::infinity();
  int open_period_jobs_ = 0;
  int unstable_cycles_ = 0;
};

// ---------------------------------------------------------------------------
// M/D/1/k loss plant
// ---------------------------------------------------------------------------

/// A maximal stretch of a busy period during which loss has already occurred:
/// from the first discarded arrival to the next time the system empties
/// (clipped to the observation window).
struct LossyPeriod {
  double loss_onset;  // u_q
  double period_end;  // v_q
};

/// Fluid-model loss-rate derivative applied to a discrete sample path:
/// (u^exponent / t_f) * sum(v_q - u_q). The printed formula has exponent 2;
/// the exponent is configurable to allow probing that reading.
inline double sfm_loss_derivative(std::span<const LossyPeriod> periods, double u,
                                  double t_f, double exponent = 2.0) {
  if (!(t_f > 0.0)) throw InvalidParams("sfm_loss_derivative: t_f > 0");
  double s = 0.0;
  for (const auto& p : periods) s += p.period_end - p.loss_onset;
  return std::pow(u, exponent) / t_f * s;
}

struct Md1kLossConfig {
  double lambda;
  int buffer_k;       // capacity including the job in service
  double t_f;         // cycle duration in time units
  bool reset_each_cycle = false;  // the loss queue runs continuously
  double sfm_exponent = 2.0;

  void validate() const {
    if (!(lambda > 0.0)) throw InvalidParams("md1k loss: lambda > 0");
    if (buffer_k < 1) throw InvalidParams("md1k loss: buffer_k >= 1");
    if (!(t_f > 0.0)) throw InvalidParams("md1k loss: t_f > 0");
  }
};

/// Server/buffer state carried across cycle windows.
struct LossQueueState {
  int in_system = 0;
  double next_departure = 0.0;
  bool busy_period_lossy = false;
};

struct LossCycleOutput {
  int discarded = 0;
  std::vector<LossyPeriod> periods;
};

/// One loss-cycle window [window_start, window_end) given explicit arrival
/// times (those beyond the window are ignored). FIFO, deterministic service u,
/// arrivals finding buffer_k jobs in system are discarded. A lossy period
/// opens at the first discard of a busy period and closes when the system
/// empties; periods spanning the window edge are clipped to it.
inline LossCycleOutput md1k_loss_cycle(std::span<const double> arrivals,
                                       double window_start, double window_end,
                                       double u, int buffer_k,
                                       LossQueueState& st) {
  LossCycleOutput out;
  bool period_open = st.busy_period_lossy && st.in_system > 0;
  double onset = window_start;

  std::size_t a = 0;
  auto close_period = [&](double at) {
    out.periods.push_back({onset, at});
    period_open = false;
  };

  while (true) {
    const double ta = a < arrivals.size() ? arrivals[a] : window_end;
    const bool departure_next =
        st.in_system > 0 && st.next_departure <= ta && st.next_departure < window_end;
    if (departure_next) {
      --st.in_system;
      if (st.in_system > 0) {
        st.next_departure += u;
      } else {
        if (period_open) close_period(st.next_departure);
        st.busy_period_lossy = false;
      }
      continue;
    }
    if (ta >= window_end) break;
    // arrival at ta
    if (st.in_system >= buffer_k) {
      ++out.discarded;
      if (!st.busy_period_lossy) {
        st.busy_period_lossy = true;
        period_open = true;
        onset = ta;
      }
    } else {
      ++st.in_system;
      if (st.in_system == 1) st.next_departure = ta + u;
    }
    ++a;
  }
  if (period_open) out.periods.push_back({onset, window_end});
  return out;
}

/// M/D/1/k queue regulated through its service time; the output is the loss
/// rate (discarded jobs per unit time over one window of t_f).
class Md1kLossPlant {
 public:
  Md1kLossPlant(Md1kLossConfig cfg, std::uint64_t seed = 0)
      : cfg_(cfg), stream_(seed) {
    cfg_.validate();
  }

  void reset(std::uint64_t seed) {
    stream_ = RngStream(seed);
    state_ = {};
    window_start_ = 0.0;
    next_arrival_ = stream_.exponential(cfg_.lambda);
  }

  CycleResult run_cycle(double u) {
    if (!(u > 0.0)) throw InvalidParams("md1k loss: service time must be > 0");
    if (cfg_.reset_each_cycle) {
      state_ = {};
      window_start_ = 0.0;
      next_arrival_ = stream_.exponential(cfg_.lambda);
    }
    const double window_end = window_start_ + cfg_.t_f;
    arrivals_.clear();
    while (next_arrival_ < window_end) {
      arrivals_.push_back(next_arrival_);
      next_arrival_ += stream_.exponential(cfg_.lambda);
    }
    const auto out =
        md1k_loss_cycle(arrivals_, window_start_, window_end, u, cfg_.buffer_k, state_);
    window_start_ = window_end;
    const double y = out.discarded / cfg_.t_f;
    const double dy = sfm_loss_derivative(out.periods, u, cfg_.t_f, cfg_.sfm_exponent);
    return {y, dy};
  }

 private:
  Md1kLossConfig cfg_;
  RngStream stream_;
  LossQueueState state_;
  std::vector<double> arrivals_;
  double window_start_ = 0.0;
  double next_arrival_ = 0.0;
};

}  // namespace ipareg
