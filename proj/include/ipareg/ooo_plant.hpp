#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ipareg/control.hpp"
#include "ipareg/errors.hpp"
#include "ipareg/rng.hpp"

namespace ipareg {

// Time convention: the control u is the clock frequency in GHz, the internal
// clock period tau = 1/u is in nanoseconds, and DRAM latencies are fixed
// nanosecond constants that do not scale with the clock. Throughput M/d_M is
// then in instructions per nanosecond, i.e. GIPS.

/// One instruction of a synthetic trace. Cycle counts (xi, mu, nu, m_cycles)
/// scale with the clock period; mem_latency does not.
struct InstructionRecord {
  int index = 0;           // 1-based position within the cycle's trace
  long long xi = 0;        // issue cycle, counted from the first instruction
  bool is_memory = false;
  int mu = 1;              // execution cycles (non-memory)
  int nu = 1;              // load/store queue + cache-attempt cycles (memory)
  int m_cycles = 1;        // MSHR processing cycles (cache miss)
  double mem_latency = 0.0;  // ns, clock-independent DRAM access (cache miss)
  std::optional<int> dep;  // 1-based index of the last data provider
  bool cache_hit = true;
};

enum class AlphaArm { Issue, DataDep, MshrFull };
enum class BetaArm { NonMemory, CacheHit, MemOwnPath, MemFifoBound };
enum class CommitArm { AfterExec, RobOrder };

/// Summary stall label per instruction (the realized reason it was delayed).
enum class StallKind { None, DataDep, MshrFull, RobOrder };

/// Execution-start, completion, and commit instants (ns) plus their
/// derivatives with respect to the clock period; the recorded branch arms
/// tie the derivative recursion to the realized event order.
struct TimingResult {
  std::vector<double> alpha, beta, commit;
  std::vector<double> alpha_d, beta_d, commit_d;

  struct Arms {
    AlphaArm alpha = AlphaArm::Issue;
    BetaArm beta = BetaArm::NonMemory;
    CommitArm commit = CommitArm::AfterExec;
    int mshr_head = -1;  // l(i): head entry when stalled on a full MSHR
    int mshr_pred = -1;  // j(i): the preceding entry at MSHR insertion
  };
  std::vector<Arms> arms;

  StallKind stall_flag(std::size_t i) const {
    const auto& a = arms[i];
    if (a.alpha == AlphaArm::DataDep) return StallKind::DataDep;
    if (a.alpha == AlphaArm::MshrFull) return StallKind::MshrFull;
    if (a.commit == CommitArm::RobOrder) return StallKind::RobOrder;
    return StallKind::None;
  }

  double d_last() const { return commit.back(); }
  double d_last_deriv() const { return commit_d.back(); }
};

/// Value pass of the timing recursions, commit anchored at d_0 = 0.
///
/// Non-memory instructions start one cycle after the later of their issue
/// instant and their data provider's completion. Memory instructions instead
/// stall behind the MSHR head when the MSHR is full at their issue instant.
/// A cache miss completes after its own path (nu + m cycles plus the DRAM
/// latency) or one cycle after its MSHR predecessor, whichever is later;
/// commits are in order, one cycle apart at minimum. Ties resolve to the
/// unstalled arm.
inline TimingResult timing_pass(std::span<const InstructionRecord> trace,
                                double tau, int mshr_capacity) {
  if (!(tau > 0.0)) throw InvalidParams("timing_pass: tau > 0");
  if (mshr_capacity < 1) throw InvalidParams("timing_pass: mshr capacity >= 1");

  const std::size_t n = trace.size();
  TimingResult res;
  res.alpha.resize(n);
  res.beta.resize(n);
  res.commit.resize(n);
  res.arms.resize(n);

  struct MshrEntry {
    double enter;
    double leave;
    int idx;
  };
  std::vector<MshrEntry> mshr;  // in-flight cache misses, pruned lazily

  double d_prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ins = trace[i];
    const double issue_t = static_cast<double>(ins.xi) * tau;
    auto& arm = res.arms[i];

    double alpha;
    if (!ins.is_memory) {
      if (ins.dep) {
        const double provider = res.beta[static_cast<std::size_t>(*ins.dep) - 1];
        if (provider > issue_t) {
          alpha = provider + tau;
          arm.alpha = AlphaArm::DataDep;
        } else {
          alpha = issue_t + tau;
          arm.alpha = AlphaArm::Issue;
        }
      } else {
        alpha = issue_t + tau;
        arm.alpha = AlphaArm::Issue;
      }
      res.beta[i] = alpha + ins.mu * tau;
      arm.beta = BetaArm::NonMemory;
    } else {
      std::erase_if(mshr, [&](const MshrEntry& e) { return e.leave <= issue_t; });
      int occupancy = 0;
      int head = -1;
      double head_enter = std::numeric_limits<double>::infinity();
      for (const auto& e : mshr) {
        if (e.enter <= issue_t && e.leave > issue_t) {
          ++occupancy;
          if (e.enter < head_enter) {
            head_enter = e.enter;
            head = e.idx;
          }
        }
      }
      if (occupancy >= mshr_capacity) {
        alpha = res.beta[static_cast<std::size_t>(head)] + tau;
        arm.alpha = AlphaArm::MshrFull;
        arm.mshr_head = head;
      } else {
        alpha = issue_t + tau;
        arm.alpha = AlphaArm::Issue;
      }

      if (ins.cache_hit) {
        res.beta[i] = alpha + ins.nu * tau;
        arm.beta = BetaArm::CacheHit;
      } else {
        const double enter = alpha + ins.nu * tau;
        int pred = -1;
        double pred_enter = -std::numeric_limits<double>::infinity();
        for (const auto& e : mshr) {
          if (e.enter <= enter && e.leave > enter && e.enter >= pred_enter) {
            pred_enter = e.enter;
            pred = e.idx;
          }
        }
        const double own = enter + ins.m_cycles * tau + ins.mem_latency;
        if (pred >= 0) {
          const double fifo = res.beta[static_cast<std::size_t>(pred)] + tau;
          if (own >= fifo) {
            res.beta[i] = own;
            arm.beta = BetaArm::MemOwnPath;
          } else {
            res.beta[i] = fifo;
            arm.beta = BetaArm::MemFifoBound;
          }
          arm.mshr_pred = pred;
        } else {
          res.beta[i] = own;
          arm.beta = BetaArm::MemOwnPath;
        }
        mshr.push_back({enter, res.beta[i], static_cast<int>(i)});
      }
    }
    res.alpha[i] = alpha;

    if (d_prev > res.beta[i]) {
      res.commit[i] = d_prev + tau;
      arm.commit = CommitArm::RobOrder;
    } else {
      res.commit[i] = res.beta[i] + tau;
      arm.commit = CommitArm::AfterExec;
    }
    d_prev = res.commit[i];
  }
  return res;
}

/// Derivative pass with respect to the clock period. Branch selection reuses
/// the arms recorded by timing_pass, so values and derivatives describe the
/// same realized event order; the DRAM latency contributes nothing.
inline void ipa_pass(std::span<const InstructionRecord> trace, double /*tau*/,
                     TimingResult& res) {
  const std::size_t n = trace.size();
  if (res.arms.size() != n || res.beta.size() != n)
    throw InconsistentTiming("ipa_pass: run timing_pass on the same trace first");
  res.alpha_d.resize(n);
  res.beta_d.resize(n);
  res.commit_d.resize(n);

  double dprev_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ins = trace[i];
    const auto& arm = res.arms[i];

    double a_d;
    switch (arm.alpha) {
      case AlphaArm::DataDep:
        a_d = res.beta_d[static_cast<std::size_t>(*ins.dep) - 1] + 1.0;
        break;
      case AlphaArm::MshrFull:
        a_d = res.beta_d[static_cast<std::size_t>(arm.mshr_head)] + 1.0;
        break;
      case AlphaArm::Issue:
      default:
        a_d = static_cast<double>(ins.xi) + 1.0;
        break;
    }
    res.alpha_d[i] = a_d;

    switch (arm.beta) {
      case BetaArm::NonMemory:
        res.beta_d[i] = a_d + ins.mu;
        break;
      case BetaArm::CacheHit:
        res.beta_d[i] = a_d + ins.nu;
        break;
      case BetaArm::MemOwnPath:
        res.beta_d[i] = a_d + ins.nu + ins.m_cycles;
        break;
      case BetaArm::MemFifoBound:
        res.beta_d[i] = res.beta_d[static_cast<std::size_t>(arm.mshr_pred)] + 1.0;
        break;
    }

    res.commit_d[i] =
        (arm.commit == CommitArm::RobOrder ? dprev_d : res.beta_d[i]) + 1.0;
    dprev_d = res.commit_d[i];
  }
}

/// Average throughput of a cycle of m_instr instructions committing by d_m.
inline double throughput(int m_instr, double d_m) {
  if (!(d_m > 0.0)) throw InvalidParams("throughput: d_m > 0");
  return static_cast<double>(m_instr) / d_m;
}

/// Throughput derivative with respect to the clock frequency:
/// (1/M) (y/u)^2 d'_M.
inline double throughput_derivative(double y, double u, int m_instr,
                                    double dm_prime) {
  if (!(u > 0.0) || m_instr < 1)
    throw InvalidParams("throughput_derivative: u > 0, m_instr >= 1");
  const double yu = y / u;
  return yu * yu * dm_prime / static_cast<double>(m_instr);
}

/// Synthetic workload shape. Issue gaps are at least one cycle, which keeps
/// issue order strict and makes the commit-path derivative exceed the
/// instruction count structurally.
struct WorkloadProfile {
  double mem_fraction = 0.1;
  double cache_hit_prob = 0.95;
  double dep_prob = 0.4;
  int dep_distance = 8;      // dependencies reach up to this many slots back
  int mu_lo = 1, mu_hi = 3;
  int nu_lo = 1, nu_hi = 3;
  int m_lo = 1, m_hi = 2;
  int gap_lo = 1, gap_hi = 2;  // issue gap between consecutive instructions
  double mem_latency_ns = 100.0;
  int mshr_capacity = 8;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(mem_fraction) || !prob(cache_hit_prob) || !prob(dep_prob))
      throw InvalidParams("workload: probabilities in [0,1]");
    if (dep_distance < 1 || mshr_capacity < 1)
      throw InvalidParams("workload: capacities >= 1");
    if (mu_lo < 1 || mu_lo > mu_hi || nu_lo < 1 || nu_lo > nu_hi || m_lo < 1 ||
        m_lo > m_hi || gap_lo < 1 || gap_lo > gap_hi)
      throw InvalidParams("workload: cycle-count ranges invalid");
    if (mem_latency_ns < 0.0) throw InvalidParams("workload: mem latency >= 0");
  }

  static WorkloadProfile compute_preset() { return {}; }

  static WorkloadProfile memory_preset() {
    WorkloadProfile p;
    p.mem_fraction = 0.4;
    p.cache_hit_prob = 0.7;
    return p;
  }
};

/// Draw m_instr instructions. Only non-memory instructions carry a data
/// dependency (on any earlier instruction); a memory instruction's start is
/// governed by the MSHR state alone.
inline std::vector<InstructionRecord> generate_trace(const WorkloadProfile& profile,
                                                     int m_instr,
                                                     RngStream& stream) {
  if (m_instr < 1) throw InvalidParams("generate_trace: m_instr >= 1");
  profile.validate();
  std::vector<InstructionRecord> trace;
  trace.reserve(static_cast<std::size_t>(m_instr));
  long long xi = 0;
  for (int i = 1; i <= m_instr; ++i) {
    InstructionRecord ins;
    ins.index = i;
    if (i > 1) xi += stream.uniform_int(profile.gap_lo, profile.gap_hi);
    ins.xi = xi;
    ins.is_memory = stream.bernoulli(profile.mem_fraction);
    if (ins.is_memory) {
      ins.cache_hit = stream.bernoulli(profile.cache_hit_prob);
      ins.nu = static_cast<int>(stream.uniform_int(profile.nu_lo, profile.nu_hi));
      ins.m_cycles = static_cast<int>(stream.uniform_int(profile.m_lo, profile.m_hi));
      if (!ins.cache_hit) ins.mem_latency = profile.mem_latency_ns;
    } else {
      ins.mu = static_cast<int>(stream.uniform_int(profile.mu_lo, profile.mu_hi));
      if (i > 1 && stream.bernoulli(profile.dep_prob)) {
        const long long dist = stream.uniform_int(1, profile.dep_distance);
        const long long target = std::max<long long>(1, i - dist);
        ins.dep = static_cast<int>(target);
      }
    }
    trace.push_back(ins);
  }
  return trace;
}

/// One virtual out-of-order core. Each control cycle consumes the next
/// m_instr instructions of a continuing synthetic stream, times them at the
/// applied clock frequency, and reports throughput and its IPA derivative.
class OooCorePlant {
 public:
  OooCorePlant(WorkloadProfile profile, int m_instr, std::uint64_t seed = 0)
      : profile_(profile), m_instr_(m_instr), stream_(seed) {
    profile_.validate();
    if (m_instr_ < 1) throw InvalidParams("ooo core: m_instr >= 1");
  }

  void reset(std::uint64_t seed) { stream_ = RngStream(seed); }

  CycleResult run_cycle(double u) {
    if (!(u > 0.0)) throw InvalidParams("ooo core: clock frequency must be > 0");
    const double tau = 1.0 / u;
    const auto trace = generate_trace(profile_, m_instr_, stream_);
    auto timing = timing_pass(trace, tau, profile_.mshr_capacity);
    ipa_pass(trace, tau, timing);
    const double y = throughput(m_instr_, timing.d_last());
    const double dy = throughput_derivative(y, u, m_instr_, timing.d_last_deriv());
    return {y, dy};
  }

 private:
  WorkloadProfile profile_;
  int m_instr_;
  RngStream stream_;
};

}  // namespace ipareg
