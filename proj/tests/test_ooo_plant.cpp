#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ipareg/ooo_plant.hpp"
#include "ipareg/rng.hpp"

using namespace ipareg;

namespace {

InstructionRecord compute_ins(int index, long long xi, int mu,
                              std::optional<int> dep = std::nullopt) {
  InstructionRecord r;
  r.index = index;
  r.xi = xi;
  r.mu = mu;
  r.dep = dep;
  return r;
}

InstructionRecord memory_ins(int index, long long xi, int nu, bool hit,
                             int m_cycles = 1, double mem = 100.0) {
  InstructionRecord r;
  r.index = index;
  r.xi = xi;
  r.is_memory = true;
  r.nu = nu;
  r.cache_hit = hit;
  r.m_cycles = m_cycles;
  r.mem_latency = hit ? 0.0 : mem;
  return r;
}

}  // namespace

TEST_CASE("two-instruction hand trace: values and derivatives") {
  const std::vector<InstructionRecord> trace{
      compute_ins(1, 0, 2), compute_ins(2, 1, 1, 1)};
  auto res = timing_pass(trace, 1.0, 8);
  CHECK(std::abs(res.alpha[0] - 1.0) < 1e-12);
  CHECK(std::abs(res.beta[0] - 3.0) < 1e-12);
  CHECK(std::abs(res.commit[0] - 4.0) < 1e-12);
  CHECK(std::abs(res.alpha[1] - 4.0) < 1e-12);
  CHECK(std::abs(res.beta[1] - 5.0) < 1e-12);
  CHECK(std::abs(res.commit[1] - 6.0) < 1e-12);
  CHECK(res.arms[1].alpha == AlphaArm::DataDep);
  CHECK(res.stall_flag(1) == StallKind::DataDep);

  ipa_pass(trace, 1.0, res);
  CHECK(std::abs(res.alpha_d[0] - 1.0) < 1e-12);
  CHECK(std::abs(res.beta_d[0] - 3.0) < 1e-12);
  CHECK(std::abs(res.commit_d[0] - 4.0) < 1e-12);
  CHECK(std::abs(res.alpha_d[1] - 4.0) < 1e-12);
  CHECK(std::abs(res.beta_d[1] - 5.0) < 1e-12);
  CHECK(std::abs(res.commit_d[1] - 6.0) < 1e-12);

  const double y = throughput(2, res.d_last());
  CHECK(std::abs(y - 1.0 / 3.0) < 1e-12);
  // the system is fully clock-scaled, so dy/du is exactly y/u = 1/3
  CHECK(std::abs(throughput_derivative(y, 1.0, 2, res.d_last_deriv()) -
                 1.0 / 3.0) < 1e-12);
}

TEST_CASE("cache hit timing") {
  const std::vector<InstructionRecord> trace{memory_ins(1, 0, 3, true)};
  auto res = timing_pass(trace, 0.5, 8);
  CHECK(res.alpha[0] == Catch::Approx(0.5));
  CHECK(res.beta[0] == Catch::Approx(2.0));
  CHECK(res.commit[0] == Catch::Approx(2.5));
  ipa_pass(trace, 0.5, res);
  CHECK(res.beta_d[0] == Catch::Approx(1.0 + 3.0));
}

TEST_CASE("cache miss alone in the MSHR") {
  const std::vector<InstructionRecord> trace{memory_ins(1, 0, 2, false, 1, 100.0)};
  auto res = timing_pass(trace, 1.0, 8);
  CHECK(res.alpha[0] == Catch::Approx(1.0));
  CHECK(res.beta[0] == Catch::Approx(res.alpha[0] + 2.0 + 1.0 + 100.0));
  CHECK(res.arms[0].beta == BetaArm::MemOwnPath);
  ipa_pass(trace, 1.0, res);
  // the DRAM term is clock-independent and drops out of the derivative
  CHECK(res.beta_d[0] == Catch::Approx(res.alpha_d[0] + 2.0 + 1.0));
}

TEST_CASE("a full MSHR stalls the next memory instruction") {
  // capacity 1: the second miss issues while the first is still in flight
  const std::vector<InstructionRecord> trace{
      memory_ins(1, 0, 1, false, 1, 50.0),   // enters MSHR at t=2, leaves 53
      memory_ins(2, 5, 1, false, 1, 50.0)};
  auto res = timing_pass(trace, 1.0, 1);
  CHECK(res.arms[1].alpha == AlphaArm::MshrFull);
  CHECK(res.arms[1].mshr_head == 0);
  CHECK(res.alpha[1] == Catch::Approx(res.beta[0] + 1.0));
  CHECK(res.stall_flag(1) == StallKind::MshrFull);
  ipa_pass(trace, 1.0, res);
  CHECK(res.alpha_d[1] == Catch::Approx(res.beta_d[0] + 1.0));

  // with capacity 2 the same trace issues unstalled
  auto wide = timing_pass(trace, 1.0, 2);
  CHECK(wide.arms[1].alpha == AlphaArm::Issue);
  CHECK(wide.alpha[1] == Catch::Approx(6.0));
}

TEST_CASE("later miss bound by MSHR FIFO order") {
  const std::vector<InstructionRecord> trace{
      memory_ins(1, 0, 1, false, 1, 100.0),  // beta = 2 + 1 + 100 = 103
      memory_ins(2, 1, 1, false, 1, 10.0)};  // own path 14, fifo bound 104
  auto res = timing_pass(trace, 1.0, 8);
  CHECK(res.arms[1].beta == BetaArm::MemFifoBound);
  CHECK(res.arms[1].mshr_pred == 0);
  CHECK(res.beta[1] == Catch::Approx(res.beta[0] + 1.0));
  ipa_pass(trace, 1.0, res);
  CHECK(res.beta_d[1] == Catch::Approx(res.beta_d[0] + 1.0));
}

TEST_CASE("pure clock-scaled traces are exactly linear in the period") {
  // no memory instructions: d_M = C tau with C = d'_M
  WorkloadProfile p;
  p.mem_fraction = 0.0;
  RngStream rng(4, 0);
  const auto trace = generate_trace(p, 500, rng);
  for (double tau : {0.4, 1.0, 2.5}) {
    auto res = timing_pass(trace, tau, p.mshr_capacity);
    ipa_pass(trace, tau, res);
    CHECK(res.d_last() == Catch::Approx(res.d_last_deriv() * tau).epsilon(1e-12));
  }
}

TEST_CASE("affine decomposition d(tau) = C tau + D within a stable order") {
  RngStream rng(17, 0);
  const auto trace = generate_trace(WorkloadProfile::memory_preset(), 2000, rng);
  const double tau = 0.5;
  auto res = timing_pass(trace, tau, 8);
  ipa_pass(trace, tau, res);
  const double C = res.d_last_deriv();
  const double D = res.d_last() - C * tau;
  CHECK(D >= 0.0);  // the clock-independent remainder is realized DRAM time

  for (double scale : {1.0 - 1e-6, 1.0 + 1e-6}) {
    const double tau2 = tau * scale;
    auto res2 = timing_pass(trace, tau2, 8);
    bool same_order = true;
    for (std::size_t i = 0; i < trace.size(); ++i)
      same_order = same_order && res2.arms[i].alpha == res.arms[i].alpha &&
                   res2.arms[i].beta == res.arms[i].beta &&
                   res2.arms[i].commit == res.arms[i].commit;
    REQUIRE(same_order);
    CHECK(res2.d_last() ==
          Catch::Approx(C * tau2 + D).margin(1e-9 * res.d_last()));
  }
}

TEST_CASE("derivative equals the CRN difference quotient exactly") {
  RngStream rng(23, 0);
  const auto trace = generate_trace(WorkloadProfile::compute_preset(), 2000, rng);
  const double tau = 0.5;
  const double delta = tau * 1e-6;
  auto mid = timing_pass(trace, tau, 8);
  ipa_pass(trace, tau, mid);
  auto lo = timing_pass(trace, tau - delta, 8);
  auto hi = timing_pass(trace, tau + delta, 8);
  bool same_order = true;
  for (std::size_t i = 0; i < trace.size(); ++i)
    same_order = same_order && lo.arms[i].alpha == hi.arms[i].alpha &&
                 lo.arms[i].beta == hi.arms[i].beta &&
                 lo.arms[i].commit == hi.arms[i].commit;
  REQUIRE(same_order);
  const double fd = (hi.d_last() - lo.d_last()) / (2.0 * delta);
  CHECK(fd == Catch::Approx(mid.d_last_deriv()).epsilon(1e-8));
}

TEST_CASE("commits are strictly increasing and the derivative covers M") {
  for (auto profile :
       {WorkloadProfile::compute_preset(), WorkloadProfile::memory_preset()}) {
    RngStream rng(31, 0);
    const auto trace = generate_trace(profile, 3000, rng);
    auto res = timing_pass(trace, 0.8, profile.mshr_capacity);
    ipa_pass(trace, 0.8, res);
    for (std::size_t i = 1; i < trace.size(); ++i)
      CHECK(res.commit[i] > res.commit[i - 1]);
    CHECK(res.d_last_deriv() >= static_cast<double>(trace.size()));
  }
}

TEST_CASE("trace generation honors the profile") {
  WorkloadProfile none;
  none.mem_fraction = 0.0;
  RngStream rng(7, 0);
  for (const auto& ins : generate_trace(none, 1000, rng))
    CHECK_FALSE(ins.is_memory);

  auto count_misses = [](const WorkloadProfile& p, std::uint64_t seed) {
    RngStream s(seed);
    int misses = 0;
    for (const auto& ins : generate_trace(p, 10000, s))
      misses += ins.is_memory && !ins.cache_hit;
    return misses;
  };
  CHECK(count_misses(WorkloadProfile::memory_preset(), 42) >
        count_misses(WorkloadProfile::compute_preset(), 42));

  RngStream a(9, 0), b(9, 0);
  const auto ta = generate_trace(WorkloadProfile::compute_preset(), 500, a);
  const auto tb = generate_trace(WorkloadProfile::compute_preset(), 500, b);
  for (std::size_t i = 0; i < ta.size(); ++i) {
    CHECK(ta[i].xi == tb[i].xi);
    CHECK(ta[i].is_memory == tb[i].is_memory);
    CHECK(ta[i].mu == tb[i].mu);
    CHECK(ta[i].dep == tb[i].dep);
  }
  // issue cycles strictly increase (gaps are at least one cycle)
  for (std::size_t i = 1; i < ta.size(); ++i) CHECK(ta[i].xi > ta[i - 1].xi);
  // dependencies always point backwards
  for (const auto& ins : ta)
    if (ins.dep) CHECK(*ins.dep < ins.index);
}

TEST_CASE("throughput helpers validate inputs") {
  CHECK(throughput(10000, 1e-5 * 1e9) == Catch::Approx(1e-9).epsilon(1e-12));
  CHECK(throughput(100, 100.0 * 0.25) == Catch::Approx(4.0));  // one per cycle
  CHECK_THROWS_AS(throughput(10, 0.0), InvalidParams);
  CHECK_THROWS_AS(throughput_derivative(1.0, 0.0, 10, 5.0), InvalidParams);
  std::vector<InstructionRecord> trace{compute_ins(1, 0, 1)};
  TimingResult bare;
  CHECK_THROWS_AS(ipa_pass(trace, 1.0, bare), InconsistentTiming);
}

TEST_CASE("plant cycles are deterministic and sane") {
  OooCorePlant plant(WorkloadProfile::compute_preset(), 5000);
  plant.reset(3);
  const auto r1 = plant.run_cycle(2.0);
  plant.reset(3);
  const auto r2 = plant.run_cycle(2.0);
  CHECK(r1.y == r2.y);
  CHECK(r1.dy == r2.dy);
  CHECK(r1.y > 0.0);
  CHECK(r1.dy > 0.0);

  // consecutive cycles consume fresh instructions: outputs differ
  const auto r3 = plant.run_cycle(2.0);
  CHECK(r3.y != r2.y);
}
