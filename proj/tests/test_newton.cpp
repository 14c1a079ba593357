#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "ipareg/newton.hpp"
#include "ipareg/rng.hpp"

using namespace ipareg;

namespace {

constexpr auto no_errors = [](int) { return std::pair{0.0, 0.0}; };

// g(u) = 2 - u^2 together with its derivative, the workhorse test function.
constexpr auto quad_oracle = [](double u) { return std::pair{2.0 - u * u, -2.0 * u}; };

// Random monotone-increasing convex quadratic on [0, 1] with an interior
// root: g(u) = a u^2 + b u + d, a > 0, b > 0, d in (-(a+b), 0).
struct ConvexSample {
  double a, b, d;
  double g(double u) const { return a * u * u + b * u + d; }
  double dg(double u) const { return 2.0 * a * u + b; }
  double m_ratio() const { return (2.0 * a + b) / b; }  // |g'| max/min on [0,1]
};

ConvexSample draw_convex(RngStream& rng) {
  ConvexSample s;
  s.a = rng.uniform(0.1, 5.0);
  s.b = rng.uniform(0.05, 5.0);
  s.d = -rng.uniform(0.05, 0.95) * (s.a + s.b);
  return s;
}

}  // namespace

TEST_CASE("nr_step arithmetic") {
  CHECK(nr_step({1.0, 1.0, -2.0, 0.0, 0.0}) == Catch::Approx(1.5));
  CHECK(nr_step({1.5, -0.25, -3.0, 0.0, 0.0}) ==
        Catch::Approx(1.4166666666666667));
  CHECK(nr_step({1.0, 1.0, -2.0, 0.2, 0.05}) ==
        Catch::Approx(1.5833333333333333));
}

TEST_CASE("nr_step flags a flat noisy gradient") {
  CHECK_THROWS_AS(nr_step({1.0, 1.0, 1e-13, 0.0, 0.0}), DivisorTooSmall);
  CHECK_THROWS_AS(nr_step({1.0, 1.0, -0.5, 0.5, 0.0}), DivisorTooSmall);
  // a custom floor loosens the guard
  CHECK(nr_step({1.0, 1.0, 1e-3, 0.0, 0.0}, 1e-6) == Catch::Approx(1.0 - 1e3));
}

TEST_CASE("projection clamps and is idempotent") {
  const Interval iv(0.1, 1.0);
  CHECK(project(0.5, iv) == 0.5);
  CHECK(project(0.05, iv) == 0.1);
  CHECK(project(2.0, iv) == 1.0);
  RngStream rng(3, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-5.0, 5.0);
    const double once = project(u, iv);
    CHECK(project(once, iv) == once);
  }
  CHECK_THROWS_AS(Interval(1.0, 1.0), InvalidParams);
  CHECK_THROWS_AS(Interval(2.0, 1.0), InvalidParams);
}

TEST_CASE("classify_step sign patterns and zero tie-break") {
  CHECK(classify_step(-1.0, -0.5) == ContractionCase::I);
  CHECK(classify_step(-1.0, 0.3) == ContractionCase::II);
  CHECK(classify_step(0.5, -0.2) == ContractionCase::III);
  CHECK(classify_step(0.4, 0.2) == ContractionCase::IV);
  CHECK(classify_step(0.0, 0.0) == ContractionCase::I);
  CHECK(classify_step(0.0, -1.0) == ContractionCase::I);
  CHECK(classify_step(0.0, 2.0) == ContractionCase::IV);
  CHECK(classify_step(-1.0, 0.0) == ContractionCase::I);
  CHECK(classify_step(1.0, 0.0) == ContractionCase::IV);
}

TEST_CASE("contraction_factor closed forms") {
  CHECK(contraction_factor(ContractionCase::I, 2.0, 0.0, 0.1) ==
        Catch::Approx(0.1));
  CHECK(contraction_factor(ContractionCase::IV, 2.0, 0.0, 0.1) ==
        Catch::Approx(0.55));
  // the sign-flip case exceeds 1 by itself; only the II*III product contracts
  CHECK(contraction_factor(ContractionCase::II, 2.0, 0.0, 0.1) ==
        Catch::Approx(1.2));
  CHECK(contraction_factor(ContractionCase::III, 2.0, 0.1, 0.1) ==
        Catch::Approx(1.1 / 0.9 - 1.0));
  CHECK_THROWS_AS(contraction_factor(ContractionCase::I, 1.0, 0.0, 0.1),
                  InvalidParams);
  CHECK_THROWS_AS(contraction_factor(ContractionCase::I, 2.0, 1.0, 0.1),
                  InvalidParams);
  CHECK_THROWS_AS(contraction_factor(ContractionCase::I, 2.0, 0.0, -0.1),
                  InvalidParams);
}

TEST_CASE("relative errors flag an exact-zero function value") {
  const auto r = relative_errors(0.0, 2.0, 0.1, 0.2);
  CHECK(r.g_is_zero);
  const auto s = relative_errors(-2.0, 4.0, 0.5, 1.0);
  CHECK_FALSE(s.g_is_zero);
  CHECK(s.err_g == Catch::Approx(0.25));
  CHECK(s.err_d == Catch::Approx(0.25));
}

TEST_CASE("exact Newton converges quadratically to sqrt(2)") {
  const auto traj = solve_with_errors(quad_oracle, no_errors, Interval(0.0, 3.0),
                                      1.0, 6);
  REQUIRE(traj.iterates.size() == 7);
  CHECK(std::abs(traj.iterates.back().u - std::sqrt(2.0)) < 1e-9);
  for (const auto& it : traj.iterates) {
    CHECK(it.u >= 0.0);
    CHECK(it.u <= 3.0);
  }
}

TEST_CASE("bounded errors keep the tail of |g| small") {
  // Deterministic worst-case sweep: all four constant sign patterns plus the
  // two alternating ones, at the relative error caps 0.1 (derivative) and
  // 0.05 (function).
  const std::vector<std::pair<double, double>> signs{
      {+1, +1}, {+1, -1}, {-1, +1}, {-1, -1}};
  double worst = 0.0;
  for (auto [sd, sf] : signs) {
    for (int alternate = 0; alternate < 2; ++alternate) {
      // step manually so the injected errors can scale with the exact g and
      // g' values at each iterate
      double u = 1.0;
      const Interval iv(0.0, 3.0);
      std::vector<double> gvals;
      for (int n = 0; n < 50; ++n) {
        const auto [gv, gd] = quad_oracle(u);
        gvals.push_back(gv);
        const double flip = alternate && (n % 2) ? -1.0 : 1.0;
        const double phi = sd * flip * 0.1 * std::abs(gd);
        const double psi = sf * flip * 0.05 * std::abs(gv);
        u = project(nr_step({u, gv, gd, phi, psi}), iv);
      }
      double tail = 0.0;
      for (std::size_t i = gvals.size() - 20; i < gvals.size(); ++i)
        tail = std::max(tail, std::abs(gvals[i]));
      worst = std::max(worst, tail);
    }
  }
  CHECK(worst <= 0.2);
}

TEST_CASE("a step out of the interval is projected back") {
  // enormous error pushes the first step far below the interval
  auto injector = [](int n) {
    return n == 0 ? std::pair{0.0, 100.0} : std::pair{0.0, 0.0};
  };
  const Interval iv(1.0, 3.0);
  const auto traj = solve_with_errors(quad_oracle, injector, iv, 3.0, 5);
  for (const auto& it : traj.iterates) {
    CHECK(it.u >= iv.lo);
    CHECK(it.u <= iv.hi);
  }
  CHECK(traj.iterates[1].u == iv.hi);  // step up from u=3 hits the top bound
}

TEST_CASE("solve_with_errors precondition and propagation") {
  CHECK_THROWS_AS(solve_with_errors(quad_oracle, no_errors, Interval(0.0, 1.0),
                                    2.0, 3),
                  InvalidParams);
  // flat oracle trips the divisor floor on the first step
  auto flat = [](double) { return std::pair{1.0, 0.0}; };
  try {
    solve_with_errors(flat, no_errors, Interval(0.0, 1.0), 0.5, 3);
    FAIL("expected DivisorTooSmall");
  } catch (const DivisorTooSmall& e) {
    CHECK(e.index == 0);
  }
}

TEST_CASE("converged_index records the first small |g|") {
  NrSolveOptions opt;
  opt.convergence_tol = 1e-6;
  const auto traj = solve_with_errors(quad_oracle, no_errors, Interval(0.0, 3.0),
                                      1.0, 8, opt);
  REQUIRE(traj.converged_index.has_value());
  CHECK(*traj.converged_index >= 3);
  CHECK(std::abs(traj.iterates[*traj.converged_index].g_val) <= 1e-6);
}

TEST_CASE("tail_sup over trailing windows") {
  NrTrajectory traj;
  for (double g : {5.0, 1.0, 0.1, 0.05}) traj.iterates.push_back({0.0, g, g});
  CHECK(tail_sup(traj, 2) == Catch::Approx(0.1));
  CHECK(tail_sup(traj, 4) == Catch::Approx(5.0));
  CHECK_THROWS_AS(tail_sup(traj, 5), WindowTooLarge);
  CHECK_THROWS_AS(tail_sup(traj, 0), WindowTooLarge);

  NrTrajectory zeros;
  for (int i = 0; i < 4; ++i) zeros.iterates.push_back({0.0, 0.0, 0.0});
  CHECK(tail_sup(zeros, 4) == 0.0);
}

TEST_CASE("next_same_sign_index matches its definition") {
  NrTrajectory traj;
  for (double g : {-2.0, 0.5, 0.2, -0.1, 0.05}) traj.iterates.push_back({0.0, g, g});
  CHECK(traj.next_same_sign_index(0) == 3);  // next nonpositive after -2
  CHECK(traj.next_same_sign_index(1) == 2);
  CHECK(traj.next_same_sign_index(4) == std::nullopt);
}

TEST_CASE("|g| decreases strictly on same-sign steps of exact Newton") {
  // monotone convex test functions with a simple root
  auto exp_oracle = [](double u) {
    return std::pair{std::exp(u) - 2.0, std::exp(u)};
  };
  auto cubic_oracle = [](double u) {
    return std::pair{u * u * u + u - 1.0, 3.0 * u * u + 1.0};
  };
  for (double u0 : {0.0, 0.2, 1.2, 1.5}) {
    const auto traj = solve_with_errors(exp_oracle, no_errors,
                                        Interval(-1.0, 2.0), u0, 8);
    for (std::size_t i = 1; i < traj.iterates.size(); ++i) {
      const auto c = classify_step(traj.iterates[i - 1].g_val,
                                   traj.iterates[i].g_val);
      if ((c == ContractionCase::I || c == ContractionCase::IV) &&
          traj.iterates[i - 1].g_val != 0.0)
        CHECK(std::abs(traj.iterates[i].g_val) <
              std::abs(traj.iterates[i - 1].g_val));
    }
  }
  const auto traj = solve_with_errors(cubic_oracle, no_errors,
                                      Interval(0.0, 2.0), 1.8, 8);
  for (std::size_t i = 2; i < traj.iterates.size(); ++i)
    if (traj.iterates[i - 1].g_val != 0.0)
      CHECK(std::abs(traj.iterates[i].g_val) <=
            std::abs(traj.iterates[i - 1].g_val));
}

TEST_CASE("single-step case bounds hold on randomized convex samples") {
  RngStream rng(20240917, 0);
  int accepted = 0;
  while (accepted < 10'000) {
    const ConvexSample s = draw_convex(rng);
    const double M = s.m_ratio();
    const double alpha = rng.uniform(0.0, 0.6);
    const double beta = rng.uniform(0.0, 0.6);
    const double u_prev = rng.uniform(0.0, 1.0);
    const double g_prev = s.g(u_prev);
    if (std::abs(g_prev) < 1e-12) continue;
    const double phi =
        (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.0, alpha) * s.dg(u_prev);
    const double psi =
        (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.0, beta) * std::abs(g_prev);
    const double u_next = nr_step({u_prev, g_prev, s.dg(u_prev), phi, psi});
    if (u_next < 0.0 || u_next > 1.0) continue;  // both iterates must stay in I
    const double g_next = s.g(u_next);
    const double factor = contraction_factor(classify_step(g_prev, g_next),
                                             M + 1e-12, alpha, beta);
    CHECK(std::abs(g_next) <= factor * std::abs(g_prev) * (1.0 + 1e-9) + 1e-12);
    ++accepted;
  }
}

TEST_CASE("two-step excursion bound covers sign-flip recoveries") {
  RngStream rng(555, 0);
  int checked = 0;
  for (int trial = 0; trial < 4000 && checked < 200; ++trial) {
    const ConvexSample s = draw_convex(rng);
    const double M = s.m_ratio();
    const double beta = 0.9 / std::max(M, 1.0 + 1e-9);
    if (beta >= 1.0) continue;
    const double alpha = 0.05;
    // step manually with relative errors at the caps and random signs
    double u = rng.uniform(0.0, 1.0);
    NrTrajectory traj;
    bool diverged = false;
    for (int n = 0; n <= 40; ++n) {
      const auto [gv, gd] = std::pair{s.g(u), s.dg(u)};
      traj.iterates.push_back({u, gv, gv});
      if (n == 40) break;
      const double sd = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double sf = rng.bernoulli(0.5) ? 1.0 : -1.0;
      double u_next;
      try {
        u_next = nr_step({u, gv, gd, sd * alpha * gd, sf * beta * std::abs(gv)});
      } catch (const DivisorTooSmall&) {
        diverged = true;
        break;
      }
      u = project(u_next, Interval(0.0, 1.0));
    }
    if (diverged) continue;
    const double bound = contraction_factor(ContractionCase::II, M + 1e-12,
                                            alpha, beta) *
                         contraction_factor(ContractionCase::III, M + 1e-12,
                                            alpha, beta);
    for (std::size_t n = 0; n + 1 < traj.iterates.size(); ++n) {
      const double gn = traj.iterates[n].g_val;
      if (gn == 0.0) continue;
      if (classify_step(gn, traj.iterates[n + 1].g_val) != ContractionCase::II)
        continue;
      const auto m = traj.next_same_sign_index(n);
      if (!m) continue;
      CHECK(std::abs(traj.iterates[*m].g_val) <=
            bound * std::abs(gn) * (1.0 + 1e-9) + 1e-12);
      ++checked;
    }
  }
  // the scan must actually have exercised case II
  CHECK(checked > 0);
}
