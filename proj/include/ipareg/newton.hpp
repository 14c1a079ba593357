#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ipareg/errors.hpp"
#include "ipareg/interval.hpp"

namespace ipareg {

inline constexpr double kDefaultDivisorFloor = 1e-12;

/// One error-injected Newton step: previous iterate, exact function and
/// derivative values, and the additive errors applied to each.
struct NrStepInput {
  double u_prev;
  double g_val;    // g(u_prev)
  double g_deriv;  // g'(u_prev)
  double phi = 0.0;  // derivative error
  double psi = 0.0;  // function error
};

/// Relative error magnitudes of one step. err_g is undefined when the exact
/// function value is zero; g_is_zero flags that instead of dividing.
struct RelativeErrors {
  double err_g;  // |psi| / |g|
  double err_d;  // |phi| / |g'|
  bool g_is_zero;
};

inline RelativeErrors relative_errors(double g_val, double g_deriv, double psi,
                                      double phi) {
  RelativeErrors r{};
  r.g_is_zero = (g_val == 0.0);
  r.err_g = r.g_is_zero ? 0.0 : std::abs(psi) / std::abs(g_val);
  r.err_d = g_deriv == 0.0 ? std::numeric_limits<double>::infinity()
                           : std::abs(phi) / std::abs(g_deriv);
  return r;
}

/// u_prev - (g + psi) / (g' + phi). Throws DivisorTooSmall when the noisy
/// derivative is within the floor of zero (flat-gradient region).
inline double nr_step(const NrStepInput& in,
                      double divisor_floor = kDefaultDivisorFloor) {
  const double divisor = in.g_deriv + in.phi;
  if (std::abs(divisor) <= divisor_floor) throw DivisorTooSmall(divisor);
  return in.u_prev - (in.g_val + in.psi) / divisor;
}

/// Sign patterns of consecutive function values. For monotone nondecreasing
/// convex g the per-step contraction bounds below attach to these tags as
/// printed; a concave orientation swaps I with IV and II with III under the
/// g -> -g symmetry.
enum class ContractionCase { I, II, III, IV };

/// Classify by (sign g_prev, sign g_next): I = (-,-), II = (-,+),
/// III = (+,-), IV = (+,+). A zero counts as both signs and takes the sign
/// of its partner; (0, 0) classifies as I.
inline ContractionCase classify_step(double g_prev, double g_next) {
  int sp = (g_prev > 0) - (g_prev < 0);
  int sn = (g_next > 0) - (g_next < 0);
  if (sp == 0 && sn == 0) return ContractionCase::I;
  if (sp == 0) sp = sn;
  if (sn == 0) sn = sp;
  if (sp < 0) return sn < 0 ? ContractionCase::I : ContractionCase::II;
  return sn < 0 ? ContractionCase::III : ContractionCase::IV;
}

/// Per-case upper bound on |g(u_j)| / |g(u_{j-1})| for one noisy Newton step,
/// given the derivative-ratio bound m_ratio = |g'|_max / |g'|_min over the
/// interval and relative error caps err_d <= alpha, err_g <= beta.
/// Cases II and III can exceed 1; the two-step product II*III is what bounds
/// a sign-flip excursion.
inline double contraction_factor(ContractionCase c, double m_ratio,
                                 double alpha, double beta) {
  if (!(m_ratio > 1.0) || !(alpha >= 0.0 && alpha < 1.0) ||
      !(beta >= 0.0 && beta < 1.0))
    throw InvalidParams("contraction_factor: need m_ratio > 1, alpha, beta in [0,1)");
  switch (c) {
    case ContractionCase::I:
      return 1.0 - (1.0 - beta) / (1.0 + alpha);
    case ContractionCase::II:
      return m_ratio * (1.0 + beta) / (1.0 - alpha) - 1.0;
    case ContractionCase::III:
      return (1.0 + beta) / (1.0 - alpha) - 1.0;
    case ContractionCase::IV:
      return 1.0 - (1.0 - beta) / ((1.0 + alpha) * m_ratio);
  }
  throw InvalidParams("contraction_factor: bad case tag");
}

struct NrIterate {
  double u;
  double g_val;       // exact g(u)
  double g_with_psi;  // observed value g(u) + injected psi
};

/// Iterate history of a projected, error-injected Newton run. Index 0 holds
/// the initial guess, so size() == requested iterations + 1.
struct NrTrajectory {
  std::vector<NrIterate> iterates;
  std::optional<std::size_t> converged_index;

  /// min{m > n : g(u_m) g(u_n) >= 0} — the next iterate whose function value
  /// shares the sign of iterate n's (zero matches either sign).
  std::optional<std::size_t> next_same_sign_index(std::size_t n) const {
    if (n >= iterates.size()) return std::nullopt;
    const double gn = iterates[n].g_val;
    for (std::size_t m = n + 1; m < iterates.size(); ++m)
      if (iterates[m].g_val * gn >= 0.0) return m;
    return std::nullopt;
  }
};

/// Max |g| over the last `window` iterates — the finite-horizon surrogate for
/// the limsup of |g(u_n)|.
inline double tail_sup(const NrTrajectory& traj, std::size_t window) {
  if (window < 1 || window > traj.iterates.size())
    throw WindowTooLarge("tail_sup: window must be in [1, trajectory length]");
  double m = 0.0;
  for (std::size_t i = traj.iterates.size() - window; i < traj.iterates.size();
       ++i)
    m = std::max(m, std::abs(traj.iterates[i].g_val));
  return m;
}

struct NrSolveOptions {
  double divisor_floor = kDefaultDivisorFloor;
  // When set, converged_index records the first iterate with |g| <= tol.
  std::optional<double> convergence_tol;
};

/// Projected Newton iteration with injected evaluation errors.
///
/// g_oracle(u) returns the exact pair (g(u), g'(u)); error_injector(n)
/// returns the (phi_n, psi_n) pair applied when stepping away from iterate n.
/// Every iterate, including the start, is projected into `iv`.
template <class GOracle, class ErrorInjector>
NrTrajectory solve_with_errors(GOracle&& g_oracle, ErrorInjector&& error_injector,
                               const Interval& iv, double u0, int n_iters,
                               const NrSolveOptions& opt = {}) {
  if (n_iters < 1) throw InvalidParams("solve_with_errors: n_iters >= 1");
  if (!iv.contains(u0)) throw InvalidParams("solve_with_errors: u0 outside interval");

  NrTrajectory traj;
  traj.iterates.reserve(static_cast<std::size_t>(n_iters) + 1);

  double u = u0;
  for (int n = 0; n <= n_iters; ++n) {
    const auto [gv, gd] = g_oracle(u);
    const auto [phi, psi] = error_injector(n);
    traj.iterates.push_back({u, gv, gv + psi});
    if (opt.convergence_tol && !traj.converged_index &&
        std::abs(gv) <= *opt.convergence_tol)
      traj.converged_index = static_cast<std::size_t>(n);
    if (n == n_iters) break;
    double u_next;
    try {
      u_next = nr_step({u, gv, gd, phi, psi}, opt.divisor_floor);
    } catch (const DivisorTooSmall& e) {
      throw DivisorTooSmall(e.value, n);
    }
    u = project(u_next, iv);
  }
  return traj;
}

}  // namespace ipareg
