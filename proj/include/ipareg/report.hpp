#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "ipareg/control.hpp"
#include "ipareg/errors.hpp"
#include "ipareg/stats.hpp"

namespace ipareg {

/// Double formatting used for every CSV cell: shortest round-trippable form
/// so identical runs produce byte-identical files.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct SegmentMean {
  int from;  // 1-based inclusive
  int to;
  double r;
  double mean;
};

/// Per-run summary: trimmed segment means and the first cycle whose output
/// entered the |y - r| < band tube.
struct RunReport {
  RunTrace trace;
  std::vector<SegmentMean> segment_means;
  std::optional<int> convergence_cycle;
  double band = 0.0;
};

/// Build a report from a finished trace. Each schedule segment's mean skips
/// its first `mean_skip` cycles (transients), matching the reporting windows
/// used for the reference experiments.
inline RunReport make_report(RunTrace trace, const SetpointSchedule& schedule,
                             double band, int mean_skip = 4) {
  RunReport rep;
  rep.band = band;
  const int n_cycles = static_cast<int>(trace.rows.size());
  const auto y = trace.y_values();

  const auto& segs = schedule.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const int seg_start = segs[k].start_cycle;
    const int seg_end = k + 1 < segs.size()
                            ? segs[k + 1].start_cycle - 1
                            : n_cycles;
    if (seg_start > n_cycles) break;
    const int from = std::min(seg_start + mean_skip, seg_end);
    const int to = std::min(seg_end, n_cycles);
    if (from > to) continue;
    rep.segment_means.push_back(
        {from, to, segs[k].r, mean_over(y, static_cast<std::size_t>(from),
                                        static_cast<std::size_t>(to))});
  }

  for (const auto& row : trace.rows) {
    if (std::abs(row.y - row.r) < band) {
      rep.convergence_cycle = row.n;
      break;
    }
  }
  rep.trace = std::move(trace);
  return rep;
}

/// CSV with the fixed column set n,u,y,e,A,deriv,r (header mandatory).
inline void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fputs("n,u,y,e,A,deriv,r\n", f);
  for (const auto& row : trace.rows) {
    const std::string line = std::to_string(row.n) + "," +
                             format_double(row.u) + "," + format_double(row.y) +
                             "," + format_double(row.e) + "," +
                             format_double(row.A) + "," +
                             format_double(row.deriv) + "," +
                             format_double(row.r) + "\n";
    std::fputs(line.c_str(), f);
  }
  std::fclose(f);
}

/// Plot-ready series (n, y, r, u); rendering is left to the consumer.
inline void emit_plot_data(const RunReport& report, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fputs("n,y,r,u\n", f);
  for (const auto& row : report.trace.rows) {
    const std::string line = std::to_string(row.n) + "," +
                             format_double(row.y) + "," + format_double(row.r) +
                             "," + format_double(row.u) + "\n";
    std::fputs(line.c_str(), f);
  }
  std::fclose(f);
}

/// Settling and oscillation figures of one controller on one setpoint
/// segment. A segment settles at the first cycle whose output is within
/// settle_band of the setpoint; the oscillation amplitude is the worst
/// |y - r| from then on. Unsettled segments report the full segment as
/// settling time and their worst overall excursion.
struct SegmentBehavior {
  int start = 0;
  int end = 0;
  double r = 0.0;
  std::optional<int> settle_cycle;       // absolute cycle number
  int settle_cycles_taken = 0;           // cycles from segment start (or full length)
  double oscillation_amplitude = 0.0;
};

inline std::vector<SegmentBehavior> segment_behavior(
    const RunTrace& trace, const SetpointSchedule& schedule,
    double settle_fraction = 0.1) {
  std::vector<SegmentBehavior> out;
  const int n_cycles = static_cast<int>(trace.rows.size());
  const auto& segs = schedule.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    SegmentBehavior b;
    b.start = segs[k].start_cycle;
    b.end = k + 1 < segs.size() ? segs[k + 1].start_cycle - 1 : n_cycles;
    b.r = segs[k].r;
    if (b.start > n_cycles) break;
    b.end = std::min(b.end, n_cycles);
    const double band = settle_fraction * std::abs(b.r);
    for (int n = b.start; n <= b.end; ++n) {
      if (std::abs(trace.rows[n - 1].y - b.r) <= band) {
        b.settle_cycle = n;
        break;
      }
    }
    const int from = b.settle_cycle ? *b.settle_cycle : b.start;
    b.settle_cycles_taken =
        (b.settle_cycle ? *b.settle_cycle - b.start + 1 : b.end - b.start + 1);
    for (int n = from; n <= b.end; ++n)
      b.oscillation_amplitude =
          std::max(b.oscillation_amplitude, std::abs(trace.rows[n - 1].y - b.r));
    out.push_back(b);
  }
  return out;
}

struct GainComparisonEntry {
  std::string label;  // "adaptive" or "fixed 0.03"
  std::vector<SegmentBehavior> segments;
};

struct GainComparison {
  std::vector<GainComparisonEntry> entries;
};

/// Run the same scenario once with the adaptive controller and once per fixed
/// gain, all under a common seed, and summarize per-segment settling and
/// oscillation behavior.
template <CyclePlant P>
GainComparison compare_fixed_gain(P& plant, const SetpointSchedule& schedule,
                                  ControllerConfig cfg, double u1, int n_cycles,
                                  std::uint64_t seed,
                                  const std::vector<double>& gains,
                                  double settle_fraction = 0.1) {
  GainComparison cmp;
  cfg.mode = GainMode::Adaptive;
  const RunTrace adaptive =
      run_regulation(plant, schedule, cfg, u1, n_cycles, seed);
  cmp.entries.push_back(
      {"adaptive", segment_behavior(adaptive, schedule, settle_fraction)});
  for (double g : gains) {
    ControllerConfig fixed = cfg;
    fixed.mode = GainMode::Fixed;
    fixed.fixed_gain = g;
    const RunTrace t = run_regulation(plant, schedule, fixed, u1, n_cycles, seed);
    cmp.entries.push_back({"fixed " + format_double(g),
                           segment_behavior(t, schedule, settle_fraction)});
  }
  return cmp;
}

}  // namespace ipareg
