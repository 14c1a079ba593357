// Command-line harness: loads scenario files, runs regulation experiments,
// and emits trace CSVs plus summary reports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipareg/ipareg.hpp"

namespace fs = std::filesystem;

namespace {

void print_report(const ipareg::Scenario& sc, const ipareg::RunReport& rep,
                  int replication) {
  std::printf("scenario %s replication %d: %d cycles\n", sc.name.c_str(),
              replication, static_cast<int>(rep.trace.rows.size()));
  for (const auto& m : rep.segment_means)
    std::printf("  mean y over n=%d..%d: %.6g (setpoint %.6g)\n", m.from, m.to,
                m.mean, m.r);
  if (rep.convergence_cycle)
    std::printf("  |y-r| < %.6g first reached at cycle %d\n", rep.band,
                *rep.convergence_cycle);
  else
    std::printf("  |y-r| < %.6g never reached\n", rep.band);
}

void print_comparison(const ipareg::GainComparison& cmp) {
  for (const auto& entry : cmp.entries) {
    std::printf("%s:\n", entry.label.c_str());
    for (const auto& seg : entry.segments) {
      std::printf("  segment n=%d..%d (r=%.6g): ", seg.start, seg.end, seg.r);
      if (seg.settle_cycle)
        std::printf("settled at cycle %d (%d cycles), ", *seg.settle_cycle,
                    seg.settle_cycles_taken);
      else
        std::printf("did not settle (%d cycles), ", seg.settle_cycles_taken);
      std::printf("oscillation amplitude %.6g\n", seg.oscillation_amplitude);
    }
  }
}

std::vector<double> parse_gains(const std::string& spec) {
  std::vector<double> gains;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    gains.push_back(std::stod(spec.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (gains.empty()) throw ipareg::InvalidParams("--gains: expected a,b,...");
  return gains;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPA-based performance regulation harness"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::string scenario_dir = "scenarios";
  std::string gains_spec;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> cycles_override;

  auto* run = app.add_subcommand("run", "run a scenario and write trace CSVs");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory for CSV files");
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--cycles", cycles_override, "override the cycle count");

  auto* cmp = app.add_subcommand(
      "compare-gains", "compare adaptive against fixed-gain controllers");
  cmp->add_option("scenario", scenario_path, "scenario file")->required();
  cmp->add_option("--gains", gains_spec, "comma-separated fixed gains")
      ->required();
  cmp->add_option("--seed", seed_override, "override the scenario seed");
  cmp->add_option("--cycles", cycles_override, "override the cycle count");

  auto* lst = app.add_subcommand("list-scenarios", "list bundled scenario files");
  lst->add_option("--dir", scenario_dir, "scenario directory");

  auto* val = app.add_subcommand("validate", "validate a scenario file");
  val->add_option("scenario", scenario_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ipareg::Scenario sc = ipareg::load_scenario(scenario_path);
      if (seed_override) sc.seed = *seed_override;
      if (cycles_override) sc.n_cycles = *cycles_override;
      fs::create_directories(out_dir);
      const auto result = ipareg::run_scenario(sc, out_dir);
      for (int rep = 0; rep < sc.replications; ++rep)
        print_report(sc, result.reports[static_cast<std::size_t>(rep)], rep);
      for (const auto& p : result.csv_paths)
        std::printf("wrote %s\n", p.c_str());
    } else if (cmp->parsed()) {
      ipareg::Scenario sc = ipareg::load_scenario(scenario_path);
      if (seed_override) sc.seed = *seed_override;
      if (cycles_override) sc.n_cycles = *cycles_override;
      print_comparison(ipareg::compare_scenario_gains(sc, parse_gains(gains_spec)));
    } else if (lst->parsed()) {
      if (!fs::is_directory(scenario_dir)) {
        std::fprintf(stderr, "no scenario directory at %s\n", scenario_dir.c_str());
        return 1;
      }
      std::vector<std::string> names;
      for (const auto& entry : fs::directory_iterator(scenario_dir))
        if (entry.path().extension() == ".json")
          names.push_back(entry.path().filename().string());
      std::sort(names.begin(), names.end());
      for (const auto& n : names) std::printf("%s\n", n.c_str());
    } else if (val->parsed()) {
      ipareg::Scenario sc = ipareg::load_scenario(scenario_path);
      std::printf("%s: valid (plant %s, %d cycles, %d replications)\n",
                  scenario_path.c_str(), sc.name.c_str(), sc.n_cycles,
                  sc.replications);
    }
  } catch (const ipareg::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
