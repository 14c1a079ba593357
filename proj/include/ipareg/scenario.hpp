#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ipareg/control.hpp"
#include "ipareg/errors.hpp"
#include "ipareg/ooo_plant.hpp"
#include "ipareg/petri_plant.hpp"
#include "ipareg/queue_plants.hpp"
#include "ipareg/report.hpp"

namespace ipareg {

enum class PlantKind { Md1Delay, Md1kLoss, Petri, OooCore };

struct OooScenarioConfig {
  WorkloadProfile profile;
  int m_instr = 10000;
};

/// One experiment: a plant, its controller, a setpoint schedule, and run
/// bookkeeping. Mirrors the on-disk JSON schema (schema_version 1).
struct Scenario {
  std::string name;
  PlantKind plant_kind = PlantKind::Md1Delay;
  Md1DelayConfig md1_delay{0.9, 10000};
  Md1kLossConfig md1k_loss{0.9, 3, 4000.0};
  PetriConfig petri{};
  OooScenarioConfig ooo{};
  ControllerConfig controller{1.0, Interval(0.05, 1.10)};
  SetpointSchedule schedule = SetpointSchedule::constant(1.0);
  int n_cycles = 100;
  double u1 = 1.0;
  std::uint64_t seed = 1;
  int replications = 1;
  double band = 0.5;        // |y - r| tube used for the convergence cycle
  int segment_mean_skip = 4;  // transient cycles dropped from segment means
};

namespace detail_scenario {

using nlohmann::json;

inline void require_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional) {
  for (const char* k : required)
    if (!obj.contains(k))
      throw ValidationError(path + ": missing required key '" + k + "'");
  for (auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : required)
      if (key == k) known = true;
    for (const char* k : optional)
      if (key == k) known = true;
    if (!known) throw ValidationError(path + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_as(const json& obj, const std::string& path, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(path + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj, path, key);
}

inline WorkloadProfile preset_by_name(const std::string& name,
                                      const std::string& path) {
  if (name == "compute") return WorkloadProfile::compute_preset();
  if (name == "memory") return WorkloadProfile::memory_preset();
  throw ValidationError(path + ".preset: expected 'compute' or 'memory', got '" +
                        name + "'");
}

}  // namespace detail_scenario

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail_scenario::get_as;
  using detail_scenario::get_or;
  using detail_scenario::require_keys;

  require_keys(j, "$",
               {"schema_version", "name", "plant", "controller", "schedule",
                "n_cycles", "u1", "seed"},
               {"replications", "band", "segment_mean_skip"});
  if (get_as<int>(j, "$", "schema_version") != 1)
    throw ValidationError("$.schema_version: only version 1 is supported");

  Scenario sc;
  sc.name = get_as<std::string>(j, "$", "name");
  sc.n_cycles = get_as<int>(j, "$", "n_cycles");
  sc.u1 = get_as<double>(j, "$", "u1");
  sc.seed = get_as<std::uint64_t>(j, "$", "seed");
  sc.replications = get_or<int>(j, "$", "replications", 1);
  sc.band = get_or<double>(j, "$", "band", 0.5);
  sc.segment_mean_skip = get_or<int>(j, "$", "segment_mean_skip", 4);
  if (sc.n_cycles < 1) throw ValidationError("$.n_cycles: must be >= 1");
  if (sc.replications < 1) throw ValidationError("$.replications: must be >= 1");

  const auto& pj = j.at("plant");
  const std::string type = get_as<std::string>(pj, "$.plant", "type");
  try {
    if (type == "md1_delay") {
      sc.plant_kind = PlantKind::Md1Delay;
      require_keys(pj, "$.plant", {"type", "lambda", "jobs_per_cycle"},
                   {"reset_each_cycle"});
      sc.md1_delay.lambda = get_as<double>(pj, "$.plant", "lambda");
      sc.md1_delay.jobs_per_cycle = get_as<int>(pj, "$.plant", "jobs_per_cycle");
      sc.md1_delay.reset_each_cycle =
          get_or<bool>(pj, "$.plant", "reset_each_cycle", true);
      sc.md1_delay.validate();
    } else if (type == "md1k_loss") {
      sc.plant_kind = PlantKind::Md1kLoss;
      require_keys(pj, "$.plant", {"type", "lambda", "buffer_k", "t_f"},
                   {"reset_each_cycle", "sfm_exponent"});
      sc.md1k_loss.lambda = get_as<double>(pj, "$.plant", "lambda");
      sc.md1k_loss.buffer_k = get_as<int>(pj, "$.plant", "buffer_k");
      sc.md1k_loss.t_f = get_as<double>(pj, "$.plant", "t_f");
      sc.md1k_loss.reset_each_cycle =
          get_or<bool>(pj, "$.plant", "reset_each_cycle", false);
      sc.md1k_loss.sfm_exponent = get_or<double>(pj, "$.plant", "sfm_exponent", 2.0);
      sc.md1k_loss.validate();
    } else if (type == "petri") {
      sc.plant_kind = PlantKind::Petri;
      require_keys(pj, "$.plant", {"type"},
                   {"V3", "V21", "V22", "order_period", "order_lo", "order_hi",
                    "t_f", "m1_0", "m2_0", "reset_each_cycle", "estimator",
                    "crn_delta"});
      PetriConfig& c = sc.petri;
      c.V3 = get_or<double>(pj, "$.plant", "V3", c.V3);
      c.V21 = get_or<double>(pj, "$.plant", "V21", c.V21);
      c.V22 = get_or<double>(pj, "$.plant", "V22", c.V22);
      c.order_period = get_or<double>(pj, "$.plant", "order_period", c.order_period);
      c.order_lo = get_or<double>(pj, "$.plant", "order_lo", c.order_lo);
      c.order_hi = get_or<double>(pj, "$.plant", "order_hi", c.order_hi);
      c.t_f = get_or<double>(pj, "$.plant", "t_f", c.t_f);
      c.m1_0 = get_or<double>(pj, "$.plant", "m1_0", c.m1_0);
      c.m2_0 = get_or<double>(pj, "$.plant", "m2_0", c.m2_0);
      c.reset_each_cycle =
          get_or<bool>(pj, "$.plant", "reset_each_cycle", c.reset_each_cycle);
      const std::string est =
          get_or<std::string>(pj, "$.plant", "estimator", "propagation");
      if (est == "propagation")
        c.estimator = PetriConfig::Estimator::Propagation;
      else if (est == "crn")
        c.estimator = PetriConfig::Estimator::CrnFallback;
      else
        throw ValidationError("$.plant.estimator: expected 'propagation' or 'crn'");
      c.crn_delta = get_or<double>(pj, "$.plant", "crn_delta", c.crn_delta);
      c.validate();
    } else if (type == "ooo_core") {
      sc.plant_kind = PlantKind::OooCore;
      require_keys(pj, "$.plant", {"type", "preset"},
                   {"m_instr", "mem_latency_ns", "mshr_capacity"});
      sc.ooo.profile = detail_scenario::preset_by_name(
          get_as<std::string>(pj, "$.plant", "preset"), "$.plant");
      sc.ooo.m_instr = get_or<int>(pj, "$.plant", "m_instr", 10000);
      sc.ooo.profile.mem_latency_ns = get_or<double>(
          pj, "$.plant", "mem_latency_ns", sc.ooo.profile.mem_latency_ns);
      sc.ooo.profile.mshr_capacity = get_or<int>(
          pj, "$.plant", "mshr_capacity", sc.ooo.profile.mshr_capacity);
      sc.ooo.profile.validate();
      if (sc.ooo.m_instr < 1) throw ValidationError("$.plant.m_instr: must be >= 1");
    } else {
      throw ValidationError(
          "$.plant.type: expected md1_delay, md1k_loss, petri, or ooo_core");
    }

    const auto& cj = j.at("controller");
    require_keys(cj, "$.controller", {"gain", "interval"},
                 {"k_scale", "divisor_floor"});
    const auto& iv = cj.at("interval");
    if (!iv.is_array() || iv.size() != 2)
      throw ValidationError("$.controller.interval: expected [lo, hi]");
    sc.controller =
        ControllerConfig{1.0, Interval(iv[0].get<double>(), iv[1].get<double>())};
    sc.controller.k_scale = get_or<double>(cj, "$.controller", "k_scale", 1.0);
    sc.controller.divisor_floor =
        get_or<double>(cj, "$.controller", "divisor_floor", kDefaultDivisorFloor);
    const auto& gj = cj.at("gain");
    if (gj.is_string()) {
      const std::string g = gj.get<std::string>();
      if (g == "adaptive")
        sc.controller.mode = GainMode::Adaptive;
      else if (g == "open_loop")
        sc.controller.mode = GainMode::OpenLoop;
      else
        throw ValidationError(
            "$.controller.gain: expected 'adaptive', 'open_loop', or a number");
    } else if (gj.is_number()) {
      sc.controller.mode = GainMode::Fixed;
      sc.controller.fixed_gain = gj.get<double>();
    } else {
      throw ValidationError("$.controller.gain: expected string or number");
    }
    sc.controller.validate();

    const auto& sj = j.at("schedule");
    if (!sj.is_array() || sj.empty())
      throw ValidationError("$.schedule: expected a non-empty array");
    std::vector<SetpointSegment> segs;
    for (std::size_t k = 0; k < sj.size(); ++k) {
      const std::string path = "$.schedule[" + std::to_string(k) + "]";
      require_keys(sj[k], path, {"start_cycle", "r"}, {});
      segs.push_back({get_as<int>(sj[k], path, "start_cycle"),
                      get_as<double>(sj[k], path, "r")});
    }
    sc.schedule = SetpointSchedule(std::move(segs));

    if (!sc.controller.interval.contains(sc.u1))
      throw ValidationError("$.u1: outside controller interval");
  } catch (const InvalidParams& e) {
    throw ValidationError(std::string("invalid scenario value: ") + e.what());
  }
  return sc;
}

/// Strict scenario loader: parse failures carry the parser's location
/// message; schema violations name the offending field.
inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return parse_scenario(j);
}

/// One replication's regulation run. Replication k uses seed + k.
inline RunTrace run_scenario_once(const Scenario& sc, int replication = 0) {
  const std::uint64_t seed = sc.seed + static_cast<std::uint64_t>(replication);
  switch (sc.plant_kind) {
    case PlantKind::Md1Delay: {
      Md1DelayPlant plant(sc.md1_delay);
      return run_regulation(plant, sc.schedule, sc.controller, sc.u1,
                            sc.n_cycles, seed);
    }
    case PlantKind::Md1kLoss: {
      Md1kLossPlant plant(sc.md1k_loss);
      return run_regulation(plant, sc.schedule, sc.controller, sc.u1,
                            sc.n_cycles, seed);
    }
    case PlantKind::Petri: {
      PetriPlant plant(sc.petri);
      return run_regulation(plant, sc.schedule, sc.controller, sc.u1,
                            sc.n_cycles, seed);
    }
    case PlantKind::OooCore: {
      OooCorePlant plant(sc.ooo.profile, sc.ooo.m_instr);
      return run_regulation(plant, sc.schedule, sc.controller, sc.u1,
                            sc.n_cycles, seed);
    }
  }
  throw InvalidParams("run_scenario_once: bad plant kind");
}

struct ScenarioRunResult {
  std::vector<RunReport> reports;        // one per replication
  std::vector<std::string> csv_paths;    // files written, same order
};

/// Execute every replication and write one trace CSV per replication into
/// out_dir (`<name>_rep<k>.csv`). Pass an empty out_dir to skip the files.
inline ScenarioRunResult run_scenario(const Scenario& sc,
                                      const std::string& out_dir) {
  ScenarioRunResult result;
  for (int rep = 0; rep < sc.replications; ++rep) {
    RunTrace trace = run_scenario_once(sc, rep);
    RunReport report = make_report(std::move(trace), sc.schedule, sc.band,
                                   sc.segment_mean_skip);
    if (!out_dir.empty()) {
      const std::string path =
          out_dir + "/" + sc.name + "_rep" + std::to_string(rep) + ".csv";
      write_trace_csv(report.trace, path);
      result.csv_paths.push_back(path);
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

/// Fixed-gain comparison on the scenario's plant and schedule.
inline GainComparison compare_scenario_gains(const Scenario& sc,
                                             const std::vector<double>& gains,
                                             double settle_fraction = 0.1) {
  switch (sc.plant_kind) {
    case PlantKind::Md1Delay: {
      Md1DelayPlant plant(sc.md1_delay);
      return compare_fixed_gain(plant, sc.schedule, sc.controller, sc.u1,
                                sc.n_cycles, sc.seed, gains, settle_fraction);
    }
    case PlantKind::Md1kLoss: {
      Md1kLossPlant plant(sc.md1k_loss);
      return compare_fixed_gain(plant, sc.schedule, sc.controller, sc.u1,
                                sc.n_cycles, sc.seed, gains, settle_fraction);
    }
    case PlantKind::Petri: {
      PetriPlant plant(sc.petri);
      return compare_fixed_gain(plant, sc.schedule, sc.controller, sc.u1,
                                sc.n_cycles, sc.seed, gains, settle_fraction);
    }
    case PlantKind::OooCore: {
      OooCorePlant plant(sc.ooo.profile, sc.ooo.m_instr);
      return compare_fixed_gain(plant, sc.schedule, sc.controller, sc.u1,
                                sc.n_cycles, sc.seed, gains, settle_fraction);
    }
  }
  throw InvalidParams("compare_scenario_gains: bad plant kind");
}

}  // namespace ipareg
