// Experiment families: sweeps over one variable, optional series over a
// second, one CSV row per (point, scheme, mode, metric).
#pragma once

#include "mmrelay/gpopt.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmrelay {

enum class SweepVar { kPilot, kEta, kQos, kIterations, kRelayPower, kInterference, kAntennas };

std::string sweep_var_name(SweepVar v);
SweepVar parse_sweep_var(const std::string& s);
// True when grid values are in dB or dBm.
bool sweep_is_db(SweepVar v);

enum class Mode { kEe, kMaxMin, kSe, kEqual, kNone };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);

struct Scenario {
  std::string name;
  SystemConfig base;
  SweepVar sweep = SweepVar::kEta;
  std::vector<double> grid;
  bool has_series = false;
  SweepVar series = SweepVar::kEta;
  std::vector<double> series_grid;
  std::vector<Scheme> schemes;
  std::vector<Mode> modes;
  int trials = 0;        // Monte-Carlo trials per point; 0 skips MC metrics
  bool ls_compare = false;  // extra MC metric with least-squares estimates
  bool half_duplex = false; // extra rows for the half-duplex baseline
  double qos_rate = 0;      // per-user target in bps/Hz, 0 for none
  int max_outer = 100;
  std::string plot_metric = "ee";
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending key.
  void validate() const;
};

struct ResultRow {
  std::string scenario;
  std::string sweep_var;
  double sweep_value = 0;
  std::string scheme;
  std::string mode;
  std::string metric;
  double value = 0;
  double se = 0;
  bool infeasible = false;
  std::uint64_t seed = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  bool any_infeasible = false;
};

// Comma-separated metric names, blanks ignored.
std::vector<std::string> split_metrics(const std::string& s);

std::string csv_header();
std::string to_csv(const ResultTable& t);

std::vector<Scenario> builtin_scenarios();
const Scenario* find_builtin(const std::vector<Scenario>& all,
                             const std::string& name);

// N = 500, K = 5 unless the scenario varies N itself.
Scenario paper_scale(Scenario s);

ResultTable run_scenario(const Scenario& s);

}  // namespace mmrelay
