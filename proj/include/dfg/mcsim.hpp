#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dfg/family.hpp"

namespace dfg {

struct ProcessConfig {
  FamilyPtr family;
  Index start = 0;
  double horizon = 1.0;
  long replicas = 100000;
  /// Paths making this many jumps before the horizon count as exploded.
  /// Ignored on finite families, where explosion is impossible.
  long jump_cap = 1000000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  void check() const;
  Json to_json() const;
};

enum class PathStatus { alive, killed, exploded };

struct PathOutcome {
  PathStatus status = PathStatus::alive;
  double time = 0;        // kill / explosion time; horizon when alive
  bool censored = false;  // exploded, but the remaining budget is within the recent time scale
  long jumps = 0;
  Index final_vertex = -1;  // vertex at the horizon (alive) or where the path stopped
  bool operator==(const PathOutcome&) const = default;
};

struct Proportion {
  long count = 0;
  double fraction = 0;
  double standard_error = 0;  // binomial
};

struct SimulationTally {
  long replicas = 0;
  double horizon = 0;
  Proportion alive, killed, exploded, censored;
  std::map<Index, long> occupancy;  // alive-at-horizon counts per vertex
  std::vector<PathOutcome> paths;   // in replica order
  long max_jumps = 0;
  int final_level = 0;  // deepest section the simulation needed
  bool censoring_warning = false;  // censored fraction above 0.1%
  Proportion occupancy_at(Index x) const;
  Json to_json(bool with_occupancy = true) const;
};

/// Minimal jump-hold-kill chain: hold Exp(R(x)), R = (Σ_y b(x,y) + c(x))/m(x),
/// then jump to y with probability ∝ b(x,y) or die with probability ∝ c(x).
SimulationTally simulate(const ProcessConfig& config);

/// Outcome of one replica; identical to the corresponding entry of simulate().
PathOutcome simulate_path(const ProcessConfig& config, long replica);

struct MCurveEstimate {
  std::vector<double> times, M, lower, upper, censored;
  long replicas = 0;
};

/// M̂_t = P(alive at t) + P(killed ≤ t) with 95% binomial bands.
MCurveEstimate estimate_M_curve(const ProcessConfig& config, const std::vector<double>& times);

}  // namespace dfg
