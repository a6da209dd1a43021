#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dfg/section.hpp"

namespace dfg {

struct RandomGraphOptions {
  Index min_vertices = 2;
  Index max_vertices = 40;
  double extra_edges = 1.0;   // expected extra edges per vertex beyond a spanning tree
  double killing_share = 0.5; // probability that a vertex carries killing
  double weight_spread = 1.0; // log-uniform spread of b, c, m around 1
};

/// Connected random graph: a random recursive tree plus extra edges, with
/// log-uniform weights, killing and measure.
Graph random_graph(std::mt19937_64& rng, const RandomGraphOptions& opt = {});

/// Random finite section: a random graph with a nonnegative deficiency on a
/// random subset of vertices (at least one).
Section random_section(std::mt19937_64& rng, const RandomGraphOptions& opt = {});

struct SuiteResult {
  std::string name;
  long instances = 0;
  long failures = 0;
  double worst = 0;  // worst observed error / tolerance ratio
  std::string first_failure;
  bool passed() const { return failures == 0 && instances > 0; }
};

struct SelfcheckOptions {
  long instances = 200;
  std::uint64_t seed = 7;
};

/// The invariant suites: domain monotonicity, positivity, Markov bound,
/// resolvent identity, semigroup property, Green identity, normal
/// contractions, monotone M_t, M_t = S + e^{−tL}(1−S), O(Δt²) heat residual.
std::vector<SuiteResult> run_property_suites(const SelfcheckOptions& options = {});

}  // namespace dfg
