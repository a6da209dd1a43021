#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dfg/completeness.hpp"

namespace dfg {

struct RayProfile {
  double alpha = 0;
  Index base_vertex = 0;
  std::vector<double> values;   // w_n along the attached ray, depth 0 = base vertex
  double max_ratio = 0;         // max u(k)/u(k−1)
  double threshold = 0;         // 2/(2+α)
  bool decays = true;           // every ratio below the threshold
  bool growth_after_crossing = true;  // recursion from a threshold crossing grows like (1+α/2)^j
};

struct SupergraphReport {
  std::string base;
  std::string supergraph;
  std::vector<Index> probes;  // supergraph ids of the base probes
  CompletenessReport base_report;
  CompletenessReport super_report;
  std::vector<bool> decreasing;   // w_n(root) strictly decreasing over the schedule, per α
  std::vector<RayProfile> rays;
};

/// Attach complete rays to every vertex of `base` and contrast the two
/// classifications under one schedule.
SupergraphReport supergraph_scenario(const FamilyPtr& base, const Schedule& schedule, const ClassifyOptions& options,
                                        bool single_vertex = false);

struct CaseTally {
  std::string name;
  long count = 0;
  double max_value = -INFINITY;  // max (L̃+α)v
  long violations = 0;           // values above the slack
};

struct ExtensionCheck {
  double alpha = 0;
  std::array<CaseTally, 4> cases;
  double normalizer = 1;
  Index window_vertices = 0;
};

struct ExtensionReport {
  std::string V;
  std::string W;
  bool skipped = false;
  std::string note;
  CompletenessReport subgraph_report;
  CompletenessReport V_report;
  std::vector<ExtensionCheck> checks;
  double slack = 1e-8;
};

struct ExtensionOptions {
  long whisker_length = 2;
  long stride = 2;     // decorate every stride-th base vertex
  int window = 64;     // base positions evaluated
  double taper = 0.9;  // φ ≤ taper^{position}
  double slack = 1e-8;
};

/// V = base decorated with whiskers, W = base. Certifies W's Dirichlet
/// subgraph, extends its certificate u to V by ū = (L^{(D)}_{V∖W}+α)^{-1}φ and
/// checks (L̃+α)v ≤ slack at the four vertex types.
ExtensionReport extension_scenario(const FamilyPtr& base, const ExtensionOptions& ext, const Schedule& schedule,
                                       const ClassifyOptions& options);

}  // namespace dfg
