#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gridshed/microgrid.hpp"
#include "gridshed/rng.hpp"

namespace gridshed {

// Centrality-weighted disruption probabilities: p = p_min + (p_max - p_min) * c
// with degree centrality for buses and normalized shortest-path betweenness
// for lines.
struct DisruptionProbabilities {
  std::vector<double> bus;   // indexed by bus id
  std::vector<double> line;  // aligned with Microgrid::lines
  double p_min = 0.01;
  double p_max = 0.2;
};

struct AttackScenario {
  std::vector<int> disrupted_buses;                     // sorted, unique
  std::vector<std::pair<int, int>> disrupted_lines;     // (from, to) as in the grid
};

// Grid remnant after removing disrupted buses, lines, and lines touching
// disrupted buses. Bus ids keep their original values.
struct DisruptedNetwork {
  std::vector<BusSpec> buses;
  std::vector<LineSpec> lines;
};

DisruptionProbabilities disruption_probabilities(const Microgrid& mg,
                                                 double p_min = 0.01,
                                                 double p_max = 0.2);

// Independent Bernoulli draw per bus, then per line, in index order.
AttackScenario sample_scenario(const Microgrid& mg, const DisruptionProbabilities& probs, Rng& rng);

AttackScenario single_bus_scenario(int bus_id);

DisruptedNetwork apply_scenario(const Microgrid& mg, const AttackScenario& s);

std::string to_json(const AttackScenario& s);

}  // namespace gridshed
