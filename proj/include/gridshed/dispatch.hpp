#pragma once

#include <cstdint>
#include <vector>

#include "gridshed/attack.hpp"
#include "gridshed/microgrid.hpp"

namespace gridshed {

struct ComponentBus {
  int id = 0;  // original bus id
  double p_load = 0.0;
  double q_load = 0.0;
  double gen_capacity = 0.0;
  double voltage_mag = 1.0;
};

// Tree edge between local bus indices; child is the endpoint away from the
// root. Apparent-power transfer limit: rated current * min endpoint voltage.
struct ComponentEdge {
  int parent = 0;
  int child = 0;
  double flow_limit = 0.0;
};

// One island: a connected, radial remnant rooted at its lowest-id bus.
struct ComponentProblem {
  std::vector<ComponentBus> buses;   // root first, then BFS discovery order
  std::vector<ComponentEdge> edges;  // one per non-root bus
  std::vector<int> parent;           // local parent index, -1 at the root
};

std::vector<ComponentProblem> split_components(const DisruptedNetwork& net);

struct DispatchSolution {
  std::vector<double> served_fraction;  // per local bus, in [0, 1]
  std::vector<double> gen_output;       // MW, 0 at non-generator buses
  std::vector<double> reactive_gen;     // MVar, 0 at non-generator buses
  double served_load = 0.0;             // MW
};

// Linear-programming load shedding: maximize served active load subject to
// full-island active/reactive power balance, generator limits, per-load
// served fraction in [0, 1], and an octagonal linearization of the
// apparent-power line limit |S| <= flow_limit on every tree edge.
DispatchSolution solve_component_dispatch(const ComponentProblem& cp);

// Fraction of pre-attack load left unserved under a scenario: disrupted-bus
// load plus per-island optimal shedding, over total pre-attack load.
double shed_rate(const Microgrid& mg, const AttackScenario& s);

struct ElsrOptions {
  int n_scenarios = 1000;
  std::uint64_t base_seed = 0;
  double p_min = 0.01;
  double p_max = 0.2;
  int jobs = 1;
};

struct ElsrEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_scenarios = 0;
  // |mean over first half - overall mean| / max(overall mean, 1e-12); a cheap
  // convergence monitor for the Monte Carlo average.
  double half_split_rel_change = 0.0;
};

// Monte Carlo expected load shedding rate. Scenario i is drawn from an RNG
// seeded with mix64(base_seed ^ i), so results do not depend on evaluation
// order or on `jobs`.
ElsrEstimate estimate_elsr(const Microgrid& mg, const ElsrOptions& opt);

// Shed rate of the deterministic scenario that disrupts exactly this bus.
double node_vulnerability(const Microgrid& mg, int bus_id);

}  // namespace gridshed
