#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridshed/graph.hpp"

namespace gridshed {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct BusSpec {
  int id = 0;
  double voltage_mag = 1.0;   // per-unit
  double p_load = 0.0;        // MW
  double q_load = 0.0;        // MVar (injection; generated loads are <= 0)
  double gen_capacity = 0.0;  // MW; 0 marks a non-generator bus
};

struct LineSpec {
  int from_bus = 0;
  int to_bus = 0;
  double resistance = 0.0;     // ohm
  double reactance = 0.0;      // ohm
  double rated_current = 1.0;  // kA
};

struct GenerationConfig {
  int n_buses = 33;
  double generator_fraction = 0.15;
  double capacity_ratio = 1.2;  // total capacity = ratio * total load
  Range voltage_range{0.95, 1.05};
  Range p_load_range{0.1, 0.5};
  // Scaled to match the active-power range. A wide [-10, 0] MVar range makes
  // line current limits unsatisfiable at 1 kA ratings; callers that want it
  // anyway can set it explicitly (CLI: --wide-q-range).
  Range q_load_range{-0.10, 0.0};
  Range resistance_range{0.01, 1.0};
  Range reactance_range{0.01, 1.0};
  double rated_current = 1.0;  // kA
  std::uint64_t seed = 0;
};

struct Microgrid {
  std::vector<BusSpec> buses;  // ids are 0..N-1 in order
  std::vector<LineSpec> lines; // spanning tree, N-1 entries
  GenerationConfig meta;       // config the instance was generated with
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
};

// Number of generator buses placed on an N-bus grid: round(fraction * N),
// clamped to at least 1 so capacity can balance load.
int generator_count(int n_buses, double generator_fraction);

// Draws a uniformly attached random tree topology plus bus/line parameters.
// Bus 0 is the root; each later bus attaches to a uniformly random earlier bus.
Microgrid generate_microgrid(const GenerationConfig& config);

// Structural checks: contiguous ids, tree topology (N-1 edges, connected,
// no cycles), parameter ranges against meta, generator count and capacity.
ValidationReport validate(const Microgrid& mg);

double total_load(const Microgrid& mg);

SimpleGraph topology(const Microgrid& mg);

std::string to_json(const Microgrid& mg);
Microgrid microgrid_from_json(const std::string& text);

// JSONL: one microgrid per line.
void write_microgrids(const std::string& path, const std::vector<Microgrid>& grids);
std::vector<Microgrid> read_microgrids(const std::string& path);

}  // namespace gridshed
