#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridshed/dataset.hpp"
#include "gridshed/microgrid.hpp"

namespace gridshed {

// A microgrid together with its Monte Carlo shedding label.
struct LabeledInstance {
  Microgrid instance;
  double elsr = 0.0;
  double std_error = 0.0;
  int n_scenarios = 0;
  std::uint64_t seed = 0;
};

std::string to_json(const LabeledInstance& li);
LabeledInstance labeled_from_json(const std::string& text);

void write_labeled(const std::string& path, const std::vector<LabeledInstance>& items);
std::vector<LabeledInstance> read_labeled(const std::string& path);

// Reads graph samples from any of the three JSONL layouts: dataset records,
// labeled instances (features are extracted, label = elsr), or raw microgrids
// (features only, no label). The layout is detected per line.
std::vector<InstanceRecord> read_records_auto(const std::string& path);

}  // namespace gridshed
