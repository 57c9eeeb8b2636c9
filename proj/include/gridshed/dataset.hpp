#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridshed/matrix.hpp"
#include "gridshed/microgrid.hpp"

namespace gridshed {

// One graph sample. Node feature columns: p_load, q_load, generator flag,
// degree. Edge feature columns: resistance, reactance (aligned with edges).
struct InstanceRecord {
  Matrix node_features;                   // N x 4
  Matrix edge_features;                   // (N-1) x 2
  std::vector<std::pair<int, int>> edges;
  std::optional<double> label;            // expected load shedding rate
};

InstanceRecord extract_features(const Microgrid& mg);

// Per-column affine transform fit on a corpus: x -> (x - mean) / std, with a
// population std floored at 1e-8.
struct Standardizer {
  std::vector<double> node_mean, node_std;
  std::vector<double> edge_mean, edge_std;

  static Standardizer identity(int node_dim, int edge_dim);
};

Standardizer fit_standardizer(const std::vector<InstanceRecord>& records);
InstanceRecord apply_standardizer(const Standardizer& st, const InstanceRecord& rec);

struct ResamplePlan {
  int n_bins = 20;       // equal-width bins over [0, 1]
  int n_draws = 4000;
  std::uint64_t seed = 0;
};

// Inverse-frequency resampling: draw with replacement, weighting each record
// by 1 / (population of its label bin). Flattens a skewed label distribution.
std::vector<InstanceRecord> resample(const std::vector<InstanceRecord>& records,
                                     const ResamplePlan& plan);

// Kolmogorov-Smirnov distance between the empirical label distribution and
// the uniform distribution over the occupied label range [min, max].
double ks_distance_to_uniform(std::vector<double> labels);

void write_dataset(const std::string& path, const std::vector<InstanceRecord>& records);
std::vector<InstanceRecord> read_dataset(const std::string& path);

std::string record_to_json(const InstanceRecord& rec);
InstanceRecord record_from_json(const std::string& text);

}  // namespace gridshed
