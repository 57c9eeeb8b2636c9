#include "gridshed/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gridshed/rng.hpp"

namespace gridshed {

using json = nlohmann::ordered_json;

InstanceRecord extract_features(const Microgrid& mg) {
  const int n = static_cast<int>(mg.buses.size());
  InstanceRecord rec;
  rec.node_features = Matrix(n, 4);
  std::vector<int> degree(n, 0);
  for (const LineSpec& ln : mg.lines) {
    ++degree[ln.from_bus];
    ++degree[ln.to_bus];
  }
  for (int i = 0; i < n; ++i) {
    rec.node_features.at(i, 0) = mg.buses[i].p_load;
    rec.node_features.at(i, 1) = mg.buses[i].q_load;
    rec.node_features.at(i, 2) = mg.buses[i].gen_capacity > 0.0 ? 1.0 : 0.0;
    rec.node_features.at(i, 3) = static_cast<double>(degree[i]);
  }
  rec.edge_features = Matrix(static_cast<int>(mg.lines.size()), 2);
  for (int e = 0; e < static_cast<int>(mg.lines.size()); ++e) {
    rec.edge_features.at(e, 0) = mg.lines[e].resistance;
    rec.edge_features.at(e, 1) = mg.lines[e].reactance;
    rec.edges.push_back({mg.lines[e].from_bus, mg.lines[e].to_bus});
  }
  return rec;
}

Standardizer Standardizer::identity(int node_dim, int edge_dim) {
  Standardizer st;
  st.node_mean.assign(node_dim, 0.0);
  st.node_std.assign(node_dim, 1.0);
  st.edge_mean.assign(edge_dim, 0.0);
  st.edge_std.assign(edge_dim, 1.0);
  return st;
}

namespace {

void fit_columns(const std::vector<const Matrix*>& mats, std::vector<double>& mean,
                 std::vector<double>& stdev) {
  const int cols = mats.empty() ? 0 : mats.front()->cols;
  mean.assign(cols, 0.0);
  stdev.assign(cols, 1.0);
  long long count = 0;
  for (const Matrix* m : mats) {
    if (m->cols != cols) throw std::invalid_argument("fit_standardizer: column mismatch");
    for (int r = 0; r < m->rows; ++r)
      for (int c = 0; c < cols; ++c) mean[c] += m->at(r, c);
    count += m->rows;
  }
  if (count == 0) return;
  for (double& v : mean) v /= static_cast<double>(count);
  std::vector<double> ss(cols, 0.0);
  for (const Matrix* m : mats)
    for (int r = 0; r < m->rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double d = m->at(r, c) - mean[c];
        ss[c] += d * d;
      }
  for (int c = 0; c < cols; ++c)
    stdev[c] = std::max(std::sqrt(ss[c] / static_cast<double>(count)), 1e-8);
}

}  // namespace

Standardizer fit_standardizer(const std::vector<InstanceRecord>& records) {
  if (records.empty()) throw std::invalid_argument("fit_standardizer: empty corpus");
  Standardizer st;
  std::vector<const Matrix*> nodes, edges;
  for (const InstanceRecord& r : records) {
    nodes.push_back(&r.node_features);
    edges.push_back(&r.edge_features);
  }
  fit_columns(nodes, st.node_mean, st.node_std);
  fit_columns(edges, st.edge_mean, st.edge_std);
  return st;
}

InstanceRecord apply_standardizer(const Standardizer& st, const InstanceRecord& rec) {
  if (static_cast<int>(st.node_mean.size()) != rec.node_features.cols ||
      static_cast<int>(st.edge_mean.size()) != rec.edge_features.cols)
    throw std::invalid_argument("apply_standardizer: dimension mismatch");
  InstanceRecord out = rec;
  for (int r = 0; r < out.node_features.rows; ++r)
    for (int c = 0; c < out.node_features.cols; ++c)
      out.node_features.at(r, c) = (out.node_features.at(r, c) - st.node_mean[c]) / st.node_std[c];
  for (int r = 0; r < out.edge_features.rows; ++r)
    for (int c = 0; c < out.edge_features.cols; ++c)
      out.edge_features.at(r, c) = (out.edge_features.at(r, c) - st.edge_mean[c]) / st.edge_std[c];
  return out;
}

std::vector<InstanceRecord> resample(const std::vector<InstanceRecord>& records,
                                     const ResamplePlan& plan) {
  if (records.empty()) throw std::invalid_argument("resample: empty corpus");
  if (plan.n_bins < 1 || plan.n_draws < 1)
    throw std::invalid_argument("resample: n_bins and n_draws must be positive");

  std::vector<int> bin(records.size());
  std::vector<int> bin_count(plan.n_bins, 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label) throw std::invalid_argument("resample: record without label");
    const double y = *records[i].label;
    if (y < 0.0 || y > 1.0) throw std::invalid_argument("resample: label outside [0, 1]");
    bin[i] = std::min(plan.n_bins - 1, static_cast<int>(y * plan.n_bins));
    ++bin_count[bin[i]];
  }

  std::vector<double> cumulative(records.size());
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    total += 1.0 / bin_count[bin[i]];
    cumulative[i] = total;
  }

  Rng rng(plan.seed);
  std::vector<InstanceRecord> out;
  out.reserve(plan.n_draws);
  for (int d = 0; d < plan.n_draws; ++d) {
    const double u = rng.next_double() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t idx = std::min(records.size() - 1,
                                     static_cast<std::size_t>(it - cumulative.begin()));
    out.push_back(records[idx]);
  }
  return out;
}

double ks_distance_to_uniform(std::vector<double> labels) {
  if (labels.empty()) throw std::invalid_argument("ks_distance_to_uniform: no labels");
  std::sort(labels.begin(), labels.end());
  const double lo = labels.front(), hi = labels.back();
  if (hi - lo < 1e-15) return 0.0;
  const double n = static_cast<double>(labels.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double u = (labels[i] - lo) / (hi - lo);
    dist = std::max(dist, std::abs(static_cast<double>(i) / n - u));
    dist = std::max(dist, std::abs(static_cast<double>(i + 1) / n - u));
  }
  return dist;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int cols_hint) {
  const int rows = static_cast<int>(j.size());
  int cols = cols_hint;
  if (rows > 0) cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw std::runtime_error("dataset json: ragged matrix");
    for (int c = 0; c < cols; ++c) m.at(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::string record_to_json(const InstanceRecord& rec) {
  json j;
  j["node_features"] = matrix_to_json(rec.node_features);
  j["edge_features"] = matrix_to_json(rec.edge_features);
  j["edges"] = json::array();
  for (const auto& [u, v] : rec.edges) j["edges"].push_back({u, v});
  if (rec.label) j["label"] = *rec.label;
  return j.dump();
}

InstanceRecord record_from_json(const std::string& text) {
  const json j = json::parse(text);
  InstanceRecord rec;
  rec.node_features = matrix_from_json(j.at("node_features"), 4);
  rec.edge_features = matrix_from_json(j.at("edge_features"), 2);
  for (const json& je : j.at("edges"))
    rec.edges.push_back({je.at(0).get<int>(), je.at(1).get<int>()});
  if (j.contains("label")) rec.label = j.at("label").get<double>();
  return rec;
}

void write_dataset(const std::string& path, const std::vector<InstanceRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const InstanceRecord& r : records) out << record_to_json(r) << "\n";
}

std::vector<InstanceRecord> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<InstanceRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

}  // namespace gridshed
