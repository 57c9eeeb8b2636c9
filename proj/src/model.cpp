#include "gridshed/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gridshed/rng.hpp"

namespace gridshed {

using json = nlohmann::ordered_json;

namespace {

Matrix xavier(int out_dim, int in_dim, Rng& rng) {
  Matrix m(out_dim, in_dim);
  const double bound = std::sqrt(6.0 / (in_dim + out_dim));
  for (double& v : m.data) v = rng.uniform(-bound, bound);
  return m;
}

GatLayerParams init_layer(int in_dim, int out_dim, int edge_dim, int heads, Rng& rng) {
  GatLayerParams layer;
  for (int h = 0; h < heads; ++h) {
    layer.w.push_back(xavier(out_dim, in_dim, rng));
    layer.w_edge.push_back(xavier(out_dim, edge_dim, rng));
    layer.attn.push_back(xavier(1, 3 * out_dim, rng));
  }
  layer.res_w = xavier(out_dim, in_dim, rng);
  layer.res_b = Matrix(1, out_dim, 0.0);
  layer.ln_gain = Matrix(1, out_dim, 1.0);
  layer.ln_bias = Matrix(1, out_dim, 0.0);
  return layer;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  if (config.node_feature_dim < 1 || config.edge_feature_dim < 1 || config.hidden_dim < 1 ||
      config.heads_layer1 < 1 || config.heads_layer2 < 1)
    throw std::invalid_argument("init_params: dimensions must be positive");
  Rng rng(seed);
  ModelParams p;
  p.config = config;
  p.standardizer = Standardizer::identity(config.node_feature_dim, config.edge_feature_dim);
  const int hd = config.hidden_dim;
  const int ad = config.resolved_attention_dim();
  p.layer1 = init_layer(config.node_feature_dim, hd, config.edge_feature_dim,
                        config.heads_layer1, rng);
  p.layer2 = init_layer(hd, hd, config.edge_feature_dim, config.heads_layer2, rng);
  p.pooling.w_query = xavier(ad, hd, rng);
  p.pooling.w_key = xavier(ad, hd, rng);
  p.pooling.w_value = xavier(ad, hd, rng);
  p.readout.w_out = xavier(hd, ad, rng);
  p.readout.b_out = Matrix(1, hd, 0.0);
  p.readout.w_fc = xavier(1, hd, rng);
  p.readout.b_fc = Matrix(1, 1, 0.0);
  return p;
}

namespace {

template <typename M, typename P>
void collect_layer(const std::string& prefix, M& layer,
                   std::vector<std::pair<std::string, P>>& out) {
  for (std::size_t h = 0; h < layer.w.size(); ++h) {
    const std::string head = prefix + ".head" + std::to_string(h);
    out.push_back({head + ".w", &layer.w[h]});
    out.push_back({head + ".w_edge", &layer.w_edge[h]});
    out.push_back({head + ".attn", &layer.attn[h]});
  }
  out.push_back({prefix + ".res_w", &layer.res_w});
  out.push_back({prefix + ".res_b", &layer.res_b});
  out.push_back({prefix + ".ln_gain", &layer.ln_gain});
  out.push_back({prefix + ".ln_bias", &layer.ln_bias});
}

template <typename MP, typename P>
std::vector<std::pair<std::string, P>> named_impl(MP& p) {
  std::vector<std::pair<std::string, P>> out;
  collect_layer("layer1", p.layer1, out);
  collect_layer("layer2", p.layer2, out);
  out.push_back({"pooling.w_query", &p.pooling.w_query});
  out.push_back({"pooling.w_key", &p.pooling.w_key});
  out.push_back({"pooling.w_value", &p.pooling.w_value});
  out.push_back({"readout.w_out", &p.readout.w_out});
  out.push_back({"readout.b_out", &p.readout.b_out});
  out.push_back({"readout.w_fc", &p.readout.w_fc});
  out.push_back({"readout.b_fc", &p.readout.b_fc});
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::named_tensors() {
  return named_impl<ModelParams, Matrix*>(*this);
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named_tensors() const {
  return named_impl<const ModelParams, const Matrix*>(*this);
}

TapeBinding register_params(ad::Tape& tape, const ModelParams& params) {
  TapeBinding b;
  auto reg_layer = [&](const GatLayerParams& src, TapeBinding::Layer& dst) {
    for (const Matrix& m : src.w) dst.w.push_back(tape.input(m));
    for (const Matrix& m : src.w_edge) dst.w_edge.push_back(tape.input(m));
    for (const Matrix& m : src.attn) dst.attn.push_back(tape.input(m));
    dst.res_w = tape.input(src.res_w);
    dst.res_b = tape.input(src.res_b);
    dst.ln_gain = tape.input(src.ln_gain);
    dst.ln_bias = tape.input(src.ln_bias);
  };
  reg_layer(params.layer1, b.layer1);
  reg_layer(params.layer2, b.layer2);
  b.w_query = tape.input(params.pooling.w_query);
  b.w_key = tape.input(params.pooling.w_key);
  b.w_value = tape.input(params.pooling.w_value);
  b.w_out = tape.input(params.readout.w_out);
  b.b_out = tape.input(params.readout.b_out);
  b.w_fc = tape.input(params.readout.w_fc);
  b.b_fc = tape.input(params.readout.b_fc);

  auto layer_flat = [&](const TapeBinding::Layer& l) {
    for (std::size_t h = 0; h < l.w.size(); ++h) {
      b.flat.push_back(l.w[h]);
      b.flat.push_back(l.w_edge[h]);
      b.flat.push_back(l.attn[h]);
    }
    b.flat.push_back(l.res_w);
    b.flat.push_back(l.res_b);
    b.flat.push_back(l.ln_gain);
    b.flat.push_back(l.ln_bias);
  };
  layer_flat(b.layer1);
  layer_flat(b.layer2);
  for (int id : {b.w_query, b.w_key, b.w_value, b.w_out, b.b_out, b.w_fc, b.b_fc})
    b.flat.push_back(id);
  return b;
}

namespace {

// Directed neighbor structure shared by both layers.
struct PairLists {
  std::vector<int> src, dst, edge;   // 2 entries per undirected edge
  std::vector<char> mask;            // n x n adjacency, row-major
};

PairLists build_pairs(int n, const std::vector<std::pair<int, int>>& edges) {
  PairLists p;
  p.mask.assign(static_cast<std::size_t>(n) * n, 0);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    const auto& [u, v] = edges[e];
    if (u < 0 || u >= n || v < 0 || v >= n || u == v)
      throw std::invalid_argument("forward: bad edge endpoints");
    p.src.push_back(u); p.dst.push_back(v); p.edge.push_back(e);
    p.src.push_back(v); p.dst.push_back(u); p.edge.push_back(e);
    p.mask[static_cast<std::size_t>(u) * n + v] = 1;
    p.mask[static_cast<std::size_t>(v) * n + u] = 1;
  }
  return p;
}

// One attention layer on the tape. h: N x in, e_feats: (N-1) x edge_dim.
int gat_layer_on_tape(ad::Tape& t, const TapeBinding::Layer& lp, int h, int e_feats,
                      const PairLists& pairs, int n) {
  int head_sum = -1;
  for (std::size_t hd = 0; hd < lp.w.size(); ++hd) {
    const int hw = t.matmul_nt(h, lp.w[hd]);  // N x out
    int msg;
    if (!pairs.src.empty()) {
      const int ew = t.matmul_nt(e_feats, lp.w_edge[hd]);  // (N-1) x out
      const int hi = t.gather_rows(hw, pairs.src);
      const int hj = t.gather_rows(hw, pairs.dst);
      const int he = t.gather_rows(ew, pairs.edge);
      const int cat = t.concat_rows(t.concat_rows(hi, hj), he);  // M x 3*out
      const int score = t.relu(t.matmul_nt(cat, lp.attn[hd]));   // M x 1
      const int smat = t.scatter_pairs(score, pairs.src, pairs.dst, n, n);
      const int alpha = t.masked_row_softmax(smat, pairs.mask);
      msg = t.matmul(alpha, hw);  // N x out
    } else {
      msg = t.scale(hw, 0.0);  // no neighbors anywhere
    }
    head_sum = head_sum < 0 ? msg : t.add(head_sum, msg);
  }
  const int activated = t.relu(head_sum);
  const int residual = t.add_rowvec(t.matmul_nt(h, lp.res_w), lp.res_b);
  return t.layer_norm(t.add(activated, residual), lp.ln_gain, lp.ln_bias);
}

}  // namespace

ForwardIds forward_on_tape(ad::Tape& tape, const TapeBinding& binding,
                           const ModelConfig& config, const InstanceRecord& record) {
  const int n = record.node_features.rows;
  if (n < 1) throw std::invalid_argument("forward: record has no nodes");
  if (record.node_features.cols != config.node_feature_dim)
    throw std::invalid_argument("forward: node feature width mismatch");
  if (record.edge_features.cols != config.edge_feature_dim && record.edge_features.rows > 0)
    throw std::invalid_argument("forward: edge feature width mismatch");
  if (record.edge_features.rows != static_cast<int>(record.edges.size()))
    throw std::invalid_argument("forward: edge feature rows must match edge list");

  const PairLists pairs = build_pairs(n, record.edges);
  Matrix efeat = record.edge_features;
  if (efeat.rows == 0) efeat = Matrix(0, config.edge_feature_dim, 0.0);

  const int x = tape.input(record.node_features);
  const int e = tape.input(efeat);

  const int h1 = gat_layer_on_tape(tape, binding.layer1, x, e, pairs, n);
  const int h2 = gat_layer_on_tape(tape, binding.layer2, h1, e, pairs, n);

  const int q = tape.matmul_nt(h2, binding.w_query);
  const int k = tape.matmul_nt(h2, binding.w_key);
  const int v = tape.matmul_nt(h2, binding.w_value);
  const int att = tape.row_softmax(
      tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(config.resolved_attention_dim())));
  const int z = tape.matmul(att, v);       // N x d
  const int zg = tape.mean_rows(z);        // 1 x d

  const int hid = tape.relu(tape.add_rowvec(tape.matmul_nt(zg, binding.w_out), binding.b_out));
  const int y = tape.sigmoid(tape.add_rowvec(tape.matmul_nt(hid, binding.w_fc), binding.b_fc));

  ForwardIds out;
  out.y_hat = y;
  out.pool_attention = att;
  out.node_weights = tape.mean_rows(att);  // 1 x N
  return out;
}

Prediction predict(const ModelParams& params, const InstanceRecord& raw) {
  const InstanceRecord rec = apply_standardizer(params.standardizer, raw);
  ad::Tape tape;
  const TapeBinding binding = register_params(tape, params);
  const ForwardIds ids = forward_on_tape(tape, binding, params.config, rec);
  Prediction pred;
  pred.y_hat = tape.value(ids.y_hat).at(0, 0);
  const Matrix& w = tape.value(ids.node_weights);
  pred.node_weights.assign(w.data.begin(), w.data.end());
  return pred;
}

Matrix gat_layer_forward(const GatLayerParams& layer, const Matrix& node_embeds,
                         const Matrix& edge_feats,
                         const std::vector<std::pair<int, int>>& edges) {
  ad::Tape t;
  TapeBinding::Layer lp;
  for (const Matrix& m : layer.w) lp.w.push_back(t.input(m));
  for (const Matrix& m : layer.w_edge) lp.w_edge.push_back(t.input(m));
  for (const Matrix& m : layer.attn) lp.attn.push_back(t.input(m));
  lp.res_w = t.input(layer.res_w);
  lp.res_b = t.input(layer.res_b);
  lp.ln_gain = t.input(layer.ln_gain);
  lp.ln_bias = t.input(layer.ln_bias);
  const PairLists pairs = build_pairs(node_embeds.rows, edges);
  const int h = t.input(node_embeds);
  const int e = t.input(edge_feats);
  return t.value(gat_layer_on_tape(t, lp, h, e, pairs, node_embeds.rows));
}

std::pair<Matrix, Matrix> self_attention_pool(const PoolingParams& pooling, int attention_dim,
                                              const Matrix& node_embeds) {
  ad::Tape t;
  const int h = t.input(node_embeds);
  const int q = t.matmul_nt(h, t.input(pooling.w_query));
  const int k = t.matmul_nt(h, t.input(pooling.w_key));
  const int v = t.matmul_nt(h, t.input(pooling.w_value));
  const int att = t.row_softmax(t.scale(t.matmul_nt(q, k), 1.0 / std::sqrt(attention_dim)));
  const int zg = t.mean_rows(t.matmul(att, v));
  return {t.value(zg), t.value(att)};
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

Matrix matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw std::runtime_error("model json: ragged matrix");
    for (int c = 0; c < cols; ++c) m.at(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

void save_model(const std::string& path, const ModelParams& params) {
  json j;
  j["config"] = {{"node_feature_dim", params.config.node_feature_dim},
                 {"edge_feature_dim", params.config.edge_feature_dim},
                 {"hidden_dim", params.config.hidden_dim},
                 {"heads_layer1", params.config.heads_layer1},
                 {"heads_layer2", params.config.heads_layer2},
                 {"attention_dim", params.config.attention_dim}};
  j["standardizer"] = {{"node_mean", params.standardizer.node_mean},
                       {"node_std", params.standardizer.node_std},
                       {"edge_mean", params.standardizer.edge_mean},
                       {"edge_std", params.standardizer.edge_std}};
  json tensors;
  for (const auto& [name, mat] : params.named_tensors()) tensors[name] = matrix_to_json(*mat);
  j["parameters"] = std::move(tensors);
  j["format_version"] = 1;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  json j;
  in >> j;
  if (!j.contains("format_version") || j.at("format_version").get<int>() != 1)
    throw std::runtime_error("load_model: unsupported format_version");

  ModelConfig cfg;
  const json& jc = j.at("config");
  cfg.node_feature_dim = jc.at("node_feature_dim").get<int>();
  cfg.edge_feature_dim = jc.at("edge_feature_dim").get<int>();
  cfg.hidden_dim = jc.at("hidden_dim").get<int>();
  cfg.heads_layer1 = jc.at("heads_layer1").get<int>();
  cfg.heads_layer2 = jc.at("heads_layer2").get<int>();
  cfg.attention_dim = jc.at("attention_dim").get<int>();

  ModelParams p = init_params(cfg, 0);
  const json& js = j.at("standardizer");
  p.standardizer.node_mean = js.at("node_mean").get<std::vector<double>>();
  p.standardizer.node_std = js.at("node_std").get<std::vector<double>>();
  p.standardizer.edge_mean = js.at("edge_mean").get<std::vector<double>>();
  p.standardizer.edge_std = js.at("edge_std").get<std::vector<double>>();

  const json& jt = j.at("parameters");
  for (auto& [name, mat] : p.named_tensors()) {
    if (!jt.contains(name)) throw std::runtime_error("load_model: missing tensor " + name);
    Matrix loaded = matrix_from_json(jt.at(name));
    if (!loaded.same_shape(*mat))
      throw std::runtime_error("load_model: shape mismatch for " + name);
    *mat = std::move(loaded);
  }
  return p;
}

}  // namespace gridshed
