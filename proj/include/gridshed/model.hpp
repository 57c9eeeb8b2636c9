#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gridshed/dataset.hpp"
#include "gridshed/matrix.hpp"
#include "gridshed/tape.hpp"

namespace gridshed {

struct ModelConfig {
  int node_feature_dim = 4;
  int edge_feature_dim = 2;
  int hidden_dim = 64;
  int heads_layer1 = 4;
  int heads_layer2 = 1;
  int attention_dim = 0;  // pooling Q/K/V width; 0 means hidden_dim

  int resolved_attention_dim() const { return attention_dim > 0 ? attention_dim : hidden_dim; }
};

// One edge-aware attention layer. Per head: node projection W (out x in),
// edge projection W_e (out x edge_dim), scoring vector attn (1 x 3*out).
// Head outputs are combined by summation, passed through relu, and layer
// normalized together with a learned linear residual of the layer input.
struct GatLayerParams {
  std::vector<Matrix> w;       // per head
  std::vector<Matrix> w_edge;  // per head
  std::vector<Matrix> attn;    // per head
  Matrix res_w;                // out x in
  Matrix res_b;                // 1 x out
  Matrix ln_gain;              // 1 x out
  Matrix ln_bias;              // 1 x out
};

struct PoolingParams {
  Matrix w_query, w_key, w_value;  // attention_dim x hidden_dim
};

struct ReadoutParams {
  Matrix w_out;  // hidden x attention_dim
  Matrix b_out;  // 1 x hidden
  Matrix w_fc;   // 1 x hidden
  Matrix b_fc;   // 1 x 1
};

struct ModelParams {
  ModelConfig config;
  Standardizer standardizer;
  GatLayerParams layer1, layer2;
  PoolingParams pooling;
  ReadoutParams readout;

  // Stable save/optimize order; names are the artifact keys.
  std::vector<std::pair<std::string, Matrix*>> named_tensors();
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
};

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
// unit layer-norm gains. The standardizer starts as identity.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Parameter node ids after registering a ModelParams on a tape.
struct TapeBinding {
  struct Layer {
    std::vector<int> w, w_edge, attn;
    int res_w = -1, res_b = -1, ln_gain = -1, ln_bias = -1;
  };
  Layer layer1, layer2;
  int w_query = -1, w_key = -1, w_value = -1;
  int w_out = -1, b_out = -1, w_fc = -1, b_fc = -1;
  std::vector<int> flat;  // aligned with ModelParams::named_tensors()
};

TapeBinding register_params(ad::Tape& tape, const ModelParams& params);

struct ForwardIds {
  int y_hat = -1;           // 1 x 1
  int pool_attention = -1;  // N x N row-stochastic
  int node_weights = -1;    // 1 x N, column means of pool_attention
};

// Builds the full forward pass on the tape. The record must already be
// standardized. Graphs with isolated nodes are fine: empty neighborhoods
// contribute nothing and the residual path carries the node through.
ForwardIds forward_on_tape(ad::Tape& tape, const TapeBinding& binding,
                           const ModelConfig& config, const InstanceRecord& record);

struct Prediction {
  double y_hat = 0.0;
  std::vector<double> node_weights;  // nonnegative, sums to 1
};

// Standardizes the raw record with the embedded standardizer and runs the
// forward pass on a scratch tape.
Prediction predict(const ModelParams& params, const InstanceRecord& raw);

// Value-level building blocks (scratch tape), for tests and inspection.
Matrix gat_layer_forward(const GatLayerParams& layer, const Matrix& node_embeds,
                         const Matrix& edge_feats,
                         const std::vector<std::pair<int, int>>& edges);
std::pair<Matrix, Matrix> self_attention_pool(const PoolingParams& pooling, int attention_dim,
                                              const Matrix& node_embeds);  // (1 x d, N x N)

void save_model(const std::string& path, const ModelParams& params);
ModelParams load_model(const std::string& path);

}  // namespace gridshed
