#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridshed/dataset.hpp"
#include "gridshed/microgrid.hpp"
#include "gridshed/model.hpp"
#include "gridshed/rng.hpp"

using namespace gridshed;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(lo, hi);
  return m;
}

// Independent re-derivation of one attention layer with plain loops, kept
// deliberately free of Tape/Matrix helpers beyond element access.
Matrix naive_gat_layer(const GatLayerParams& lp, const Matrix& h, const Matrix& ef,
                       const std::vector<std::pair<int, int>>& edges) {
  const int n = h.rows;
  const int out = lp.res_w.rows;
  Matrix head_sum(n, out, 0.0);

  for (std::size_t hd = 0; hd < lp.w.size(); ++hd) {
    Matrix hw(n, out, 0.0);
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out; ++o) {
        double s = 0.0;
        for (int k = 0; k < h.cols; ++k) s += h.at(i, k) * lp.w[hd].at(o, k);
        hw.at(i, o) = s;
      }
    Matrix ew(ef.rows, out, 0.0);
    for (int e = 0; e < ef.rows; ++e)
      for (int o = 0; o < out; ++o) {
        double s = 0.0;
        for (int k = 0; k < ef.cols; ++k) s += ef.at(e, k) * lp.w_edge[hd].at(o, k);
        ew.at(e, o) = s;
      }
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, int>> nbr;  // (neighbor node, edge index)
      for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        if (edges[e].first == i) nbr.push_back({edges[e].second, e});
        else if (edges[e].second == i) nbr.push_back({edges[e].first, e});
      }
      if (nbr.empty()) continue;
      std::vector<double> score;
      for (auto [j, eidx] : nbr) {
        double s = 0.0;
        for (int o = 0; o < out; ++o) s += lp.attn[hd].at(0, o) * hw.at(i, o);
        for (int o = 0; o < out; ++o) s += lp.attn[hd].at(0, out + o) * hw.at(j, o);
        for (int o = 0; o < out; ++o) s += lp.attn[hd].at(0, 2 * out + o) * ew.at(eidx, o);
        score.push_back(std::max(0.0, s));
      }
      const double mx = *std::max_element(score.begin(), score.end());
      double tot = 0.0;
      for (double& s : score) {
        s = std::exp(s - mx);
        tot += s;
      }
      for (std::size_t t = 0; t < nbr.size(); ++t)
        for (int o = 0; o < out; ++o)
          head_sum.at(i, o) += (score[t] / tot) * hw.at(nbr[t].first, o);
    }
  }

  Matrix y(n, out, 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> v(out);
    for (int o = 0; o < out; ++o) {
      const double act = std::max(0.0, head_sum.at(i, o));
      double res = lp.res_b.at(0, o);
      for (int k = 0; k < h.cols; ++k) res += h.at(i, k) * lp.res_w.at(o, k);
      v[o] = act + res;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= out;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= out;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (int o = 0; o < out; ++o)
      y.at(i, o) = lp.ln_gain.at(0, o) * (v[o] - mean) * inv + lp.ln_bias.at(0, o);
  }
  return y;
}

void naive_pool(const PoolingParams& pp, int d, const Matrix& h, Matrix& zg, Matrix& att) {
  const int n = h.rows;
  auto project = [&](const Matrix& w) {
    Matrix p(n, d, 0.0);
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < d; ++o) {
        double s = 0.0;
        for (int k = 0; k < h.cols; ++k) s += h.at(i, k) * w.at(o, k);
        p.at(i, o) = s;
      }
    return p;
  };
  const Matrix q = project(pp.w_query), k = project(pp.w_key), v = project(pp.w_value);
  att = Matrix(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += q.at(i, c) * k.at(j, c);
      row[j] = s / std::sqrt(static_cast<double>(d));
    }
    const double mx = *std::max_element(row.begin(), row.end());
    double tot = 0.0;
    for (double& s : row) {
      s = std::exp(s - mx);
      tot += s;
    }
    for (int j = 0; j < n; ++j) att.at(i, j) = row[j] / tot;
  }
  zg = Matrix(1, d, 0.0);
  for (int c = 0; c < d; ++c) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += att.at(i, j) * v.at(j, c);
    zg.at(0, c) = s / n;
  }
}

void check_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    INFO("entry ", i);
    CHECK(std::abs(a.data[i] - b.data[i]) <= tol);
  }
}

InstanceRecord sample_record(int n_buses, std::uint64_t seed) {
  GenerationConfig cfg;
  cfg.n_buses = n_buses;
  cfg.seed = seed;
  return extract_features(generate_microgrid(cfg));
}

ModelConfig small_config() {
  ModelConfig c;
  c.hidden_dim = 4;
  c.heads_layer1 = 2;
  c.heads_layer2 = 1;
  return c;
}

}  // namespace

TEST_CASE("init produces documented shapes, bounds, and determinism") {
  ModelConfig cfg;  // defaults: 4 node features, 2 edge features, hidden 64, heads 4/1
  ModelParams p = init_params(cfg, 42);

  REQUIRE(p.layer1.w.size() == 4);
  REQUIRE(p.layer2.w.size() == 1);
  CHECK(p.layer1.w[0].rows == 64);
  CHECK(p.layer1.w[0].cols == 4);
  CHECK(p.layer1.w_edge[0].cols == 2);
  CHECK(p.layer1.attn[0].rows == 1);
  CHECK(p.layer1.attn[0].cols == 192);
  CHECK(p.layer2.w[0].cols == 64);
  CHECK(p.pooling.w_query.rows == 64);
  CHECK(p.pooling.w_key.cols == 64);
  CHECK(p.readout.w_out.rows == 64);
  CHECK(p.readout.w_fc.rows == 1);
  CHECK(p.readout.b_fc.size() == 1);

  // Biases start at zero, layer-norm gains at one.
  for (double v : p.layer1.res_b.data) CHECK(v == 0.0);
  for (double v : p.layer1.ln_gain.data) CHECK(v == 1.0);
  for (double v : p.readout.b_out.data) CHECK(v == 0.0);

  // Xavier bound for layer1.w: sqrt(6 / (4 + 64)).
  const double bound = std::sqrt(6.0 / 68.0);
  double max_abs = 0.0;
  for (double v : p.layer1.w[0].data) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.1 * bound);  // not degenerate

  // Deterministic in the seed.
  ModelParams q = init_params(cfg, 42);
  ModelParams r = init_params(cfg, 43);
  CHECK(p.layer1.w[2].data == q.layer1.w[2].data);
  CHECK(p.readout.w_fc.data == q.readout.w_fc.data);
  CHECK(p.layer1.w[0].data != r.layer1.w[0].data);

  // Default config: 4 heads * 3 + 4 tensors for layer1, 7 for layer2, 3 pooling, 4 readout.
  CHECK(p.named_tensors().size() == 16 + 7 + 3 + 4);
}

TEST_CASE("attention layer matches a loop-level reimplementation") {
  Rng rng(91);
  GatLayerParams lp;
  const int in = 3, out = 5, heads = 2, edge_dim = 2, n = 6;
  for (int h = 0; h < heads; ++h) {
    lp.w.push_back(random_matrix(out, in, rng));
    lp.w_edge.push_back(random_matrix(out, edge_dim, rng));
    lp.attn.push_back(random_matrix(1, 3 * out, rng));
  }
  lp.res_w = random_matrix(out, in, rng);
  lp.res_b = random_matrix(1, out, rng);
  lp.ln_gain = random_matrix(1, out, rng, 0.5, 1.5);
  lp.ln_bias = random_matrix(1, out, rng);

  const std::vector<std::pair<int, int>> edges = {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {0, 5}};
  const Matrix h = random_matrix(n, in, rng);
  const Matrix ef = random_matrix(static_cast<int>(edges.size()), edge_dim, rng);

  const Matrix got = gat_layer_forward(lp, h, ef, edges);
  const Matrix want = naive_gat_layer(lp, h, ef, edges);
  check_close(got, want, 1e-12);
}

TEST_CASE("attention layer on a path graph is direction-agnostic in edge storage") {
  Rng rng(17);
  GatLayerParams lp;
  const int dim = 4;
  lp.w.push_back(random_matrix(dim, dim, rng));
  lp.w_edge.push_back(random_matrix(dim, 2, rng));
  lp.attn.push_back(random_matrix(1, 3 * dim, rng));
  lp.res_w = random_matrix(dim, dim, rng);
  lp.res_b = Matrix(1, dim, 0.0);
  lp.ln_gain = Matrix(1, dim, 1.0);
  lp.ln_bias = Matrix(1, dim, 0.0);

  const Matrix h = random_matrix(3, dim, rng);
  const Matrix ef = random_matrix(2, 2, rng);
  // Same undirected path 0-1-2 written with both orientations.
  const Matrix a = gat_layer_forward(lp, h, ef, {{0, 1}, {1, 2}});
  const Matrix b = gat_layer_forward(lp, h, ef, {{1, 0}, {2, 1}});
  check_close(a, b, 1e-12);
}

TEST_CASE("self-attention pooling matches a loop-level reimplementation") {
  Rng rng(123);
  const int n = 7, hd = 5, d = 3;
  PoolingParams pp;
  pp.w_query = random_matrix(d, hd, rng);
  pp.w_key = random_matrix(d, hd, rng);
  pp.w_value = random_matrix(d, hd, rng);
  const Matrix h = random_matrix(n, hd, rng);

  const auto [zg, att] = self_attention_pool(pp, d, h);
  Matrix zg2, att2;
  naive_pool(pp, d, h, zg2, att2);
  check_close(zg, zg2, 1e-12);
  check_close(att, att2, 1e-12);

  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      CHECK(att.at(i, j) >= 0.0);
      s += att.at(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("predictions are bounded, normalized, and deterministic") {
  const InstanceRecord rec = sample_record(20, 7);
  const ModelParams params = init_params(ModelConfig{}, 99);

  const Prediction a = predict(params, rec);
  const Prediction b = predict(params, rec);

  CHECK(a.y_hat > 0.0);
  CHECK(a.y_hat < 1.0);
  REQUIRE(a.node_weights.size() == 20);
  double sum = 0.0;
  for (double w : a.node_weights) {
    CHECK(w >= 0.0);
    sum += w;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  CHECK(a.y_hat == b.y_hat);  // bitwise
  CHECK(a.node_weights == b.node_weights);
}

TEST_CASE("a single-node graph still predicts") {
  InstanceRecord rec;
  rec.node_features = Matrix::from_rows({{0.3, -0.05, 1.0, 0.0}});
  rec.edge_features = Matrix(0, 2);
  const ModelParams params = init_params(small_config(), 5);
  const Prediction p = predict(params, rec);
  CHECK(std::isfinite(p.y_hat));
  CHECK(p.y_hat > 0.0);
  CHECK(p.y_hat < 1.0);
  REQUIRE(p.node_weights.size() == 1);
  CHECK(p.node_weights[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relabeling nodes permutes the explanation and keeps the prediction") {
  const InstanceRecord rec = sample_record(12, 31);
  const int n = rec.node_features.rows;

  // perm[i] = new index of old node i.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(8);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

  InstanceRecord moved;
  moved.node_features = Matrix(n, rec.node_features.cols);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < rec.node_features.cols; ++c)
      moved.node_features.at(perm[i], c) = rec.node_features.at(i, c);
  moved.edge_features = rec.edge_features;
  for (const auto& [u, v] : rec.edges) moved.edges.push_back({perm[u], perm[v]});

  const ModelParams params = init_params(ModelConfig{}, 2024);
  const Prediction p0 = predict(params, rec);
  const Prediction p1 = predict(params, moved);

  CHECK(std::abs(p0.y_hat - p1.y_hat) <= 1e-9 * std::max(1.0, std::abs(p0.y_hat)));
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(p0.node_weights[i] - p1.node_weights[perm[i]]) <= 1e-9);
}

TEST_CASE("full forward/backward gradients match central differences") {
  const InstanceRecord rec = sample_record(5, 77);
  ModelParams params = init_params(small_config(), 11);
  const double label = 0.37;

  // Analytic gradients of (y - label)^2 w.r.t. every parameter tensor.
  ad::Tape tape;
  const TapeBinding binding = register_params(tape, params);
  const ForwardIds ids = forward_on_tape(tape, binding, params.config, rec);
  const int diff = tape.add(ids.y_hat, tape.input(Matrix(1, 1, -label)));
  const int loss = tape.mul(diff, diff);
  tape.backward(loss);

  auto loss_at = [&](const ModelParams& p) {
    ad::Tape t;
    const TapeBinding b = register_params(t, p);
    const ForwardIds f = forward_on_tape(t, b, p.config, rec);
    const double y = t.value(f.y_hat).at(0, 0);
    return (y - label) * (y - label);
  };

  const double h = 1e-5;
  auto tensors = params.named_tensors();
  REQUIRE(tensors.size() == binding.flat.size());
  int checked = 0;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Matrix* mat = tensors[t].second;
    const Matrix& grad = tape.grad(binding.flat[t]);
    REQUIRE(grad.same_shape(*mat));
    for (std::size_t i = 0; i < mat->size(); i += 3) {  // every third entry
      const double keep = mat->data[i];
      mat->data[i] = keep + h;
      const double up = loss_at(params);
      mat->data[i] = keep - h;
      const double dn = loss_at(params);
      mat->data[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double an = grad.data[i];
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4});
      INFO(tensors[t].first, " entry ", i, " fd=", fd, " analytic=", an);
      CHECK(err < 1e-3);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("model artifacts round trip bitwise and reject corrupt files") {
  const std::string path = "test_model_artifact.json";
  ModelConfig cfg = small_config();
  ModelParams params = init_params(cfg, 321);
  params.standardizer.node_mean = {0.3, -0.05, 0.15, 1.9};
  params.standardizer.node_std = {0.1, 0.03, 0.36, 0.9};
  params.standardizer.edge_mean = {0.5, 0.5};
  params.standardizer.edge_std = {0.28, 0.29};

  save_model(path, params);
  const ModelParams loaded = load_model(path);

  CHECK(loaded.config.hidden_dim == cfg.hidden_dim);
  CHECK(loaded.config.heads_layer1 == cfg.heads_layer1);
  CHECK(loaded.standardizer.node_mean == params.standardizer.node_mean);
  CHECK(loaded.standardizer.edge_std == params.standardizer.edge_std);

  const InstanceRecord rec = sample_record(9, 4);
  const Prediction a = predict(params, rec);
  const Prediction b = predict(loaded, rec);
  CHECK(a.y_hat == b.y_hat);  // bitwise
  CHECK(a.node_weights == b.node_weights);

  // Corruptions must be rejected loudly.
  std::ifstream in(path);
  nlohmann::ordered_json j;
  in >> j;
  in.close();

  auto rewrite = [&](const nlohmann::ordered_json& doc) {
    std::ofstream out(path);
    out << doc.dump();
  };

  nlohmann::ordered_json bad = j;
  bad["format_version"] = 2;
  rewrite(bad);
  CHECK_THROWS_AS(load_model(path), std::runtime_error);

  bad = j;
  bad["parameters"].erase("pooling.w_key");
  rewrite(bad);
  CHECK_THROWS_AS(load_model(path), std::runtime_error);

  bad = j;
  bad["parameters"]["readout.w_fc"] = nlohmann::ordered_json::array({{1.0, 2.0}});  // wrong width
  rewrite(bad);
  CHECK_THROWS_AS(load_model(path), std::runtime_error);

  std::remove(path.c_str());
}

TEST_CASE("forward validates record shape against the config") {
  const ModelParams params = init_params(small_config(), 1);
  ad::Tape tape;
  const TapeBinding binding = register_params(tape, params);

  InstanceRecord bad;
  bad.node_features = Matrix(3, 2);  // wrong feature width
  bad.edge_features = Matrix(0, 2);
  CHECK_THROWS_AS(forward_on_tape(tape, binding, params.config, bad),
                  std::invalid_argument);

  InstanceRecord mismatched;
  mismatched.node_features = Matrix(3, 4);
  mismatched.edge_features = Matrix(2, 2);
  mismatched.edges = {{0, 1}};  // one edge, two feature rows
  CHECK_THROWS_AS(forward_on_tape(tape, binding, params.config, mismatched),
                  std::invalid_argument);
}
