#include "gridshed/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "gridshed/optim.hpp"
#include "gridshed/rng.hpp"

namespace gridshed {

namespace {

double forward_prediction(const ModelParams& model, const InstanceRecord& standardized) {
  ad::Tape tape;
  const TapeBinding binding = register_params(tape, model);
  const ForwardIds ids = forward_on_tape(tape, binding, model.config, standardized);
  return tape.value(ids.y_hat).at(0, 0);
}

}  // namespace

TrainResult train(ModelParams& model, const std::vector<InstanceRecord>& data,
                  const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("train: epochs and batch_size must be positive");
  if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0)
    throw std::invalid_argument("train: validation_fraction must be in [0, 1)");
  if (data.empty()) throw std::invalid_argument("train: no data");
  for (const InstanceRecord& r : data)
    if (!r.label) throw std::invalid_argument("train: record without label");

  Rng rng(cfg.shuffle_seed);
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);

  const int n_val = static_cast<int>(cfg.validation_fraction * data.size());
  const int n_train = static_cast<int>(data.size()) - n_val;
  if (n_train < 1) throw std::invalid_argument("train: validation split leaves no training data");

  std::vector<InstanceRecord> train_set, val_set;
  for (int i = 0; i < n_train; ++i) train_set.push_back(data[order[i]]);
  for (int i = n_train; i < static_cast<int>(data.size()); ++i) val_set.push_back(data[order[i]]);

  model.standardizer = fit_standardizer(train_set);
  for (InstanceRecord& r : train_set) r = apply_standardizer(model.standardizer, r);
  for (InstanceRecord& r : val_set) r = apply_standardizer(model.standardizer, r);

  Adam adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  std::vector<Matrix*> param_ptrs;
  for (auto& [name, mat] : model.named_tensors()) param_ptrs.push_back(mat);

  TrainResult result;
  std::vector<int> train_order(train_set.size());
  std::iota(train_order.begin(), train_order.end(), 0);

  int global_step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = train_order.size(); i > 1; --i)
      std::swap(train_order[i - 1], train_order[rng.below(i)]);

    for (std::size_t start = 0; start < train_order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(train_order.size(), start + cfg.batch_size);
      const int bsz = static_cast<int>(stop - start);

      ad::Tape tape;
      const TapeBinding binding = register_params(tape, model);
      int acc = -1;
      for (std::size_t k = start; k < stop; ++k) {
        const InstanceRecord& rec = train_set[train_order[k]];
        const ForwardIds ids = forward_on_tape(tape, binding, model.config, rec);
        const int target = tape.input(Matrix(1, 1, -*rec.label));
        const int diff = tape.add(ids.y_hat, target);
        const int sq = tape.mul(diff, diff);
        acc = acc < 0 ? sq : tape.add(acc, sq);
      }
      const int loss = tape.scale(acc, 1.0 / bsz);
      tape.backward(loss);

      std::vector<const Matrix*> grads;
      for (int id : binding.flat) grads.push_back(&tape.grad(id));
      adam.step(param_ptrs, grads);

      ++global_step;
      result.loss_curve.push_back({epoch, global_step, tape.value(loss).at(0, 0)});
    }

    if (!val_set.empty()) {
      double se = 0.0;
      for (const InstanceRecord& r : val_set) {
        const double err = forward_prediction(model, r) - *r.label;
        se += err * err;
      }
      result.validation_curve.push_back(se / val_set.size());
    }
  }
  return result;
}

MetricsReport compute_metrics(const std::vector<double>& predictions,
                              const std::vector<double>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("compute_metrics: size mismatch");
  if (predictions.empty()) throw std::invalid_argument("compute_metrics: no samples");
  MetricsReport m;
  m.n_samples = static_cast<int>(predictions.size());
  double ape = 0.0;
  int n_ape = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double err = predictions[i] - labels[i];
    m.mse += err * err;
    m.mae += std::abs(err);
    if (std::abs(labels[i]) > 1e-6) {
      ape += std::abs(err / labels[i]);
      ++n_ape;
    }
  }
  m.mse /= m.n_samples;
  m.mae /= m.n_samples;
  if (n_ape > 0) m.mape = ape / n_ape;
  return m;
}

MeanBaseline fit_mean_baseline(const std::vector<double>& train_labels) {
  if (train_labels.empty()) throw std::invalid_argument("fit_mean_baseline: no labels");
  double sum = 0.0;
  for (double y : train_labels) sum += y;
  return MeanBaseline{sum / train_labels.size()};
}

void write_loss_csv(const std::string& path, const std::vector<StepLoss>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "epoch,step,loss\n";
  for (const StepLoss& s : curve) out << s.epoch << "," << s.step << "," << s.loss << "\n";
}

std::string to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["mse"] = m.mse;
  j["mae"] = m.mae;
  if (m.mape) j["mape"] = *m.mape;
  else j["mape"] = nullptr;
  j["n_samples"] = m.n_samples;
  return j.dump();
}

}  // namespace gridshed
