#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridshed/dataset.hpp"
#include "gridshed/model.hpp"

namespace gridshed {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double validation_fraction = 0.1;
  std::uint64_t shuffle_seed = 123;
};

struct StepLoss {
  int epoch = 0;  // 1-based
  int step = 0;   // 1-based, global across epochs
  double loss = 0.0;
};

struct TrainResult {
  std::vector<StepLoss> loss_curve;      // one entry per optimizer step
  std::vector<double> validation_curve;  // one entry per epoch (empty if no val split)
};

// Mini-batch MSE training with Adam. The standardizer is fit on the train
// split only and stored into the model. Strictly serial and deterministic:
// the same inputs and seed give bitwise identical parameters.
TrainResult train(ModelParams& model, const std::vector<InstanceRecord>& data,
                  const TrainConfig& cfg);

struct MetricsReport {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> mape;  // over labels with |y| > 1e-6; absent if none
  int n_samples = 0;
};

MetricsReport compute_metrics(const std::vector<double>& predictions,
                              const std::vector<double>& labels);

// Constant predictor at the train-label mean; the floor any model must beat.
struct MeanBaseline {
  double mean = 0.0;
};

MeanBaseline fit_mean_baseline(const std::vector<double>& train_labels);

void write_loss_csv(const std::string& path, const std::vector<StepLoss>& curve);

std::string to_json(const MetricsReport& m);

}  // namespace gridshed
