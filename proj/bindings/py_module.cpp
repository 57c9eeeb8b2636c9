// Python extension exposing the core pipeline operations. Structured values
// cross the boundary as JSON strings; the pure-python package wraps them in
// dict-friendly helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridshed/attack.hpp"
#include "gridshed/dataset.hpp"
#include "gridshed/dispatch.hpp"
#include "gridshed/io.hpp"
#include "gridshed/microgrid.hpp"
#include "gridshed/model.hpp"
#include "gridshed/training.hpp"

namespace py = pybind11;
using json = nlohmann::ordered_json;

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::string generate_json(const std::string& config_json) {
  const json j = json::parse(config_json);
  gridshed::GenerationConfig cfg;
  maybe(j, "n_buses", cfg.n_buses);
  maybe(j, "seed", cfg.seed);
  maybe(j, "generator_fraction", cfg.generator_fraction);
  maybe(j, "capacity_ratio", cfg.capacity_ratio);
  bool wide_q = false;
  maybe(j, "wide_q_range", wide_q);
  if (wide_q) cfg.q_load_range = {-10.0, 0.0};
  return gridshed::to_json(gridshed::generate_microgrid(cfg));
}

std::string validate_json(const std::string& microgrid_json) {
  const gridshed::ValidationReport report =
      gridshed::validate(gridshed::microgrid_from_json(microgrid_json));
  json checks = json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json out;
  out["all_passed"] = report.all_passed();
  out["checks"] = std::move(checks);
  return out.dump();
}

std::string estimate_elsr_json(const std::string& microgrid_json,
                               const std::string& options_json) {
  const gridshed::Microgrid mg = gridshed::microgrid_from_json(microgrid_json);
  const json j = json::parse(options_json);
  gridshed::ElsrOptions opt;
  maybe(j, "n_scenarios", opt.n_scenarios);
  maybe(j, "seed", opt.base_seed);
  maybe(j, "p_min", opt.p_min);
  maybe(j, "p_max", opt.p_max);
  maybe(j, "jobs", opt.jobs);
  const gridshed::ElsrEstimate est = gridshed::estimate_elsr(mg, opt);
  json out;
  out["mean"] = est.mean;
  out["std_error"] = est.std_error;
  out["n_scenarios"] = est.n_scenarios;
  out["half_split_rel_change"] = est.half_split_rel_change;
  return out.dump();
}

double shed_rate_json(const std::string& microgrid_json, const std::string& scenario_json) {
  const gridshed::Microgrid mg = gridshed::microgrid_from_json(microgrid_json);
  const json j = json::parse(scenario_json);
  gridshed::AttackScenario s;
  if (j.contains("disrupted_buses"))
    s.disrupted_buses = j.at("disrupted_buses").get<std::vector<int>>();
  if (j.contains("disrupted_lines"))
    for (const json& pair : j.at("disrupted_lines"))
      s.disrupted_lines.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
  return gridshed::shed_rate(mg, s);
}

double node_vulnerability_json(const std::string& microgrid_json, int bus_id) {
  return gridshed::node_vulnerability(gridshed::microgrid_from_json(microgrid_json), bus_id);
}

std::string extract_features_json(const std::string& microgrid_json) {
  return gridshed::record_to_json(
      gridshed::extract_features(gridshed::microgrid_from_json(microgrid_json)));
}

int resample_file(const std::string& in_path, const std::string& out_path, int bins, int draws,
                  std::uint64_t seed) {
  std::vector<gridshed::InstanceRecord> records = gridshed::read_records_auto(in_path);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!records[i].label)
      throw std::runtime_error(in_path + ": record " + std::to_string(i) + " has no label");
  gridshed::ResamplePlan plan;
  plan.n_bins = bins;
  plan.n_draws = draws;
  plan.seed = seed;
  const std::vector<gridshed::InstanceRecord> balanced = gridshed::resample(records, plan);
  gridshed::write_dataset(out_path, balanced);
  return static_cast<int>(balanced.size());
}

std::string train_file(const std::string& in_path, const std::string& model_out,
                       const std::string& config_json) {
  std::vector<gridshed::InstanceRecord> records = gridshed::read_records_auto(in_path);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!records[i].label)
      throw std::runtime_error(in_path + ": record " + std::to_string(i) + " has no label");

  const json j = json::parse(config_json);
  gridshed::ModelConfig mc;
  maybe(j, "hidden_dim", mc.hidden_dim);
  maybe(j, "heads_layer1", mc.heads_layer1);
  maybe(j, "heads_layer2", mc.heads_layer2);
  maybe(j, "attention_dim", mc.attention_dim);
  gridshed::TrainConfig tc;
  maybe(j, "epochs", tc.epochs);
  maybe(j, "batch_size", tc.batch_size);
  maybe(j, "learning_rate", tc.learning_rate);
  maybe(j, "validation_fraction", tc.validation_fraction);
  std::uint64_t seed = 123;
  maybe(j, "seed", seed);
  tc.shuffle_seed = seed;

  gridshed::ModelParams model = gridshed::init_params(mc, seed);
  const gridshed::TrainResult result = gridshed::train(model, records, tc);
  gridshed::save_model(model_out, model);

  json out;
  out["n_records"] = records.size();
  out["steps"] = result.loss_curve.size();
  out["final_loss"] = result.loss_curve.empty() ? json() : json(result.loss_curve.back().loss);
  out["final_val_mse"] =
      result.validation_curve.empty() ? json() : json(result.validation_curve.back());
  out["model_path"] = model_out;
  return out.dump();
}

gridshed::InstanceRecord record_from_any(const std::string& text) {
  const json j = json::parse(text);
  if (j.contains("buses")) return gridshed::extract_features(gridshed::microgrid_from_json(text));
  if (j.contains("instance"))
    return gridshed::extract_features(
        gridshed::microgrid_from_json(j.at("instance").dump()));
  return gridshed::record_from_json(text);
}

class PyModel {
 public:
  explicit PyModel(const std::string& path) : params_(gridshed::load_model(path)) {}

  std::string predict_json(const std::string& instance_json) const {
    const gridshed::Prediction pred =
        gridshed::predict(params_, record_from_any(instance_json));
    json out;
    out["y_hat"] = pred.y_hat;
    out["node_weights"] = pred.node_weights;
    return out.dump();
  }

  std::string config_json() const {
    json out;
    out["node_feature_dim"] = params_.config.node_feature_dim;
    out["edge_feature_dim"] = params_.config.edge_feature_dim;
    out["hidden_dim"] = params_.config.hidden_dim;
    out["heads_layer1"] = params_.config.heads_layer1;
    out["heads_layer2"] = params_.config.heads_layer2;
    out["attention_dim"] = params_.config.attention_dim;
    return out.dump();
  }

 private:
  gridshed::ModelParams params_;
};

}  // namespace

PYBIND11_MODULE(_gridshed, m) {
  m.doc() = "Microgrid vulnerability assessment core (JSON-string interface)";
  m.attr("__version__") = "0.1.0";

  m.def("generate_json", &generate_json, py::arg("config_json") = "{}",
        "Generate one radial microgrid; returns its JSON.");
  m.def("validate_json", &validate_json, py::arg("microgrid_json"),
        "Structural validation report for a microgrid JSON.");
  m.def("estimate_elsr_json", &estimate_elsr_json, py::arg("microgrid_json"),
        py::arg("options_json") = "{}",
        "Monte Carlo expected load shedding rate.",
        py::call_guard<py::gil_scoped_release>());
  m.def("shed_rate_json", &shed_rate_json, py::arg("microgrid_json"), py::arg("scenario_json"),
        "Shed rate for one explicit attack scenario.");
  m.def("node_vulnerability", &node_vulnerability_json, py::arg("microgrid_json"),
        py::arg("bus_id"), "Shed rate when exactly this bus is disrupted.");
  m.def("extract_features_json", &extract_features_json, py::arg("microgrid_json"),
        "Graph features (node/edge matrices and edge list) for a microgrid.");
  m.def("resample_file", &resample_file, py::arg("in_path"), py::arg("out_path"),
        py::arg("bins") = 20, py::arg("draws") = 4000, py::arg("seed") = 0,
        "Rebalance a labeled JSONL dataset by inverse label-bin frequency.");
  m.def("train_file", &train_file, py::arg("in_path"), py::arg("model_out"),
        py::arg("config_json") = "{}",
        "Train on a labeled JSONL dataset and save the model artifact.",
        py::call_guard<py::gil_scoped_release>());

  py::class_<PyModel>(m, "Model", "A trained model artifact loaded in memory")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def("predict_json", &PyModel::predict_json, py::arg("instance_json"),
           "Predict from microgrid JSON, labeled JSON, or record JSON.")
      .def("config_json", &PyModel::config_json);
}
