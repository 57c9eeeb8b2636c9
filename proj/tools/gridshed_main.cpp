// gridshed: microgrid vulnerability pipeline driver.
//
// Subcommands cover the full workflow: generate random radial microgrids,
// label them with Monte Carlo expected load shedding rates, rebalance the
// label distribution, train the attention model, and run inference,
// explanation, and evaluation against the labels.
//
// Exit codes: 0 success, 2 argument errors, 1 runtime errors.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridshed/dataset.hpp"
#include "gridshed/dispatch.hpp"
#include "gridshed/io.hpp"
#include "gridshed/microgrid.hpp"
#include "gridshed/model.hpp"
#include "gridshed/training.hpp"

namespace {

using gridshed::InstanceRecord;
using json = nlohmann::ordered_json;

struct GenerateOpts {
  int n = 100;
  int buses = 33;
  std::uint64_t seed = 123;
  double gen_fraction = 0.15;
  double capacity_ratio = 1.2;
  bool wide_q_range = false;
  std::string out;
};

struct LabelOpts {
  std::string in, out;
  int n_scenarios = 1000;
  std::uint64_t seed = 123;
  double p_min = 0.01;
  double p_max = 0.2;
  int jobs = 1;
};

struct ResampleOpts {
  std::string in, out;
  int bins = 20;
  int draws = 4000;
  std::uint64_t seed = 123;
};

struct TrainOpts {
  std::string in, out;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double val_fraction = 0.1;
  std::uint64_t seed = 123;
  int hidden = 64;
  int heads1 = 4;
  int heads2 = 1;
  int attention_dim = 0;
  std::string loss_csv, val_csv;
};

struct AssessOpts {
  std::string model, in, out;
};

struct ExplainOpts {
  std::string model, in, out, csv;
  int index = -1;  // -1 = every instance
};

struct EvaluateOpts {
  std::string model, in, baseline_train, out, scatter;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::vector<InstanceRecord> read_labeled_records(const std::string& path) {
  std::vector<InstanceRecord> records = gridshed::read_records_auto(path);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!records[i].label)
      throw std::runtime_error(path + ": record " + std::to_string(i) +
                               " has no label; run the label stage first");
  return records;
}

int run_generate(const GenerateOpts& o) {
  std::vector<gridshed::Microgrid> grids;
  grids.reserve(o.n);
  for (int i = 0; i < o.n; ++i) {
    gridshed::GenerationConfig cfg;
    cfg.n_buses = o.buses;
    cfg.generator_fraction = o.gen_fraction;
    cfg.capacity_ratio = o.capacity_ratio;
    if (o.wide_q_range) cfg.q_load_range = {-10.0, 0.0};
    cfg.seed = o.seed + static_cast<std::uint64_t>(i);
    gridshed::Microgrid mg = gridshed::generate_microgrid(cfg);
    const gridshed::ValidationReport report = gridshed::validate(mg);
    if (!report.all_passed()) {
      std::string detail;
      for (const auto& c : report.checks)
        if (!c.passed) detail += " " + c.name + " (" + c.detail + ")";
      throw std::runtime_error("generated instance " + std::to_string(i) +
                               " failed validation:" + detail);
    }
    grids.push_back(std::move(mg));
  }
  gridshed::write_microgrids(o.out, grids);
  std::cout << "wrote " << grids.size() << " microgrids to " << o.out << "\n";
  return 0;
}

int run_label(const LabelOpts& o) {
  if (o.p_min < 0.0 || o.p_max > 1.0 || o.p_min > o.p_max) {
    std::cerr << "error: disruption probability bounds need 0 <= p-min <= p-max <= 1\n";
    return 2;
  }
  const std::vector<gridshed::Microgrid> grids = gridshed::read_microgrids(o.in);
  std::vector<gridshed::LabeledInstance> labeled;
  labeled.reserve(grids.size());
  const std::size_t report_every = std::max<std::size_t>(1, grids.size() / 10);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    gridshed::ElsrOptions opt;
    opt.n_scenarios = o.n_scenarios;
    opt.base_seed = o.seed + i;
    opt.p_min = o.p_min;
    opt.p_max = o.p_max;
    opt.jobs = o.jobs;
    const gridshed::ElsrEstimate est = gridshed::estimate_elsr(grids[i], opt);
    labeled.push_back({grids[i], est.mean, est.std_error, est.n_scenarios, opt.base_seed});
    if ((i + 1) % report_every == 0 || i + 1 == grids.size())
      std::cerr << "labeled " << (i + 1) << "/" << grids.size() << "\n";
  }
  gridshed::write_labeled(o.out, labeled);
  std::cout << "wrote " << labeled.size() << " labeled instances to " << o.out << "\n";
  return 0;
}

int run_resample(const ResampleOpts& o) {
  const std::vector<InstanceRecord> records = read_labeled_records(o.in);
  std::vector<double> before;
  for (const InstanceRecord& r : records) before.push_back(*r.label);

  gridshed::ResamplePlan plan;
  plan.n_bins = o.bins;
  plan.n_draws = o.draws;
  plan.seed = o.seed;
  const std::vector<InstanceRecord> balanced = gridshed::resample(records, plan);

  std::vector<double> after;
  for (const InstanceRecord& r : balanced) after.push_back(*r.label);

  gridshed::write_dataset(o.out, balanced);
  std::cout << "resampled " << records.size() << " -> " << balanced.size() << " records; "
            << "label KS distance to uniform " << gridshed::ks_distance_to_uniform(before)
            << " -> " << gridshed::ks_distance_to_uniform(after) << "\n";
  std::cout << "wrote " << balanced.size() << " records to " << o.out << "\n";
  return 0;
}

int run_train(const TrainOpts& o) {
  const std::vector<InstanceRecord> records = read_labeled_records(o.in);

  gridshed::ModelConfig mc;
  mc.hidden_dim = o.hidden;
  mc.heads_layer1 = o.heads1;
  mc.heads_layer2 = o.heads2;
  mc.attention_dim = o.attention_dim;
  gridshed::ModelParams model = gridshed::init_params(mc, o.seed);

  gridshed::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.learning_rate = o.learning_rate;
  tc.validation_fraction = o.val_fraction;
  tc.shuffle_seed = o.seed;

  const gridshed::TrainResult result = gridshed::train(model, records, tc);
  gridshed::save_model(o.out, model);

  if (!o.loss_csv.empty()) gridshed::write_loss_csv(o.loss_csv, result.loss_curve);
  if (!o.val_csv.empty()) {
    std::ofstream f = open_out(o.val_csv);
    f << "epoch,val_mse\n";
    for (std::size_t e = 0; e < result.validation_curve.size(); ++e)
      f << (e + 1) << "," << result.validation_curve[e] << "\n";
  }

  std::cout << "trained on " << records.size() << " records for " << o.epochs << " epochs ("
            << result.loss_curve.size() << " steps)\n";
  if (!result.loss_curve.empty())
    std::cout << "final train batch loss " << result.loss_curve.back().loss << "\n";
  if (!result.validation_curve.empty())
    std::cout << "final validation mse " << result.validation_curve.back() << "\n";
  std::cout << "wrote model to " << o.out << "\n";
  return 0;
}

int run_assess(const AssessOpts& o) {
  const gridshed::ModelParams model = gridshed::load_model(o.model);
  const std::vector<InstanceRecord> records = gridshed::read_records_auto(o.in);
  if (records.empty()) throw std::runtime_error(o.in + ": no instances");

  std::vector<double> preds(records.size());
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < records.size(); ++i)
    preds[i] = gridshed::predict(model, records[i]).y_hat;
  const auto t1 = std::chrono::steady_clock::now();
  const double seconds = std::chrono::duration<double>(t1 - t0).count();

  for (std::size_t i = 0; i < records.size(); ++i) std::cout << i << "\t" << preds[i] << "\n";
  std::cout << "# predicted " << records.size() << " instances in " << seconds << " s ("
            << 1e3 * seconds / records.size() << " ms each)\n";

  if (!o.out.empty()) {
    std::ofstream f = open_out(o.out);
    for (std::size_t i = 0; i < records.size(); ++i) {
      json j;
      j["index"] = i;
      j["y_hat"] = preds[i];
      f << j.dump() << "\n";
    }
    std::cout << "wrote predictions to " << o.out << "\n";
  }
  return 0;
}

json explain_instance(const gridshed::ModelParams& model, const gridshed::Microgrid& mg,
                      std::size_t index) {
  const gridshed::Prediction pred = gridshed::predict(model, gridshed::extract_features(mg));
  json buses = json::array();
  for (std::size_t b = 0; b < mg.buses.size(); ++b) {
    json row;
    row["id"] = mg.buses[b].id;
    row["attention_weight"] = pred.node_weights[b];
    row["node_vulnerability"] = gridshed::node_vulnerability(mg, mg.buses[b].id);
    buses.push_back(std::move(row));
  }
  json j;
  j["index"] = index;
  j["y_hat"] = pred.y_hat;
  j["buses"] = std::move(buses);
  return j;
}

int run_explain(const ExplainOpts& o) {
  const gridshed::ModelParams model = gridshed::load_model(o.model);
  std::vector<gridshed::Microgrid> grids;
  try {
    grids = gridshed::read_microgrids(o.in);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("explain needs full microgrid instances (bus ") +
                             "parameters drive the vulnerability replay): " + e.what());
  }
  if (grids.empty()) throw std::runtime_error(o.in + ": no instances");
  if (o.index >= static_cast<int>(grids.size()))
    throw std::runtime_error("--index " + std::to_string(o.index) + " out of range; file has " +
                             std::to_string(grids.size()) + " instances");

  std::vector<std::size_t> picks;
  if (o.index >= 0) picks.push_back(static_cast<std::size_t>(o.index));
  else for (std::size_t i = 0; i < grids.size(); ++i) picks.push_back(i);

  std::vector<json> reports;
  for (std::size_t i : picks) reports.push_back(explain_instance(model, grids[i], i));

  if (!o.out.empty()) {
    std::ofstream f = open_out(o.out);
    for (const json& j : reports) f << j.dump() << "\n";
    std::cout << "wrote " << reports.size() << " explanation(s) to " << o.out << "\n";
  } else {
    for (const json& j : reports) std::cout << j.dump() << "\n";
  }

  if (!o.csv.empty()) {
    std::ofstream f = open_out(o.csv);
    f << "instance,bus,attention_weight,node_vulnerability\n";
    for (const json& j : reports)
      for (const json& row : j.at("buses"))
        f << j.at("index").get<std::size_t>() << "," << row.at("id").get<int>() << ","
          << row.at("attention_weight").get<double>() << ","
          << row.at("node_vulnerability").get<double>() << "\n";
    std::cout << "wrote plot data to " << o.csv << "\n";
  }
  return 0;
}

int run_evaluate(const EvaluateOpts& o) {
  const gridshed::ModelParams model = gridshed::load_model(o.model);
  const std::vector<InstanceRecord> records = read_labeled_records(o.in);

  std::vector<double> preds, labels;
  for (const InstanceRecord& r : records) {
    preds.push_back(gridshed::predict(model, r).y_hat);
    labels.push_back(*r.label);
  }

  std::string baseline_source = "test-labels";
  std::vector<double> baseline_labels = labels;
  if (!o.baseline_train.empty()) {
    baseline_labels.clear();
    for (const InstanceRecord& r : read_labeled_records(o.baseline_train))
      baseline_labels.push_back(*r.label);
    baseline_source = o.baseline_train;
  }
  const gridshed::MeanBaseline base = gridshed::fit_mean_baseline(baseline_labels);
  const std::vector<double> base_preds(labels.size(), base.mean);

  json report;
  report["n_samples"] = labels.size();
  report["model"] = json::parse(gridshed::to_json(gridshed::compute_metrics(preds, labels)));
  report["baseline"] =
      json::parse(gridshed::to_json(gridshed::compute_metrics(base_preds, labels)));
  report["baseline_mean"] = base.mean;
  report["baseline_source"] = baseline_source;

  const std::string text = report.dump(2);
  if (!o.out.empty()) {
    std::ofstream f = open_out(o.out);
    f << text << "\n";
    std::cout << text << "\n";
    std::cout << "wrote report to " << o.out << "\n";
  } else {
    std::cout << text << "\n";
  }

  if (!o.scatter.empty()) {
    std::ofstream f = open_out(o.scatter);
    f << "label,prediction\n";
    for (std::size_t i = 0; i < labels.size(); ++i) f << labels[i] << "," << preds[i] << "\n";
    std::cout << "wrote scatter data to " << o.scatter << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid vulnerability assessment pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read defaults from a key=value file ([section] per subcommand)");

  GenerateOpts gen;
  CLI::App* c_gen = app.add_subcommand("generate", "Generate random radial microgrids (JSONL)");
  c_gen->add_option("--n", gen.n, "Number of instances")->check(CLI::PositiveNumber);
  c_gen->add_option("--buses", gen.buses, "Buses per instance")->check(CLI::Range(2, 1000000));
  c_gen->add_option("--seed", gen.seed, "Base seed; instance i uses seed + i");
  c_gen->add_option("--gen-fraction", gen.gen_fraction, "Fraction of buses with generators")
      ->check(CLI::Range(0.0, 1.0));
  c_gen->add_option("--capacity-ratio", gen.capacity_ratio,
                    "Total generation capacity over total load")
      ->check(CLI::PositiveNumber);
  c_gen->add_flag("--wide-q-range", gen.wide_q_range,
                  "Draw reactive loads from [-10, 0] MVar instead of [-0.10, 0]");
  c_gen->add_option("--out", gen.out, "Output JSONL path")->required();

  LabelOpts lab;
  CLI::App* c_lab = app.add_subcommand("label", "Estimate the shedding rate of each microgrid");
  c_lab->add_option("--in", lab.in, "Microgrid JSONL")->required()->check(CLI::ExistingFile);
  c_lab->add_option("--out", lab.out, "Labeled JSONL path")->required();
  c_lab->add_option("--n-scenarios", lab.n_scenarios, "Monte Carlo scenarios per instance")
      ->check(CLI::PositiveNumber);
  c_lab->add_option("--seed", lab.seed, "Base seed; instance i uses seed + i");
  c_lab->add_option("--p-min", lab.p_min, "Disruption probability at zero centrality");
  c_lab->add_option("--p-max", lab.p_max, "Disruption probability at unit centrality");
  c_lab->add_option("--jobs", lab.jobs, "Worker threads (results independent of this)")
      ->envname("GRIDSHED_JOBS")
      ->check(CLI::PositiveNumber);

  ResampleOpts res;
  CLI::App* c_res = app.add_subcommand("resample", "Rebalance labels by inverse bin frequency");
  c_res->add_option("--in", res.in, "Labeled JSONL")->required()->check(CLI::ExistingFile);
  c_res->add_option("--out", res.out, "Rebalanced record JSONL path")->required();
  c_res->add_option("--bins", res.bins, "Equal-width label bins over [0, 1]")
      ->check(CLI::PositiveNumber);
  c_res->add_option("--draws", res.draws, "Records to draw with replacement")
      ->check(CLI::PositiveNumber);
  c_res->add_option("--seed", res.seed, "Sampling seed");

  TrainOpts tr;
  CLI::App* c_tr = app.add_subcommand("train", "Train the attention model on labeled records");
  c_tr->add_option("--in", tr.in, "Labeled record JSONL")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--out", tr.out, "Model artifact path")->required();
  c_tr->add_option("--epochs", tr.epochs, "Training epochs")->check(CLI::PositiveNumber);
  c_tr->add_option("--batch-size", tr.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", tr.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  c_tr->add_option("--val-fraction", tr.val_fraction, "Held-out validation fraction")
      ->check(CLI::Range(0.0, 0.999));
  c_tr->add_option("--seed", tr.seed, "Seed for init, shuffling, and the validation split");
  c_tr->add_option("--hidden", tr.hidden, "Hidden width")->check(CLI::PositiveNumber);
  c_tr->add_option("--heads1", tr.heads1, "Attention heads, first layer")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--heads2", tr.heads2, "Attention heads, second layer")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--attention-dim", tr.attention_dim, "Pooling width (0 = hidden width)")
      ->check(CLI::NonNegativeNumber);
  c_tr->add_option("--loss-csv", tr.loss_csv, "Write per-step losses (epoch,step,loss)");
  c_tr->add_option("--val-csv", tr.val_csv, "Write per-epoch validation MSE (epoch,val_mse)");

  AssessOpts as;
  CLI::App* c_as = app.add_subcommand("assess", "Predict shedding rates for instances");
  c_as->add_option("--model", as.model, "Model artifact")->required()->check(CLI::ExistingFile);
  c_as->add_option("--in", as.in, "Instance JSONL (microgrids or records)")
      ->required()
      ->check(CLI::ExistingFile);
  c_as->add_option("--out", as.out, "Optional prediction JSONL path");

  ExplainOpts ex;
  CLI::App* c_ex = app.add_subcommand(
      "explain", "Per-bus attention weights next to replayed single-bus vulnerabilities");
  c_ex->add_option("--model", ex.model, "Model artifact")->required()->check(CLI::ExistingFile);
  c_ex->add_option("--in", ex.in, "Microgrid JSONL")->required()->check(CLI::ExistingFile);
  c_ex->add_option("--index", ex.index, "Explain only this instance (default: all)")
      ->check(CLI::NonNegativeNumber);
  c_ex->add_option("--out", ex.out, "Output JSONL path (default: stdout)");
  c_ex->add_option("--csv", ex.csv, "Optional plot data CSV");

  EvaluateOpts ev;
  CLI::App* c_ev = app.add_subcommand("evaluate", "Score predictions against labels");
  c_ev->add_option("--model", ev.model, "Model artifact")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--in", ev.in, "Labeled JSONL test set")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--baseline-train", ev.baseline_train,
                   "Labeled JSONL whose label mean fits the constant baseline "
                   "(default: the test labels)")
      ->check(CLI::ExistingFile);
  c_ev->add_option("--out", ev.out, "Report JSON path (also printed)");
  c_ev->add_option("--scatter", ev.scatter, "Optional label,prediction CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_gen->parsed()) return run_generate(gen);
    if (c_lab->parsed()) return run_label(lab);
    if (c_res->parsed()) return run_resample(res);
    if (c_tr->parsed()) return run_train(tr);
    if (c_as->parsed()) return run_assess(as);
    if (c_ex->parsed()) return run_explain(ex);
    if (c_ev->parsed()) return run_evaluate(ev);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
