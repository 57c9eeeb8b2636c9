#include "gridshed/io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gridshed {

using json = nlohmann::ordered_json;

std::string to_json(const LabeledInstance& li) {
  json j;
  j["instance"] = json::parse(to_json(li.instance));
  j["elsr"] = li.elsr;
  j["std_error"] = li.std_error;
  j["n_scenarios"] = li.n_scenarios;
  j["seed"] = li.seed;
  return j.dump();
}

LabeledInstance labeled_from_json(const std::string& text) {
  const json j = json::parse(text);
  LabeledInstance li;
  li.instance = microgrid_from_json(j.at("instance").dump());
  li.elsr = j.at("elsr").get<double>();
  li.std_error = j.at("std_error").get<double>();
  li.n_scenarios = j.at("n_scenarios").get<int>();
  li.seed = j.at("seed").get<std::uint64_t>();
  return li;
}

void write_labeled(const std::string& path, const std::vector<LabeledInstance>& items) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const LabeledInstance& li : items) out << to_json(li) << "\n";
}

std::vector<LabeledInstance> read_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<LabeledInstance> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    items.push_back(labeled_from_json(line));
  }
  return items;
}

std::vector<InstanceRecord> read_records_auto(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<InstanceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("node_features")) {
      records.push_back(record_from_json(line));
    } else if (j.contains("instance")) {
      const LabeledInstance li = labeled_from_json(line);
      InstanceRecord rec = extract_features(li.instance);
      rec.label = li.elsr;
      records.push_back(std::move(rec));
    } else if (j.contains("buses")) {
      records.push_back(extract_features(microgrid_from_json(line)));
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unrecognized record layout");
    }
  }
  return records;
}

}  // namespace gridshed
