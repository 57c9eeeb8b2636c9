#include "gridshed/attack.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace gridshed {

DisruptionProbabilities disruption_probabilities(const Microgrid& mg, double p_min, double p_max) {
  if (p_min < 0.0 || p_max > 1.0 || p_min > p_max)
    throw std::invalid_argument("disruption_probabilities: need 0 <= p_min <= p_max <= 1");
  SimpleGraph g = topology(mg);
  DisruptionProbabilities probs;
  probs.p_min = p_min;
  probs.p_max = p_max;
  const double span = p_max - p_min;
  for (double c : degree_centrality(g)) probs.bus.push_back(p_min + span * c);
  for (double c : edge_betweenness(g)) probs.line.push_back(p_min + span * c);
  return probs;
}

AttackScenario sample_scenario(const Microgrid& mg, const DisruptionProbabilities& probs, Rng& rng) {
  if (probs.bus.size() != mg.buses.size() || probs.line.size() != mg.lines.size())
    throw std::invalid_argument("sample_scenario: probabilities do not match grid");
  AttackScenario s;
  for (int i = 0; i < static_cast<int>(probs.bus.size()); ++i)
    if (rng.bernoulli(probs.bus[i])) s.disrupted_buses.push_back(i);
  for (int i = 0; i < static_cast<int>(probs.line.size()); ++i)
    if (rng.bernoulli(probs.line[i]))
      s.disrupted_lines.push_back({mg.lines[i].from_bus, mg.lines[i].to_bus});
  return s;
}

AttackScenario single_bus_scenario(int bus_id) {
  AttackScenario s;
  s.disrupted_buses.push_back(bus_id);
  return s;
}

DisruptedNetwork apply_scenario(const Microgrid& mg, const AttackScenario& s) {
  const int n = static_cast<int>(mg.buses.size());
  std::vector<char> bus_gone(n, 0);
  for (int b : s.disrupted_buses) {
    if (b < 0 || b >= n) throw std::invalid_argument("apply_scenario: disrupted bus out of range");
    bus_gone[b] = 1;
  }
  std::set<std::pair<int, int>> line_gone;
  auto key = [](int a, int b) { return a < b ? std::pair<int, int>{a, b} : std::pair<int, int>{b, a}; };
  std::set<std::pair<int, int>> known;
  for (const LineSpec& ln : mg.lines) known.insert(key(ln.from_bus, ln.to_bus));
  for (const auto& [a, b] : s.disrupted_lines) {
    if (!known.count(key(a, b))) throw std::invalid_argument("apply_scenario: disrupted line not in grid");
    line_gone.insert(key(a, b));
  }

  DisruptedNetwork net;
  for (const BusSpec& b : mg.buses)
    if (!bus_gone[b.id]) net.buses.push_back(b);
  for (const LineSpec& ln : mg.lines) {
    if (bus_gone[ln.from_bus] || bus_gone[ln.to_bus]) continue;
    if (line_gone.count(key(ln.from_bus, ln.to_bus))) continue;
    net.lines.push_back(ln);
  }
  return net;
}

std::string to_json(const AttackScenario& s) {
  nlohmann::ordered_json j;
  j["disrupted_buses"] = s.disrupted_buses;
  j["disrupted_lines"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : s.disrupted_lines) j["disrupted_lines"].push_back({a, b});
  return j.dump();
}

}  // namespace gridshed
