#include "gridshed/microgrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gridshed/rng.hpp"

namespace gridshed {

using json = nlohmann::ordered_json;

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

int generator_count(int n_buses, double generator_fraction) {
  if (n_buses < 1) throw std::invalid_argument("generator_count: need at least 1 bus");
  int n = static_cast<int>(std::lround(generator_fraction * n_buses));
  return std::max(1, std::min(n, n_buses));
}

Microgrid generate_microgrid(const GenerationConfig& config) {
  if (config.n_buses < 2) throw std::invalid_argument("generate_microgrid: need at least 2 buses");
  Rng rng(config.seed);
  Microgrid mg;
  mg.meta = config;
  mg.buses.resize(config.n_buses);
  mg.lines.reserve(config.n_buses - 1);

  // Topology: bus i attaches to a uniformly random earlier bus.
  for (int i = 1; i < config.n_buses; ++i) {
    int parent = static_cast<int>(rng.below(static_cast<std::size_t>(i)));
    mg.lines.push_back(LineSpec{parent, i, 0.0, 0.0, config.rated_current});
  }

  for (int i = 0; i < config.n_buses; ++i) {
    BusSpec& b = mg.buses[i];
    b.id = i;
    b.voltage_mag = rng.uniform(config.voltage_range.lo, config.voltage_range.hi);
    b.p_load = rng.uniform(config.p_load_range.lo, config.p_load_range.hi);
    b.q_load = rng.uniform(config.q_load_range.lo, config.q_load_range.hi);
  }

  for (LineSpec& ln : mg.lines) {
    ln.resistance = rng.uniform(config.resistance_range.lo, config.resistance_range.hi);
    ln.reactance = rng.uniform(config.reactance_range.lo, config.reactance_range.hi);
  }

  // Generator placement: partial Fisher-Yates over bus ids.
  const int n_gen = generator_count(config.n_buses, config.generator_fraction);
  std::vector<int> ids(config.n_buses);
  std::iota(ids.begin(), ids.end(), 0);
  for (int k = 0; k < n_gen; ++k) {
    std::size_t j = k + rng.below(ids.size() - k);
    std::swap(ids[k], ids[j]);
  }
  const double cap = config.capacity_ratio * total_load(mg) / n_gen;
  for (int k = 0; k < n_gen; ++k) mg.buses[ids[k]].gen_capacity = cap;

  return mg;
}

double total_load(const Microgrid& mg) {
  double sum = 0.0;
  for (const BusSpec& b : mg.buses) sum += b.p_load;
  return sum;
}

SimpleGraph topology(const Microgrid& mg) {
  SimpleGraph g;
  g.n_nodes = static_cast<int>(mg.buses.size());
  for (const LineSpec& ln : mg.lines) g.edges.push_back({ln.from_bus, ln.to_bus});
  return g;
}

namespace {

void check_range(ValidationReport& rep, const std::string& name, double v, const Range& r) {
  for (ValidationCheck& c : rep.checks) {
    if (c.name == name) {
      if (c.passed && (v < r.lo || v > r.hi)) {
        c.passed = false;
        std::ostringstream os;
        os << "value " << v << " outside [" << r.lo << ", " << r.hi << "]";
        c.detail = os.str();
      }
      return;
    }
  }
  ValidationCheck c{name, true, ""};
  if (v < r.lo || v > r.hi) {
    c.passed = false;
    std::ostringstream os;
    os << "value " << v << " outside [" << r.lo << ", " << r.hi << "]";
    c.detail = os.str();
  }
  rep.checks.push_back(std::move(c));
}

}  // namespace

ValidationReport validate(const Microgrid& mg) {
  ValidationReport rep;
  const int n = static_cast<int>(mg.buses.size());

  bool ids_ok = true;
  for (int i = 0; i < n; ++i) ids_ok = ids_ok && mg.buses[i].id == i;
  rep.checks.push_back({"bus_ids_contiguous", ids_ok, ids_ok ? "" : "ids must be 0..N-1 in order"});

  bool count_ok = static_cast<int>(mg.lines.size()) == n - 1;
  rep.checks.push_back({"line_count", count_ok, count_ok ? "" : "expected N-1 lines"});

  bool tree_ok = count_ok;
  std::string tree_detail;
  if (tree_ok) {
    try {
      tree_ok = connected_components(topology(mg)).size() == 1;
      if (!tree_ok) tree_detail = "graph is disconnected";
    } catch (const std::invalid_argument& e) {
      tree_ok = false;
      tree_detail = e.what();
    }
  } else {
    tree_detail = "line count already wrong";
  }
  rep.checks.push_back({"tree_topology", tree_ok, tree_detail});

  const GenerationConfig& c = mg.meta;
  for (const BusSpec& b : mg.buses) {
    check_range(rep, "voltage_range", b.voltage_mag, c.voltage_range);
    check_range(rep, "p_load_range", b.p_load, c.p_load_range);
    check_range(rep, "q_load_range", b.q_load, c.q_load_range);
  }
  for (const LineSpec& ln : mg.lines) {
    check_range(rep, "resistance_range", ln.resistance, c.resistance_range);
    check_range(rep, "reactance_range", ln.reactance, c.reactance_range);
    check_range(rep, "rated_current", ln.rated_current, Range{c.rated_current, c.rated_current});
  }

  const int want_gen = generator_count(n, c.generator_fraction);
  int have_gen = 0;
  for (const BusSpec& b : mg.buses)
    if (b.gen_capacity > 0.0) ++have_gen;
  rep.checks.push_back({"generator_count", have_gen == want_gen,
                        have_gen == want_gen ? "" : "expected " + std::to_string(want_gen) + " generators, found " + std::to_string(have_gen)});

  double cap_sum = 0.0;
  bool shares_ok = true;
  double share = -1.0;
  for (const BusSpec& b : mg.buses) {
    if (b.gen_capacity <= 0.0) continue;
    cap_sum += b.gen_capacity;
    if (share < 0.0) share = b.gen_capacity;
    else if (std::abs(b.gen_capacity - share) > 1e-9 * std::max(1.0, share)) shares_ok = false;
  }
  const double want_cap = c.capacity_ratio * total_load(mg);
  bool cap_ok = shares_ok && std::abs(cap_sum - want_cap) <= 1e-9 * std::max(1.0, want_cap);
  std::ostringstream cd;
  if (!cap_ok) cd << "total capacity " << cap_sum << " vs expected " << want_cap << (shares_ok ? "" : " (unequal shares)");
  rep.checks.push_back({"generator_capacity", cap_ok, cd.str()});

  return rep;
}

namespace {

json range_to_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("microgrid json: range must be [lo, hi]");
  return Range{j[0].get<double>(), j[1].get<double>()};
}

json config_to_json(const GenerationConfig& c) {
  json j;
  j["n_buses"] = c.n_buses;
  j["generator_fraction"] = c.generator_fraction;
  j["capacity_ratio"] = c.capacity_ratio;
  j["voltage_range"] = range_to_json(c.voltage_range);
  j["p_load_range"] = range_to_json(c.p_load_range);
  j["q_load_range"] = range_to_json(c.q_load_range);
  j["resistance_range"] = range_to_json(c.resistance_range);
  j["reactance_range"] = range_to_json(c.reactance_range);
  j["rated_current"] = c.rated_current;
  return j;
}

GenerationConfig config_from_json(const json& j, std::uint64_t seed) {
  GenerationConfig c;
  c.n_buses = j.at("n_buses").get<int>();
  c.generator_fraction = j.at("generator_fraction").get<double>();
  c.capacity_ratio = j.at("capacity_ratio").get<double>();
  c.voltage_range = range_from_json(j.at("voltage_range"));
  c.p_load_range = range_from_json(j.at("p_load_range"));
  c.q_load_range = range_from_json(j.at("q_load_range"));
  c.resistance_range = range_from_json(j.at("resistance_range"));
  c.reactance_range = range_from_json(j.at("reactance_range"));
  c.rated_current = j.at("rated_current").get<double>();
  c.seed = seed;
  return c;
}

json microgrid_to_json_obj(const Microgrid& mg) {
  json j;
  j["buses"] = json::array();
  for (const BusSpec& b : mg.buses) {
    json jb;
    jb["id"] = b.id;
    jb["v_mag"] = b.voltage_mag;
    jb["p_load"] = b.p_load;
    jb["q_load"] = b.q_load;
    jb["gen_cap"] = b.gen_capacity;
    j["buses"].push_back(std::move(jb));
  }
  j["lines"] = json::array();
  for (const LineSpec& ln : mg.lines) {
    json jl;
    jl["from"] = ln.from_bus;
    jl["to"] = ln.to_bus;
    jl["r"] = ln.resistance;
    jl["x"] = ln.reactance;
    jl["i_rated"] = ln.rated_current;
    j["lines"].push_back(std::move(jl));
  }
  j["meta"] = json{{"seed", mg.meta.seed}, {"config", config_to_json(mg.meta)}};
  return j;
}

Microgrid microgrid_from_json_obj(const json& j) {
  Microgrid mg;
  const json& jm = j.at("meta");
  std::uint64_t seed = jm.at("seed").get<std::uint64_t>();
  mg.meta = config_from_json(jm.at("config"), seed);
  for (const json& jb : j.at("buses")) {
    BusSpec b;
    b.id = jb.at("id").get<int>();
    b.voltage_mag = jb.at("v_mag").get<double>();
    b.p_load = jb.at("p_load").get<double>();
    b.q_load = jb.at("q_load").get<double>();
    b.gen_capacity = jb.at("gen_cap").get<double>();
    mg.buses.push_back(b);
  }
  for (const json& jl : j.at("lines")) {
    LineSpec ln;
    ln.from_bus = jl.at("from").get<int>();
    ln.to_bus = jl.at("to").get<int>();
    ln.resistance = jl.at("r").get<double>();
    ln.reactance = jl.at("x").get<double>();
    ln.rated_current = jl.at("i_rated").get<double>();
    mg.lines.push_back(ln);
  }
  return mg;
}

}  // namespace

std::string to_json(const Microgrid& mg) { return microgrid_to_json_obj(mg).dump(); }

Microgrid microgrid_from_json(const std::string& text) {
  return microgrid_from_json_obj(json::parse(text));
}

void write_microgrids(const std::string& path, const std::vector<Microgrid>& grids) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const Microgrid& mg : grids) out << to_json(mg) << "\n";
}

std::vector<Microgrid> read_microgrids(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<Microgrid> grids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    grids.push_back(microgrid_from_json(line));
  }
  return grids;
}

}  // namespace gridshed
