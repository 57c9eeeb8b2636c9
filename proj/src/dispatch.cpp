#include "gridshed/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

#include "gridshed/parallel.hpp"
#include "gridshed/simplex.hpp"

namespace gridshed {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;
// Octagon directions at k*pi/4, exact at the axes.
constexpr double kCos[8] = {1.0, kSqrtHalf, 0.0, -kSqrtHalf, -1.0, -kSqrtHalf, 0.0, kSqrtHalf};
constexpr double kSin[8] = {0.0, kSqrtHalf, 1.0, kSqrtHalf, 0.0, -kSqrtHalf, -1.0, -kSqrtHalf};

}  // namespace

std::vector<ComponentProblem> split_components(const DisruptedNetwork& net) {
  const int n = static_cast<int>(net.buses.size());
  std::map<int, int> pos;  // original id -> index in net.buses
  for (int i = 0; i < n; ++i) pos[net.buses[i].id] = i;

  std::vector<std::vector<std::pair<int, const LineSpec*>>> adj(n);
  for (const LineSpec& ln : net.lines) {
    auto itu = pos.find(ln.from_bus), itv = pos.find(ln.to_bus);
    if (itu == pos.end() || itv == pos.end())
      throw std::invalid_argument("split_components: line references missing bus");
    adj[itu->second].push_back({itv->second, &ln});
    adj[itv->second].push_back({itu->second, &ln});
  }

  std::vector<ComponentProblem> comps;
  std::vector<int> local(n, -1);
  std::vector<char> seen(n, 0);
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ComponentProblem cp;
    std::deque<int> queue{s};
    seen[s] = 1;
    local[s] = 0;
    cp.buses.push_back({net.buses[s].id, net.buses[s].p_load, net.buses[s].q_load,
                        net.buses[s].gen_capacity, net.buses[s].voltage_mag});
    cp.parent.push_back(-1);
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (const auto& [w, ln] : adj[u]) {
        if (seen[w]) continue;
        seen[w] = 1;
        local[w] = static_cast<int>(cp.buses.size());
        cp.buses.push_back({net.buses[w].id, net.buses[w].p_load, net.buses[w].q_load,
                            net.buses[w].gen_capacity, net.buses[w].voltage_mag});
        cp.parent.push_back(local[u]);
        const double limit =
            ln->rated_current * std::min(net.buses[u].voltage_mag, net.buses[w].voltage_mag);
        cp.edges.push_back({local[u], local[w], limit});
        queue.push_back(w);
      }
    }
    comps.push_back(std::move(cp));
  }
  return comps;
}

DispatchSolution solve_component_dispatch(const ComponentProblem& cp) {
  const int n = static_cast<int>(cp.buses.size());
  if (n == 0) throw std::invalid_argument("solve_component_dispatch: empty component");
  if (static_cast<int>(cp.edges.size()) != n - 1 || static_cast<int>(cp.parent.size()) != n)
    throw std::invalid_argument("solve_component_dispatch: not a rooted tree");

  std::vector<int> gens;
  for (int b = 0; b < n; ++b)
    if (cp.buses[b].gen_capacity > 0.0) gens.push_back(b);
  const int ng = static_cast<int>(gens.size());

  DispatchSolution ds;
  ds.served_fraction.assign(n, 0.0);
  ds.gen_output.assign(n, 0.0);
  ds.reactive_gen.assign(n, 0.0);
  if (ng == 0) return ds;  // nothing can be served without generation

  // Subtree membership per edge (indexed by child bus): walk each bus up to
  // the root; it belongs to the subtree of every edge on the way.
  std::vector<std::vector<char>> in_sub(n, std::vector<char>(n, 0));
  for (int b = 0; b < n; ++b) {
    int v = b;
    while (cp.parent[v] >= 0) {
      in_sub[v][b] = 1;
      v = cp.parent[v];
    }
  }

  // Variables: s_0..s_{n-1}, then g_k, then qg'_k = qg_k + cap_k (so all >= 0).
  const int nv = n + 2 * ng;
  LpProblem lp;
  lp.n_vars = nv;
  lp.objective.assign(nv, 0.0);
  for (int b = 0; b < n; ++b) lp.objective[b] = cp.buses[b].p_load;

  auto gvar = [&](int k) { return n + k; };
  auto qvar = [&](int k) { return n + ng + k; };

  {
    LpRow active{std::vector<double>(nv, 0.0), RowType::EQ, 0.0};
    LpRow reactive{std::vector<double>(nv, 0.0), RowType::EQ, 0.0};
    for (int b = 0; b < n; ++b) {
      active.coeffs[b] = -cp.buses[b].p_load;
      reactive.coeffs[b] = -cp.buses[b].q_load;
    }
    for (int k = 0; k < ng; ++k) {
      active.coeffs[gvar(k)] = 1.0;
      reactive.coeffs[qvar(k)] = 1.0;
      reactive.rhs += cp.buses[gens[k]].gen_capacity;
    }
    lp.rows.push_back(std::move(active));
    lp.rows.push_back(std::move(reactive));
  }

  for (int b = 0; b < n; ++b) {
    LpRow r{std::vector<double>(nv, 0.0), RowType::LE, 1.0};
    r.coeffs[b] = 1.0;
    lp.rows.push_back(std::move(r));
  }
  for (int k = 0; k < ng; ++k) {
    const double cap = cp.buses[gens[k]].gen_capacity;
    LpRow rg{std::vector<double>(nv, 0.0), RowType::LE, cap};
    rg.coeffs[gvar(k)] = 1.0;
    lp.rows.push_back(std::move(rg));
    LpRow rq{std::vector<double>(nv, 0.0), RowType::LE, 2.0 * cap};
    rq.coeffs[qvar(k)] = 1.0;
    lp.rows.push_back(std::move(rq));
  }

  // Octagonal |S| limit per edge: for each direction d,
  //   cos_d * P_e + sin_d * Q_e <= limit_e
  // with P_e = sum_sub (p_b s_b - g_b), Q_e = sum_sub (q_b s_b - qg'_b + cap_b).
  for (const ComponentEdge& e : cp.edges) {
    const std::vector<char>& sub = in_sub[e.child];
    for (int d = 0; d < 8; ++d) {
      LpRow r{std::vector<double>(nv, 0.0), RowType::LE, e.flow_limit};
      for (int b = 0; b < n; ++b) {
        if (!sub[b]) continue;
        r.coeffs[b] = kCos[d] * cp.buses[b].p_load + kSin[d] * cp.buses[b].q_load;
      }
      for (int k = 0; k < ng; ++k) {
        if (!sub[gens[k]]) continue;
        r.coeffs[gvar(k)] -= kCos[d];
        r.coeffs[qvar(k)] -= kSin[d];
        r.rhs -= kSin[d] * cp.buses[gens[k]].gen_capacity;
      }
      lp.rows.push_back(std::move(r));
    }
  }

  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("solve_component_dispatch: LP not optimal (shedding everything is always feasible)");

  for (int b = 0; b < n; ++b)
    ds.served_fraction[b] = std::clamp(sol.x[b], 0.0, 1.0);
  for (int k = 0; k < ng; ++k) {
    const int b = gens[k];
    ds.gen_output[b] = std::clamp(sol.x[gvar(k)], 0.0, cp.buses[b].gen_capacity);
    ds.reactive_gen[b] = std::clamp(sol.x[qvar(k)] - cp.buses[b].gen_capacity,
                                    -cp.buses[b].gen_capacity, cp.buses[b].gen_capacity);
  }
  double served = 0.0;
  for (int b = 0; b < n; ++b) served += cp.buses[b].p_load * ds.served_fraction[b];
  ds.served_load = served;
  return ds;
}

double shed_rate(const Microgrid& mg, const AttackScenario& s) {
  const double total = total_load(mg);
  if (total <= 0.0) throw std::invalid_argument("shed_rate: grid has no load");

  double unserved = 0.0;
  std::vector<char> gone(mg.buses.size(), 0);
  for (int b : s.disrupted_buses) {
    if (b < 0 || b >= static_cast<int>(mg.buses.size()))
      throw std::invalid_argument("shed_rate: disrupted bus out of range");
    if (!gone[b]) unserved += mg.buses[b].p_load;
    gone[b] = 1;
  }

  DisruptedNetwork net = apply_scenario(mg, s);
  for (const ComponentProblem& cp : split_components(net)) {
    double island_load = 0.0;
    for (const ComponentBus& b : cp.buses) island_load += b.p_load;
    if (island_load <= 0.0) continue;
    bool has_gen = false;
    for (const ComponentBus& b : cp.buses) has_gen = has_gen || b.gen_capacity > 0.0;
    if (!has_gen) {
      unserved += island_load;
      continue;
    }
    const DispatchSolution ds = solve_component_dispatch(cp);
    unserved += island_load - std::clamp(ds.served_load, 0.0, island_load);
  }
  return std::clamp(unserved / total, 0.0, 1.0);
}

ElsrEstimate estimate_elsr(const Microgrid& mg, const ElsrOptions& opt) {
  if (opt.n_scenarios < 1) throw std::invalid_argument("estimate_elsr: need at least 1 scenario");
  const DisruptionProbabilities probs = disruption_probabilities(mg, opt.p_min, opt.p_max);

  std::vector<double> rates(opt.n_scenarios, 0.0);
  parallel_for(static_cast<std::size_t>(opt.n_scenarios), opt.jobs, [&](std::size_t i) {
    Rng rng(scenario_seed(opt.base_seed, static_cast<std::uint64_t>(i)));
    const AttackScenario s = sample_scenario(mg, probs, rng);
    rates[i] = shed_rate(mg, s);
  });

  // Ordered reductions keep the estimate identical for any `jobs`.
  ElsrEstimate est;
  est.n_scenarios = opt.n_scenarios;
  double sum = 0.0;
  for (double r : rates) sum += r;
  est.mean = sum / opt.n_scenarios;

  double ss = 0.0;
  for (double r : rates) ss += (r - est.mean) * (r - est.mean);
  if (opt.n_scenarios > 1)
    est.std_error = std::sqrt(ss / (opt.n_scenarios - 1)) / std::sqrt(static_cast<double>(opt.n_scenarios));

  const int half = opt.n_scenarios / 2;
  if (half > 0) {
    double hsum = 0.0;
    for (int i = 0; i < half; ++i) hsum += rates[i];
    est.half_split_rel_change = std::abs(hsum / half - est.mean) / std::max(est.mean, 1e-12);
  }
  return est;
}

double node_vulnerability(const Microgrid& mg, int bus_id) {
  if (bus_id < 0 || bus_id >= static_cast<int>(mg.buses.size()))
    throw std::invalid_argument("node_vulnerability: bus out of range");
  return shed_rate(mg, single_bus_scenario(bus_id));
}

}  // namespace gridshed
