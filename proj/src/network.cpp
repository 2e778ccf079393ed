#include "lvpq/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

#include "lvpq/error.hpp"

namespace lvpq::network {

Mat3 z_to_pu(const Mat3& z_ohm, const BaseValues& base) { return z_ohm / base.z_ohm(); }
Mat3 z_from_pu(const Mat3& z_pu, const BaseValues& base) { return z_pu * base.z_ohm(); }

void TransformerModel::validate() const {
  if (!(rating_va > 0.0) || !(v_secondary > 0.0) || !(v_primary > 0.0)) {
    throw ModelError("transformer ratings must be positive");
  }
  if (!(uk > 0.0 && uk < 0.2)) throw ModelError("transformer uk must lie in (0, 0.2) pu");
  if (!(ur >= 0.0 && ur < uk)) throw ModelError("transformer ur must lie in [0, uk)");
  if (!(no_load_pu >= 0.95 && no_load_pu <= 1.1)) {
    throw ModelError("transformer no-load voltage must lie in [0.95, 1.1] pu");
  }
}

cplx TransformerModel::z_pu_own() const { return {ur, std::sqrt(uk * uk - ur * ur)}; }

cplx TransformerModel::z_ohm_lv() const {
  return z_pu_own() * (v_secondary * v_secondary / rating_va);
}

std::size_t NetworkGraph::index_of(std::string_view bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == bus_id) return i;
  }
  throw ModelError("unknown bus '" + std::string(bus_id) + "'");
}

std::string RadialityResult::describe() const {
  std::ostringstream os;
  if (!cycle_branches.empty()) {
    os << "cycle through branches:";
    for (const auto& b : cycle_branches) os << ' ' << b;
  }
  if (!islands.empty()) {
    if (!cycle_branches.empty()) os << "; ";
    os << "unreachable buses:";
    for (const auto& b : islands) os << ' ' << b;
  }
  return os.str();
}

namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

// Branch ids along the forest path a..b (forest adjacency given).
std::vector<std::size_t> forest_path(
    const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& adj, std::size_t a,
    std::size_t b) {
  std::vector<std::size_t> via(adj.size(), npos), prev(adj.size(), npos);
  std::vector<bool> seen(adj.size(), false);
  std::deque<std::size_t> q{a};
  seen[a] = true;
  while (!q.empty()) {
    auto u = q.front();
    q.pop_front();
    if (u == b) break;
    for (auto [v, br] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      prev[v] = u;
      via[v] = br;
      q.push_back(v);
    }
  }
  std::vector<std::size_t> path;
  for (auto v = b; v != a && prev[v] != npos; v = prev[v]) path.push_back(via[v]);
  return path;
}

}  // namespace

RadialityResult check_radiality(const NetworkGraph& graph) {
  RadialityResult res;
  const auto n = graph.buses.size();
  DisjointSet dsu(n);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);
  std::vector<std::size_t> chords;
  for (std::size_t k = 0; k < graph.branches.size(); ++k) {
    const auto& br = graph.branches[k];
    if (br.from >= n || br.to >= n) throw ModelError("branch '" + br.id + "' has a bad bus index");
    if (dsu.unite(br.from, br.to)) {
      adj[br.from].push_back({br.to, k});
      adj[br.to].push_back({br.from, k});
    } else {
      chords.push_back(k);
    }
  }
  std::set<std::string> cycle;
  for (auto k : chords) {
    const auto& br = graph.branches[k];
    cycle.insert(br.id);
    for (auto p : forest_path(adj, br.from, br.to)) cycle.insert(graph.branches[p].id);
  }
  res.cycle_branches.assign(cycle.begin(), cycle.end());

  res.tree.parent.assign(n, npos);
  res.tree.parent_branch.assign(n, npos);
  if (graph.source < n) {
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> q{graph.source};
    seen[graph.source] = true;
    while (!q.empty()) {
      auto u = q.front();
      q.pop_front();
      res.tree.order.push_back(u);
      for (auto [v, br] : adj[u]) {
        if (seen[v]) continue;
        seen[v] = true;
        res.tree.parent[v] = u;
        res.tree.parent_branch[v] = br;
        q.push_back(v);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i]) res.islands.push_back(graph.buses[i].id);
    }
  }
  res.ok = res.cycle_branches.empty() && res.islands.empty() && graph.source < n;
  return res;
}

NetworkGraph assemble_graph(std::vector<Bus> buses, std::vector<Branch> branches,
                            const TransformerModel& transformer, const BaseValues& base) {
  NetworkGraph g;
  g.buses = std::move(buses);
  g.branches = std::move(branches);
  g.transformer = transformer;
  g.base = base;
  g.source = g.buses.size();
  for (std::size_t i = 0; i < g.buses.size(); ++i) {
    if (g.buses[i].is_source) {
      if (g.source != g.buses.size()) throw ModelError("more than one source bus");
      g.source = i;
    }
  }
  if (g.source == g.buses.size()) throw ModelError("no source bus");
  std::set<std::string> ids;
  for (const auto& b : g.buses) {
    if (!ids.insert(b.id).second) throw ModelError("duplicate bus id '" + b.id + "'");
  }
  for (const auto& br : g.branches) {
    const Mat3& z = br.z_ohm;
    if (!z.allFinite()) throw ModelError("branch '" + br.id + "' has a non-finite impedance");
    if (!(z - z.transpose()).isZero(1e-12 * (1.0 + z.norm()))) {
      throw ModelError("branch '" + br.id + "' impedance matrix is not symmetric");
    }
    for (int p = 0; p < 3; ++p) {
      if (!(z(p, p).real() > 0.0)) {
        throw ModelError("branch '" + br.id + "' has a non-positive phase resistance");
      }
    }
  }
  auto radial = check_radiality(g);
  if (!radial.ok) throw ModelError("network is not radial: " + radial.describe());
  g.tree = std::move(radial.tree);
  return g;
}

NetworkGraph build_graph(std::span<const gis::GeoPoint> points,
                         std::span<const gis::LineSegment> segments, const LineCatalog& catalog,
                         const TransformerModel& transformer, const BaseValues& base) {
  transformer.validate();
  std::vector<Bus> buses;
  const gis::GeoPoint* substation = nullptr;
  for (const auto& p : points) {
    if (p.role != gis::Role::substation) continue;
    if (substation) {
      throw ModelError("more than one substation point ('" + substation->id + "', '" + p.id +
                       "'); a radial feeder needs exactly one source");
    }
    substation = &p;
  }
  if (!substation) throw ModelError("no substation point in the layer");

  buses.push_back(Bus{"source", substation->pos, gis::Role::substation, true, {}});
  for (const auto& p : points) buses.push_back(Bus{p.id, p.pos, p.role, false, p.attributes});

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (!index.emplace(buses[i].id, i).second) {
      throw ModelError("duplicate bus id '" + buses[i].id + "'");
    }
  }

  std::vector<Branch> branches;
  Branch trafo;
  trafo.id = "transformer";
  trafo.from = 0;
  trafo.to = index.at(substation->id);
  trafo.kind = BranchKind::transformer;
  trafo.z_ohm = Mat3::Identity() * transformer.z_ohm_lv();
  trafo.geometry = {substation->pos, substation->pos};
  branches.push_back(trafo);

  for (const auto& s : segments) {
    if (!s.from_node || !s.to_node) {
      throw ModelError("segment '" + s.id + "' has an unset endpoint; run repair first");
    }
    auto cat = catalog.find(s.standard_type);
    if (cat == catalog.end()) {
      throw ModelError("segment '" + s.id + "' references unknown standard type '" +
                       s.standard_type + "'");
    }
    auto f = index.find(*s.from_node);
    auto t = index.find(*s.to_node);
    if (f == index.end() || t == index.end()) {
      throw ModelError("segment '" + s.id + "' references a missing point");
    }
    Branch br;
    br.id = s.id;
    br.from = f->second;
    br.to = t->second;
    br.length_m = s.length();
    br.z_ohm = cat->second.z_per_km * (br.length_m / 1000.0);
    br.standard_type = s.standard_type;
    br.kind = BranchKind::line;
    br.geometry = s.vertices;
    if (!(br.length_m > 0.0)) throw ModelError("segment '" + s.id + "' has zero length");
    branches.push_back(std::move(br));
  }
  return assemble_graph(std::move(buses), std::move(branches), transformer, base);
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::A: return "A";
    case Phase::B: return "B";
    case Phase::C: return "C";
    case Phase::ABC: return "ABC";
  }
  return "?";
}

Phase parse_phase(std::string_view text) {
  if (text == "A" || text == "a") return Phase::A;
  if (text == "B" || text == "b") return Phase::B;
  if (text == "C" || text == "c") return Phase::C;
  if (text == "ABC" || text == "abc" || text == "3") return Phase::ABC;
  throw ModelError("unknown phase '" + std::string(text) + "'");
}

double reactive_power(double p_w, double pf) {
  if (pf >= 1.0) return 0.0;
  return p_w * std::tan(std::acos(pf));
}

double Scenario::q(std::size_t load, std::size_t t) const {
  return reactive_power(p(load, t), loads[load].pf);
}

std::vector<Vec3> Scenario::load_table(std::size_t t) const { return load_table(t, 1.0); }

std::vector<Vec3> Scenario::load_table(std::size_t t, double factor) const {
  if (t >= intervals) throw ModelError("interval out of range");
  std::vector<Vec3> table(graph->buses.size(), Vec3::Zero());
  const double s_base = graph->base.s_phase_va();
  for (std::size_t k = 0; k < loads.size(); ++k) {
    const auto& ld = loads[k];
    const double pw = p(k, t) * factor;
    const cplx s{pw / s_base, reactive_power(pw, ld.pf) / s_base};
    switch (ld.phase) {
      case Phase::A: table[ld.bus](0) += s; break;
      case Phase::B: table[ld.bus](1) += s; break;
      case Phase::C: table[ld.bus](2) += s; break;
      case Phase::ABC:
        for (int p = 0; p < 3; ++p) table[ld.bus](p) += s / 3.0;
        break;
    }
  }
  return table;
}

namespace {

std::string meter_of(const Bus& bus) {
  auto it = bus.attributes.find("meter_id");
  return it == bus.attributes.end() ? bus.id : it->second;
}

bool single_phase(const Bus& bus) {
  auto it = bus.attributes.find("phases");
  return it != bus.attributes.end() && it->second == "1";
}

void fill_profiles(Scenario& sc, std::span<const meter::MeterSeries> meters) {
  std::map<std::string, const meter::MeterSeries*> by_id;
  for (const auto& m : meters) by_id[m.meter_id] = &m;
  sc.intervals = 0;
  bool first = true;
  for (const auto& ld : sc.loads) {
    auto it = by_id.find(ld.meter_id);
    if (it == by_id.end()) {
      throw ModelError("consumer '" + sc.graph->buses[ld.bus].id + "' has no meter series '" +
                       ld.meter_id + "'");
    }
    if (first) {
      sc.intervals = it->second->size();
      sc.start = it->second->start;
      first = false;
    } else if (it->second->size() != sc.intervals) {
      throw ModelError("meter '" + ld.meter_id + "' covers a different number of intervals");
    }
  }
  sc.p_w.assign(sc.intervals * sc.loads.size(), 0.0);
  for (std::size_t k = 0; k < sc.loads.size(); ++k) {
    const auto& series = *by_id.at(sc.loads[k].meter_id);
    for (std::size_t t = 0; t < sc.intervals; ++t) {
      const double v = series.values[t];
      if (!std::isfinite(v) || v < 0.0) {
        throw ModelError("meter '" + series.meter_id + "' holds an invalid value; clean first");
      }
      sc.p_w[t * sc.loads.size() + k] = v;
    }
  }
}

}  // namespace

Scenario attach_loads(std::shared_ptr<const NetworkGraph> graph,
                      std::span<const meter::MeterSeries> meters, PowerFactorRange pf_range,
                      const PhaseMap& phase_map, std::uint64_t rng_seed) {
  if (!(pf_range.low > 0.0 && pf_range.low <= pf_range.high && pf_range.high <= 1.0)) {
    throw ModelError("power factor range must satisfy 0 < low <= high <= 1");
  }
  Scenario sc;
  sc.graph = graph;
  std::vector<std::size_t> consumers;
  for (std::size_t i = 0; i < graph->buses.size(); ++i) {
    if (graph->buses[i].role == gis::Role::consumer) consumers.push_back(i);
  }
  std::sort(consumers.begin(), consumers.end(), [&](std::size_t a, std::size_t b) {
    return graph->buses[a].id < graph->buses[b].id;
  });

  std::mt19937_64 rng(rng_seed);
  std::size_t round_robin = 0;
  for (auto bus : consumers) {
    LoadConnection ld;
    ld.bus = bus;
    ld.meter_id = meter_of(graph->buses[bus]);
    if (auto it = phase_map.find(ld.meter_id); it != phase_map.end()) {
      ld.phase = it->second;
    } else if (single_phase(graph->buses[bus])) {
      ld.phase = static_cast<Phase>(round_robin++ % 3);
    } else {
      ld.phase = Phase::ABC;
    }
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    ld.pf = pf_range.low + (pf_range.high - pf_range.low) * u;
    sc.loads.push_back(std::move(ld));
  }
  fill_profiles(sc, meters);
  return sc;
}

Scenario with_profiles(const Scenario& base, std::span<const meter::MeterSeries> meters) {
  Scenario sc;
  sc.graph = base.graph;
  sc.loads = base.loads;
  fill_profiles(sc, meters);
  return sc;
}

}  // namespace lvpq::network
