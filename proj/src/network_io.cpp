#include "lvpq/network_io.hpp"

#include <fstream>

#include "lvpq/error.hpp"
#include "lvpq/io.hpp"
#include "lvpq/meter_io.hpp"

namespace lvpq::network {

using nlohmann::json;

namespace {

json cjson(cplx z) { return {z.real(), z.imag()}; }
cplx cfrom(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json mat_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back(cjson(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

Mat3 mat_from(const json& j) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = cfrom(j.at(r).at(c));
  }
  return m;
}

json xy_list(const std::vector<gis::XY>& v) {
  json arr = json::array();
  for (const auto& p : v) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

json to_json(const LineCatalog& catalog) {
  json out = json::object();
  for (const auto& [name, t] : catalog) out[name] = {{"z_ohm_per_km", mat_json(t.z_per_km)}};
  return out;
}

LineCatalog catalog_from_json(const json& doc) {
  LineCatalog cat;
  for (const auto& [name, entry] : doc.items()) {
    LineType t;
    t.name = name;
    if (entry.contains("z_ohm_per_km")) {
      t.z_per_km = mat_from(entry["z_ohm_per_km"]);
    } else {
      t.z_per_km = phase_matrix_from_sequence(cfrom(entry.at("z1_ohm_per_km")),
                                              cfrom(entry.at("z0_ohm_per_km")));
    }
    cat[name] = t;
  }
  if (cat.empty()) throw ModelError("line catalog is empty");
  return cat;
}

json to_json(const TransformerModel& t) {
  return {{"rating_va", t.rating_va}, {"v_primary", t.v_primary},
          {"v_secondary", t.v_secondary}, {"uk", t.uk},
          {"ur", t.ur}, {"no_load_pu", t.no_load_pu}};
}

TransformerModel transformer_from_json(const json& doc) {
  TransformerModel t;
  t.rating_va = doc.value("rating_va", t.rating_va);
  t.v_primary = doc.value("v_primary", t.v_primary);
  t.v_secondary = doc.value("v_secondary", t.v_secondary);
  t.uk = doc.value("uk", t.uk);
  t.ur = doc.value("ur", t.ur);
  t.no_load_pu = doc.value("no_load_pu", t.no_load_pu);
  t.validate();
  return t;
}

json to_json(const BaseValues& b) { return {{"s_va", b.s_va}, {"v_ll", b.v_ll}}; }

BaseValues base_from_json(const json& doc) {
  BaseValues b;
  b.s_va = doc.value("s_va", b.s_va);
  b.v_ll = doc.value("v_ll", b.v_ll);
  if (!(b.s_va > 0.0 && b.v_ll > 0.0)) throw ModelError("base values must be positive");
  return b;
}

json to_json(const NetworkGraph& g) {
  json buses = json::array();
  for (const auto& b : g.buses) {
    json jb = {{"id", b.id},
               {"x", b.pos.x},
               {"y", b.pos.y},
               {"role", std::string(gis::to_string(b.role))},
               {"is_source", b.is_source}};
    if (!b.attributes.empty()) jb["attributes"] = b.attributes;
    buses.push_back(jb);
  }
  json branches = json::array();
  for (const auto& br : g.branches) {
    branches.push_back({{"id", br.id},
                        {"from", g.buses[br.from].id},
                        {"to", g.buses[br.to].id},
                        {"length_m", br.length_m},
                        {"z_ohm", mat_json(br.z_ohm)},
                        {"standard_type", br.standard_type},
                        {"kind", br.kind == BranchKind::line ? "line" : "transformer"},
                        {"geometry", xy_list(br.geometry)}});
  }
  return {{"buses", buses},
          {"branches", branches},
          {"transformer", to_json(g.transformer)},
          {"base", to_json(g.base)}};
}

NetworkGraph graph_from_json(const json& doc) {
  std::vector<Bus> buses;
  std::map<std::string, std::size_t> index;
  for (const auto& jb : doc.at("buses")) {
    Bus b;
    b.id = jb.at("id").get<std::string>();
    b.pos = {jb.at("x").get<double>(), jb.at("y").get<double>()};
    b.role = gis::parse_role(jb.at("role").get<std::string>());
    b.is_source = jb.value("is_source", false);
    if (jb.contains("attributes")) b.attributes = jb["attributes"].get<gis::Attributes>();
    index[b.id] = buses.size();
    buses.push_back(std::move(b));
  }
  std::vector<Branch> branches;
  for (const auto& jb : doc.at("branches")) {
    Branch br;
    br.id = jb.at("id").get<std::string>();
    auto f = index.find(jb.at("from").get<std::string>());
    auto t = index.find(jb.at("to").get<std::string>());
    if (f == index.end() || t == index.end()) {
      throw ModelError("branch '" + br.id + "' references an unknown bus");
    }
    br.from = f->second;
    br.to = t->second;
    br.length_m = jb.value("length_m", 0.0);
    br.z_ohm = mat_from(jb.at("z_ohm"));
    br.standard_type = jb.value("standard_type", "");
    br.kind = jb.value("kind", "line") == "transformer" ? BranchKind::transformer
                                                         : BranchKind::line;
    for (const auto& c : jb.value("geometry", json::array())) {
      br.geometry.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    branches.push_back(std::move(br));
  }
  return assemble_graph(std::move(buses), std::move(branches),
                        transformer_from_json(doc.value("transformer", json::object())),
                        base_from_json(doc.value("base", json::object())));
}

json to_json(const Scenario& sc) {
  json loads = json::array();
  for (const auto& ld : sc.loads) {
    loads.push_back({{"bus", sc.graph->buses[ld.bus].id},
                     {"meter_id", ld.meter_id},
                     {"phase", std::string(to_string(ld.phase))},
                     {"pf", ld.pf}});
  }
  json profiles = json::array();
  for (std::size_t k = 0; k < sc.loads.size(); ++k) {
    json row = json::array();
    for (std::size_t t = 0; t < sc.intervals; ++t) row.push_back(sc.p(k, t));
    profiles.push_back(row);
  }
  return {{"start", meter::format_timestamp(sc.start)},
          {"intervals", sc.intervals},
          {"loads", loads},
          {"p_w", profiles}};
}

Scenario scenario_from_json(std::shared_ptr<const NetworkGraph> graph, const json& doc) {
  Scenario sc;
  sc.graph = graph;
  sc.start = meter::parse_timestamp(doc.at("start").get<std::string>());
  sc.intervals = doc.at("intervals").get<std::size_t>();
  for (const auto& jl : doc.at("loads")) {
    LoadConnection ld;
    ld.bus = graph->index_of(jl.at("bus").get<std::string>());
    ld.meter_id = jl.at("meter_id").get<std::string>();
    ld.phase = parse_phase(jl.at("phase").get<std::string>());
    ld.pf = jl.at("pf").get<double>();
    sc.loads.push_back(std::move(ld));
  }
  const auto& prof = doc.at("p_w");
  if (prof.size() != sc.loads.size()) throw ModelError("profile count does not match loads");
  sc.p_w.assign(sc.intervals * sc.loads.size(), 0.0);
  for (std::size_t k = 0; k < sc.loads.size(); ++k) {
    if (prof[k].size() != sc.intervals) throw ModelError("profile length mismatch");
    for (std::size_t t = 0; t < sc.intervals; ++t) {
      sc.p_w[t * sc.loads.size() + k] = prof[k][t].get<double>();
    }
  }
  return sc;
}

PhaseMap read_phase_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open phase map '" + path.string() + "'");
  PhaseMap map;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ModelError("malformed phase map line '" + line + "'");
    map[line.substr(0, comma)] = parse_phase(line.substr(comma + 1));
  }
  return map;
}

void write_bundle(const std::filesystem::path& dir, const Scenario& scenario) {
  io::write_json_file(dir / "graph.json", to_json(*scenario.graph));
  io::write_json_file(dir / "scenario.json", to_json(scenario));
}

Scenario read_bundle(const std::filesystem::path& dir) {
  auto graph = std::make_shared<const NetworkGraph>(
      graph_from_json(io::read_json_file(dir / "graph.json")));
  return scenario_from_json(graph, io::read_json_file(dir / "scenario.json"));
}

}  // namespace lvpq::network
