#include "lvpq/solver_io.hpp"

#include <map>
#include <sstream>

#include "lvpq/error.hpp"
#include "lvpq/io.hpp"

namespace lvpq::solver {

using nlohmann::json;

std::string pq_csv(const PQSeries& s) {
  std::string out =
      "node_id,interval,va,vb,vc,vuf,thd_a,thd_b,thd_c,v_low,v_high,vuf_viol,thd_viol\n";
  auto num = [&](double v) {
    out += io::format_double(v);
    out += ',';
  };
  for (std::size_t n = 0; n < s.nodes(); ++n) {
    for (std::size_t t = 0; t < s.intervals; ++t) {
      const auto& c = s.at(n, t);
      out += s.node_ids[n];
      out += ',';
      out += std::to_string(t);
      out += ',';
      for (double v : c.vmag) num(v);
      num(c.vuf);
      for (double v : c.thd) num(v);
      out += (c.flags & kUnderVoltage) ? "1," : "0,";
      out += (c.flags & kOverVoltage) ? "1," : "0,";
      out += (c.flags & kVufViolation) ? "1," : "0,";
      out += (c.flags & kThdViolation) ? "1\n" : "0\n";
    }
  }
  return out;
}

PQSeries parse_pq_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("node_id,interval", 0) != 0) {
    throw SolverError("not a PQ series CSV");
  }
  struct Row {
    std::string node;
    std::size_t t;
    PQCell cell;
  };
  std::vector<Row> rows;
  std::vector<std::string> order;
  std::map<std::string, std::size_t> node_index;
  std::size_t max_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    if (f.size() != 13) throw SolverError("PQ CSV row has " + std::to_string(f.size()) + " fields");
    Row r;
    r.node = f[0];
    r.t = std::stoul(f[1]);
    for (int p = 0; p < 3; ++p) r.cell.vmag[p] = io::parse_double(f[2 + p]);
    r.cell.vuf = io::parse_double(f[5]);
    for (int p = 0; p < 3; ++p) r.cell.thd[p] = io::parse_double(f[6 + p]);
    r.cell.flags = static_cast<std::uint8_t>((f[9] == "1" ? kUnderVoltage : 0) |
                                             (f[10] == "1" ? kOverVoltage : 0) |
                                             (f[11] == "1" ? kVufViolation : 0) |
                                             (f[12] == "1" ? kThdViolation : 0));
    if (node_index.emplace(r.node, order.size()).second) order.push_back(r.node);
    max_t = std::max(max_t, r.t);
    rows.push_back(std::move(r));
  }
  PQSeries s;
  s.node_ids = order;
  s.intervals = rows.empty() ? 0 : max_t + 1;
  if (rows.size() != s.intervals * s.nodes()) throw SolverError("PQ CSV is not a full grid");
  s.cells.resize(rows.size());
  s.iterations.assign(s.intervals, 0);
  for (auto& r : rows) s.at(node_index[r.node], r.t) = r.cell;
  return s;
}

PQSeries read_pq_csv(const std::filesystem::path& path) {
  return parse_pq_csv(io::read_text_file(path));
}

namespace {

HarmonicSpectrum spectrum_from(const json& arr) {
  HarmonicSpectrum s;
  for (const auto& c : arr) {
    s.components.push_back({c.at("order").get<int>(), c.at("magnitude").get<double>(),
                            c.value("phase_deg", 0.0)});
  }
  s.validate();
  return s;
}

json spectrum_json(const HarmonicSpectrum& s) {
  json arr = json::array();
  for (const auto& c : s.components) {
    arr.push_back({{"order", c.order}, {"magnitude", c.magnitude}, {"phase_deg", c.phase_deg}});
  }
  return arr;
}

}  // namespace

SolverConfig solver_config_from_json(const json& doc) {
  SolverConfig c;
  c.fundamental.tol = doc.value("tol", c.fundamental.tol);
  c.fundamental.max_iter = doc.value("max_iter", c.fundamental.max_iter);
  if (doc.contains("orders")) c.orders = doc["orders"].get<std::vector<int>>();
  if (doc.contains("spectrum")) c.spectrum = spectrum_from(doc["spectrum"]);
  if (doc.contains("spectrum_by_meter")) {
    for (const auto& [id, arr] : doc["spectrum_by_meter"].items()) {
      c.spectrum_by_meter[id] = spectrum_from(arr);
    }
  }
  if (doc.contains("limits")) {
    const auto& l = doc["limits"];
    c.limits.v_min = l.value("v_min", c.limits.v_min);
    c.limits.v_max = l.value("v_max", c.limits.v_max);
    c.limits.vuf_max = l.value("vuf_max", c.limits.vuf_max);
    c.limits.thd_max = l.value("thd_max", c.limits.thd_max);
  }
  for (int h : c.orders) {
    if (h < 2) throw SolverError("harmonic orders must be >= 2", 0.0, h);
  }
  return c;
}

json to_json(const SolverConfig& c) {
  json by_meter = json::object();
  for (const auto& [id, s] : c.spectrum_by_meter) by_meter[id] = spectrum_json(s);
  return {{"tol", c.fundamental.tol},
          {"max_iter", c.fundamental.max_iter},
          {"orders", c.orders},
          {"spectrum", spectrum_json(c.spectrum)},
          {"spectrum_by_meter", by_meter},
          {"limits",
           {{"v_min", c.limits.v_min},
            {"v_max", c.limits.v_max},
            {"vuf_max", c.limits.vuf_max},
            {"thd_max", c.limits.thd_max}}}};
}

}  // namespace lvpq::solver
