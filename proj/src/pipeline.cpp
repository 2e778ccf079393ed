#include "lvpq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "lvpq/error.hpp"
#include "lvpq/gis_io.hpp"
#include "lvpq/io.hpp"
#include "lvpq/meter_io.hpp"
#include "lvpq/network_io.hpp"
#include "lvpq/solver_io.hpp"
#include "lvpq/timeshift.hpp"

namespace lvpq::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<const char*, 3> kPropertyNames = {"d_vmag", "d_vuf", "d_thdu"};

}  // namespace

std::string_view to_string(Indicator indicator) {
  switch (indicator) {
    case Indicator::vmag: return "vmag";
    case Indicator::vuf: return "vuf";
    case Indicator::thdu: return "thdu";
  }
  return "?";
}

double indicator_value(const solver::PQCell& cell, Indicator indicator) {
  switch (indicator) {
    case Indicator::vmag: return solver::mean_vmag(cell);
    case Indicator::vuf: return cell.vuf;
    case Indicator::thdu: return solver::mean_thd(cell);
  }
  return kNaN;
}

double relative_change_pct(double base, double scenario, double epsilon) {
  if (!std::isfinite(base) || !std::isfinite(scenario) || std::abs(base) < epsilon) return kNaN;
  return 100.0 * (scenario - base) / base;
}

ChangeMap compute_change_map(const solver::PQSeries& base, const solver::PQSeries& scenario,
                             double epsilon) {
  if (base.node_ids != scenario.node_ids || base.intervals != scenario.intervals) {
    throw Error("change map needs two series over the same nodes and intervals");
  }
  ChangeMap m;
  m.node_ids = base.node_ids;
  m.intervals = base.intervals;
  m.epsilon = epsilon;
  const std::size_t n = m.nodes();
  for (auto k : kIndicators) {
    const int ki = static_cast<int>(k);
    auto& d = m.delta_pct[ki];
    d.assign(n * m.intervals, kNaN);
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> defined(n, 0);
    m.undefined[ki].assign(n, 0);
    for (std::size_t t = 0; t < m.intervals; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double v = relative_change_pct(indicator_value(base.at(i, t), k),
                                             indicator_value(scenario.at(i, t), k), epsilon);
        d[t * n + i] = v;
        if (std::isnan(v)) {
          m.undefined[ki][i]++;
        } else {
          sum[i] += v;
          defined[i]++;
        }
      }
    }
    m.mean_pct[ki].assign(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
      if (defined[i] > 0) m.mean_pct[ki][i] = sum[i] / static_cast<double>(defined[i]);
    }
  }
  return m;
}

std::optional<IndicatorStats> summarize_values(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  IndicatorStats s;
  s.cells = values.size();
  s.max_decrease = values.front();
  s.max_increase = values.back();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

SummaryStats summarize(const ChangeMap& change) {
  SummaryStats s;
  for (int k = 0; k < 3; ++k) {
    s.cells[k] = summarize_values(change.delta_pct[k]);
    s.node_means[k] = summarize_values(change.mean_pct[k]);
  }
  return s;
}

json to_json(const SummaryStats& stats) {
  auto one = [](const std::optional<IndicatorStats>& s) -> json {
    if (!s) return nullptr;
    return {{"max_increase_pct", s->max_increase},
            {"max_decrease_pct", s->max_decrease},
            {"mean_change_pct", s->mean},
            {"median_change_pct", s->median},
            {"cells", s->cells}};
  };
  json cells = json::object();
  json nodes = json::object();
  for (auto k : kIndicators) {
    cells[std::string(to_string(k))] = one(stats.cells[static_cast<int>(k)]);
    nodes[std::string(to_string(k))] = one(stats.node_means[static_cast<int>(k)]);
  }
  return {{"cells", cells}, {"node_averages", nodes}};
}

json export_geojson(const network::NetworkGraph& graph, const ChangeMap& change) {
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < change.nodes(); ++i) row[change.node_ids[i]] = i;

  json features = json::array();
  for (const auto& bus : graph.buses) {
    json props = {{"node_id", bus.id},
                  {"role", bus.is_source ? "source" : std::string(gis::to_string(bus.role))}};
    auto it = row.find(bus.id);
    for (int k = 0; k < 3; ++k) {
      const std::string name = kPropertyNames[k];
      if (it == row.end()) {
        props[name] = nullptr;
        props[name + "_reason"] = "node not in change map";
      } else if (double v = change.mean_pct[k][it->second]; std::isfinite(v)) {
        props[name] = v;
      } else {
        props[name] = nullptr;
        props[name + "_reason"] = "base below epsilon in every interval";
      }
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {bus.pos.x, bus.pos.y}}}},
                        {"properties", props}});
  }
  for (const auto& br : graph.branches) {
    json coords = json::array();
    if (br.geometry.size() >= 2) {
      for (const auto& v : br.geometry) coords.push_back({v.x, v.y});
    } else {
      const auto& a = graph.buses[br.from].pos;
      const auto& b = graph.buses[br.to].pos;
      coords = {{a.x, a.y}, {b.x, b.y}};
    }
    json props = {{"branch_id", br.id},
                  {"from", graph.buses[br.from].id},
                  {"to", graph.buses[br.to].id},
                  {"kind", br.kind == network::BranchKind::transformer ? "transformer" : "line"},
                  {"standard_type", br.standard_type},
                  {"length_m", br.length_m}};
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

std::map<std::string, std::array<std::optional<double>, 3>> parse_change_geojson(const json& fc) {
  std::map<std::string, std::array<std::optional<double>, 3>> out;
  for (const auto& f : fc.at("features")) {
    if (f.at("geometry").at("type") != "Point") continue;
    const auto& p = f.at("properties");
    auto& slot = out[p.at("node_id").get<std::string>()];
    for (int k = 0; k < 3; ++k) {
      const auto& v = p.at(kPropertyNames[k]);
      if (!v.is_null()) slot[k] = v.get<double>();
    }
  }
  return out;
}

void ScenarioConfig::validate() const {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty() || !fs::exists(p)) {
      throw Error(std::string(what) + " not found: '" + p.string() + "'");
    }
  };
  need(points, "points layer");
  need(lines, "lines layer");
  need(meters_pre, "pre-period meter file");
  if (meters_hard) need(*meters_hard, "hard-period meter file");
  if (meters_post) need(*meters_post, "post-period meter file");
  if (phase_map) need(*phase_map, "phase map");
  if (timeshift_enabled && timeshift_period != "hard" && timeshift_period != "post") {
    throw Error("timeshift.period must be 'hard' or 'post'");
  }
  if (timeshift_enabled && !(timeshift_period == "hard" ? meters_hard : meters_post)) {
    throw Error("timeshift enabled but the '" + timeshift_period + "' period has no meter file");
  }
  if (timeshift_per_day == 0) throw Error("timeshift.per_day must be positive");
  if (!(epsilon > 0.0)) throw Error("change.epsilon must be positive");
  cleaning.validate();
  transformer.validate();
}

ScenarioConfig config_from_json(const json& doc, const fs::path& base_dir) {
  auto resolve = [&](const json& v) {
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  ScenarioConfig c;
  const auto& layers = doc.at("layers");
  c.points = resolve(layers.at("points"));
  c.lines = resolve(layers.at("lines"));
  if (doc.contains("repair")) {
    c.repair.tol = doc["repair"].value("tol", c.repair.tol);
    c.repair.radius = doc["repair"].value("radius", c.repair.radius);
  }
  const auto& meters = doc.at("meters");
  c.meters_pre = resolve(meters.at("pre"));
  if (meters.contains("hard")) c.meters_hard = resolve(meters["hard"]);
  if (meters.contains("post")) c.meters_post = resolve(meters["post"]);
  if (doc.contains("phase_map")) c.phase_map = resolve(doc["phase_map"]);

  c.seed = doc.value("seed", c.seed);
  c.cleaning.rng_seed = c.seed;
  if (doc.contains("cleaning")) {
    json cl = doc["cleaning"];
    if (!cl.contains("rng_seed")) cl["rng_seed"] = c.seed;
    c.cleaning = meter::cleaning_config_from_json(cl);
  }
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    if (m.contains("base")) c.base = network::base_from_json(m["base"]);
    if (m.contains("transformer")) c.transformer = network::transformer_from_json(m["transformer"]);
    if (m.contains("catalog")) c.catalog = network::catalog_from_json(m["catalog"]);
    if (m.contains("pf_range")) {
      c.pf_range.low = m["pf_range"].at(0).get<double>();
      c.pf_range.high = m["pf_range"].at(1).get<double>();
    }
  }
  if (doc.contains("solver")) c.solver = solver::solver_config_from_json(doc["solver"]);
  if (doc.contains("timeshift")) {
    const auto& t = doc["timeshift"];
    c.timeshift_enabled = t.value("enabled", c.timeshift_enabled);
    c.timeshift_period = t.value("period", c.timeshift_period);
    c.timeshift_per_day = t.value("per_day", c.timeshift_per_day);
  }
  if (doc.contains("change")) c.epsilon = doc["change"].value("epsilon", c.epsilon);
  c.output_dir = resolve(json(doc.value("output_dir", std::string("out"))));
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  return config_from_json(io::read_json_file(path), path.parent_path());
}

json manifest_json(const std::vector<Artifact>& artifacts) {
  json arr = json::array();
  for (const auto& a : artifacts) {
    arr.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  return {{"artifacts", arr}};
}

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void text(const std::string& rel, const std::string& content) {
    io::write_text_file(root_ / rel, content);
    artifacts_.push_back({rel, io::sha256_hex(content), content.size()});
  }
  void json_doc(const std::string& rel, const json& doc) { text(rel, doc.dump(1) + "\n"); }

  std::vector<Artifact> sorted() const {
    auto out = artifacts_;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
  }

 private:
  fs::path root_;
  std::vector<Artifact> artifacts_;
};

template <class F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  RunResult result;
  result.output_dir = config.output_dir;
  ArtifactWriter out(config.output_dir);

  auto layers = stage("repair", [&] {
    auto points = gis::points_from_geojson(io::read_json_file(config.points));
    auto lines = gis::lines_from_geojson(io::read_json_file(config.lines));
    auto rep = gis::repair(std::move(points), lines, config.catalog, config.repair);
    out.json_doc("repaired/points.geojson", gis::points_to_geojson(rep.layers.points));
    out.json_doc("repaired/lines.geojson", gis::segments_to_geojson(rep.layers.segments));
    out.json_doc("repaired/topology_report.json", gis::report_to_json(rep.report));
    return rep.layers;
  });

  std::map<std::string, std::vector<meter::MeterSeries>> cleaned;
  stage("clean", [&] {
    std::vector<std::pair<std::string, fs::path>> periods = {{"pre", config.meters_pre}};
    if (config.meters_hard) periods.emplace_back("hard", *config.meters_hard);
    if (config.meters_post) periods.emplace_back("post", *config.meters_post);
    for (const auto& [name, path] : periods) {
      auto raw = meter::load_meter_csv(path);
      auto res = meter::clean_meters(raw, config.cleaning);
      out.text("cleaned/" + name + ".csv", meter::meter_csv(res.series));
      out.text("cleaned/" + name + "_log.jsonl", meter::cleaning_log_jsonl(res.log));
      cleaned[name] = std::move(res.series);
    }
    return 0;
  });

  std::map<std::string, network::Scenario> scenarios;
  std::shared_ptr<const network::NetworkGraph> graph;
  stage("model", [&] {
    graph = std::make_shared<const network::NetworkGraph>(network::build_graph(
        layers.points, layers.segments, config.catalog, config.transformer, config.base));
    network::PhaseMap phases;
    if (config.phase_map) phases = network::read_phase_map(*config.phase_map);
    auto pre = network::attach_loads(graph, cleaned.at("pre"), config.pf_range, phases, config.seed);
    for (const auto& [name, series] : cleaned) {
      if (name == "pre") continue;
      auto sc = network::with_profiles(pre, series);
      if (sc.intervals != pre.intervals) {
        throw ModelError("period '" + name + "' has " + std::to_string(sc.intervals) +
                         " intervals, pre has " + std::to_string(pre.intervals));
      }
      scenarios.emplace(name, std::move(sc));
    }
    out.json_doc("model/graph.json", network::to_json(*graph));
    out.json_doc("model/scenario_pre.json", network::to_json(pre));
    scenarios.emplace("pre", std::move(pre));
    return 0;
  });

  stage("simulate", [&] {
    for (const auto& [name, sc] : scenarios) {
      auto pq = solver::run_timeseries(sc, config.solver);
      out.text("pq/" + name + ".csv", solver::pq_csv(pq));
      result.series.emplace(name, std::move(pq));
    }
    return 0;
  });

  if (config.timeshift_enabled) {
    const std::string& period = config.timeshift_period;
    const std::string shifted_name = period + "_shifted";
    stage("shift", [&] {
      const auto& pre = cleaned.at("pre");
      const auto& cur = cleaned.at(period);
      auto outcome = timeshift::plan_time_shift(meter::aggregate(pre), meter::aggregate(cur),
                                                config.timeshift_per_day);
      auto profiles = timeshift::apply_plan(cur, outcome.plan, &outcome.plan.log);
      out.json_doc("shift/plan.json", timeshift::to_json(outcome.plan));
      out.text("shift/" + period + "_shifted_meters.csv", meter::meter_csv(profiles));
      scenarios.emplace(shifted_name, network::with_profiles(scenarios.at("pre"), profiles));
      return 0;
    });
    stage("simulate", [&] {
      auto pq = solver::run_timeseries(scenarios.at(shifted_name), config.solver);
      out.text("pq/" + shifted_name + ".csv", solver::pq_csv(pq));
      result.series.emplace(shifted_name, std::move(pq));
      return 0;
    });
  }

  stage("report", [&] {
    std::vector<std::tuple<std::string, std::string, std::string>> pairs;
    if (config.meters_hard) pairs.emplace_back("hard_vs_pre", "pre", "hard");
    if (config.meters_post) pairs.emplace_back("post_vs_pre", "pre", "post");
    if (config.timeshift_enabled) {
      pairs.emplace_back("shifted_vs_initial", config.timeshift_period,
                         config.timeshift_period + "_shifted");
    }
    json summary = json::object();
    for (const auto& [name, base, scen] : pairs) {
      auto change = compute_change_map(result.series.at(base), result.series.at(scen),
                                       config.epsilon);
      auto stats = summarize(change);
      out.json_doc("changes/" + name + ".geojson", export_geojson(*graph, change));
      summary[name] = to_json(stats);
      result.summaries.emplace(name, stats);
      result.changes.emplace(name, std::move(change));
    }
    json violations = json::object();
    for (const auto& [name, pq] : result.series) violations[name] = pq.violations();
    out.json_doc("summary.json", {{"changes", summary}, {"violations", violations}});
    return 0;
  });

  result.artifacts = out.sorted();
  stage("manifest", [&] {
    io::write_json_file(config.output_dir / "manifest.json", manifest_json(result.artifacts));
    return 0;
  });
  return result;
}

}  // namespace lvpq::pipeline
