#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lvpq/error.hpp"
#include "lvpq/fixtures.hpp"
#include "lvpq/gis_io.hpp"
#include "lvpq/io.hpp"
#include "lvpq/meter_io.hpp"
#include "lvpq/network_io.hpp"
#include "lvpq/pipeline.hpp"
#include "lvpq/solver_io.hpp"
#include "lvpq/timeshift.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lvpq;

namespace {

gis::RepairResult repair_files(const fs::path& points, const fs::path& lines,
                               const LineCatalog& catalog, const gis::RepairConfig& cfg) {
  auto p = gis::points_from_geojson(io::read_json_file(points));
  auto l = gis::lines_from_geojson(io::read_json_file(lines));
  return gis::repair(std::move(p), l, catalog, cfg);
}

json optional_json(const std::string& path) {
  return path.empty() ? json::object() : io::read_json_file(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LV feeder power-quality toolkit"};
  app.require_subcommand(1);

  std::string points, lines, meters, config, out, phase_map, model, pre, cur, profiles, base,
      scenario;
  double tol = 0.01, radius = 1.0;
  std::uint64_t seed = 1;

  auto* repair = app.add_subcommand("repair", "Repair raw GIS layers");
  repair->add_option("--points", points, "Point layer (GeoJSON)")->required();
  repair->add_option("--lines", lines, "Line layer (GeoJSON)")->required();
  repair->add_option("--tol", tol, "Coordinate equality tolerance, m");
  repair->add_option("--radius", radius, "Substation/cabinet snapping radius, m");
  repair->add_option("--out", out, "Output directory")->required();

  auto* clean = app.add_subcommand("clean", "Clean smart-meter series");
  clean->add_option("--meters", meters, "Meter CSV")->required();
  clean->add_option("--config", config, "Cleaning config (JSON)");
  clean->add_option("--out", out, "Output directory")->required();

  auto* model_cmd = app.add_subcommand("model", "Build the three-phase model bundle");
  model_cmd->add_option("--points", points, "Point layer (GeoJSON)")->required();
  model_cmd->add_option("--lines", lines, "Line layer (GeoJSON)")->required();
  model_cmd->add_option("--meters", meters, "Cleaned meter CSV")->required();
  model_cmd->add_option("--phase-map", phase_map, "CSV meter_id,phase");
  model_cmd->add_option("--config", config, "Model config: {base, transformer, catalog, pf_range}");
  model_cmd->add_option("--seed", seed, "Seed for power factor draws");
  model_cmd->add_option("--out", out, "Bundle directory")->required();

  auto* simulate = app.add_subcommand("simulate", "Quasi-static PQ time series");
  simulate->add_option("--model", model, "Bundle directory")->required();
  simulate->add_option("--config", config, "Solver config (JSON)");
  simulate->add_option("--out", out, "PQ series CSV")->required();

  auto* shift = app.add_subcommand("shift", "Time-shift the demand surplus");
  shift->add_option("--pre", pre, "Reference-period meter CSV")->required();
  shift->add_option("--cur", cur, "Current-period meter CSV")->required();
  shift->add_option("--profiles", profiles, "Per-user profiles to shift (meter CSV)")->required();
  shift->add_option("--out", out, "Output directory")->required();
  std::size_t per_day = timeshift::kDefaultPerDay;
  shift->add_option("--per-day", per_day, "Detected intervals per day");

  auto* report = app.add_subcommand("report", "Change map and summary between two PQ series");
  report->add_option("--base", base, "Base PQ series CSV")->required();
  report->add_option("--scenario", scenario, "Scenario PQ series CSV")->required();
  report->add_option("--model", model, "Bundle directory (for geometry)")->required();
  report->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Full chain from a scenario config");
  run->add_option("--config", config, "Scenario config (JSON)")->required();

  auto* synth = app.add_subcommand("synth", "Write the synthetic feeder case");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*repair) {
      auto res = repair_files(points, lines, default_catalog(), {tol, radius});
      io::write_json_file(fs::path(out) / "points.geojson", gis::points_to_geojson(res.layers.points));
      io::write_json_file(fs::path(out) / "lines.geojson",
                          gis::segments_to_geojson(res.layers.segments));
      io::write_json_file(fs::path(out) / "topology_report.json", gis::report_to_json(res.report));
      std::cout << res.layers.points.size() << " points, " << res.layers.segments.size()
                << " segments\n";
    } else if (*clean) {
      auto cfg = meter::cleaning_config_from_json(optional_json(config));
      auto series = meter::load_meter_csv(meters);
      auto res = meter::clean_meters(series, cfg);
      io::write_text_file(fs::path(out) / "cleaned.csv", meter::meter_csv(res.series));
      io::write_text_file(fs::path(out) / "cleaning_log.jsonl", meter::cleaning_log_jsonl(res.log));
      std::cout << res.series.size() << " meters, " << res.log.size() << " log entries, "
                << res.substitutions.size() << " substituted\n";
    } else if (*model_cmd) {
      const json cfg = optional_json(config);
      auto catalog = cfg.contains("catalog") ? network::catalog_from_json(cfg["catalog"])
                                             : default_catalog();
      auto res = repair_files(points, lines, catalog, {});
      auto graph = std::make_shared<const network::NetworkGraph>(network::build_graph(
          res.layers.points, res.layers.segments, catalog,
          cfg.contains("transformer") ? network::transformer_from_json(cfg["transformer"])
                                      : network::TransformerModel{},
          cfg.contains("base") ? network::base_from_json(cfg["base"]) : network::BaseValues{}));
      network::PowerFactorRange pf;
      if (cfg.contains("pf_range")) {
        pf.low = cfg["pf_range"].at(0).get<double>();
        pf.high = cfg["pf_range"].at(1).get<double>();
      }
      network::PhaseMap phases;
      if (!phase_map.empty()) phases = network::read_phase_map(phase_map);
      auto sc = network::attach_loads(graph, meter::load_meter_csv(meters), pf, phases, seed);
      network::write_bundle(out, sc);
      std::cout << graph->buses.size() << " buses, " << graph->branches.size() << " branches, "
                << sc.loads.size() << " loads\n";
    } else if (*simulate) {
      auto sc = network::read_bundle(model);
      auto cfg = solver::solver_config_from_json(optional_json(config));
      auto pq = solver::run_timeseries(sc, cfg);
      io::write_text_file(out, solver::pq_csv(pq));
      std::cout << pq.intervals << " intervals, " << pq.violations() << " violating cells\n";
    } else if (*shift) {
      auto p = meter::load_meter_csv(pre);
      auto c = meter::load_meter_csv(cur);
      auto users = meter::load_meter_csv(profiles);
      auto outcome = timeshift::plan_time_shift(meter::aggregate(p), meter::aggregate(c), per_day);
      auto shifted = timeshift::apply_plan(users, outcome.plan, &outcome.plan.log);
      io::write_json_file(fs::path(out) / "plan.json", timeshift::to_json(outcome.plan));
      io::write_text_file(fs::path(out) / "shifted.csv", meter::meter_csv(shifted));
      std::cout << outcome.plan.entries.size() << " moves\n";
    } else if (*report) {
      auto sc = network::read_bundle(model);
      auto change = pipeline::compute_change_map(solver::read_pq_csv(base),
                                                 solver::read_pq_csv(scenario));
      io::write_json_file(fs::path(out) / "change.geojson",
                          pipeline::export_geojson(*sc.graph, change));
      io::write_json_file(fs::path(out) / "summary.json",
                          pipeline::to_json(pipeline::summarize(change)));
    } else if (*run) {
      auto res = pipeline::run_scenario(pipeline::load_config(config));
      for (const auto& [name, stats] : res.summaries) {
        std::cout << name << ":";
        for (auto k : pipeline::kIndicators) {
          if (const auto& s = stats[k]) {
            std::cout << ' ' << pipeline::to_string(k) << " median " << s->median << " mean "
                      << s->mean;
          }
        }
        std::cout << '\n';
      }
      std::cout << res.artifacts.size() << " artifacts in " << res.output_dir.string() << '\n';
    } else if (*synth) {
      fixtures::write_synthetic_case(out, seed);
      std::cout << "wrote " << out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
