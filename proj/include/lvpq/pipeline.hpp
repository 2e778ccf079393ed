#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lvpq/gis.hpp"
#include "lvpq/meter.hpp"
#include "lvpq/network.hpp"
#include "lvpq/solver.hpp"

namespace lvpq::pipeline {

enum class Indicator { vmag, vuf, thdu };
inline constexpr std::array<Indicator, 3> kIndicators = {Indicator::vmag, Indicator::vuf,
                                                         Indicator::thdu};
std::string_view to_string(Indicator indicator);

/// Node-level value of an indicator: mean phase |V|, VUF, mean phase THDu.
double indicator_value(const solver::PQCell& cell, Indicator indicator);

inline constexpr double kDefaultEpsilon = 1e-9;

/// 100 (scenario - base) / base; NaN when |base| < epsilon or either side
/// is not finite.
double relative_change_pct(double base, double scenario, double epsilon = kDefaultEpsilon);

struct ChangeMap {
  std::vector<std::string> node_ids;
  std::size_t intervals = 0;
  double epsilon = kDefaultEpsilon;
  std::array<std::vector<double>, 3> delta_pct;           // [t * nodes + node], NaN = undefined
  std::array<std::vector<double>, 3> mean_pct;            // per node, NaN when nothing defined
  std::array<std::vector<std::size_t>, 3> undefined;      // per node

  std::size_t nodes() const { return node_ids.size(); }
  double delta(Indicator k, std::size_t node, std::size_t t) const {
    return delta_pct[static_cast<int>(k)][t * nodes() + node];
  }
  double mean(Indicator k, std::size_t node) const {
    return mean_pct[static_cast<int>(k)][node];
  }
};

ChangeMap compute_change_map(const solver::PQSeries& base, const solver::PQSeries& scenario,
                             double epsilon = kDefaultEpsilon);

struct IndicatorStats {
  double max_increase = 0.0;
  double max_decrease = 0.0;  // the minimum change
  double mean = 0.0;
  double median = 0.0;
  std::size_t cells = 0;
};

/// nullopt for an empty set. Non-finite values are ignored.
std::optional<IndicatorStats> summarize_values(std::vector<double> values);

struct SummaryStats {
  std::array<std::optional<IndicatorStats>, 3> cells;       // over defined (node, interval) cells
  std::array<std::optional<IndicatorStats>, 3> node_means;  // over per-node averages

  const std::optional<IndicatorStats>& operator[](Indicator k) const {
    return cells[static_cast<int>(k)];
  }
};

SummaryStats summarize(const ChangeMap& change);

nlohmann::json to_json(const SummaryStats& stats);

/// Point per bus (node_id, role, d_vmag, d_vuf, d_thdu as % averages; a
/// missing value is null with a <name>_reason string) and LineString per
/// branch (branch_id, from, to, kind, standard_type, length_m).
nlohmann::json export_geojson(const network::NetworkGraph& graph, const ChangeMap& change);

/// Per-node averages read back from export_geojson output.
std::map<std::string, std::array<std::optional<double>, 3>> parse_change_geojson(
    const nlohmann::json& fc);

struct ScenarioConfig {
  std::filesystem::path points;
  std::filesystem::path lines;
  gis::RepairConfig repair;
  std::filesystem::path meters_pre;
  std::optional<std::filesystem::path> meters_hard;
  std::optional<std::filesystem::path> meters_post;
  std::optional<std::filesystem::path> phase_map;
  meter::CleaningConfig cleaning;
  network::BaseValues base;
  network::TransformerModel transformer;
  LineCatalog catalog = default_catalog();
  network::PowerFactorRange pf_range;
  solver::SolverConfig solver;
  bool timeshift_enabled = true;
  std::string timeshift_period = "hard";
  std::size_t timeshift_per_day = 10;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

/// Relative paths resolve against base_dir (the config file's directory).
ScenarioConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ScenarioConfig load_config(const std::filesystem::path& path);

struct Artifact {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunResult {
  std::filesystem::path output_dir;
  std::vector<Artifact> artifacts;  // sorted by path, manifest itself excluded
  std::map<std::string, solver::PQSeries> series;
  std::map<std::string, ChangeMap> changes;
  std::map<std::string, SummaryStats> summaries;
};

/// repair -> clean -> model -> simulate -> shift -> simulate -> report.
/// Any failure is rethrown as PipelineError naming the stage; files already
/// written stay on disk.
RunResult run_scenario(const ScenarioConfig& config);

nlohmann::json manifest_json(const std::vector<Artifact>& artifacts);

}  // namespace lvpq::pipeline
