#pragma once

#include <filesystem>
#include <memory>

#include <json.hpp>

#include "lvpq/network.hpp"

namespace lvpq::network {

nlohmann::json to_json(const LineCatalog& catalog);
LineCatalog catalog_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const TransformerModel& t);
TransformerModel transformer_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const BaseValues& b);
BaseValues base_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const NetworkGraph& graph);
NetworkGraph graph_from_json(const nlohmann::json& doc);

/// Connections, power factors and the active power table.
nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(std::shared_ptr<const NetworkGraph> graph, const nlohmann::json& doc);

/// CSV with header meter_id,phase.
PhaseMap read_phase_map(const std::filesystem::path& path);

/// Model bundle: a directory holding graph.json and scenario.json.
void write_bundle(const std::filesystem::path& dir, const Scenario& scenario);
Scenario read_bundle(const std::filesystem::path& dir);

}  // namespace lvpq::network
