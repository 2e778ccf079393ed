#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "lvpq/gis.hpp"

namespace lvpq::gis {

// GeoJSON FeatureCollection <-> layer conversion.
//   points: Point features, properties {id, role, attributes{...}}
//   lines:  LineString features, properties {id, standard_type, from_node?,
//           to_node?, attributes{...}}

std::vector<GeoPoint> points_from_geojson(const nlohmann::json& fc);
std::vector<PolyLine> lines_from_geojson(const nlohmann::json& fc);

nlohmann::json points_to_geojson(std::span<const GeoPoint> points);
nlohmann::json segments_to_geojson(std::span<const LineSegment> segments);
nlohmann::json report_to_json(const TopologyReport& report);

}  // namespace lvpq::gis
