#include "lvpq/gis_io.hpp"

#include "lvpq/error.hpp"

namespace lvpq::gis {

using nlohmann::json;

namespace {

const json& features_of(const json& fc) {
  if (!fc.is_object() || fc.value("type", "") != "FeatureCollection" ||
      !fc.contains("features") || !fc["features"].is_array()) {
    throw GisError("expected a GeoJSON FeatureCollection");
  }
  return fc["features"];
}

XY xy_of(const json& coord) {
  if (!coord.is_array() || coord.size() < 2) throw GisError("malformed coordinate");
  return XY{coord[0].get<double>(), coord[1].get<double>()};
}

Attributes attributes_of(const json& props) {
  Attributes out;
  if (!props.contains("attributes") || props["attributes"].is_null()) return out;
  for (const auto& [k, v] : props["attributes"].items()) {
    out[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return out;
}

std::string id_of(const json& props) {
  const auto& id = props.at("id");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

std::optional<std::string> optional_string(const json& props, const char* key) {
  if (!props.contains(key) || props[key].is_null()) return std::nullopt;
  auto s = props[key].get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

json coords_of(const std::vector<XY>& vertices) {
  json arr = json::array();
  for (const auto& v : vertices) arr.push_back({v.x, v.y});
  return arr;
}

}  // namespace

std::vector<GeoPoint> points_from_geojson(const json& fc) {
  std::vector<GeoPoint> out;
  for (const auto& f : features_of(fc)) {
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Point") throw GisError("points layer holds a non-Point feature");
    const auto& props = f.at("properties");
    GeoPoint p;
    p.id = id_of(props);
    p.pos = xy_of(geom.at("coordinates"));
    p.role = parse_role(props.at("role").get<std::string>());
    p.attributes = attributes_of(props);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PolyLine> lines_from_geojson(const json& fc) {
  std::vector<PolyLine> out;
  for (const auto& f : features_of(fc)) {
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "LineString") {
      throw GisError("lines layer holds a non-LineString feature");
    }
    const auto& props = f.at("properties");
    PolyLine l;
    l.id = id_of(props);
    for (const auto& c : geom.at("coordinates")) l.vertices.push_back(xy_of(c));
    l.standard_type = optional_string(props, "standard_type");
    l.from_node = optional_string(props, "from_node");
    l.to_node = optional_string(props, "to_node");
    l.attributes = attributes_of(props);
    out.push_back(std::move(l));
  }
  return out;
}

json points_to_geojson(std::span<const GeoPoint> points) {
  json features = json::array();
  for (const auto& p : points) {
    json props = {{"id", p.id}, {"role", std::string(to_string(p.role))}};
    if (!p.attributes.empty()) props["attributes"] = p.attributes;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {p.pos.x, p.pos.y}}}},
                        {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json segments_to_geojson(std::span<const LineSegment> segments) {
  json features = json::array();
  for (const auto& s : segments) {
    json props = {{"id", s.id}};
    props["standard_type"] = s.standard_type.empty() ? json(nullptr) : json(s.standard_type);
    props["from_node"] = s.from_node ? json(*s.from_node) : json(nullptr);
    props["to_node"] = s.to_node ? json(*s.to_node) : json(nullptr);
    if (!s.attributes.empty()) props["attributes"] = s.attributes;
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "LineString"}, {"coordinates", coords_of(s.vertices)}}},
         {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

json report_to_json(const TopologyReport& report) {
  json classes = json::object();
  for (std::size_t i = 0; i < kErrorClassCount; ++i) {
    const auto& c = report.counts[i];
    classes[std::string(to_string(static_cast<ErrorClass>(i)))] = {
        {"found", c.found}, {"fixed", c.fixed}, {"unfixable", c.unfixable}};
  }
  return {{"classes", classes},
          {"virtual_nodes", report.virtual_nodes},
          {"deleted_points", report.deleted_points},
          {"merged_points", report.merged_points},
          {"warnings", report.warnings},
          {"no_changes", report.no_changes()}};
}

}  // namespace lvpq::gis
