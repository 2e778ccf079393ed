#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvpq/catalog.hpp"

namespace lvpq::gis {

struct XY {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const XY&, const XY&) = default;
  friend auto operator<=>(const XY&, const XY&) = default;
};

double distance(const XY& a, const XY& b);

enum class Role { substation, switch_cabinet, consumer, connection_point, virtual_node };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);

using Attributes = std::map<std::string, std::string>;

struct GeoPoint {
  std::string id;
  XY pos;
  Role role = Role::consumer;
  Attributes attributes;
};

/// Raw line object as digitized. from/to are only present when the layer
/// has already been through a repair pass.
struct PolyLine {
  std::string id;
  std::vector<XY> vertices;
  Attributes attributes;
  std::optional<std::string> standard_type;
  std::optional<std::string> from_node;
  std::optional<std::string> to_node;
};

struct LineSegment {
  std::string id;
  std::vector<XY> vertices;
  std::optional<std::string> from_node;
  std::optional<std::string> to_node;
  std::string standard_type;  // empty when unknown
  Attributes attributes;

  double length() const;
};

enum class ErrorClass : std::size_t {
  polyline_continuity = 0,
  unknown_endpoint,
  substation_disconnection,
  switch_cabinet_disconnection,
  unknown_attributes,
  missing_end_node,
  redundant_points,
};

inline constexpr std::size_t kErrorClassCount = 7;
std::string_view to_string(ErrorClass cls);

struct ClassCount {
  std::size_t found = 0;
  std::size_t fixed = 0;
  std::size_t unfixable = 0;
};

struct TopologyReport {
  std::array<ClassCount, kErrorClassCount> counts{};
  std::vector<std::string> virtual_nodes;
  std::vector<std::string> deleted_points;
  std::vector<std::string> merged_points;
  std::vector<std::string> warnings;

  ClassCount& operator[](ErrorClass cls) { return counts[static_cast<std::size_t>(cls)]; }
  const ClassCount& operator[](ErrorClass cls) const {
    return counts[static_cast<std::size_t>(cls)];
  }
  /// True when no error class was found and nothing was created or removed.
  bool no_changes() const;
};

struct RepairConfig {
  double tol = 0.01;    // coordinate-equality tolerance, m
  double radius = 1.0;  // substation / cabinet snapping radius, m
};

struct Layers {
  std::vector<GeoPoint> points;
  std::vector<LineSegment> segments;
};

struct RepairResult {
  Layers layers;
  TopologyReport report;
};

// Individual stages, in the order repair() applies them.

/// Collapses points of equal role that coincide within tol into the first one.
std::vector<GeoPoint> merge_duplicate_points(std::vector<GeoPoint> points, double tol,
                                             TopologyReport* report = nullptr);

/// Breaks every polyline at interior vertices that coincide with a connection
/// point. Polylines are independent, so the loop runs in parallel when OpenMP
/// is enabled.
std::vector<LineSegment> split_polylines(std::span<const PolyLine> lines,
                                         std::span<const GeoPoint> points, double tol,
                                         TopologyReport* report = nullptr);

/// Serial reference for split_polylines.
std::vector<LineSegment> split_polylines_serial(std::span<const PolyLine> lines,
                                                std::span<const GeoPoint> points, double tol,
                                                TopologyReport* report = nullptr);

void assign_endpoints(std::vector<LineSegment>& segments, std::span<const GeoPoint> points,
                      double tol, TopologyReport* report = nullptr);

void snap_point_to_segments(std::span<const GeoPoint> points,
                            std::vector<LineSegment>& segments, double radius,
                            TopologyReport* report = nullptr);

std::vector<GeoPoint> insert_virtual_nodes(std::vector<LineSegment>& segments,
                                           TopologyReport* report = nullptr);

/// Removes consumer/connection points no segment references. Returns the
/// removed ids. Unreferenced substations and cabinets are kept with a warning.
std::vector<std::string> delete_disconnected_points(std::vector<GeoPoint>& points,
                                                    std::span<const LineSegment> segments,
                                                    TopologyReport* report = nullptr);

/// Gives every segment without a known standard type the modal known type.
/// Ties go to the lexicographically smallest key.
void fill_default_attributes(std::vector<LineSegment>& segments, const LineCatalog& catalog,
                             TopologyReport* report = nullptr);

/// Full repair: dedupe -> split -> endpoint equality -> snap -> virtual
/// nodes -> delete orphans -> default attributes.
RepairResult repair(std::vector<GeoPoint> points, std::span<const PolyLine> lines,
                    const LineCatalog& catalog, const RepairConfig& config = {});

/// Converts repaired segments back into polylines (for a second pass).
std::vector<PolyLine> to_polylines(std::span<const LineSegment> segments);

}  // namespace lvpq::gis
