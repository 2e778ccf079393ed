#include "lvpq/gis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "lvpq/error.hpp"

namespace lvpq::gis {

double distance(const XY& a, const XY& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(Role role) {
  switch (role) {
    case Role::substation: return "substation";
    case Role::switch_cabinet: return "switch_cabinet";
    case Role::consumer: return "consumer";
    case Role::connection_point: return "connection_point";
    case Role::virtual_node: return "virtual_node";
  }
  return "unknown";
}

Role parse_role(std::string_view text) {
  for (Role r : {Role::substation, Role::switch_cabinet, Role::consumer, Role::connection_point,
                 Role::virtual_node}) {
    if (to_string(r) == text) return r;
  }
  throw GisError("unknown point role '" + std::string(text) + "'");
}

std::string_view to_string(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::polyline_continuity: return "polyline_continuity";
    case ErrorClass::unknown_endpoint: return "unknown_endpoint";
    case ErrorClass::substation_disconnection: return "substation_disconnection";
    case ErrorClass::switch_cabinet_disconnection: return "switch_cabinet_disconnection";
    case ErrorClass::unknown_attributes: return "unknown_attributes";
    case ErrorClass::missing_end_node: return "missing_end_node";
    case ErrorClass::redundant_points: return "redundant_points";
  }
  return "unknown";
}

double LineSegment::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) total += distance(vertices[i - 1], vertices[i]);
  return total;
}

bool TopologyReport::no_changes() const {
  for (const auto& c : counts) {
    if (c.found != 0 || c.fixed != 0 || c.unfixable != 0) return false;
  }
  return virtual_nodes.empty() && deleted_points.empty() && merged_points.empty();
}

namespace {

/// Uniform-grid lookup of points by coordinate.
class PointGrid {
 public:
  PointGrid(std::span<const GeoPoint> points, double cell) : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i].pos)].push_back(i);
  }

  /// Indices of points within radius of p, in input order.
  std::vector<std::size_t> within(const XY& p, double radius) const {
    std::vector<std::size_t> out;
    const auto span = static_cast<long long>(std::ceil(radius / cell_));
    const auto [cx, cy] = coords(p);
    for (long long dx = -span; dx <= span; ++dx) {
      for (long long dy = -span; dy <= span; ++dy) {
        auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t i : it->second) {
          if (distance(points_[i].pos, p) <= radius) out.push_back(i);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::pair<long long, long long> coords(const XY& p) const {
    return {static_cast<long long>(std::floor(p.x / cell_)),
            static_cast<long long>(std::floor(p.y / cell_))};
  }
  static long long pack(long long x, long long y) { return (x << 32) ^ (y & 0xffffffffLL); }
  long long key(const XY& p) const {
    auto [x, y] = coords(p);
    return pack(x, y);
  }

  std::span<const GeoPoint> points_;
  double cell_;
  std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

void check_finite(const GeoPoint& p) {
  if (!std::isfinite(p.pos.x) || !std::isfinite(p.pos.y)) {
    throw GisError("point '" + p.id + "' has non-finite coordinates");
  }
}

std::size_t distinct_vertices(const std::vector<XY>& v, double tol) {
  std::size_t n = v.empty() ? 0 : 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    bool seen = false;
    for (std::size_t j = 0; j < i && !seen; ++j) seen = distance(v[i], v[j]) <= tol;
    if (!seen) ++n;
  }
  return n;
}

struct SplitOutcome {
  std::vector<LineSegment> segments;
  bool split = false;
};

SplitOutcome split_one(const PolyLine& line, const PointGrid& connections, double tol) {
  if (distinct_vertices(line.vertices, tol) < 2) {
    throw GisError("polyline '" + line.id + "' is degenerate: fewer than 2 distinct vertices");
  }
  for (const auto& v : line.vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw GisError("polyline '" + line.id + "' has non-finite coordinates");
    }
  }

  std::vector<std::size_t> cuts;
  std::size_t last_cut = 0;
  for (std::size_t i = 1; i + 1 < line.vertices.size(); ++i) {
    if (connections.within(line.vertices[i], tol).empty()) continue;
    // A cut must leave at least one non-zero-length piece on either side.
    if (distance(line.vertices[i], line.vertices[last_cut]) <= tol) continue;
    if (distance(line.vertices[i], line.vertices.back()) <= tol) continue;
    cuts.push_back(i);
    last_cut = i;
  }

  SplitOutcome out;
  out.split = !cuts.empty();
  cuts.push_back(line.vertices.size() - 1);
  std::size_t begin = 0;
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    LineSegment seg;
    seg.id = out.split ? line.id + "/" + std::to_string(k + 1) : line.id;
    seg.vertices.assign(line.vertices.begin() + static_cast<std::ptrdiff_t>(begin),
                        line.vertices.begin() + static_cast<std::ptrdiff_t>(cuts[k]) + 1);
    seg.standard_type = line.standard_type.value_or("");
    seg.attributes = line.attributes;
    if (k == 0) seg.from_node = line.from_node;
    if (k + 1 == cuts.size()) seg.to_node = line.to_node;
    out.segments.push_back(std::move(seg));
    begin = cuts[k];
  }
  return out;
}

std::vector<GeoPoint> connection_points(std::span<const GeoPoint> points) {
  std::vector<GeoPoint> out;
  for (const auto& p : points) {
    if (p.role == Role::connection_point) out.push_back(p);
  }
  return out;
}

void check_tol(double tol, const char* name) {
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw GisError(std::string(name) + " must be a positive finite length");
  }
}

std::string candidate_list(std::span<const GeoPoint> points, const std::vector<std::size_t>& idx) {
  std::ostringstream os;
  for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? ", " : "") << points[idx[k]].id;
  return os.str();
}

}  // namespace

std::vector<GeoPoint> merge_duplicate_points(std::vector<GeoPoint> points, double tol,
                                             TopologyReport* report) {
  check_tol(tol, "tol");
  for (const auto& p : points) check_finite(p);
  PointGrid grid(points, tol);
  std::vector<bool> drop(points.size(), false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (drop[i]) continue;
    for (std::size_t j : grid.within(points[i].pos, tol)) {
      if (j <= i || drop[j] || points[j].role != points[i].role) continue;
      drop[j] = true;
      if (report) {
        (*report)[ErrorClass::redundant_points].found++;
        (*report)[ErrorClass::redundant_points].fixed++;
        report->merged_points.push_back(points[j].id);
        report->warnings.push_back("merged duplicate point '" + points[j].id + "' into '" +
                                   points[i].id + "'");
      }
    }
  }
  std::vector<GeoPoint> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!drop[i]) out.push_back(std::move(points[i]));
  }
  return out;
}

std::vector<LineSegment> split_polylines_serial(std::span<const PolyLine> lines,
                                                std::span<const GeoPoint> points, double tol,
                                                TopologyReport* report) {
  check_tol(tol, "tol");
  const auto conns = connection_points(points);
  PointGrid grid(conns, tol);
  std::vector<LineSegment> out;
  for (const auto& line : lines) {
    auto res = split_one(line, grid, tol);
    if (res.split && report) {
      (*report)[ErrorClass::polyline_continuity].found++;
      (*report)[ErrorClass::polyline_continuity].fixed++;
    }
    for (auto& s : res.segments) out.push_back(std::move(s));
  }
  return out;
}

std::vector<LineSegment> split_polylines(std::span<const PolyLine> lines,
                                         std::span<const GeoPoint> points, double tol,
                                         TopologyReport* report) {
  check_tol(tol, "tol");
  const auto conns = connection_points(points);
  const PointGrid grid(conns, tol);
  const auto n = static_cast<long long>(lines.size());
  std::vector<SplitOutcome> results(lines.size());
  std::vector<std::string> errors(lines.size());

#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    try {
      results[i] = split_one(lines[i], grid, tol);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }

  std::vector<LineSegment> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!errors[i].empty()) throw GisError(errors[i]);
    if (results[i].split && report) {
      (*report)[ErrorClass::polyline_continuity].found++;
      (*report)[ErrorClass::polyline_continuity].fixed++;
    }
    for (auto& s : results[i].segments) out.push_back(std::move(s));
  }
  return out;
}

void assign_endpoints(std::vector<LineSegment>& segments, std::span<const GeoPoint> points,
                      double tol, TopologyReport* report) {
  check_tol(tol, "tol");
  PointGrid grid(points, tol);
  auto resolve = [&](LineSegment& seg, std::optional<std::string>& end, const XY& at,
                     const char* which) {
    if (end) return;
    auto hits = grid.within(at, tol);
    if (hits.empty()) return;
    if (hits.size() > 1) {
      throw GisError("ambiguous " + std::string(which) + " node for segment '" + seg.id +
                     "': candidates " + candidate_list(points, hits));
    }
    end = points[hits.front()].id;
    if (report) {
      (*report)[ErrorClass::unknown_endpoint].found++;
      (*report)[ErrorClass::unknown_endpoint].fixed++;
    }
  };
  for (auto& seg : segments) {
    resolve(seg, seg.from_node, seg.vertices.front(), "from");
    resolve(seg, seg.to_node, seg.vertices.back(), "to");
  }
}

void snap_point_to_segments(std::span<const GeoPoint> points, std::vector<LineSegment>& segments,
                            double radius, TopologyReport* report) {
  check_tol(radius, "radius");
  std::vector<GeoPoint> anchors;
  for (const auto& p : points) {
    if (p.role == Role::substation || p.role == Role::switch_cabinet) anchors.push_back(p);
  }
  if (anchors.empty()) return;
  PointGrid grid(anchors, radius);
  auto attach = [&](LineSegment& seg, std::optional<std::string>& end, const XY& at) {
    if (end) return;
    auto hits = grid.within(at, radius);
    if (hits.empty()) return;
    if (hits.size() > 1) {
      throw GisError("segment '" + seg.id + "' end lies within snapping radius of several " +
                     "anchors: " + candidate_list(anchors, hits));
    }
    const auto& anchor = anchors[hits.front()];
    end = anchor.id;
    if (report) {
      auto cls = anchor.role == Role::substation ? ErrorClass::substation_disconnection
                                                 : ErrorClass::switch_cabinet_disconnection;
      (*report)[cls].found++;
      (*report)[cls].fixed++;
    }
  };
  for (auto& seg : segments) {
    attach(seg, seg.from_node, seg.vertices.front());
    attach(seg, seg.to_node, seg.vertices.back());
  }
}

std::vector<GeoPoint> insert_virtual_nodes(std::vector<LineSegment>& segments,
                                           TopologyReport* report) {
  std::vector<GeoPoint> created;
  std::set<std::string> taken;
  for (const auto& s : segments) {
    if (s.from_node) taken.insert(*s.from_node);
    if (s.to_node) taken.insert(*s.to_node);
  }
  // Dangling ends meeting at one location share a single virtual node.
  constexpr double kShareTol = 1e-9;
  auto fill = [&](LineSegment& seg, std::optional<std::string>& end, const XY& at,
                  const char* side) {
    if (end) return;
    for (const auto& v : created) {
      if (distance(v.pos, at) <= kShareTol) {
        end = v.id;
        return;
      }
    }
    std::string id = "vn:" + seg.id + ":" + side;
    while (taken.count(id)) id += "'";
    taken.insert(id);
    created.push_back(GeoPoint{id, at, Role::virtual_node, {}});
    end = id;
    if (report) {
      (*report)[ErrorClass::missing_end_node].found++;
      (*report)[ErrorClass::missing_end_node].fixed++;
      report->virtual_nodes.push_back(id);
    }
  };
  for (auto& seg : segments) {
    fill(seg, seg.from_node, seg.vertices.front(), "from");
    fill(seg, seg.to_node, seg.vertices.back(), "to");
  }
  return created;
}

std::vector<std::string> delete_disconnected_points(std::vector<GeoPoint>& points,
                                                    std::span<const LineSegment> segments,
                                                    TopologyReport* report) {
  std::set<std::string> referenced;
  for (const auto& s : segments) {
    if (s.from_node) referenced.insert(*s.from_node);
    if (s.to_node) referenced.insert(*s.to_node);
  }
  std::vector<std::string> deleted;
  ClassCount scratch;
  auto& cnt = report ? (*report)[ErrorClass::redundant_points] : scratch;
  std::vector<GeoPoint> kept;
  kept.reserve(points.size());
  for (auto& p : points) {
    if (referenced.count(p.id)) {
      kept.push_back(std::move(p));
      continue;
    }
    const bool deletable = p.role == Role::consumer || p.role == Role::connection_point ||
                           p.role == Role::virtual_node;
    if (deletable) {
      deleted.push_back(p.id);
      cnt.found++;
      cnt.fixed++;
      if (report) report->deleted_points.push_back(p.id);
    } else {
      cnt.found++;
      cnt.unfixable++;
      if (report) {
        report->warnings.push_back("unreferenced " + std::string(to_string(p.role)) + " '" +
                                   p.id + "' retained");
      }
      kept.push_back(std::move(p));
    }
  }
  points = std::move(kept);
  return deleted;
}

void fill_default_attributes(std::vector<LineSegment>& segments, const LineCatalog& catalog,
                             TopologyReport* report) {
  if (catalog.empty()) throw GisError("line catalog is empty");
  std::map<std::string, std::size_t> counts;
  std::size_t unknown = 0;
  for (const auto& s : segments) {
    if (!s.standard_type.empty() && catalog.count(s.standard_type)) {
      counts[s.standard_type]++;
    } else {
      ++unknown;
    }
  }
  if (unknown == 0) return;
  if (counts.empty()) {
    throw GisError("no segment carries a known standard type; cannot infer a default");
  }
  // std::map iterates keys in ascending order, so the first maximum wins ties.
  auto mode = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > mode->second) mode = it;
  }
  std::size_t ties = 0;
  for (const auto& [k, c] : counts) ties += (c == mode->second);
  if (report) {
    report->warnings.push_back("default standard type '" + mode->first + "' (count " +
                               std::to_string(mode->second) + ")" +
                               (ties > 1 ? " chosen by lexicographic tie-break" : ""));
  }
  for (auto& s : segments) {
    if (!s.standard_type.empty() && catalog.count(s.standard_type)) continue;
    if (report) {
      (*report)[ErrorClass::unknown_attributes].found++;
      (*report)[ErrorClass::unknown_attributes].fixed++;
    }
    s.standard_type = mode->first;
  }
}

RepairResult repair(std::vector<GeoPoint> points, std::span<const PolyLine> lines,
                    const LineCatalog& catalog, const RepairConfig& config) {
  RepairResult out;
  auto& report = out.report;
  points = merge_duplicate_points(std::move(points), config.tol, &report);
  auto segments = split_polylines(lines, points, config.tol, &report);
  assign_endpoints(segments, points, config.tol, &report);
  snap_point_to_segments(points, segments, config.radius, &report);
  auto virtuals = insert_virtual_nodes(segments, &report);
  points.insert(points.end(), virtuals.begin(), virtuals.end());
  delete_disconnected_points(points, segments, &report);
  fill_default_attributes(segments, catalog, &report);

  std::set<std::string> ids;
  for (const auto& p : points) {
    if (!ids.insert(p.id).second) throw GisError("duplicate point id '" + p.id + "'");
  }
  for (const auto& s : segments) {
    if (!s.from_node || !s.to_node || !ids.count(*s.from_node) || !ids.count(*s.to_node)) {
      throw GisError("segment '" + s.id + "' left without resolvable endpoints");
    }
  }
  out.layers.points = std::move(points);
  out.layers.segments = std::move(segments);
  return out;
}

std::vector<PolyLine> to_polylines(std::span<const LineSegment> segments) {
  std::vector<PolyLine> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    PolyLine p;
    p.id = s.id;
    p.vertices = s.vertices;
    p.attributes = s.attributes;
    if (!s.standard_type.empty()) p.standard_type = s.standard_type;
    p.from_node = s.from_node;
    p.to_node = s.to_node;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace lvpq::gis
