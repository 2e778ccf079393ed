#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "lvpq/error.hpp"
#include "lvpq/fixtures.hpp"
#include "lvpq/gis.hpp"
#include "lvpq/gis_io.hpp"
#include "lvpq/network.hpp"

using namespace lvpq;
using namespace lvpq::gis;

namespace {

GeoPoint pt(std::string id, double x, double y, Role role = Role::connection_point) {
  return GeoPoint{std::move(id), {x, y}, role, {}};
}

PolyLine pl(std::string id, std::vector<XY> v, std::optional<std::string> type = "NAYY 4x150") {
  return PolyLine{std::move(id), std::move(v), {}, std::move(type), {}, {}};
}

LineSegment seg(std::string id, std::vector<XY> v, std::string type = "NAYY 4x150") {
  LineSegment s;
  s.id = std::move(id);
  s.vertices = std::move(v);
  s.standard_type = std::move(type);
  return s;
}

void check_report_balance(const TopologyReport& r) {
  for (const auto& c : r.counts) CHECK(c.fixed + c.unfixable == c.found);
}

std::string layers_text(const Layers& l) {
  return points_to_geojson(l.points).dump(1) + segments_to_geojson(l.segments).dump(1);
}

}  // namespace

TEST_CASE("split at an interior connection point") {
  std::vector<GeoPoint> points = {pt("cp", 10, 0)};
  std::vector<PolyLine> lines = {pl("L", {{0, 0}, {10, 0}, {20, 0}})};
  TopologyReport r;
  auto out = split_polylines(lines, points, 0.01, &r);
  REQUIRE(out.size() == 2);
  CHECK(out[0].vertices == std::vector<XY>{{0, 0}, {10, 0}});
  CHECK(out[1].vertices == std::vector<XY>{{10, 0}, {20, 0}});
  CHECK(out[0].id == "L/1");
  CHECK(out[1].id == "L/2");
  CHECK(r[ErrorClass::polyline_continuity].found == 1);
  check_report_balance(r);
}

TEST_CASE("split count equals interior split points plus one") {
  std::vector<GeoPoint> points = {pt("a", 1, 0), pt("b", 3, 0)};
  std::vector<PolyLine> lines = {pl("L", {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}})};
  auto out = split_polylines(lines, points, 0.01);
  REQUIRE(out.size() == 3);
  CHECK(out[1].vertices == std::vector<XY>{{1, 0}, {2, 0}, {3, 0}});
}

TEST_CASE("polyline without interior connection point is kept as is") {
  std::vector<GeoPoint> points = {pt("end", 20, 0), pt("far", 5, 5)};
  std::vector<PolyLine> lines = {pl("L", {{0, 0}, {10, 0}, {20, 0}})};
  TopologyReport r;
  auto out = split_polylines(lines, points, 0.01, &r);
  REQUIRE(out.size() == 1);
  CHECK(out[0].vertices == lines[0].vertices);
  CHECK(r.no_changes());
}

TEST_CASE("consumers do not split lines") {
  std::vector<GeoPoint> points = {pt("c", 10, 0, Role::consumer)};
  std::vector<PolyLine> lines = {pl("L", {{0, 0}, {10, 0}, {20, 0}})};
  CHECK(split_polylines(lines, points, 0.01).size() == 1);
}

TEST_CASE("degenerate polylines are rejected") {
  std::vector<GeoPoint> none;
  std::vector<PolyLine> one = {pl("L", {{1, 1}})};
  std::vector<PolyLine> same = {pl("L", {{1, 1}, {1, 1.001}})};
  CHECK_THROWS_AS(split_polylines(one, none, 0.01), GisError);
  CHECK_THROWS_AS(split_polylines(same, none, 0.01), GisError);
  CHECK_THROWS_AS(split_polylines(one, none, 0.0), GisError);
}

TEST_CASE("parallel split matches the serial reference") {
  auto f = fixtures::synthetic_feeder();
  TopologyReport a, b;
  auto par = split_polylines(f.lines, f.points, 0.01, &a);
  auto ser = split_polylines_serial(f.lines, f.points, 0.01, &b);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].id == ser[i].id);
    CHECK(par[i].vertices == ser[i].vertices);
  }
  CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("assign_endpoints by coordinate equality") {
  std::vector<GeoPoint> points = {pt("cp", 0, 0), pt("c1", 10, 0, Role::consumer)};
  std::vector<LineSegment> s = {seg("s", {{0, 0}, {10, 0}})};
  TopologyReport r;
  assign_endpoints(s, points, 0.01, &r);
  CHECK(s[0].from_node == "cp");
  CHECK(s[0].to_node == "c1");
  CHECK(r[ErrorClass::unknown_endpoint].found == 2);
  check_report_balance(r);
}

TEST_CASE("endpoint two tolerances away stays unset") {
  std::vector<GeoPoint> points = {pt("c1", 10.02, 0, Role::consumer)};
  std::vector<LineSegment> s = {seg("s", {{0, 0}, {10, 0}})};
  assign_endpoints(s, points, 0.01);
  CHECK_FALSE(s[0].to_node.has_value());
  CHECK_FALSE(s[0].from_node.has_value());
}

TEST_CASE("three segments meeting at one point share the node") {
  std::vector<GeoPoint> points = {pt("hub", 0, 0)};
  std::vector<LineSegment> s = {seg("a", {{0, 0}, {5, 0}}), seg("b", {{-5, 0}, {0, 0}}),
                                seg("c", {{0, 0}, {0, 5}})};
  assign_endpoints(s, points, 0.01);
  int degree = 0;
  for (const auto& x : s) degree += (x.from_node == "hub") + (x.to_node == "hub");
  CHECK(degree == 3);
}

TEST_CASE("ambiguous endpoints list both candidates") {
  std::vector<GeoPoint> points = {pt("p1", 10, 0), pt("p2", 10.005, 0, Role::consumer)};
  std::vector<LineSegment> s = {seg("s", {{0, 0}, {10, 0}})};
  try {
    assign_endpoints(s, points, 0.01);
    FAIL("expected an ambiguity error");
  } catch (const GisError& e) {
    const std::string what = e.what();
    CHECK(what.find("p1") != std::string::npos);
    CHECK(what.find("p2") != std::string::npos);
  }
}

TEST_CASE("substation snapping within the radius") {
  std::vector<GeoPoint> points = {pt("S", 0, 0, Role::substation)};
  std::vector<LineSegment> near = {seg("s", {{0.5, 0}, {30, 0}})};
  std::vector<LineSegment> far = {seg("s", {{1.5, 0}, {30, 0}})};
  TopologyReport r;
  snap_point_to_segments(points, near, 1.0, &r);
  snap_point_to_segments(points, far, 1.0);
  CHECK(near[0].from_node == "S");
  CHECK(near[0].vertices.front() == XY{0.5, 0});  // geometry untouched
  CHECK_FALSE(far[0].from_node.has_value());
  CHECK(r[ErrorClass::substation_disconnection].fixed == 1);
}

TEST_CASE("a substation attaches every feeder head in range") {
  std::vector<GeoPoint> points = {pt("S", 0, 0, Role::substation)};
  std::vector<LineSegment> s = {seg("a", {{0.4, 0}, {30, 0}}), seg("b", {{-0.4, 0}, {-30, 0}}),
                                seg("c", {{0, 0.4}, {0, 30}}), seg("d", {{0, -0.4}, {0, -30}})};
  snap_point_to_segments(points, s, 1.0);
  for (const auto& x : s) CHECK(x.from_node == "S");
}

TEST_CASE("cabinets snap, consumers do not") {
  std::vector<GeoPoint> points = {pt("K", 0, 0, Role::switch_cabinet),
                                  pt("c", 50, 0, Role::consumer)};
  std::vector<LineSegment> s = {seg("a", {{0.3, 0}, {49.7, 0}})};
  TopologyReport r;
  snap_point_to_segments(points, s, 1.0, &r);
  CHECK(s[0].from_node == "K");
  CHECK_FALSE(s[0].to_node.has_value());
  CHECK(r[ErrorClass::switch_cabinet_disconnection].found == 1);
}

TEST_CASE("virtual nodes fill dangling ends") {
  std::vector<LineSegment> s = {seg("s", {{0, 0}, {5, 7}})};
  s[0].from_node = "A";
  TopologyReport r;
  auto created = insert_virtual_nodes(s, &r);
  REQUIRE(created.size() == 1);
  CHECK(created[0].pos == XY{5, 7});
  CHECK(created[0].role == Role::virtual_node);
  CHECK(created[0].attributes.empty());
  CHECK(s[0].to_node == created[0].id);
  CHECK(r.virtual_nodes == std::vector<std::string>{created[0].id});

  std::vector<LineSegment> full = {seg("f", {{0, 0}, {1, 0}})};
  full[0].from_node = "A";
  full[0].to_node = "B";
  CHECK(insert_virtual_nodes(full).empty());

  std::vector<LineSegment> three = {seg("a", {{0, 0}, {1, 0}}), seg("b", {{0, 5}, {1, 5}})};
  three[0].from_node = "A";
  three[1].to_node = "B";
  three.push_back(seg("c", {{0, 9}, {1, 9}}));
  three[2].from_node = "A";
  CHECK(insert_virtual_nodes(three).size() == 3);
}

TEST_CASE("disconnected consumers are deleted, anchors kept") {
  std::vector<GeoPoint> points = {pt("S", 0, 0, Role::substation), pt("c1", 10, 0, Role::consumer),
                                  pt("c2", 20, 0, Role::consumer), pt("cp", 5, 0)};
  std::vector<LineSegment> s = {seg("s", {{0, 0}, {10, 0}})};
  s[0].from_node = "S";
  s[0].to_node = "c1";
  auto removed = delete_disconnected_points(points, s);
  CHECK(removed == std::vector<std::string>{"c2", "cp"});
  CHECK(points.size() == 2);

  std::vector<GeoPoint> all = {pt("S", 0, 0, Role::substation), pt("K", 1, 0, Role::switch_cabinet),
                               pt("c", 2, 0, Role::consumer), pt("cp", 3, 0)};
  TopologyReport r;
  delete_disconnected_points(all, {}, &r);
  REQUIRE(all.size() == 2);
  CHECK(all[0].id == "S");
  CHECK(all[1].id == "K");
  CHECK_FALSE(r.warnings.empty());
  check_report_balance(r);
}

TEST_CASE("default attributes use the modal type") {
  LineCatalog cat;
  cat["A"] = LineType{"A", Mat3::Identity()};
  cat["B"] = LineType{"B", Mat3::Identity()};
  std::vector<LineSegment> s;
  for (int i = 0; i < 5; ++i) s.push_back(seg("a" + std::to_string(i), {{0, 0}, {1, 0}}, "A"));
  for (int i = 0; i < 2; ++i) s.push_back(seg("b" + std::to_string(i), {{0, 0}, {1, 0}}, "B"));
  s.push_back(seg("u", {{0, 0}, {1, 0}}, ""));
  s.push_back(seg("x", {{0, 0}, {1, 0}}, "not-in-catalog"));
  TopologyReport r;
  fill_default_attributes(s, cat, &r);
  CHECK(s[7].standard_type == "A");
  CHECK(s[8].standard_type == "A");
  CHECK(r[ErrorClass::unknown_attributes].fixed == 2);
}

TEST_CASE("modal type ties go to the smallest key and are logged") {
  LineCatalog cat;
  cat["A"] = LineType{"A", Mat3::Identity()};
  cat["B"] = LineType{"B", Mat3::Identity()};
  std::vector<LineSegment> s;
  for (int i = 0; i < 3; ++i) s.push_back(seg("b" + std::to_string(i), {{0, 0}, {1, 0}}, "B"));
  for (int i = 0; i < 3; ++i) s.push_back(seg("a" + std::to_string(i), {{0, 0}, {1, 0}}, "A"));
  s.push_back(seg("u", {{0, 0}, {1, 0}}, ""));
  TopologyReport r;
  fill_default_attributes(s, cat, &r);
  CHECK(s.back().standard_type == "A");
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("tie") != std::string::npos);

  std::vector<LineSegment> typed = {seg("a", {{0, 0}, {1, 0}}, "B")};
  TopologyReport none;
  fill_default_attributes(typed, cat, &none);
  CHECK(typed[0].standard_type == "B");
  CHECK(none.no_changes());

  std::vector<LineSegment> untyped = {seg("a", {{0, 0}, {1, 0}}, "")};
  CHECK_THROWS_AS(fill_default_attributes(untyped, cat), GisError);
}

TEST_CASE("merge_duplicate_points keeps the first of equal-role duplicates") {
  std::vector<GeoPoint> points = {pt("a", 0, 0, Role::consumer), pt("b", 0.001, 0, Role::consumer),
                                  pt("c", 0, 0)};
  TopologyReport r;
  auto out = merge_duplicate_points(points, 0.01, &r);
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == "a");
  CHECK(out[1].id == "c");
  CHECK(r.merged_points == std::vector<std::string>{"b"});
}

TEST_CASE("synthetic feeder repairs to 65 points and 64 segments") {
  auto f = fixtures::synthetic_feeder();
  auto res = repair(f.points, f.lines, default_catalog());
  CHECK(res.layers.points.size() == 65);
  CHECK(res.layers.segments.size() == 64);
  CHECK(res.report[ErrorClass::polyline_continuity].found == 3);
  CHECK(res.report[ErrorClass::substation_disconnection].found == 1);
  CHECK(res.report[ErrorClass::redundant_points].found == 1);
  CHECK(res.report[ErrorClass::unknown_attributes].found == 6);
  check_report_balance(res.report);
  for (const auto& s : res.layers.segments) {
    CHECK(s.from_node.has_value());
    CHECK(s.to_node.has_value());
    CHECK(default_catalog().count(s.standard_type) == 1);
  }
}

TEST_CASE("repair is idempotent on the feeder and on every broken case") {
  auto run_twice = [](const fixtures::RawLayers& raw) {
    auto first = repair(raw.points, raw.lines, default_catalog());
    auto second = repair(first.layers.points, to_polylines(first.layers.segments), default_catalog());
    CHECK(second.report.no_changes());
    CHECK(layers_text(first.layers) == layers_text(second.layers));
  };
  run_twice(fixtures::synthetic_feeder());
  for (const auto& c : fixtures::broken_layer_corpus()) {
    INFO(c.name);
    run_twice(c.layers);
  }
}

TEST_CASE("repair preserves line geometry") {
  // Splitting duplicates each cut vertex, so compare the distinct coordinate
  // sets and the per-polyline vertex sequence with joints merged.
  for (const auto& c : fixtures::broken_layer_corpus()) {
    INFO(c.name);
    auto res = repair(c.layers.points, c.layers.lines, default_catalog());
    std::set<XY> before, after;
    for (const auto& l : c.layers.lines) before.insert(l.vertices.begin(), l.vertices.end());
    for (const auto& s : res.layers.segments) after.insert(s.vertices.begin(), s.vertices.end());
    CHECK(before == after);
    for (const auto& l : c.layers.lines) {
      std::vector<XY> joined;
      for (const auto& s : res.layers.segments) {
        if (s.id != l.id && s.id.rfind(l.id + "/", 0) != 0) continue;
        for (std::size_t i = joined.empty() ? 0 : 1; i < s.vertices.size(); ++i) {
          joined.push_back(s.vertices[i]);
        }
      }
      CHECK(joined == l.vertices);
    }
  }
}

TEST_CASE("point conservation across repair") {
  for (const auto& c : fixtures::broken_layer_corpus()) {
    INFO(c.name);
    auto res = repair(c.layers.points, c.layers.lines, default_catalog());
    const auto& r = res.report;
    CHECK(c.layers.points.size() + r.virtual_nodes.size() ==
          res.layers.points.size() + r.deleted_points.size() + r.merged_points.size());
  }
}

TEST_CASE("broken corpus covers every class and every case becomes buildable") {
  const auto corpus = fixtures::broken_layer_corpus();
  CHECK(corpus.size() >= 20);
  std::set<ErrorClass> covered;
  for (const auto& c : corpus) {
    INFO(c.name);
    auto res = repair(c.layers.points, c.layers.lines, default_catalog());
    for (auto cls : c.expected) {
      CHECK(res.report[cls].found > 0);
      covered.insert(cls);
    }
    check_report_balance(res.report);
    CHECK_NOTHROW(network::build_graph(res.layers.points, res.layers.segments, default_catalog()));
  }
  CHECK(covered.size() == kErrorClassCount);
}

TEST_CASE("GeoJSON layers round-trip") {
  auto f = fixtures::synthetic_feeder();
  auto res = repair(f.points, f.lines, default_catalog());
  auto points = points_from_geojson(points_to_geojson(res.layers.points));
  auto lines = lines_from_geojson(segments_to_geojson(res.layers.segments));
  REQUIRE(points.size() == res.layers.points.size());
  REQUIRE(lines.size() == res.layers.segments.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(points[i].id == res.layers.points[i].id);
    CHECK(points[i].pos == res.layers.points[i].pos);
    CHECK(points[i].role == res.layers.points[i].role);
    CHECK(points[i].attributes == res.layers.points[i].attributes);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK(lines[i].vertices == res.layers.segments[i].vertices);
    CHECK(lines[i].from_node == res.layers.segments[i].from_node);
    CHECK(lines[i].standard_type == res.layers.segments[i].standard_type);
  }
}
