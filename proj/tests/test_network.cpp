#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lvpq/error.hpp"
#include "lvpq/fixtures.hpp"
#include "lvpq/gis.hpp"
#include "lvpq/network.hpp"
#include "lvpq/network_io.hpp"

using namespace lvpq;
using namespace lvpq::network;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

gis::GeoPoint pt(std::string id, double x, gis::Role role = gis::Role::connection_point,
                 gis::Attributes attrs = {}) {
  return gis::GeoPoint{std::move(id), {x, 0}, role, std::move(attrs)};
}

gis::LineSegment seg(std::string id, double x0, double x1, std::string from, std::string to,
                     std::string type = "NAYY 4x150") {
  gis::LineSegment s;
  s.id = std::move(id);
  s.vertices = {{x0, 0}, {x1, 0}};
  s.from_node = std::move(from);
  s.to_node = std::move(to);
  s.standard_type = std::move(type);
  return s;
}

std::shared_ptr<const NetworkGraph> feeder_graph() {
  auto f = fixtures::synthetic_feeder();
  auto res = gis::repair(f.points, f.lines, default_catalog());
  return std::make_shared<const NetworkGraph>(
      build_graph(res.layers.points, res.layers.segments, default_catalog()));
}

Bus bus(std::string id, bool source = false) {
  Bus b;
  b.id = std::move(id);
  b.is_source = source;
  return b;
}

Branch branch(std::string id, std::size_t from, std::size_t to) {
  Branch b;
  b.id = std::move(id);
  b.from = from;
  b.to = to;
  b.z_ohm = Mat3::Identity() * cplx(0.01, 0.005);
  return b;
}

}  // namespace

TEST_CASE("branch impedance scales with length") {
  std::vector<gis::GeoPoint> points = {pt("S", 0, gis::Role::substation), pt("a", 100),
                                       pt("b", 200)};
  std::vector<gis::LineSegment> segs = {seg("s1", 0, 100, "S", "a"), seg("s2", 100, 200, "a", "b")};
  auto g = build_graph(points, segs, default_catalog());
  const Mat3 z_a = default_catalog().at("NAYY 4x150").z_per_km;
  REQUIRE(g.branches.size() == 3);  // transformer plus two lines
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(g.branches[k].length_m == 100.0);
    CHECK((g.branches[k].z_ohm - 0.1 * z_a).norm() < 1e-15);
  }
  CHECK(g.branches[0].kind == BranchKind::transformer);
  CHECK(g.buses[g.source].id == "source");
}

TEST_CASE("synthetic feeder has the expected shape") {
  auto g = feeder_graph();
  CHECK(g->buses.size() == 66);
  CHECK(g->branches.size() == 65);
  std::size_t lines = 0;
  for (const auto& b : g->branches) lines += b.kind == BranchKind::line;
  CHECK(lines == 64);
  CHECK(check_radiality(*g).ok);
  const auto weeks = fixtures::synthetic_meter_weeks(1);
  auto sc = attach_loads(g, weeks.pre, {}, {}, 1);
  CHECK(sc.loads.size() == 43);
  CHECK(sc.intervals == fixtures::kWeekIntervals);
}

TEST_CASE("model building rejects broken inputs") {
  std::vector<gis::GeoPoint> points = {pt("S", 0, gis::Role::substation), pt("a", 100)};
  std::vector<gis::LineSegment> bad_type = {seg("s1", 0, 100, "S", "a", "NOPE")};
  CHECK_THROWS_AS(build_graph(points, bad_type, default_catalog()), ModelError);

  std::vector<gis::LineSegment> ok = {seg("s1", 0, 100, "S", "a")};
  std::vector<gis::GeoPoint> no_sub = {pt("S", 0), pt("a", 100)};
  CHECK_THROWS_AS(build_graph(no_sub, ok, default_catalog()), ModelError);

  std::vector<gis::GeoPoint> two_sub = {pt("S", 0, gis::Role::substation), pt("a", 100),
                                        pt("T", 300, gis::Role::substation)};
  CHECK_THROWS_AS(build_graph(two_sub, ok, default_catalog()), ModelError);

  std::vector<gis::GeoPoint> island = {pt("S", 0, gis::Role::substation), pt("a", 100),
                                       pt("z", 500)};
  CHECK_THROWS_AS(build_graph(island, ok, default_catalog()), ModelError);
}

TEST_CASE("radiality check reports cycles and islands") {
  std::vector<Bus> buses = {bus("src", true), bus("a"), bus("b")};
  std::vector<Branch> path = {branch("x", 0, 1), branch("y", 1, 2)};
  NetworkGraph g;
  g.buses = buses;
  g.branches = path;
  CHECK(check_radiality(g).ok);

  g.branches.push_back(branch("chord", 0, 2));
  auto cyc = check_radiality(g);
  CHECK_FALSE(cyc.ok);
  CHECK(cyc.cycle_branches == std::vector<std::string>{"chord", "x", "y"});

  g.branches = {branch("x", 0, 1)};
  auto isl = check_radiality(g);
  CHECK_FALSE(isl.ok);
  CHECK(isl.islands == std::vector<std::string>{"b"});
  CHECK(isl.describe().find("b") != std::string::npos);
  CHECK_THROWS_AS(assemble_graph(buses, {branch("x", 0, 1)}, {}, {}), ModelError);
}

TEST_CASE("reactive power from the power factor") {
  // tan(acos(pf)) written as sqrt(1 - pf^2) / pf.
  const double pf = 0.95;
  const double expected = 1000.0 * std::sqrt(1.0 - pf * pf) / pf;
  CHECK_THAT(reactive_power(1000.0, pf), WithinRel(expected, 1e-12));
  CHECK_THAT(reactive_power(1000.0, pf), WithinAbs(328.68, 0.005));
  CHECK(reactive_power(1000.0, 1.0) == 0.0);
}

TEST_CASE("power factor draws are seeded and within range") {
  auto g = feeder_graph();
  const auto weeks = fixtures::synthetic_meter_weeks(1);
  auto a = attach_loads(g, weeks.pre, {}, {}, 42);
  auto b = attach_loads(g, weeks.pre, {}, {}, 42);
  auto c = attach_loads(g, weeks.pre, {}, {}, 43);
  bool differs = false;
  for (std::size_t k = 0; k < a.loads.size(); ++k) {
    CHECK(a.loads[k].pf == b.loads[k].pf);
    CHECK(a.loads[k].pf >= 0.95);
    CHECK(a.loads[k].pf <= 1.0);
    differs |= a.loads[k].pf != c.loads[k].pf;
  }
  CHECK(differs);
}

TEST_CASE("single-phase consumers rotate through phases unless mapped") {
  auto g = feeder_graph();
  const auto weeks = fixtures::synthetic_meter_weeks(1);
  auto sc = attach_loads(g, weeks.pre, {}, {}, 1);
  std::array<int, 4> count{};
  std::vector<Phase> singles;
  for (const auto& ld : sc.loads) {
    count[static_cast<int>(ld.phase)]++;
    if (ld.phase != Phase::ABC) singles.push_back(ld.phase);
  }
  for (std::size_t i = 0; i < singles.size(); ++i) CHECK(singles[i] == static_cast<Phase>(i % 3));
  CHECK(count[3] > 0);

  PhaseMap map{{sc.loads[0].meter_id, Phase::C}};
  auto mapped = attach_loads(g, weeks.pre, {}, map, 1);
  CHECK(mapped.loads[0].phase == Phase::C);

  std::vector<meter::MeterSeries> short_list(weeks.pre.begin(), weeks.pre.end() - 1);
  CHECK_THROWS_AS(attach_loads(g, short_list, {}, {}, 1), ModelError);
}

TEST_CASE("load table splits three-phase demand evenly") {
  auto g = feeder_graph();
  const auto weeks = fixtures::synthetic_meter_weeks(1);
  auto sc = attach_loads(g, weeks.pre, {1.0, 1.0}, {}, 1);
  auto table = sc.load_table(10);
  const double base = g->base.s_phase_va();
  for (std::size_t k = 0; k < sc.loads.size(); ++k) {
    const auto& ld = sc.loads[k];
    const Vec3& s = table[ld.bus];
    if (ld.phase == Phase::ABC) {
      for (int p = 0; p < 3; ++p) CHECK_THAT(s(p).real() * base, WithinRel(sc.p(k, 10) / 3, 1e-12));
    } else {
      CHECK_THAT(s(static_cast<int>(ld.phase)).real() * base, WithinRel(sc.p(k, 10), 1e-12));
    }
    CHECK(s.imag().norm() == 0.0);
  }
}

TEST_CASE("per-unit round trip") {
  BaseValues base;
  CHECK_THAT(base.z_ohm(), WithinRel(0.4, 1e-15));
  for (const auto& [name, type] : default_catalog()) {
    const Mat3 z = type.z_per_km * 0.137;
    const Mat3 back = z_from_pu(z_to_pu(z, base), base);
    CHECK((back - z).norm() <= 1e-12 * z.norm());
  }
}

TEST_CASE("sequence construction diagonalises under the symmetrical transform") {
  const cplx z1{0.206, 0.080}, z0{0.824, 0.320};
  const Mat3 z = phase_matrix_from_sequence(z1, z0, 1.0);
  const cplx a = std::polar(1.0, 2.0 * M_PI / 3.0);
  Mat3 A;
  A << 1, 1, 1, 1, a * a, a, 1, a, a * a;
  const Mat3 seq = A.inverse() * z * A;
  CHECK(std::abs(seq(0, 0) - z0) < 1e-12);
  CHECK(std::abs(seq(1, 1) - z1) < 1e-12);
  CHECK(std::abs(seq(2, 2) - z1) < 1e-12);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(std::abs(seq(i, j)) < 1e-12);
    }
  }
  for (const auto& [name, type] : default_catalog()) {
    CHECK((type.z_per_km - type.z_per_km.transpose()).norm() == 0.0);
    for (int p = 0; p < 3; ++p) CHECK(type.z_per_km(p, p).real() > 0.0);
  }
}

TEST_CASE("transformer parameters are validated") {
  TransformerModel t;
  CHECK_NOTHROW(t.validate());
  CHECK_THAT(std::abs(t.z_pu_own()), WithinRel(0.04, 1e-12));
  t.uk = 0.25;
  CHECK_THROWS_AS(t.validate(), ModelError);
  t = {};
  t.no_load_pu = 1.2;
  CHECK_THROWS_AS(t.validate(), ModelError);
}

TEST_CASE("model bundle round trip") {
  auto g = feeder_graph();
  const auto weeks = fixtures::synthetic_meter_weeks(1);
  auto sc = attach_loads(g, weeks.pre, {}, {}, 5);
  const auto dir = std::filesystem::path(LVPQ_TEST_TMP) / "bundle";
  std::filesystem::create_directories(dir);
  write_bundle(dir, sc);
  auto back = read_bundle(dir);
  REQUIRE(back.graph->buses.size() == g->buses.size());
  REQUIRE(back.graph->branches.size() == g->branches.size());
  for (std::size_t k = 0; k < g->branches.size(); ++k) {
    CHECK(back.graph->branches[k].z_ohm == g->branches[k].z_ohm);
    CHECK(back.graph->branches[k].id == g->branches[k].id);
  }
  CHECK(back.p_w == sc.p_w);
  REQUIRE(back.loads.size() == sc.loads.size());
  for (std::size_t k = 0; k < sc.loads.size(); ++k) {
    CHECK(back.loads[k].pf == sc.loads[k].pf);
    CHECK(back.loads[k].phase == sc.loads[k].phase);
    CHECK(back.loads[k].bus == sc.loads[k].bus);
  }
  CHECK(back.start == sc.start);
}

TEST_CASE("phase map CSV") {
  const auto path = std::filesystem::path(LVPQ_TEST_TMP) / "phases.csv";
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << "meter_id,phase\nM01,A\nM02,abc\nM03,c\n";
  auto map = read_phase_map(path);
  CHECK(map.at("M01") == Phase::A);
  CHECK(map.at("M02") == Phase::ABC);
  CHECK(map.at("M03") == Phase::C);
  CHECK_THROWS_AS(parse_phase("D"), ModelError);
}
