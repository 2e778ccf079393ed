#include "lvpq/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

#include "lvpq/gis_io.hpp"
#include "lvpq/io.hpp"
#include "lvpq/meter_io.hpp"

namespace lvpq::fixtures {

using gis::ErrorClass;
using gis::GeoPoint;
using gis::PolyLine;
using gis::Role;
using gis::XY;

namespace {

constexpr const char* kTrunkType = "NAYY 4x150";
constexpr const char* kServiceType = "NAYY 4x35";
constexpr double kSpacing = 30.0;
constexpr double kServiceOffset = 12.0;
constexpr std::size_t kTrunkA = 14;  // cp01..cp14 along x
constexpr std::size_t kTrunkB = 7;   // cp15..cp21 branching north at cp07
constexpr std::size_t kConsumers = 43;

std::string numbered(const char* prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

// Uniform [0, 1) from the top 53 bits; platform independent, unlike the
// std distributions.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

double normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

XY cp_pos(std::size_t k) {
  if (k <= kTrunkA) return {kSpacing * static_cast<double>(k), 0.0};
  return {kSpacing * 7.0, kSpacing * static_cast<double>(k - kTrunkA)};
}

bool on_branch(std::size_t k) { return k > kTrunkA; }

meter::TimePoint midnight(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return sys_seconds{sys_days{year{y} / month{m} / day{d}}.time_since_epoch()};
}

}  // namespace

RawLayers synthetic_feeder() {
  RawLayers out;
  out.points.push_back({"S01", {0.0, 0.0}, Role::substation, {{"name", "TS Synthetic"}}});
  for (std::size_t k = 1; k <= kTrunkA + kTrunkB; ++k) {
    out.points.push_back({numbered("cp", k), cp_pos(k), Role::connection_point, {}});
  }

  // Trunk digitized as three long polylines; splitting recovers 21 sections.
  PolyLine a{"trunk-a", {{0.5, 0.0}}, {}, kTrunkType, {}, {}};
  for (std::size_t k = 1; k <= 7; ++k) a.vertices.push_back(cp_pos(k));
  PolyLine b{"trunk-b", {cp_pos(7)}, {}, kTrunkType, {}, {}};
  for (std::size_t k = 8; k <= kTrunkA; ++k) b.vertices.push_back(cp_pos(k));
  PolyLine c{"trunk-c", {cp_pos(7)}, {}, kTrunkType, {}, {}};
  for (std::size_t k = kTrunkA + 1; k <= kTrunkA + kTrunkB; ++k) c.vertices.push_back(cp_pos(k));
  out.lines = {a, b, c};

  for (std::size_t i = 1; i <= kConsumers; ++i) {
    // Two consumers per connection point, the 43rd at the end of trunk A.
    const std::size_t k = i <= 42 ? (i + 1) / 2 : kTrunkA;
    const XY at = cp_pos(k);
    XY pos;
    if (i == 43) {
      pos = {at.x + kServiceOffset, at.y};
    } else {
      const double side = (i % 2) ? 1.0 : -1.0;
      pos = on_branch(k) ? XY{at.x + side * kServiceOffset, at.y}
                         : XY{at.x, at.y + side * kServiceOffset};
    }
    const bool three_phase = i % 3 == 1;
    out.points.push_back({numbered("c", i), pos, Role::consumer,
                          {{"meter_id", numbered("M", i)}, {"phases", three_phase ? "3" : "1"}}});
    PolyLine svc{numbered("svc", i), {at, pos}, {}, kServiceType, {}, {}};
    if (i % 7 == 0) svc.standard_type.reset();
    out.lines.push_back(std::move(svc));
  }
  // The same house digitized twice.
  auto dup = out.points.back();
  dup.id = "c43-dup";
  out.points.push_back(dup);
  return out;
}

MeterWeeks synthetic_meter_weeks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MeterWeeks w;
  const auto pre_start = midnight(2020, 2, 24);
  const auto hard_start = midnight(2020, 3, 23);
  const auto post_start = midnight(2020, 5, 18);
  auto bump = [](double h, double mu, double sigma) {
    const double z = (h - mu) / sigma;
    return std::exp(-0.5 * z * z);
  };
  for (std::size_t i = 1; i <= kConsumers; ++i) {
    const bool three_phase = i % 3 == 1;
    const double scale = 2.0 * uniform(rng, 0.5, 1.6) * (three_phase ? 1.8 : 1.0);
    const double shift = uniform(rng, -1.0, 1.0);
    meter::MeterSeries pre{numbered("M", i), pre_start, {}, {}};
    meter::MeterSeries hard{pre.meter_id, hard_start, {}, {}};
    meter::MeterSeries post{pre.meter_id, post_start, {}, {}};
    for (std::size_t t = 0; t < kWeekIntervals; ++t) {
      const double h = static_cast<double>(t % meter::kIntervalsPerDay) / 4.0;
      const bool weekend = t / meter::kIntervalsPerDay >= 5;
      double p = 220.0 + 380.0 * bump(h, 7.5 + 0.5 * shift, 0.9) +
                 1000.0 * bump(h, 19.5 + shift, 1.6) +
                 (weekend ? 350.0 : 150.0) * bump(h, 13.0, 2.0);
      p *= scale * (1.0 + 0.12 * normal(rng));
      p = std::max(p, 20.0);
      pre.values.push_back(p);
      hard.values.push_back(p * (1.0 + uniform(rng, 0.15, 0.30)));
      post.values.push_back(p * (1.0 + uniform(rng, 0.05, 0.15)));
    }
    for (auto* s : {&pre, &hard, &post}) s->flags.assign(kWeekIntervals, meter::Flag::ok);
    w.pre.push_back(std::move(pre));
    w.hard.push_back(std::move(hard));
    w.post.push_back(std::move(post));
  }
  return w;
}

std::string defective_meter_csv(std::span<const meter::MeterSeries> series,
                                const DefectSpec& defects, std::uint64_t seed) {
  enum class Kind { outlier, zero, missing };
  std::mt19937_64 rng(seed);
  std::map<std::pair<std::size_t, std::size_t>, Kind> hits;
  const std::size_t meters = series.size();
  if (meters == 0) return "meter_id,timestamp,active_power_w\n";
  const std::size_t n = series.front().size();
  // Keep the first and last interval intact so the timeline is unambiguous.
  auto place = [&](std::size_t count, Kind kind) {
    while (count > 0) {
      const std::size_t m = rng() % meters;
      const std::size_t t = 1 + rng() % (n - 2);
      if (hits.emplace(std::make_pair(m, t), kind).second) --count;
    }
  };
  place(defects.outliers, Kind::outlier);
  place(defects.zeros, Kind::zero);
  place(defects.missing, Kind::missing);
  for (std::size_t g = 0; g < defects.long_gap_meters && g < meters; ++g) {
    const std::size_t m = meters - 1 - g;
    const std::size_t start = 100 + rng() % (n / 2);
    for (std::size_t t = start; t < start + 20 && t + 1 < n; ++t) hits[{m, t}] = Kind::missing;
  }

  std::string out = "meter_id,timestamp,active_power_w\n";
  for (std::size_t m = 0; m < meters; ++m) {
    const auto& s = series[m];
    for (std::size_t t = 0; t < s.size(); ++t) {
      double v = s.values[t];
      if (auto it = hits.find({m, t}); it != hits.end()) {
        if (it->second == Kind::missing) continue;
        v = it->second == Kind::zero ? 0.0 : v * 50.0;
      }
      out += s.meter_id;
      out += ',';
      out += meter::format_timestamp(s.time_at(t));
      out += ',';
      out += io::format_double(v);
      out += '\n';
    }
  }
  return out;
}

void write_synthetic_case(const std::filesystem::path& dir, std::uint64_t seed) {
  auto feeder = synthetic_feeder();
  io::write_json_file(dir / "points.geojson", gis::points_to_geojson(feeder.points));

  nlohmann::json lines = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  for (const auto& l : feeder.lines) {
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& v : l.vertices) coords.push_back({v.x, v.y});
    nlohmann::json props = {{"id", l.id}};
    props["standard_type"] = l.standard_type ? nlohmann::json(*l.standard_type) : nullptr;
    lines["features"].push_back({{"type", "Feature"},
                                 {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                                 {"properties", props}});
  }
  io::write_json_file(dir / "lines.geojson", lines);

  auto weeks = synthetic_meter_weeks(seed);
  io::write_text_file(dir / "meters_pre.csv",
                      defective_meter_csv(weeks.pre, {4, 3, 6, 0}, seed + 1));
  io::write_text_file(dir / "meters_hard.csv",
                      defective_meter_csv(weeks.hard, {3, 2, 4, 0}, seed + 2));
  io::write_text_file(dir / "meters_post.csv",
                      defective_meter_csv(weeks.post, {2, 2, 3, 1}, seed + 3));

  nlohmann::json config = {
      {"layers", {{"points", "points.geojson"}, {"lines", "lines.geojson"}}},
      {"repair", {{"tol", 0.01}, {"radius", 1.0}}},
      {"meters",
       {{"pre", "meters_pre.csv"}, {"hard", "meters_hard.csv"}, {"post", "meters_post.csv"}}},
      {"timeshift", {{"enabled", true}, {"period", "hard"}, {"per_day", 10}}},
      {"change", {{"epsilon", 1e-9}}},
      {"seed", seed},
      {"output_dir", "out"}};
  io::write_json_file(dir / "config.json", config);
}

namespace {

RawLayers small_base() {
  RawLayers b;
  b.points = {
      {"S", {0, 0}, Role::substation, {}},
      {"cp1", {30, 0}, Role::connection_point, {}},
      {"K", {60, 0}, Role::switch_cabinet, {}},
      {"cp2", {90, 0}, Role::connection_point, {}},
      {"cp3", {120, 0}, Role::connection_point, {}},
      {"c1", {30, 12}, Role::consumer, {}},
      {"c2", {90, 12}, Role::consumer, {}},
      {"c3", {120, 12}, Role::consumer, {}},
      {"c4", {120, -12}, Role::consumer, {}},
  };
  auto line = [](const char* id, std::vector<XY> v, const char* type) {
    return PolyLine{id, std::move(v), {}, std::string(type), {}, {}};
  };
  b.lines = {
      line("t1", {{0, 0}, {30, 0}}, kTrunkType),
      line("t2", {{30, 0}, {60, 0}}, kTrunkType),
      line("t3", {{60, 0}, {90, 0}}, kTrunkType),
      line("t4", {{90, 0}, {120, 0}}, kTrunkType),
      line("s1", {{30, 0}, {30, 12}}, kServiceType),
      line("s2", {{90, 0}, {90, 12}}, kServiceType),
      line("s3", {{120, 0}, {120, 12}}, kServiceType),
      line("s4", {{120, 0}, {120, -12}}, kServiceType),
  };
  return b;
}

PolyLine& line_of(RawLayers& l, const std::string& id) {
  return *std::find_if(l.lines.begin(), l.lines.end(), [&](const auto& x) { return x.id == id; });
}

void drop_line(RawLayers& l, const std::string& id) {
  std::erase_if(l.lines, [&](const auto& x) { return x.id == id; });
}

void drop_point(RawLayers& l, const std::string& id) {
  std::erase_if(l.points, [&](const auto& x) { return x.id == id; });
}

void add_copy(RawLayers& l, const std::string& id, const std::string& new_id) {
  auto p = *std::find_if(l.points.begin(), l.points.end(), [&](const auto& x) { return x.id == id; });
  p.id = new_id;
  l.points.push_back(p);
}

}  // namespace

std::vector<BrokenCase> broken_layer_corpus() {
  using EC = ErrorClass;
  std::vector<BrokenCase> out;
  auto add = [&](std::string name, std::set<EC> expected, auto&& edit) {
    auto l = small_base();
    edit(l);
    // Raw lines never carry resolved endpoints, so every case exercises this.
    expected.insert(EC::unknown_endpoint);
    out.push_back({std::move(name), std::move(l), std::move(expected)});
  };

  add("duplicate-consumer", {EC::redundant_points}, [](auto& l) { add_copy(l, "c2", "c2b"); });
  add("duplicate-connection-point", {EC::redundant_points},
      [](auto& l) { add_copy(l, "cp2", "cp2b"); });
  add("duplicate-substation", {EC::redundant_points}, [](auto& l) { add_copy(l, "S", "S-copy"); });
  add("trunk-as-one-polyline", {EC::polyline_continuity}, [](auto& l) {
    drop_line(l, "t2");
    line_of(l, "t1").vertices = {{0, 0}, {30, 0}, {60, 0}};
  });
  add("trunk-with-bend-through-point", {EC::polyline_continuity}, [](auto& l) {
    drop_line(l, "t4");
    line_of(l, "t3").vertices = {{60, 0}, {75, 0}, {90, 0}, {105, 0}, {120, 0}};
  });
  add("service-continues-trunk", {EC::polyline_continuity}, [](auto& l) {
    drop_line(l, "s3");
    line_of(l, "t4").vertices = {{90, 0}, {120, 0}, {120, 12}};
  });
  add("partially-resolved-endpoints", {EC::unknown_endpoint},
      [](auto& l) { line_of(l, "t2").from_node = "cp1"; });
  add("substation-gap", {EC::substation_disconnection},
      [](auto& l) { line_of(l, "t1").vertices.front() = {0.5, 0}; });
  add("substation-gap-diagonal", {EC::substation_disconnection},
      [](auto& l) { line_of(l, "t1").vertices.front() = {0.6, 0.6}; });
  add("cabinet-gap-incoming", {EC::switch_cabinet_disconnection},
      [](auto& l) { line_of(l, "t2").vertices.back() = {59.4, 0}; });
  add("cabinet-gap-outgoing", {EC::switch_cabinet_disconnection},
      [](auto& l) { line_of(l, "t3").vertices.front() = {60.7, 0}; });
  add("cabinet-gap-both-sides", {EC::switch_cabinet_disconnection}, [](auto& l) {
    line_of(l, "t2").vertices.back() = {59.5, 0.3};
    line_of(l, "t3").vertices.front() = {60.5, -0.3};
  });
  add("missing-type", {EC::unknown_attributes},
      [](auto& l) { line_of(l, "s2").standard_type.reset(); });
  add("missing-types-several", {EC::unknown_attributes}, [](auto& l) {
    line_of(l, "s1").standard_type.reset();
    line_of(l, "s3").standard_type.reset();
    line_of(l, "t4").standard_type.reset();
  });
  add("type-not-in-catalog", {EC::unknown_attributes},
      [](auto& l) { line_of(l, "t3").standard_type = "legacy cable 4x95"; });
  add("consumer-point-missing", {EC::missing_end_node}, [](auto& l) { drop_point(l, "c4"); });
  add("connection-point-missing", {EC::missing_end_node}, [](auto& l) { drop_point(l, "cp3"); });
  add("orphan-consumer", {EC::redundant_points},
      [](auto& l) { l.points.push_back({"c9", {200, 50}, Role::consumer, {}}); });
  add("orphan-connection-point", {EC::redundant_points},
      [](auto& l) { l.points.push_back({"cp9", {300, 0}, Role::connection_point, {}}); });
  add("gap-and-split", {EC::substation_disconnection, EC::polyline_continuity}, [](auto& l) {
    drop_line(l, "t2");
    line_of(l, "t1").vertices = {{0.5, 0}, {30, 0}, {60, 0}};
  });
  add("cabinet-gap-and-missing-type",
      {EC::switch_cabinet_disconnection, EC::unknown_attributes}, [](auto& l) {
        line_of(l, "t3").vertices.front() = {60.4, 0};
        line_of(l, "t3").standard_type.reset();
      });
  add("dangling-and-duplicate", {EC::missing_end_node, EC::redundant_points}, [](auto& l) {
    drop_point(l, "c4");
    add_copy(l, "c1", "c1-again");
  });
  add("all-classes",
      {EC::polyline_continuity, EC::substation_disconnection, EC::switch_cabinet_disconnection,
       EC::unknown_attributes, EC::missing_end_node, EC::redundant_points},
      [](auto& l) {
        add_copy(l, "c2", "c2-dup");
        drop_line(l, "t2");
        line_of(l, "t1").vertices = {{0.5, 0}, {30, 0}, {60, 0}};
        line_of(l, "t3").vertices.front() = {60.3, 0.2};
        line_of(l, "s1").standard_type.reset();
        drop_point(l, "c4");
        line_of(l, "t4").from_node = "cp2";
      });
  return out;
}

}  // namespace lvpq::fixtures
