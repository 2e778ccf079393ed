#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lvpq/gis.hpp"
#include "lvpq/meter.hpp"

// Synthetic data shaped like a small residential LV feeder. None of it is
// measured data; it exists so the full chain can run and be tested.
namespace lvpq::fixtures {

struct RawLayers {
  std::vector<gis::GeoPoint> points;
  std::vector<gis::PolyLine> lines;
};

/// 65 GIS points (1 substation, 21 connection points, 43 consumers) plus one
/// duplicated consumer, digitized with the usual defects: trunk polylines
/// running through connection points, a trunk start 0.5 m off the
/// substation, and service lines without a standard type. Repairs to 64
/// segments; the model adds the source bus for 66 nodes.
RawLayers synthetic_feeder();

struct MeterWeeks {
  std::vector<meter::MeterSeries> pre;
  std::vector<meter::MeterSeries> hard;
  std::vector<meter::MeterSeries> post;
};

inline constexpr std::size_t kWeekIntervals = 7 * meter::kIntervalsPerDay;

/// Clean 672-interval residential profiles for meters M01..M43. hard is pre
/// scaled by 1 + U[0.15, 0.30] per interval, post by 1 + U[0.05, 0.15].
MeterWeeks synthetic_meter_weeks(std::uint64_t seed);

struct DefectSpec {
  std::size_t outliers = 0;
  std::size_t zeros = 0;
  std::size_t missing = 0;
  std::size_t long_gap_meters = 0;  // meters given a 20-interval hole
};

/// Meter CSV text with defects injected at seeded random positions.
std::string defective_meter_csv(std::span<const meter::MeterSeries> series,
                                const DefectSpec& defects, std::uint64_t seed);

/// Writes points/lines GeoJSON, three meter CSVs and config.json into dir.
void write_synthetic_case(const std::filesystem::path& dir, std::uint64_t seed);

struct BrokenCase {
  std::string name;
  RawLayers layers;
  std::set<gis::ErrorClass> expected;  // classes the case deliberately contains
};

/// Small broken layer pairs, together covering every error class.
std::vector<BrokenCase> broken_layer_corpus();

}  // namespace lvpq::fixtures
