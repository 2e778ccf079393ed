#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lvpq::meter {

using TimePoint = std::chrono::sys_seconds;

inline constexpr std::chrono::seconds kStep{15 * 60};
inline constexpr std::size_t kIntervalsPerDay = 96;

enum class Flag : std::uint8_t { ok, outlier, zero, missing, repaired };
std::string_view to_string(Flag flag);

/// One meter's active power on a regular 15-minute timeline. Missing
/// intervals hold NaN until repaired.
struct MeterSeries {
  std::string meter_id;
  TimePoint start{};
  std::vector<double> values;  // W
  std::vector<Flag> flags;

  std::size_t size() const { return values.size(); }
  TimePoint time_at(std::size_t i) const {
    return start + kStep * static_cast<std::int64_t>(i);
  }
};

/// Raw readings of one meter, possibly irregular or incomplete.
struct RawReading {
  TimePoint time{};
  double value = 0.0;
};

struct RawSeries {
  std::string meter_id;
  std::vector<RawReading> readings;
};

struct CleaningConfig {
  double outlier_factor = 10.0;       // k: outlier iff value > k * rolling median
  double max_flagged_fraction = 0.2;  // above this the series is irreparable
  std::size_t max_consecutive_flagged = 8;
  double donor_scale_low = 0.8;
  double donor_scale_high = 1.2;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Expected timeline shared by all meters of one period.
struct Timeline {
  TimePoint start{};
  std::size_t intervals = 0;
};

/// Snaps readings onto the timeline; absent intervals become missing.
/// Readings off the 15-minute grid or outside the timeline are rejected.
MeterSeries align(const RawSeries& raw, const Timeline& timeline);

/// Midnight of the earliest reading through the end of the day holding the
/// latest one.
Timeline infer_timeline(std::span<const RawSeries> raws);

struct FlagMask {
  std::vector<Flag> flags;
  std::size_t flagged = 0;
  std::size_t longest_run = 0;
  bool irreparable = false;
};

/// Rolling-median window: 48 intervals either side (24 h in total).
inline constexpr std::size_t kMedianHalfWindow = 48;

FlagMask flag_series(const MeterSeries& series, const CleaningConfig& config);

/// Forward-fills flagged intervals from the last good value, backfilling a
/// flagged head from the first good one. Irreparable series pass through
/// unchanged.
MeterSeries repair_series(const MeterSeries& series, const FlagMask& mask);

struct SubstitutionRecord {
  std::string target_id;
  std::string donor_id;
  double factor = 1.0;
};

/// Replaces an irreparable series with a scaled copy of a random clean donor.
/// The draw is a pure function of (config.rng_seed, target id).
MeterSeries substitute_profile(const MeterSeries& target, std::span<const MeterSeries> donors,
                               const CleaningConfig& config,
                               SubstitutionRecord* record = nullptr);

struct CleaningLogEntry {
  std::string meter_id;
  std::string interval;  // ISO timestamp, or "*" for whole-series actions
  std::string flag;
  std::string action;
};

struct CleaningResult {
  std::vector<MeterSeries> series;
  std::vector<CleaningLogEntry> log;
  std::vector<SubstitutionRecord> substitutions;
};

/// Two-phase cleaning: flag+repair every meter (parallel over meters), then
/// substitute irreparable meters from the pool of clean donors.
CleaningResult clean_meters(std::span<const MeterSeries> series, const CleaningConfig& config);

/// Serial reference for clean_meters.
CleaningResult clean_meters_serial(std::span<const MeterSeries> series,
                                   const CleaningConfig& config);

/// Per-interval sum over meters. All series must share one timeline.
std::vector<double> aggregate(std::span<const MeterSeries> series);

}  // namespace lvpq::meter
