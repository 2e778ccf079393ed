#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lvpq/meter.hpp"

namespace lvpq::meter {

/// ISO-8601 "YYYY-MM-DDTHH:MM:SS", optionally with a trailing Z or +00:00.
TimePoint parse_timestamp(std::string_view text);
std::string format_timestamp(TimePoint t);

/// CSV with header meter_id,timestamp,active_power_w. An empty power field
/// counts as a missing reading. Meters are returned in first-appearance order.
std::vector<RawSeries> read_meter_csv(std::istream& in);
std::vector<RawSeries> read_meter_csv(const std::filesystem::path& path);

/// Reads and aligns all meters onto one timeline (inferred when not given).
std::vector<MeterSeries> load_meter_csv(const std::filesystem::path& path);

std::string meter_csv(std::span<const MeterSeries> series);

/// One JSON object per line: {meter_id, interval, flag, action}.
std::string cleaning_log_jsonl(std::span<const CleaningLogEntry> log);

CleaningConfig cleaning_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CleaningConfig& config);

}  // namespace lvpq::meter
