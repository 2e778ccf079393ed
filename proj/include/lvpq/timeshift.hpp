#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lvpq/meter.hpp"

namespace lvpq::timeshift {

inline constexpr std::size_t kWindowSlots = 8;    // 2 h
inline constexpr std::size_t kLookBackFar = 32;   // window start >= T - 32
inline constexpr std::size_t kLookBackNear = 8;   // window start <= T - 8
inline constexpr std::size_t kLookAhead = 24;     // window start <= T + 24
inline constexpr std::size_t kDefaultPerDay = 10;

struct DetectionRecord {
  std::size_t day = 0;
  std::size_t interval_in_day = 0;
  std::size_t t = 0;        // global interval index
  double change = 0.0;      // (cur - pre) / pre
  double surplus_w = 0.0;   // cur - pre
};

/// Per day, the per_day intervals with the largest positive relative demand
/// change, sorted by change descending (ties: earlier interval first).
/// Intervals with pre == 0 are skipped and noted in log.
std::vector<DetectionRecord> detect_intervals(std::span<const double> pre,
                                              std::span<const double> cur,
                                              std::size_t per_day = kDefaultPerDay,
                                              std::vector<std::string>* log = nullptr);

/// Legal window starts for a surplus at T: [T-32, T-8] and [T+1, T+24],
/// dropping windows that would leave [0, horizon). Ascending.
std::vector<std::size_t> candidate_starts(std::size_t T, std::size_t horizon);

struct WindowChoice {
  std::size_t start = 0;
  double sum = 0.0;
};

/// Window start with the smallest 8-slot demand sum (ties: smaller start).
/// Windows covering a slot marked in `blocked` are not considered.
std::optional<WindowChoice> find_target_window(std::span<const double> demand, std::size_t T,
                                               std::span<const bool> blocked = {});

struct ShiftEntry {
  std::size_t t = 0;
  std::size_t window_start = 0;
  std::array<double, kWindowSlots> increments{};
  double surplus_w = 0.0;        // removed at t
  double target_w = 0.0;         // demand left at t (the reference demand)
  double demand_before_w = 0.0;  // working demand at t before the move
  double window_sum_w = 0.0;     // window demand the weights were taken from
  bool equal_split = false;
};

/// Moves demand[T] - target down to target and spreads it over the window
/// in proportion to the window's current demand (equal split if the window
/// is empty). Updates demand in place.
ShiftEntry distribute_surplus(std::vector<double>& demand, std::size_t T, std::size_t t_star,
                              double target, std::vector<std::string>* log = nullptr);

struct ShiftPlan {
  std::vector<DetectionRecord> detections;
  std::vector<ShiftEntry> entries;
  std::vector<std::string> log;
};

struct ShiftOutcome {
  ShiftPlan plan;
  std::vector<double> shifted;
};

/// Detection plus sequential shifting, chronological, on a continuously
/// updated working series.
ShiftOutcome plan_time_shift(std::span<const double> pre, std::span<const double> cur,
                             std::size_t per_day = kDefaultPerDay);

/// Applies the recorded moves to `initial`; reproduces plan_time_shift's
/// output bit for bit.
std::vector<double> replay_plan(std::span<const double> initial, const ShiftPlan& plan);

/// Apportions each move to end users by their share of demand at the
/// source interval; each user's removed energy follows the window weights.
std::vector<meter::MeterSeries> apply_plan(std::span<const meter::MeterSeries> profiles,
                                           const ShiftPlan& plan,
                                           std::vector<std::string>* log = nullptr);

nlohmann::json to_json(const ShiftPlan& plan);
ShiftPlan plan_from_json(const nlohmann::json& doc);

}  // namespace lvpq::timeshift
