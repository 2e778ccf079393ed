#include "lvpq/timeshift.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "lvpq/error.hpp"

namespace lvpq::timeshift {

using meter::kIntervalsPerDay;

std::vector<DetectionRecord> detect_intervals(std::span<const double> pre,
                                              std::span<const double> cur, std::size_t per_day,
                                              std::vector<std::string>* log) {
  if (pre.size() != cur.size()) throw ShiftError("pre and current series differ in length");
  if (pre.size() % kIntervalsPerDay != 0) {
    throw ShiftError("series must cover whole days of 96 intervals");
  }
  std::vector<DetectionRecord> out;
  const std::size_t days = pre.size() / kIntervalsPerDay;
  for (std::size_t d = 0; d < days; ++d) {
    std::vector<DetectionRecord> day;
    for (std::size_t i = 0; i < kIntervalsPerDay; ++i) {
      const std::size_t t = d * kIntervalsPerDay + i;
      if (!(pre[t] > 0.0)) {
        if (log) log->push_back("interval " + std::to_string(t) + " skipped: reference demand 0");
        continue;
      }
      const double change = (cur[t] - pre[t]) / pre[t];
      if (change > 0.0) day.push_back({d, i, t, change, cur[t] - pre[t]});
    }
    std::stable_sort(day.begin(), day.end(), [](const auto& a, const auto& b) {
      return a.change > b.change;
    });
    if (day.size() > per_day) day.resize(per_day);
    out.insert(out.end(), day.begin(), day.end());
  }
  return out;
}

std::vector<std::size_t> candidate_starts(std::size_t T, std::size_t horizon) {
  std::vector<std::size_t> out;
  if (horizon < kWindowSlots) return out;
  const std::size_t last_start = horizon - kWindowSlots;
  if (T >= kLookBackNear) {
    const std::size_t lo = T >= kLookBackFar ? T - kLookBackFar : 0;
    for (std::size_t t = lo; t <= T - kLookBackNear && t <= last_start; ++t) out.push_back(t);
  }
  for (std::size_t t = T + 1; t <= T + kLookAhead && t <= last_start; ++t) out.push_back(t);
  return out;
}

std::optional<WindowChoice> find_target_window(std::span<const double> demand, std::size_t T,
                                               std::span<const bool> blocked) {
  if (T >= demand.size()) throw ShiftError("interval outside the series");
  if (!blocked.empty() && blocked.size() != demand.size()) {
    throw ShiftError("blocked mask does not match the series");
  }
  std::optional<WindowChoice> best;
  for (std::size_t t : candidate_starts(T, demand.size())) {
    bool legal = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < kWindowSlots; ++i) {
      if (!blocked.empty() && blocked[t + i]) legal = false;
      sum += demand[t + i];
    }
    if (!legal) continue;
    if (!best || sum < best->sum) best = WindowChoice{t, sum};
  }
  return best;
}

ShiftEntry distribute_surplus(std::vector<double>& demand, std::size_t T, std::size_t t_star,
                              double target, std::vector<std::string>* log) {
  if (T >= demand.size() || t_star + kWindowSlots > demand.size()) {
    throw ShiftError("shift outside the series");
  }
  if (t_star <= T && T < t_star + kWindowSlots) throw ShiftError("window covers the source");
  ShiftEntry e;
  e.t = T;
  e.window_start = t_star;
  e.target_w = target;
  e.demand_before_w = demand[T];
  e.surplus_w = demand[T] - target;
  if (!(e.surplus_w > 0.0)) throw ShiftError("no positive surplus at interval " + std::to_string(T));

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < kWindowSlots; ++i) weight_sum += demand[t_star + i];
  e.window_sum_w = weight_sum;
  double assigned = 0.0;
  if (weight_sum > 0.0) {
    for (std::size_t i = 0; i + 1 < kWindowSlots; ++i) {
      e.increments[i] = e.surplus_w * demand[t_star + i] / weight_sum;
      assigned += e.increments[i];
    }
  } else {
    e.equal_split = true;
    if (log) {
      log->push_back("interval " + std::to_string(T) + ": empty window at " +
                     std::to_string(t_star) + ", equal split");
    }
    for (std::size_t i = 0; i + 1 < kWindowSlots; ++i) {
      e.increments[i] = e.surplus_w / static_cast<double>(kWindowSlots);
      assigned += e.increments[i];
    }
  }
  // Last slot takes the remainder so the increments sum to the surplus.
  e.increments[kWindowSlots - 1] = e.surplus_w - assigned;

  for (std::size_t i = 0; i < kWindowSlots; ++i) demand[t_star + i] += e.increments[i];
  demand[T] = target;
  return e;
}

ShiftOutcome plan_time_shift(std::span<const double> pre, std::span<const double> cur,
                             std::size_t per_day) {
  ShiftOutcome out;
  out.plan.detections = detect_intervals(pre, cur, per_day, &out.plan.log);
  auto order = out.plan.detections;
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

  out.shifted.assign(cur.begin(), cur.end());
  // Plain bool buffer: std::vector<bool> cannot back a span.
  std::unique_ptr<bool[]> blocked(new bool[cur.size()]());
  for (const auto& rec : order) {
    const double surplus = out.shifted[rec.t] - pre[rec.t];
    if (!(surplus > 0.0)) {
      out.plan.log.push_back("interval " + std::to_string(rec.t) +
                             " skipped: no surplus left after earlier moves");
      continue;
    }
    auto window = find_target_window(out.shifted, rec.t,
                                     std::span<const bool>(blocked.get(), cur.size()));
    if (!window) {
      out.plan.log.push_back("interval " + std::to_string(rec.t) +
                             " skipped: no feasible window inside the horizon");
      continue;
    }
    out.plan.entries.push_back(
        distribute_surplus(out.shifted, rec.t, window->start, pre[rec.t], &out.plan.log));
    blocked[rec.t] = true;
  }
  return out;
}

std::vector<double> replay_plan(std::span<const double> initial, const ShiftPlan& plan) {
  std::vector<double> s(initial.begin(), initial.end());
  for (const auto& e : plan.entries) {
    if (e.t >= s.size() || e.window_start + kWindowSlots > s.size()) {
      throw ShiftError("plan entry outside the series");
    }
    for (std::size_t i = 0; i < kWindowSlots; ++i) s[e.window_start + i] += e.increments[i];
    s[e.t] = e.target_w;
  }
  return s;
}

std::vector<meter::MeterSeries> apply_plan(std::span<const meter::MeterSeries> profiles,
                                           const ShiftPlan& plan, std::vector<std::string>* log) {
  std::vector<meter::MeterSeries> out(profiles.begin(), profiles.end());
  if (out.empty()) return out;
  const auto n = out.front().size();
  for (const auto& p : out) {
    if (p.size() != n) throw ShiftError("profiles do not share a timeline");
  }
  for (const auto& e : plan.entries) {
    if (e.t >= n || e.window_start + kWindowSlots > n) {
      throw ShiftError("plan entry outside the profile timeline");
    }
    double total = 0.0;
    for (const auto& p : out) total += p.values[e.t];
    if (!(total > 0.0)) {
      if (log) log->push_back("interval " + std::to_string(e.t) + " skipped: zero aggregate");
      continue;
    }
    if (std::abs(total - e.demand_before_w) > 1e-6 * std::max(1.0, std::abs(total))) {
      throw ShiftError("profiles do not add up to the series the plan was computed on (interval " +
                       std::to_string(e.t) + ")");
    }
    for (auto& p : out) {
      const double share = p.values[e.t] / total;
      p.values[e.t] = std::max(0.0, p.values[e.t] - e.surplus_w * share);
      for (std::size_t i = 0; i < kWindowSlots; ++i) {
        p.values[e.window_start + i] += e.increments[i] * share;
      }
    }
  }
  return out;
}

nlohmann::json to_json(const ShiftPlan& plan) {
  using nlohmann::json;
  json det = json::array();
  for (const auto& d : plan.detections) {
    det.push_back({{"day", d.day},
                   {"interval_in_day", d.interval_in_day},
                   {"t", d.t},
                   {"change", d.change},
                   {"surplus_w", d.surplus_w}});
  }
  json entries = json::array();
  for (const auto& e : plan.entries) {
    entries.push_back({{"t", e.t},
                       {"window_start", e.window_start},
                       {"increments_w", e.increments},
                       {"surplus_w", e.surplus_w},
                       {"target_w", e.target_w},
                       {"demand_before_w", e.demand_before_w},
                       {"window_sum_w", e.window_sum_w},
                       {"equal_split", e.equal_split}});
  }
  return {{"detections", det}, {"entries", entries}, {"log", plan.log}};
}

ShiftPlan plan_from_json(const nlohmann::json& doc) {
  ShiftPlan plan;
  for (const auto& d : doc.at("detections")) {
    plan.detections.push_back({d.at("day").get<std::size_t>(),
                               d.at("interval_in_day").get<std::size_t>(),
                               d.at("t").get<std::size_t>(), d.at("change").get<double>(),
                               d.at("surplus_w").get<double>()});
  }
  for (const auto& j : doc.at("entries")) {
    ShiftEntry e;
    e.t = j.at("t").get<std::size_t>();
    e.window_start = j.at("window_start").get<std::size_t>();
    e.increments = j.at("increments_w").get<std::array<double, kWindowSlots>>();
    e.surplus_w = j.at("surplus_w").get<double>();
    e.target_w = j.at("target_w").get<double>();
    e.demand_before_w = j.at("demand_before_w").get<double>();
    e.window_sum_w = j.at("window_sum_w").get<double>();
    e.equal_split = j.at("equal_split").get<bool>();
    plan.entries.push_back(e);
  }
  plan.log = doc.value("log", std::vector<std::string>{});
  return plan;
}

}  // namespace lvpq::timeshift
