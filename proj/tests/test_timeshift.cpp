#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "lvpq/error.hpp"
#include "lvpq/fixtures.hpp"
#include "lvpq/meter.hpp"
#include "lvpq/timeshift.hpp"
#include "oracles.hpp"

using namespace lvpq;
using namespace lvpq::timeshift;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr std::size_t kDay = meter::kIntervalsPerDay;

double total(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<double> random_day(std::mt19937_64& rng, std::size_t n = kDay) {
  std::uniform_real_distribution<double> u(50.0, 5000.0);
  std::vector<double> d(n);
  for (auto& x : d) x = u(rng);
  return d;
}

meter::MeterSeries user(std::string id, std::vector<double> v) {
  meter::MeterSeries s;
  s.meter_id = std::move(id);
  s.flags.assign(v.size(), meter::Flag::ok);
  s.values = std::move(v);
  return s;
}

}  // namespace

TEST_CASE("a single raised interval ranks first") {
  std::vector<double> pre(kDay, 100.0), cur(kDay, 100.0);
  cur[40] = 200.0;
  auto det = detect_intervals(pre, cur);
  REQUIRE(det.size() == 1);
  CHECK(det[0].t == 40);
  CHECK(det[0].change == 1.0);
  CHECK(det[0].surplus_w == 100.0);
}

TEST_CASE("falling demand selects nothing") {
  std::vector<double> pre(kDay, 100.0), cur(kDay, 90.0);
  CHECK(detect_intervals(pre, cur).empty());
}

TEST_CASE("at most ten per day, largest change first") {
  std::vector<double> pre(kDay, 100.0), cur(kDay, 100.0);
  for (std::size_t i = 0; i < 12; ++i) cur[5 * i + 3] = 100.0 + 10.0 * static_cast<double>(i + 1);
  auto det = detect_intervals(pre, cur);
  REQUIRE(det.size() == 10);
  for (std::size_t k = 0; k + 1 < det.size(); ++k) CHECK(det[k].change > det[k + 1].change);
  CHECK(det.front().t == 5 * 11 + 3);
  CHECK(det.back().t == 5 * 2 + 3);
}

TEST_CASE("zero reference demand is skipped and logged") {
  std::vector<double> pre(kDay, 100.0), cur(kDay, 100.0);
  pre[7] = 0.0;
  cur[7] = 50.0;
  std::vector<std::string> log;
  CHECK(detect_intervals(pre, cur, 10, &log).empty());
  CHECK(log.size() == 1);
  CHECK_THROWS_AS(detect_intervals(std::vector<double>(95, 1.0), std::vector<double>(95, 1.0)),
                  ShiftError);
}

TEST_CASE("unique minimum window is found") {
  std::vector<double> d(kDay, 500.0);
  for (std::size_t t = 50; t < 58; ++t) d[t] = 10.0;
  auto w = find_target_window(d, 80);
  REQUIRE(w);
  CHECK(w->start == 50);
  CHECK(w->sum == 80.0);
}

TEST_CASE("uniform demand picks the earliest legal start") {
  std::vector<double> d(kDay, 100.0);
  auto w = find_target_window(d, 60);
  REQUIRE(w);
  CHECK(w->start == 60 - 32);
}

TEST_CASE("near the start only later windows exist") {
  std::vector<double> d(kDay, 100.0);
  auto starts = candidate_starts(4, kDay);
  REQUIRE_FALSE(starts.empty());
  CHECK(starts.front() == 5);
  CHECK(starts.back() == 28);
  CHECK(find_target_window(d, 4)->start == 5);
  // Close to the horizon the later branch is truncated.
  auto tail = candidate_starts(kDay - 3, kDay);
  CHECK(tail.back() == kDay - 3 - 8);
  CHECK(candidate_starts(3, 7).empty());
}

TEST_CASE("window search matches an exhaustive scan on random days") {
  std::mt19937_64 rng(31337);
  for (int day = 0; day < 150; ++day) {
    auto d = random_day(rng);
    const std::size_t T = rng() % kDay;
    std::vector<bool> blocked(kDay, false);
    std::unique_ptr<bool[]> mask(new bool[kDay]());
    if (day % 2) {
      for (int k = 0; k < 6; ++k) {
        const auto b = rng() % kDay;
        blocked[b] = mask[b] = true;
      }
    }
    auto got = find_target_window(d, T, std::span<const bool>(mask.get(), kDay));
    auto want = oracle::scan_windows(d, T, blocked);
    INFO("day " << day << " T " << T);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->start == want->start);
      CHECK(got->sum == want->sum);
    }
  }
}

TEST_CASE("equal weights give equal increments") {
  std::vector<double> d(kDay, 100.0);
  d[60] = 180.0;
  auto e = distribute_surplus(d, 60, 20, 100.0);
  for (double x : e.increments) CHECK(x == 10.0);
  CHECK(d[60] == 100.0);
  for (std::size_t t = 20; t < 28; ++t) CHECK(d[t] == 110.0);
}

TEST_CASE("proportional increments") {
  std::vector<double> d(kDay, 0.0);
  const double w[8] = {1, 1, 1, 1, 2, 2, 2, 2};
  for (std::size_t i = 0; i < 8; ++i) d[30 + i] = w[i];
  d[70] = 150.0;
  auto e = distribute_surplus(d, 70, 30, 50.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(e.increments[i], WithinRel(100.0 / 12.0, 1e-14));
  for (std::size_t i = 4; i < 8; ++i) CHECK_THAT(e.increments[i], WithinRel(200.0 / 12.0, 1e-14));
  double added = 0.0;
  for (double x : e.increments) added += x;
  CHECK(added - e.surplus_w == 0.0);
}

TEST_CASE("an empty window splits evenly and is logged") {
  std::vector<double> d(kDay, 0.0);
  d[50] = 80.0;
  std::vector<std::string> log;
  auto e = distribute_surplus(d, 50, 10, 0.0, &log);
  CHECK(e.equal_split);
  for (double x : e.increments) CHECK(x == 10.0);
  CHECK(log.size() == 1);
  CHECK_THROWS_AS(distribute_surplus(d, 50, 45, 0.0), ShiftError);
}

TEST_CASE("plan properties over random weeks") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    auto pre = random_day(rng, 7 * kDay);
    std::vector<double> cur(pre.size());
    std::uniform_real_distribution<double> scale(0.8, 1.4);
    for (std::size_t t = 0; t < pre.size(); ++t) cur[t] = pre[t] * scale(rng);

    auto out = plan_time_shift(pre, cur);
    INFO("trial " << trial);
    // Detection count per day.
    for (std::size_t d = 0; d < 7; ++d) {
      std::size_t positive = 0, picked = 0;
      for (std::size_t i = 0; i < kDay; ++i) positive += cur[d * kDay + i] > pre[d * kDay + i];
      for (const auto& r : out.plan.detections) picked += r.day == d;
      CHECK(picked == std::min<std::size_t>(10, positive));
    }
    CHECK_THAT(total(out.shifted), WithinRel(total(cur), 1e-9));
    for (const auto& e : out.plan.entries) CHECK(out.shifted[e.t] == pre[e.t]);
    CHECK(replay_plan(cur, out.plan) == out.shifted);
  }
}

TEST_CASE("single-user profile follows the aggregate exactly") {
  const auto weeks = fixtures::synthetic_meter_weeks(3);
  const auto& p = weeks.pre[0];
  const auto& c = weeks.hard[0];
  auto out = plan_time_shift(p.values, c.values);
  REQUIRE_FALSE(out.plan.entries.empty());
  auto shifted = apply_plan(std::vector<meter::MeterSeries>{c}, out.plan);
  for (std::size_t t = 0; t < c.size(); ++t) {
    CHECK_THAT(shifted[0].values[t], WithinAbs(out.shifted[t], 1e-9 * c.values[t] + 1e-12));
  }
}

TEST_CASE("two users share the surplus by their demand at the source interval") {
  std::vector<double> a(kDay, 30.0), b(kDay, 70.0);
  a[60] = 60.0;
  b[60] = 140.0;
  std::vector<double> pre(kDay, 100.0), cur(kDay);
  for (std::size_t t = 0; t < kDay; ++t) cur[t] = a[t] + b[t];
  auto out = plan_time_shift(pre, cur);
  REQUIRE(out.plan.entries.size() == 1);
  const auto& e = out.plan.entries[0];
  CHECK(e.surplus_w == 100.0);
  auto shifted = apply_plan(std::vector<meter::MeterSeries>{user("a", a), user("b", b)}, out.plan);
  CHECK_THAT(a[60] - shifted[0].values[60], WithinRel(30.0, 1e-12));
  CHECK_THAT(b[60] - shifted[1].values[60], WithinRel(70.0, 1e-12));
  CHECK_THAT(total(shifted[0].values), WithinRel(total(a), 1e-12));
  CHECK_THAT(total(shifted[1].values), WithinRel(total(b), 1e-12));
}

TEST_CASE("per-user and aggregate energy is conserved on the fixture") {
  const auto weeks = fixtures::synthetic_meter_weeks(8);
  const auto pre = meter::aggregate(weeks.pre);
  const auto cur = meter::aggregate(weeks.hard);
  auto out = plan_time_shift(pre, cur);
  auto shifted = apply_plan(weeks.hard, out.plan);
  for (std::size_t m = 0; m < shifted.size(); ++m) {
    CHECK_THAT(total(shifted[m].values), WithinRel(total(weeks.hard[m].values), 1e-9));
    for (double v : shifted[m].values) CHECK(v >= 0.0);
  }
  const auto agg = meter::aggregate(shifted);
  CHECK_THAT(total(agg), WithinRel(total(cur), 1e-9));
  for (std::size_t t = 0; t < agg.size(); ++t) {
    CHECK_THAT(agg[t], WithinRel(out.shifted[t], 1e-9));
  }
}

TEST_CASE("profiles that do not match the plan are rejected") {
  std::vector<double> pre(kDay, 100.0), cur(kDay, 100.0);
  cur[60] = 200.0;
  auto out = plan_time_shift(pre, cur);
  std::vector<meter::MeterSeries> wrong = {user("a", std::vector<double>(kDay, 50.0))};
  CHECK_THROWS_AS(apply_plan(wrong, out.plan), ShiftError);
}

TEST_CASE("plan JSON round trip replays identically") {
  const auto weeks = fixtures::synthetic_meter_weeks(2);
  const auto pre = meter::aggregate(weeks.pre);
  const auto cur = meter::aggregate(weeks.hard);
  auto out = plan_time_shift(pre, cur);
  auto back = plan_from_json(nlohmann::json::parse(to_json(out.plan).dump()));
  REQUIRE(back.entries.size() == out.plan.entries.size());
  CHECK(replay_plan(cur, back) == out.shifted);
  CHECK(back.detections.size() == out.plan.detections.size());
  CHECK(to_json(back) == to_json(out.plan));
}
