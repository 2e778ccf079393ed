#include "lvpq/meter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lvpq/error.hpp"
#include "lvpq/meter_io.hpp"

namespace lvpq::meter {

std::string_view to_string(Flag flag) {
  switch (flag) {
    case Flag::ok: return "ok";
    case Flag::outlier: return "outlier";
    case Flag::zero: return "zero";
    case Flag::missing: return "missing";
    case Flag::repaired: return "repaired";
  }
  return "unknown";
}

void CleaningConfig::validate() const {
  if (!(outlier_factor > 1.0)) throw MeterError("outlier_factor must exceed 1");
  if (!(max_flagged_fraction > 0.0 && max_flagged_fraction <= 1.0)) {
    throw MeterError("max_flagged_fraction must lie in (0, 1]");
  }
  if (max_consecutive_flagged == 0) throw MeterError("max_consecutive_flagged must be positive");
  if (!(donor_scale_low > 0.0 && donor_scale_low <= donor_scale_high) ||
      !std::isfinite(donor_scale_high)) {
    throw MeterError("donor scale range must satisfy 0 < low <= high < inf");
  }
}

MeterSeries align(const RawSeries& raw, const Timeline& timeline) {
  MeterSeries out;
  out.meter_id = raw.meter_id;
  out.start = timeline.start;
  out.values.assign(timeline.intervals, std::numeric_limits<double>::quiet_NaN());
  out.flags.assign(timeline.intervals, Flag::missing);
  std::vector<bool> seen(timeline.intervals, false);
  for (const auto& r : raw.readings) {
    const auto offset = r.time - timeline.start;
    if (offset.count() < 0 || offset % kStep != std::chrono::seconds{0}) {
      throw MeterError("meter '" + raw.meter_id + "': reading at " + format_timestamp(r.time) +
                       " is off the 15-minute grid");
    }
    const auto idx = static_cast<std::size_t>(offset / kStep);
    if (idx >= timeline.intervals) {
      throw MeterError("meter '" + raw.meter_id + "': reading at " + format_timestamp(r.time) +
                       " lies beyond the timeline");
    }
    if (seen[idx]) continue;  // first reading wins on duplicates
    seen[idx] = true;
    out.values[idx] = r.value;
    out.flags[idx] = std::isnan(r.value) ? Flag::missing : Flag::ok;
  }
  return out;
}

Timeline infer_timeline(std::span<const RawSeries> raws) {
  using namespace std::chrono;
  bool any = false;
  TimePoint lo{}, hi{};
  for (const auto& r : raws) {
    for (const auto& rd : r.readings) {
      if (!any || rd.time < lo) lo = rd.time;
      if (!any || rd.time > hi) hi = rd.time;
      any = true;
    }
  }
  if (!any) throw MeterError("no meter readings");
  const auto day_start = floor<days>(lo);
  const auto span = hi - TimePoint(day_start);
  const auto n_days = static_cast<std::size_t>(span / days{1}) + 1;
  return Timeline{TimePoint(day_start), n_days * kIntervalsPerDay};
}

namespace {

bool is_good(double v) { return std::isfinite(v) && v > 0.0; }

double median_of(std::vector<double>& v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

// splitmix64 finalizer, used to mix the seed with a meter id hash.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct PerMeter {
  MeterSeries series;
  FlagMask mask;
  std::vector<CleaningLogEntry> log;
};

PerMeter clean_one(const MeterSeries& s, const CleaningConfig& config) {
  PerMeter out;
  out.mask = flag_series(s, config);
  out.series = repair_series(s, out.mask);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Flag f = out.mask.flags[i];
    if (f == Flag::ok) continue;
    std::string action = out.mask.irreparable ? "pending_substitution" : "forward_fill";
    if (!out.mask.irreparable) {
      bool has_prev = false;
      for (std::size_t j = i; j-- > 0;) {
        if (out.mask.flags[j] == Flag::ok) {
          has_prev = true;
          break;
        }
      }
      if (!has_prev) action = "backfill";
    }
    out.log.push_back({s.meter_id, format_timestamp(s.time_at(i)), std::string(to_string(f)),
                       action});
  }
  return out;
}

CleaningResult finish(std::vector<PerMeter> per, const CleaningConfig& config) {
  CleaningResult result;
  std::vector<MeterSeries> donors;
  for (const auto& p : per) {
    if (!p.mask.irreparable) donors.push_back(p.series);
  }
  for (auto& p : per) {
    for (auto& e : p.log) result.log.push_back(std::move(e));
    if (!p.mask.irreparable) {
      result.series.push_back(std::move(p.series));
      continue;
    }
    SubstitutionRecord rec;
    result.series.push_back(substitute_profile(p.series, donors, config, &rec));
    result.log.push_back({rec.target_id, "*", "irreparable",
                          "substitute donor=" + rec.donor_id +
                              " factor=" + std::to_string(rec.factor)});
    result.substitutions.push_back(rec);
  }
  return result;
}

}  // namespace

FlagMask flag_series(const MeterSeries& series, const CleaningConfig& config) {
  config.validate();
  const std::size_t n = series.size();
  if (series.flags.size() != n) throw MeterError("flag vector does not match series length");
  FlagMask mask;
  mask.flags.assign(n, Flag::ok);
  std::vector<double> window;
  window.reserve(2 * kMedianHalfWindow);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = series.values[i];
    if (series.flags[i] == Flag::missing || std::isnan(v)) {
      mask.flags[i] = Flag::missing;
      continue;
    }
    if (v < 0.0) {
      mask.flags[i] = Flag::outlier;
      continue;
    }
    if (v == 0.0) {
      mask.flags[i] = Flag::zero;
      continue;
    }
    window.clear();
    const std::size_t lo = i >= kMedianHalfWindow ? i - kMedianHalfWindow : 0;
    const std::size_t hi = std::min(n - 1, i + kMedianHalfWindow);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i && series.flags[j] != Flag::missing && is_good(series.values[j])) {
        window.push_back(series.values[j]);
      }
    }
    if (!window.empty() && v > config.outlier_factor * median_of(window)) {
      mask.flags[i] = Flag::outlier;
    }
  }

  std::size_t run = 0;
  for (Flag f : mask.flags) {
    if (f == Flag::ok) {
      run = 0;
      continue;
    }
    ++mask.flagged;
    mask.longest_run = std::max(mask.longest_run, ++run);
  }
  mask.irreparable =
      n == 0 || mask.flagged == n ||
      static_cast<double>(mask.flagged) > config.max_flagged_fraction * static_cast<double>(n) ||
      mask.longest_run > config.max_consecutive_flagged;
  return mask;
}

MeterSeries repair_series(const MeterSeries& series, const FlagMask& mask) {
  if (mask.flags.size() != series.size()) throw MeterError("mask does not match series length");
  MeterSeries out = series;
  out.flags = mask.flags;
  if (mask.irreparable) return out;

  std::size_t first_good = series.size();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (mask.flags[i] == Flag::ok) {
      first_good = i;
      break;
    }
  }
  if (first_good == series.size()) return out;

  double last = series.values[first_good];
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (mask.flags[i] == Flag::ok) {
      last = series.values[i];
      continue;
    }
    out.values[i] = last;  // before first_good this is the backfill value
    out.flags[i] = Flag::repaired;
  }
  return out;
}

MeterSeries substitute_profile(const MeterSeries& target, std::span<const MeterSeries> donors,
                               const CleaningConfig& config, SubstitutionRecord* record) {
  config.validate();
  std::vector<const MeterSeries*> pool;
  for (const auto& d : donors) {
    if (d.meter_id == target.meter_id || d.size() != target.size()) continue;
    const bool clean = std::all_of(d.values.begin(), d.values.end(),
                                   [](double v) { return std::isfinite(v) && v >= 0.0; });
    if (clean) pool.push_back(&d);
  }
  if (pool.empty()) {
    throw MeterError("meter '" + target.meter_id + "' is irreparable and no clean donor exists");
  }
  std::mt19937_64 rng(mix(config.rng_seed ^ mix(fnv1a(target.meter_id))));
  const auto pick = std::min(pool.size() - 1,
                             static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(pool.size())));
  const double factor =
      config.donor_scale_low + (config.donor_scale_high - config.donor_scale_low) * unit_draw(rng);
  const MeterSeries& donor = *pool[pick];

  MeterSeries out;
  out.meter_id = target.meter_id;
  out.start = target.start;
  out.values.resize(donor.size());
  for (std::size_t i = 0; i < donor.size(); ++i) out.values[i] = donor.values[i] * factor;
  out.flags.assign(donor.size(), Flag::repaired);
  if (record) *record = SubstitutionRecord{target.meter_id, donor.meter_id, factor};
  return out;
}

CleaningResult clean_meters_serial(std::span<const MeterSeries> series,
                                   const CleaningConfig& config) {
  config.validate();
  std::vector<PerMeter> per;
  per.reserve(series.size());
  for (const auto& s : series) per.push_back(clean_one(s, config));
  return finish(std::move(per), config);
}

CleaningResult clean_meters(std::span<const MeterSeries> series, const CleaningConfig& config) {
  config.validate();
  std::vector<PerMeter> per(series.size());
  std::vector<std::string> errors(series.size());
  const auto n = static_cast<long long>(series.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    try {
      per[i] = clean_one(series[i], config);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw MeterError(e);
  }
  return finish(std::move(per), config);
}

std::vector<double> aggregate(std::span<const MeterSeries> series) {
  if (series.empty()) return {};
  const auto n = series.front().size();
  std::vector<double> total(n, 0.0);
  for (const auto& s : series) {
    if (s.size() != n) throw MeterError("meter '" + s.meter_id + "' has a different timeline");
    for (std::size_t i = 0; i < n; ++i) total[i] += s.values[i];
  }
  return total;
}

}  // namespace lvpq::meter
