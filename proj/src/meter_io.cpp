#include "lvpq/meter_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lvpq/error.hpp"
#include "lvpq/io.hpp"

namespace lvpq::meter {

using nlohmann::json;

TimePoint parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*[T ]%2d:%2d:%2d%n", &y, &mo, &d, &h, &mi, &sec,
                  &consumed) != 6) {
    throw MeterError("bad timestamp '" + s + "'");
  }
  const std::string_view rest = std::string_view(s).substr(static_cast<std::size_t>(consumed));
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
    throw MeterError("unsupported timezone suffix in '" + s + "' (UTC only)");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) throw MeterError("bad timestamp '" + s + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\"");
  const auto e = s.find_last_not_of(" \t\"");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

std::vector<RawSeries> read_meter_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MeterError("meter CSV is empty");
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  auto col = [&](const char* name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw MeterError(std::string("meter CSV lacks column '") + name + "'");
  };
  const auto c_id = col("meter_id");
  const auto c_ts = col("timestamp");
  const auto c_p = col("active_power_w");

  std::vector<RawSeries> out;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw MeterError("meter CSV line " + std::to_string(line_no) + " has too few fields");
    }
    const std::string id = trim(cells[c_id]);
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back(RawSeries{id, {}});
    RawReading r;
    r.time = parse_timestamp(trim(cells[c_ts]));
    const auto p = trim(cells[c_p]);
    r.value = p.empty() ? std::nan("") : io::parse_double(p);
    out[it->second].readings.push_back(r);
  }
  return out;
}

std::vector<RawSeries> read_meter_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeterError("cannot open meter CSV '" + path.string() + "'");
  return read_meter_csv(in);
}

std::vector<MeterSeries> load_meter_csv(const std::filesystem::path& path) {
  const auto raws = read_meter_csv(path);
  const auto timeline = infer_timeline(raws);
  std::vector<MeterSeries> out;
  out.reserve(raws.size());
  for (const auto& r : raws) out.push_back(align(r, timeline));
  return out;
}

std::string meter_csv(std::span<const MeterSeries> series) {
  std::string out = "meter_id,timestamp,active_power_w\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += s.meter_id;
      out += ',';
      out += format_timestamp(s.time_at(i));
      out += ',';
      if (!std::isnan(s.values[i])) out += io::format_double(s.values[i]);
      out += '\n';
    }
  }
  return out;
}

std::string cleaning_log_jsonl(std::span<const CleaningLogEntry> log) {
  std::string out;
  for (const auto& e : log) {
    json j = {{"meter_id", e.meter_id}, {"interval", e.interval}, {"flag", e.flag},
              {"action", e.action}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

CleaningConfig cleaning_config_from_json(const json& doc) {
  CleaningConfig c;
  c.outlier_factor = doc.value("outlier_factor", c.outlier_factor);
  c.max_flagged_fraction = doc.value("max_flagged_fraction", c.max_flagged_fraction);
  c.max_consecutive_flagged = doc.value("max_consecutive_flagged", c.max_consecutive_flagged);
  if (doc.contains("donor_scale_range")) {
    const auto& r = doc["donor_scale_range"];
    c.donor_scale_low = r.at(0).get<double>();
    c.donor_scale_high = r.at(1).get<double>();
  }
  c.rng_seed = doc.value("rng_seed", c.rng_seed);
  c.validate();
  return c;
}

json to_json(const CleaningConfig& c) {
  return {{"outlier_factor", c.outlier_factor},
          {"max_flagged_fraction", c.max_flagged_fraction},
          {"max_consecutive_flagged", c.max_consecutive_flagged},
          {"donor_scale_range", {c.donor_scale_low, c.donor_scale_high}},
          {"rng_seed", c.rng_seed}};
}

}  // namespace lvpq::meter
