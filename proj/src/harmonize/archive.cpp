#include "elkg/archive.hpp"

#include <algorithm>
#include <tuple>

#include "elkg/error.hpp"
#include "elkg/parallel.hpp"
#include "elkg/text.hpp"

namespace elkg::archive {

namespace fs = std::filesystem;
using nlohmann::json;
using harmonize::HouseholdRecord;

std::string serialize_series(const TimeSeries& series) {
  std::string out;
  out.reserve(32 + series.size() * 30);
  out += kSeriesHeader;
  out.push_back('\n');
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_rfc3339(series.timestamps[i]);
    out.push_back(',');
    out += format_fixed_trimmed(series.watts[i], 3);
    out.push_back('\n');
  }
  return out;
}

TimeSeries parse_series(const std::string& text, const std::string& path) {
  TimeSeries s;
  std::size_t pos = 0;
  std::size_t line = 0;
  auto next_line = [&](std::string_view& out) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    out = std::string_view(text).substr(pos, end - pos);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos = end + 1;
    ++line;
    return true;
  };
  std::string_view l;
  if (!next_line(l) || l != kSeriesHeader) {
    throw FormatError(path, std::string("expected header '") + kSeriesHeader + "'");
  }
  s.reserve(text.size() / 28);
  while (next_line(l)) {
    if (l.empty()) continue;
    const std::size_t comma = l.find(',');
    auto t = comma == std::string_view::npos ? std::nullopt
                                             : parse_rfc3339(l.substr(0, comma));
    auto w = comma == std::string_view::npos ? std::nullopt
                                             : parse_double(l.substr(comma + 1));
    if (!t || !w) {
      throw FormatError(path, "line " + std::to_string(line) + ": malformed row");
    }
    if (!s.empty() && *t <= s.timestamps.back()) {
      throw FormatError(path, "line " + std::to_string(line) +
                                  ": timestamps not strictly increasing");
    }
    s.push_back(*t, *w);
  }
  return s;
}

namespace {

void write_series(const fs::path& path, const TimeSeries& s) {
  write_file(path, serialize_series(s));
}

}  // namespace

void write_household(const HouseholdRecord& r, const fs::path& root) {
  const fs::path dir = root / r.dataset / r.household;
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);

  json meta;
  meta["dataset"] = r.dataset;
  meta["household"] = r.household;
  meta["timezone"] = r.timezone;
  meta["submetered"] = r.submetered;
  meta["sampling_period_s"] = r.sampling_period_s;
  meta["aggregate"] = r.aggregate.has_value();
  json appliances = json::array();
  for (const auto& [name, series] : r.appliances) appliances.push_back(name);
  meta["appliances"] = appliances;
  json quarantine = json::array();
  for (const auto& [key, q] : r.quarantine) {
    quarantine.push_back({{"file", key}, {"raw_name", q.raw_name}, {"reason", q.reason}});
  }
  meta["quarantine"] = quarantine;
  json raw = json::object();
  for (const auto& [k, v] : r.metadata) raw[k] = v;
  meta["metadata"] = raw;
  write_file(dir / "metadata.json", meta.dump(2) + "\n");

  if (r.aggregate) write_series(dir / "aggregate.csv", *r.aggregate);
  for (const auto& [name, series] : r.appliances) {
    write_series(dir / (name + ".csv"), series);
  }
  for (const auto& [key, q] : r.quarantine) {
    write_series(dir / "quarantine" / (key + ".csv"), q.series);
  }
}

void write_archive(const std::vector<HouseholdRecord>& records, const fs::path& root,
                   unsigned threads) {
  fs::create_directories(root);
  parallel_for(records.size(), threads,
               [&](std::size_t i) { write_household(records[i], root); });
}

std::vector<HouseholdRef> list_households(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw FormatError(root.string(), "archive root not found");
  std::vector<HouseholdRef> out;
  for (const auto& ds : fs::directory_iterator(root)) {
    if (!ds.is_directory()) continue;
    for (const auto& hh : fs::directory_iterator(ds.path())) {
      if (!hh.is_directory()) continue;
      out.push_back({ds.path().filename().string(), hh.path().filename().string(), hh.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dataset, a.household) < std::tie(b.dataset, b.household);
  });
  return out;
}

HouseholdRecord read_household(const fs::path& dir) {
  const fs::path meta_path = dir / "metadata.json";
  std::error_code ec;
  if (!fs::is_regular_file(meta_path, ec)) {
    throw FormatError(dir.string(), "household directory has no metadata.json");
  }
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::parse_error& e) {
    throw FormatError(meta_path.string(), e.what());
  }
  HouseholdRecord r;
  try {
    r.dataset = meta.at("dataset").get<std::string>();
    r.household = meta.at("household").get<std::string>();
    r.timezone = meta.at("timezone").get<std::string>();
    r.submetered = meta.at("submetered").get<bool>();
    r.sampling_period_s = meta.at("sampling_period_s").get<double>();
    for (const auto& [k, v] : meta.at("metadata").items()) r.metadata[k] = v.get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string(), e.what());
  }
  if (r.household != dir.filename().string() ||
      r.dataset != dir.parent_path().filename().string()) {
    throw FormatError(meta_path.string(), "identifiers do not match directory names");
  }

  auto read_series = [&](const fs::path& p) {
    if (!fs::is_regular_file(p, ec)) throw FormatError(p.string(), "series file missing");
    return parse_series(read_file(p), p.string());
  };
  try {
    if (meta.at("aggregate").get<bool>()) r.aggregate = read_series(dir / "aggregate.csv");
    for (const auto& name : meta.at("appliances")) {
      const std::string n = name.get<std::string>();
      r.appliances.emplace(n, read_series(dir / (n + ".csv")));
    }
    for (const auto& q : meta.at("quarantine")) {
      const std::string key = q.at("file").get<std::string>();
      r.quarantine.emplace(key, harmonize::QuarantinedSeries{
                                    q.at("raw_name").get<std::string>(),
                                    q.at("reason").get<std::string>(),
                                    read_series(dir / "quarantine" / (key + ".csv"))});
    }
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string(), e.what());
  }
  return r;
}

std::vector<HouseholdRecord> read_archive(const fs::path& root, unsigned threads) {
  const auto refs = list_households(root);
  std::vector<HouseholdRecord> out(refs.size());
  parallel_for(refs.size(), threads,
               [&](std::size_t i) { out[i] = read_household(refs[i].dir); });
  return out;
}

}  // namespace elkg::archive
