#include <algorithm>
#include <cmath>
#include <mutex>
#include <utility>

#include "elkg/error.hpp"
#include "elkg/harmonize.hpp"
#include "elkg/parallel.hpp"
#include "elkg/text.hpp"

namespace elkg::harmonize {

namespace fs = std::filesystem;

std::string slug(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

namespace {

using Columns = std::vector<std::pair<std::string, std::vector<RawSample>>>;

struct RawHousehold {
  std::string id;
  Columns columns;
  std::vector<FileIssue> file_errors;
  std::size_t rows_read = 0;
};

class TimestampParser {
 public:
  explicit TimestampParser(const DatasetDescriptor& d)
      : format_(d.timestamp_format), zone_(d.timezone) {}

  std::optional<Millis> operator()(std::string_view text) const {
    text = trim(text);
    if (format_ == "unix_s") {
      auto v = parse_double(text);
      if (!v) return std::nullopt;
      return static_cast<Millis>(std::llround(*v * 1000.0));
    }
    if (format_ == "unix_ms") {
      if (auto v = parse_int(text)) return *v;
      auto v = parse_double(text);
      if (!v) return std::nullopt;
      return static_cast<Millis>(std::llround(*v));
    }
    if (format_ == "rfc3339") return parse_rfc3339(text);
    return zone_.parse_local(text, format_);
  }

 private:
  std::string format_;
  Zone zone_;
};

std::optional<double> parse_reading(std::string_view cell, double factor) {
  auto v = parse_double(cell);
  if (!v) return std::nullopt;
  return quantize_watts(*v * factor);
}

struct Header {
  std::vector<std::string> names;
  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    return std::nullopt;
  }
};

/// Reads the header of a CSV file. Returns false and records an issue when
/// the file cannot be read.
bool open_csv(const fs::path& path, const DatasetDescriptor& d,
              std::optional<CsvReader>& reader, Header& header,
              std::vector<FileIssue>& issues) {
  try {
    reader.emplace(read_file(path), d.delimiter);
    std::vector<std::string> fields;
    if (!reader->next(fields)) {
      issues.push_back({path.string(), "empty file"});
      return false;
    }
    header.names.clear();
    for (auto& f : fields) header.names.emplace_back(trim(f));
    return true;
  } catch (const FormatError& e) {
    issues.push_back({path.string(), e.what()});
  } catch (const ParseError& e) {
    issues.push_back({path.string(), e.what()});
  }
  return false;
}

std::size_t require_column(const Header& h, const std::string& name,
                           const DatasetDescriptor& d, const fs::path& path) {
  auto idx = h.find(name);
  if (!idx) {
    throw ConfigError("dataset '" + d.name + "': column '" + name +
                      "' not found in " + path.string());
  }
  return *idx;
}

/// Value columns of a wide file: the configured list, or every column that
/// is not the timestamp/household column.
std::vector<std::pair<std::string, std::size_t>> value_columns(
    const Header& h, const DatasetDescriptor& d, const fs::path& path,
    std::initializer_list<std::size_t> skip) {
  std::vector<std::pair<std::string, std::size_t>> out;
  if (!d.value_columns.empty()) {
    for (const auto& name : d.value_columns) {
      out.emplace_back(name, require_column(h, name, d, path));
    }
    return out;
  }
  for (std::size_t i = 0; i < h.names.size(); ++i) {
    if (std::find(skip.begin(), skip.end(), i) != skip.end()) continue;
    if (h.names[i].empty()) continue;
    out.emplace_back(h.names[i], i);
  }
  return out;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_metadata_file(const fs::path& p, const fs::path& root,
                      const DatasetDescriptor& d) {
  return !d.metadata_file.empty() &&
         p.lexically_normal() == (root / d.metadata_file).lexically_normal();
}

std::vector<fs::path> list_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

RawHousehold read_appliance_files(const fs::path& dir, const DatasetDescriptor& d) {
  RawHousehold h;
  h.id = dir.filename().string();
  const TimestampParser parse_ts(d);
  const double factor = d.unit_factor();
  for (const auto& path : list_files(dir, d.file_extension)) {
    std::optional<CsvReader> reader;
    Header header;
    if (!open_csv(path, d, reader, header, h.file_errors)) continue;
    const std::size_t ts_col = require_column(header, d.timestamp_column, d, path);
    const std::size_t v_col = require_column(header, d.value_column, d, path);
    std::vector<RawSample> samples;
    std::vector<std::string> f;
    try {
      while (reader->next(f)) {
        if (f.size() == 1 && trim(f[0]).empty()) continue;
        ++h.rows_read;
        auto t = ts_col < f.size() ? parse_ts(f[ts_col]) : std::nullopt;
        if (!t) {
          samples.push_back({0, std::nullopt});
          continue;
        }
        samples.push_back({*t, v_col < f.size() ? parse_reading(f[v_col], factor)
                                                 : std::nullopt});
      }
    } catch (const ParseError& e) {
      h.file_errors.push_back({path.string(), e.what()});
      continue;
    }
    h.columns.emplace_back(path.stem().string(), std::move(samples));
  }
  return h;
}

RawHousehold read_house_file(const fs::path& path, const DatasetDescriptor& d) {
  RawHousehold h;
  h.id = path.stem().string();
  std::optional<CsvReader> reader;
  Header header;
  if (!open_csv(path, d, reader, header, h.file_errors)) return h;
  const std::size_t ts_col = require_column(header, d.timestamp_column, d, path);
  const auto cols = value_columns(header, d, path, {ts_col});
  const TimestampParser parse_ts(d);
  const double factor = d.unit_factor();
  std::vector<std::vector<RawSample>> data(cols.size());
  std::vector<std::string> f;
  try {
    while (reader->next(f)) {
      if (f.size() == 1 && trim(f[0]).empty()) continue;
      ++h.rows_read;
      auto t = ts_col < f.size() ? parse_ts(f[ts_col]) : std::nullopt;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const std::size_t idx = cols[c].second;
        if (!t) {
          data[c].push_back({0, std::nullopt});
        } else {
          data[c].push_back({*t, idx < f.size() ? parse_reading(f[idx], factor)
                                                : std::nullopt});
        }
      }
    }
  } catch (const ParseError& e) {
    h.file_errors.push_back({path.string(), e.what()});
    return h;
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    h.columns.emplace_back(cols[c].first, std::move(data[c]));
  }
  return h;
}

std::vector<RawHousehold> read_multi_house_files(const fs::path& root,
                                                 const DatasetDescriptor& d,
                                                 std::vector<FileIssue>& issues) {
  std::map<std::string, std::map<std::string, std::vector<RawSample>>> by_house;
  std::map<std::string, std::size_t> rows;
  const TimestampParser parse_ts(d);
  const double factor = d.unit_factor();
  for (const auto& path : list_files(root, d.file_extension)) {
    if (is_metadata_file(path, root, d)) continue;
    std::optional<CsvReader> reader;
    Header header;
    if (!open_csv(path, d, reader, header, issues)) continue;
    const std::size_t ts_col = require_column(header, d.timestamp_column, d, path);
    const std::size_t hh_col = require_column(header, d.household_column, d, path);
    const auto cols = value_columns(header, d, path, {ts_col, hh_col});
    std::vector<std::string> f;
    try {
      while (reader->next(f)) {
        if (f.size() == 1 && trim(f[0]).empty()) continue;
        if (hh_col >= f.size()) continue;
        const std::string house(trim(f[hh_col]));
        if (house.empty()) continue;
        ++rows[house];
        auto t = ts_col < f.size() ? parse_ts(f[ts_col]) : std::nullopt;
        auto& series = by_house[house];
        for (const auto& [name, idx] : cols) {
          series[name].push_back(
              t ? RawSample{*t, idx < f.size() ? parse_reading(f[idx], factor)
                                               : std::nullopt}
                : RawSample{0, std::nullopt});
        }
      }
    } catch (const ParseError& e) {
      issues.push_back({path.string(), e.what()});
    }
  }
  std::vector<RawHousehold> out;
  for (auto& [house, series] : by_house) {
    RawHousehold h;
    h.id = house;
    h.rows_read = rows[house];
    for (auto& [name, samples] : series) h.columns.emplace_back(name, std::move(samples));
    out.push_back(std::move(h));
  }
  return out;
}

std::map<std::string, std::map<std::string, std::string>> read_metadata(
    const fs::path& root, const DatasetDescriptor& d, std::vector<FileIssue>& issues) {
  std::map<std::string, std::map<std::string, std::string>> out;
  if (d.metadata_file.empty()) return out;
  const fs::path path = root / d.metadata_file;
  std::optional<CsvReader> reader;
  Header header;
  if (!open_csv(path, d, reader, header, issues)) return out;
  const std::size_t hh = require_column(header, "household", d, path);
  std::vector<std::string> f;
  while (reader->next(f)) {
    if (hh >= f.size()) continue;
    auto& meta = out[slug(trim(f[hh]))];
    for (std::size_t i = 0; i < f.size() && i < header.names.size(); ++i) {
      if (i == hh) continue;
      const std::string v(trim(f[i]));
      if (!v.empty()) meta[header.names[i]] = v;
    }
  }
  return out;
}

struct Built {
  std::optional<HouseholdRecord> record;
  ParseReport report;
};

Built build_record(RawHousehold raw, const DatasetDescriptor& d,
                   const SynonymMap& synonyms) {
  Built b;
  b.report.file_errors = std::move(raw.file_errors);
  b.report.rows_read = raw.rows_read;

  HouseholdRecord rec;
  rec.dataset = d.name;
  rec.household = slug(raw.id);
  rec.timezone = d.timezone;
  rec.submetered = d.is_submetered(raw.id);
  rec.sampling_period_s = d.sampling_period_s;

  std::vector<std::string> aggregate_keys;
  for (const auto& a : d.aggregate_names) aggregate_keys.push_back(normalize_appliance_key(a));

  std::sort(raw.columns.begin(), raw.columns.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  auto quarantine = [&](const std::string& raw_name, std::string reason, TimeSeries s) {
    std::string key = slug(raw_name);
    for (int n = 2; rec.quarantine.count(key); ++n) key = slug(raw_name) + "_" + std::to_string(n);
    rec.quarantine.emplace(key, QuarantinedSeries{raw_name, std::move(reason), std::move(s)});
  };

  for (auto& [raw_name, samples] : raw.columns) {
    const std::size_t before = samples.size();
    TimeSeries series = clean_series(std::move(samples));
    b.report.rows_dropped += before - series.size();
    if (series.empty()) {
      b.report.empty_series.push_back({d.name + "/" + raw.id + "/" + raw_name,
                                       "no valid readings after cleaning"});
      continue;
    }
    const std::string key = normalize_appliance_key(raw_name);
    if (std::find(aggregate_keys.begin(), aggregate_keys.end(), key) != aggregate_keys.end()) {
      if (!rec.aggregate) {
        rec.aggregate = std::move(series);
      } else {
        quarantine(raw_name, "duplicate", std::move(series));
      }
      continue;
    }
    const Canonicalized c = synonyms.canonicalize(raw_name);
    switch (c.kind) {
      case NameClass::canonical:
        if (rec.appliances.count(c.name)) {
          quarantine(raw_name, "duplicate", std::move(series));
        } else {
          rec.appliances.emplace(c.name, std::move(series));
        }
        break;
      case NameClass::excluded:
        ++b.report.excluded_names[raw_name];
        quarantine(raw_name, "excluded", std::move(series));
        break;
      case NameClass::unknown:
        ++b.report.unknown_names[c.name];
        quarantine(raw_name, "unknown", std::move(series));
        break;
    }
  }
  if (rec.series_count() == 0) {
    b.report.omitted_households.push_back(raw.id);
    return b;
  }
  b.record = std::move(rec);
  return b;
}

void merge_report(ParseReport& into, ParseReport&& from) {
  for (auto& e : from.file_errors) into.file_errors.push_back(std::move(e));
  for (auto& e : from.omitted_households) into.omitted_households.push_back(std::move(e));
  for (auto& e : from.empty_series) into.empty_series.push_back(std::move(e));
  for (auto& [k, v] : from.unknown_names) into.unknown_names[k] += v;
  for (auto& [k, v] : from.excluded_names) into.excluded_names[k] += v;
  into.rows_read += from.rows_read;
  into.rows_dropped += from.rows_dropped;
}

}  // namespace

ParseResult parse_dataset(const DatasetDescriptor& d, const fs::path& raw_root,
                          const SynonymMap& synonyms, unsigned threads) {
  std::error_code ec;
  if (!fs::is_directory(raw_root, ec)) {
    throw ConfigError("dataset '" + d.name + "': raw root not found: " +
                      raw_root.string());
  }
  ParseResult result;
  auto metadata = read_metadata(raw_root, d, result.report.file_errors);

  // Each unit of work yields one raw household.
  std::vector<fs::path> units;
  std::vector<RawHousehold> multi;
  switch (d.layout) {
    case Layout::file_per_appliance:
      units = list_dirs(raw_root);
      break;
    case Layout::file_per_house:
      units = list_files(raw_root, d.file_extension);
      if (!d.metadata_file.empty()) {
        std::erase_if(units, [&](const fs::path& p) {
          return is_metadata_file(p, raw_root, d);
        });
      }
      break;
    case Layout::multi_house_file:
      multi = read_multi_house_files(raw_root, d, result.report.file_errors);
      break;
  }
  const std::size_t n = d.layout == Layout::multi_house_file ? multi.size() : units.size();

  std::vector<Built> built(n);
  parallel_for(n, threads, [&](std::size_t i) {
    RawHousehold raw;
    switch (d.layout) {
      case Layout::file_per_appliance: raw = read_appliance_files(units[i], d); break;
      case Layout::file_per_house: raw = read_house_file(units[i], d); break;
      case Layout::multi_house_file: raw = std::move(multi[i]); break;
    }
    built[i] = build_record(std::move(raw), d, synonyms);
  });

  for (auto& b : built) {
    if (b.record) {
      if (auto it = metadata.find(b.record->household); it != metadata.end()) {
        b.record->metadata = it->second;
      }
      result.records.push_back(std::move(*b.record));
    }
    merge_report(result.report, std::move(b.report));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return a.household < b.household; });
  for (std::size_t i = 1; i < result.records.size(); ++i) {
    if (result.records[i].household == result.records[i - 1].household) {
      throw ConfigError("dataset '" + d.name + "': household identifier '" +
                        result.records[i].household + "' is not unique");
    }
  }
  return result;
}

}  // namespace elkg::harmonize
