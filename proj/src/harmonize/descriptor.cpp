#include <algorithm>

#include "elkg/error.hpp"
#include "elkg/harmonize.hpp"
#include "elkg/text.hpp"
#include "elkg/time.hpp"

namespace elkg::harmonize {

using nlohmann::json;

std::string_view to_string(Layout layout) {
  switch (layout) {
    case Layout::file_per_appliance: return "one-file-per-appliance";
    case Layout::file_per_house: return "one-file-per-house";
    case Layout::multi_house_file: return "multi-house-file";
  }
  return "?";
}

bool DatasetDescriptor::is_submetered(const std::string& household) const {
  switch (submetering) {
    case Submetering::all: return true;
    case Submetering::none: return false;
    case Submetering::partial: return submetered_households.count(household) > 0;
  }
  return false;
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("descriptor key '") + key + "': " + e.what());
  }
}

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ConfigError(std::string("descriptor: missing required string key '") +
                      key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

DatasetDescriptor descriptor_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("descriptor: expected a JSON object");
  DatasetDescriptor d;
  d.name = require_string(j, "name");
  if (d.name != slug(d.name)) {
    throw ConfigError("descriptor '" + d.name +
                      "': name may only contain letters, digits, '_', '-', '.'");
  }

  const std::string layout = require_string(j, "layout");
  if (layout == "one-file-per-appliance") {
    d.layout = Layout::file_per_appliance;
  } else if (layout == "one-file-per-house") {
    d.layout = Layout::file_per_house;
  } else if (layout == "multi-house-file") {
    d.layout = Layout::multi_house_file;
  } else {
    throw ConfigError("descriptor '" + d.name + "': unknown layout '" + layout + "'");
  }

  const std::string delim = get_or<std::string>(j, "delimiter", ",");
  if (delim.size() != 1) {
    throw ConfigError("descriptor '" + d.name + "': delimiter must be one character");
  }
  d.delimiter = delim[0];
  d.file_extension = get_or<std::string>(j, "file_extension", d.file_extension);
  d.timestamp_column = get_or<std::string>(j, "timestamp_column", d.timestamp_column);
  d.timestamp_format = get_or<std::string>(j, "timestamp_format", d.timestamp_format);
  d.timezone = get_or<std::string>(j, "timezone", d.timezone);
  Zone check(d.timezone);  // throws ConfigError on unknown zone

  const std::string unit = get_or<std::string>(j, "unit", "W");
  if (unit == "W") {
    d.unit = PowerUnit::watts;
  } else if (unit == "kW") {
    d.unit = PowerUnit::kilowatts;
  } else {
    throw ConfigError("descriptor '" + d.name + "': unit must be \"W\" or \"kW\"");
  }

  d.sampling_period_s = get_or<double>(j, "sampling_period_s", 0.0);
  if (!(d.sampling_period_s > 0.0)) {
    throw ConfigError("descriptor '" + d.name + "': sampling_period_s must be > 0");
  }

  d.value_column = get_or<std::string>(j, "value_column", d.value_column);
  d.value_columns = get_or<std::vector<std::string>>(j, "value_columns", {});
  d.household_column = get_or<std::string>(j, "household_column", d.household_column);
  d.aggregate_names =
      get_or<std::vector<std::string>>(j, "aggregate_names", d.aggregate_names);

  const json sub = j.value("submetered", json(true));
  if (sub.is_boolean()) {
    d.submetering = sub.get<bool>() ? Submetering::all : Submetering::none;
  } else if (sub.is_array()) {
    d.submetering = Submetering::partial;
    for (const auto& h : sub) {
      if (!h.is_string()) {
        throw ConfigError("descriptor '" + d.name +
                          "': submetered list must contain household names");
      }
      d.submetered_households.insert(h.get<std::string>());
    }
  } else {
    throw ConfigError("descriptor '" + d.name +
                      "': submetered must be true, false, or a list of households");
  }

  d.metadata_file = get_or<std::string>(j, "metadata_file", "");
  if (auto it = j.find("reference"); it != j.end()) d.reference = *it;

  static const std::vector<std::string> kKnown{
      "name", "layout", "delimiter", "file_extension", "timestamp_column",
      "timestamp_format", "timezone", "unit", "sampling_period_s", "value_column",
      "value_columns", "household_column", "aggregate_names", "submetered",
      "metadata_file", "reference", "description"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
      throw ConfigError("descriptor '" + d.name + "': unknown key '" + key + "'");
    }
  }
  return d;
}

DatasetDescriptor load_descriptor(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return descriptor_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<DatasetDescriptor> load_descriptors(const std::filesystem::path& dir) {
  std::vector<DatasetDescriptor> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw ConfigError("descriptor directory not found: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      out.push_back(load_descriptor(entry.path()));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].name == out[i - 1].name) {
      throw ConfigError("duplicate dataset descriptor '" + out[i].name + "'");
    }
  }
  return out;
}

}  // namespace elkg::harmonize
