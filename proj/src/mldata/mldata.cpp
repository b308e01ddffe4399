#include "elkg/mldata.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <tuple>

#include "elkg/error.hpp"
#include "elkg/kernels.hpp"
#include "elkg/parallel.hpp"
#include "elkg/text.hpp"

namespace elkg::mldata {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void SynthConfig::validate() const {
  if (count_min < 1) throw ConfigError("count_min must be >= 1");
  if (count_max < count_min) throw ConfigError("count_max must be >= count_min");
  if (!(count_stddev >= 0.0) || !std::isfinite(count_mean)) {
    throw ConfigError("count_mean must be finite and count_stddev >= 0");
  }
  if (!(missing_cap >= 0.0 && missing_cap <= 1.0)) throw ConfigError("missing_cap must be in [0,1]");
  if (!(activity_floor_w >= 0.0)) throw ConfigError("activity_floor_w must be >= 0");
  if (!(ceiling_w > activity_floor_w)) throw ConfigError("ceiling_w must exceed activity_floor_w");
  if (dataset_size == 0) throw ConfigError("dataset_size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0,1)");
  }
}

SynthConfig SynthConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("synth config must be an object");
  SynthConfig c;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "count_mean") c.count_mean = v.get<double>();
      else if (k == "count_stddev") c.count_stddev = v.get<double>();
      else if (k == "count_min") c.count_min = v.get<int>();
      else if (k == "count_max") c.count_max = v.get<int>();
      else if (k == "missing_cap") c.missing_cap = v.get<double>();
      else if (k == "activity_floor_w") c.activity_floor_w = v.get<double>();
      else if (k == "ceiling_w") c.ceiling_w = v.get<double>();
      else if (k == "dataset_size") c.dataset_size = v.get<std::size_t>();
      else if (k == "train_fraction") c.train_fraction = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k != "comment") throw ConfigError("unknown synth key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

json SynthConfig::to_json() const {
  return {{"count_mean", count_mean},
          {"count_stddev", count_stddev},
          {"count_min", count_min},
          {"count_max", count_max},
          {"missing_cap", missing_cap},
          {"activity_floor_w", activity_floor_w},
          {"ceiling_w", ceiling_w},
          {"dataset_size", dataset_size},
          {"train_fraction", train_fraction},
          {"seed", seed}};
}

std::pair<std::size_t, std::size_t> split_counts(std::size_t dataset_size, double train_fraction) {
  const auto train = static_cast<std::size_t>(
      std::llround(static_cast<double>(dataset_size) * train_fraction));
  const std::size_t t = std::min(train, dataset_size);
  return {t, dataset_size - t};
}

// ---------------------------------------------------------------------------
// Pool

json to_json(const PoolReport& r) {
  json excluded = json::array();
  for (const auto& e : r.excluded) {
    excluded.push_back({{"dataset", e.dataset},
                        {"household", e.household},
                        {"sampling_period_s", e.sampling_period_s},
                        {"reason", "sampling period above 8 s"}});
  }
  return {{"excluded", excluded},
          {"segments", r.segments},
          {"kept", r.kept},
          {"dropped_missing", r.dropped_missing},
          {"dropped_inactive", r.dropped_inactive},
          {"dropped_ceiling", r.dropped_ceiling},
          {"skipped_series", r.skipped_series}};
}

Verdict judge(const Window& w, const SynthConfig& cfg, bool apply_ceiling) {
  const double missing = static_cast<double>(w.missing) / static_cast<double>(kWindowLength);
  if (missing > cfg.missing_cap) return Verdict::missing;
  const auto mm = kernels::minmax(w.values);
  if (mm.max < cfg.activity_floor_w) return Verdict::inactive;
  if (apply_ceiling && kernels::count_above(w.values, cfg.ceiling_w) > 0) return Verdict::ceiling;
  return Verdict::kept;
}

std::vector<Window> segment_series(const TimeSeries& series, const std::string& appliance) {
  std::vector<Window> out;
  if (series.empty()) return out;
  TimeSeries clamped = series;
  kernels::clamp_negative(clamped.watts);
  const TimeSeries bins = harmonize::resample(clamped, kGridMs);
  if (bins.empty()) return out;
  const Millis anchor = bins.timestamps.front();
  const auto count = static_cast<std::size_t>((bins.timestamps.back() - anchor) / kWindowSpanMs) + 1;
  out.resize(count);
  for (std::size_t s = 0; s < count; ++s) {
    out[s].appliance = appliance;
    out[s].start = anchor + static_cast<Millis>(s) * kWindowSpanMs;
    out[s].values.assign(kWindowLength, 0.0);
    out[s].missing = kWindowLength;
  }
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const Millis off = bins.timestamps[i] - anchor;
    Window& w = out[static_cast<std::size_t>(off / kWindowSpanMs)];
    w.values[static_cast<std::size_t>((off % kWindowSpanMs) / kGridMs)] = bins.watts[i];
    --w.missing;
  }
  return out;
}

Pool prepare_appliance_pool(const std::vector<harmonize::HouseholdRecord>& records,
                            const harmonize::SynonymMap& synonyms, const SynthConfig& cfg,
                            PoolReport& report, unsigned threads) {
  std::vector<const harmonize::HouseholdRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->dataset, a->household) < std::tie(b->dataset, b->household);
  });

  struct Job {
    const TimeSeries* series;
    std::string appliance;
  };
  std::vector<Job> jobs;
  for (const auto* r : sorted) {
    if (r->sampling_period_s > 8.0) {
      if (!r->appliances.empty()) {
        report.excluded.push_back({r->dataset, r->household, r->sampling_period_s});
      }
      continue;
    }
    for (const auto& [name, series] : r->appliances) {
      if (!synonyms.class_index(name)) {
        ++report.skipped_series;
        continue;
      }
      jobs.push_back({&series, name});
    }
  }

  struct Outcome {
    std::vector<Window> kept;
    std::array<std::size_t, 4> counts{};
  };
  std::vector<Outcome> outcomes(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    for (auto& w : segment_series(*jobs[i].series, jobs[i].appliance)) {
      const Verdict v = judge(w, cfg);
      ++outcomes[i].counts[static_cast<std::size_t>(v)];
      if (v == Verdict::kept) outcomes[i].kept.push_back(std::move(w));
    }
  });

  Pool pool;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& o = outcomes[i];
    report.segments += o.counts[0] + o.counts[1] + o.counts[2] + o.counts[3];
    report.kept += o.counts[static_cast<std::size_t>(Verdict::kept)];
    report.dropped_missing += o.counts[static_cast<std::size_t>(Verdict::missing)];
    report.dropped_inactive += o.counts[static_cast<std::size_t>(Verdict::inactive)];
    report.dropped_ceiling += o.counts[static_cast<std::size_t>(Verdict::ceiling)];
    auto& dst = pool[jobs[i].appliance];
    dst.insert(dst.end(), o.kept.begin(), o.kept.end());
  }
  std::erase_if(pool, [](const auto& kv) { return kv.second.empty(); });
  return pool;
}

// ---------------------------------------------------------------------------
// Random draws

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ index);
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
  while (true) {
    const std::uint64_t r = engine_();
    if (r >= reject_below) return r % n;
  }
}

double Rng::normal(double mean, double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

std::vector<std::string> pool_names(const Pool& pool) {
  std::vector<std::string> names;
  for (const auto& [name, windows] : pool) {
    if (!windows.empty()) names.push_back(name);
  }
  return names;
}

std::size_t bit_of(const std::vector<std::string>& classes, const std::string& name) {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) throw ConfigError("appliance '" + name + "' is not an ML class");
  const auto bit = static_cast<std::size_t>(it - classes.begin());
  if (bit >= kClassCount) throw ConfigError("class list longer than 64 entries");
  return bit;
}

WindowSample normalized_sample(const std::vector<double>& values, std::uint64_t label) {
  std::vector<double> norm(values.size());
  kernels::minmax_normalize(values, norm);
  WindowSample s;
  s.input.resize(values.size());
  kernels::to_float(norm, s.input);
  s.label = label;
  return s;
}

}  // namespace

std::vector<double> aggregate_components(const Pool& pool, const std::vector<Component>& parts) {
  std::vector<double> acc(kWindowLength, 0.0);
  for (const auto& c : parts) {
    const auto& w = pool.at(c.appliance).at(c.window);
    kernels::add_into(acc, w.values);
  }
  return acc;
}

SynthResult synth_household(const Pool& pool, const std::vector<std::string>& classes,
                            const SynthConfig& cfg, Rng& rng) {
  const auto names = pool_names(pool);
  if (names.empty()) throw InsufficientDataError("appliance pool has no windows");
  SynthResult r;
  long long k = std::llround(rng.normal(cfg.count_mean, cfg.count_stddev));
  k = std::clamp<long long>(k, cfg.count_min, cfg.count_max);
  if (k > static_cast<long long>(names.size())) {
    k = static_cast<long long>(names.size());
    r.clipped = true;
  }
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  std::vector<std::size_t> idx(names.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const std::string& name = names[idx[i]];
    r.components.push_back({name, static_cast<std::size_t>(rng.below(pool.at(name).size()))});
  }
  std::sort(r.components.begin(), r.components.end(),
            [](const Component& a, const Component& b) { return a.appliance < b.appliance; });
  std::uint64_t label = 0;
  for (const auto& c : r.components) label |= std::uint64_t{1} << bit_of(classes, c.appliance);
  r.aggregate = aggregate_components(pool, r.components);
  r.sample = normalized_sample(r.aggregate, label);
  return r;
}

// ---------------------------------------------------------------------------
// Window file

namespace {

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
  }
}

template <class T>
T get_le(std::string_view b, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  }
  return static_cast<T>(v);
}

void write_stream(std::ofstream& out, const std::string& bytes, const std::filesystem::path& path) {
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string(), "write failed");
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string(), "cannot open for writing");
  return out;
}

}  // namespace

std::string encode_header(std::uint64_t records) {
  std::string h = "EKGW";
  put_le<std::uint16_t>(h, kFormatVersion);
  put_le<std::uint32_t>(h, static_cast<std::uint32_t>(kWindowLength));
  put_le<std::uint16_t>(h, static_cast<std::uint16_t>(kClassCount));
  put_le<std::uint64_t>(h, records);
  return h;
}

void append_record(std::string& out, const WindowSample& s) {
  if (s.input.size() != kWindowLength) {
    throw FormatError("window", "sample length " + std::to_string(s.input.size()) + " != 2688");
  }
  for (float f : s.input) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  put_le<std::uint64_t>(out, s.label);
}

void write_windows(const std::vector<WindowSample>& samples, const std::filesystem::path& path) {
  std::string bytes = encode_header(samples.size());
  bytes.reserve(kHeaderBytes + samples.size() * kRecordBytes);
  for (const auto& s : samples) append_record(bytes, s);
  write_file(path, bytes);
}

std::vector<WindowSample> decode_windows(std::string_view b, const std::string& origin) {
  if (b.size() < kHeaderBytes) throw FormatError(origin, "shorter than the window file header");
  if (b.substr(0, 4) != "EKGW") throw FormatError(origin, "bad magic (expected EKGW)");
  const auto version = get_le<std::uint16_t>(b, 4);
  if (version != kFormatVersion) {
    throw FormatError(origin, "unsupported version " + std::to_string(version));
  }
  const auto len = get_le<std::uint32_t>(b, 6);
  const auto classes = get_le<std::uint16_t>(b, 10);
  if (len != kWindowLength || classes != kClassCount) {
    throw FormatError(origin, "dimensions " + std::to_string(len) + "x" + std::to_string(classes) +
                                  " (expected 2688x64)");
  }
  const auto count = get_le<std::uint64_t>(b, 12);
  if ((b.size() - kHeaderBytes) / kRecordBytes != count ||
      (b.size() - kHeaderBytes) % kRecordBytes != 0) {
    throw FormatError(origin, "size does not match record_count " + std::to_string(count));
  }
  std::vector<WindowSample> out(count);
  std::size_t at = kHeaderBytes;
  for (auto& s : out) {
    s.input.resize(kWindowLength);
    for (auto& f : s.input) {
      f = std::bit_cast<float>(get_le<std::uint32_t>(b, at));
      at += 4;
    }
    s.label = get_le<std::uint64_t>(b, at);
    at += 8;
  }
  return out;
}

std::vector<WindowSample> read_windows(const std::filesystem::path& path) {
  return decode_windows(read_file(path), path.string());
}

namespace {

json format_json() {
  return {{"magic", "EKGW"},
          {"version", kFormatVersion},
          {"sample_len", kWindowLength},
          {"n_classes", kClassCount},
          {"header_bytes", kHeaderBytes},
          {"record_bytes", kRecordBytes},
          {"endianness", "little"}};
}

}  // namespace

void write_sidecar(const std::filesystem::path& window_file, const std::vector<std::string>& classes,
                   const SynthConfig& cfg, std::size_t records, const std::string& split) {
  json j{{"format", format_json()},
         {"classes", classes},
         {"seed", cfg.seed},
         {"config", cfg.to_json()},
         {"records", records},
         {"split", split}};
  write_file(window_file.string() + ".json", j.dump(2) + "\n");
}

DatasetReport build_dataset(const Pool& pool, const std::vector<std::string>& classes,
                            const SynthConfig& cfg, const std::filesystem::path& dir,
                            unsigned threads) {
  cfg.validate();
  const auto names = pool_names(pool);
  if (names.empty()) throw InsufficientDataError("appliance pool has no windows; nothing written");
  for (const auto& n : names) bit_of(classes, n);

  DatasetReport rep;
  std::tie(rep.train, rep.test) = split_counts(cfg.dataset_size, cfg.train_fraction);
  rep.train_file = dir / "train.ekgw";
  rep.test_file = dir / "test.ekgw";
  auto train = open_output(rep.train_file);
  auto test = open_output(rep.test_file);
  write_stream(train, encode_header(rep.train), rep.train_file);
  write_stream(test, encode_header(rep.test), rep.test_file);

  constexpr std::size_t kChunk = 1024;
  std::vector<SynthResult> chunk;
  for (std::size_t begin = 0; begin < cfg.dataset_size; begin += kChunk) {
    const std::size_t n = std::min(kChunk, cfg.dataset_size - begin);
    chunk.assign(n, {});
    parallel_for(n, threads, [&](std::size_t i) {
      Rng rng(sample_seed(cfg.seed, begin + i));
      chunk[i] = synth_household(pool, classes, cfg, rng);
    });
    std::string train_bytes, test_bytes;
    for (std::size_t i = 0; i < n; ++i) {
      rep.clipped += chunk[i].clipped ? 1 : 0;
      append_record(begin + i < rep.train ? train_bytes : test_bytes, chunk[i].sample);
    }
    write_stream(train, train_bytes, rep.train_file);
    write_stream(test, test_bytes, rep.test_file);
  }
  train.close();
  test.close();
  write_sidecar(rep.train_file, classes, cfg, rep.train, "train");
  write_sidecar(rep.test_file, classes, cfg, rep.test, "test");
  return rep;
}

// ---------------------------------------------------------------------------
// Prediction windows

std::vector<WindowSample> prediction_windows(const TimeSeries& aggregate, const SynthConfig& cfg) {
  std::vector<WindowSample> out;
  for (const auto& w : segment_series(aggregate, "aggregate")) {
    if (judge(w, cfg, false) == Verdict::kept) out.push_back(normalized_sample(w.values, 0));
  }
  return out;
}

std::vector<PredictionReport> write_prediction_windows(
    const std::vector<harmonize::HouseholdRecord>& records, const std::vector<std::string>& classes,
    const SynthConfig& cfg, const std::filesystem::path& dir) {
  std::vector<PredictionReport> out;
  for (const auto& r : records) {
    if (r.submetered || !r.aggregate || r.sampling_period_s > 8.0) continue;
    PredictionReport rep{r.dataset, r.household, 0,
                         dir / (harmonize::slug(r.dataset + "_" + r.household) + ".ekgw")};
    const auto windows = prediction_windows(*r.aggregate, cfg);
    rep.windows = windows.size();
    write_windows(windows, rep.file);
    json side{{"format", format_json()},
              {"classes", classes},
              {"dataset", r.dataset},
              {"household", r.household},
              {"records", windows.size()},
              {"split", "predict"}};
    write_file(rep.file.string() + ".json", side.dump(2) + "\n");
    out.push_back(std::move(rep));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dataset, a.household) < std::tie(b.dataset, b.household);
  });
  return out;
}

}  // namespace elkg::mldata
