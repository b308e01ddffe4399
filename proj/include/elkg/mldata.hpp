#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elkg/harmonize.hpp"
#include "elkg/series.hpp"
#include "elkg/time.hpp"

namespace elkg::mldata {

inline constexpr std::size_t kWindowLength = 2688;  // 6 h at 8 s
inline constexpr std::size_t kClassCount = 64;
inline constexpr Millis kGridMs = 8000;
inline constexpr Millis kWindowSpanMs = static_cast<Millis>(kWindowLength) * kGridMs;

/// One 6 h segment of an appliance series on the 8 s grid. Bins without data
/// hold 0 W and are counted in `missing`.
struct Window {
  std::string appliance;
  Millis start = 0;
  std::vector<double> values;  // kWindowLength watts, all >= 0
  std::size_t missing = 0;
  bool operator==(const Window&) const = default;
};

struct WindowSample {
  std::vector<float> input;  // kWindowLength values in [0, 1]
  std::uint64_t label = 0;   // bit i = class i of the ML class list
  bool operator==(const WindowSample&) const = default;
};

struct SynthConfig {
  double count_mean = 8.0;
  double count_stddev = 2.0;
  int count_min = 1;
  int count_max = 15;
  double missing_cap = 0.10;
  double activity_floor_w = 5.0;
  double ceiling_w = 20000.0;
  std::size_t dataset_size = 100000;
  double train_fraction = 0.8;
  std::uint64_t seed = 42;

  /// Throws ConfigError.
  void validate() const;
  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// (train, test) record counts: train = round(size * fraction).
std::pair<std::size_t, std::size_t> split_counts(std::size_t dataset_size, double train_fraction);

// ---------------------------------------------------------------------------
// Appliance pool

using Pool = std::map<std::string, std::vector<Window>>;

struct PoolReport {
  struct Excluded {
    std::string dataset;
    std::string household;
    double sampling_period_s;
  };
  std::vector<Excluded> excluded;  // coarser than the 8 s grid
  std::size_t segments = 0;
  std::size_t kept = 0;
  std::size_t dropped_missing = 0;
  std::size_t dropped_inactive = 0;
  std::size_t dropped_ceiling = 0;
  std::size_t skipped_series = 0;  // appliances outside the ML class list
};
nlohmann::json to_json(const PoolReport& r);

enum class Verdict { kept, missing, inactive, ceiling };

/// Classify one window under the filters. Checked in the order missing,
/// inactive (max below the floor), ceiling (any value above it).
Verdict judge(const Window& w, const SynthConfig& cfg, bool apply_ceiling = true);

/// Clamp negatives, resample to the 8 s grid and cut non-overlapping 6 h
/// segments anchored at the first bin. Every segment is returned (the last
/// one is padded with missing bins); filtering is up to the caller.
std::vector<Window> segment_series(const TimeSeries& series, const std::string& appliance);

/// Windows that survive the filters, per ML class, from every household
/// whose sampling period is at most 8 s. Windows are ordered by household
/// then start time.
Pool prepare_appliance_pool(const std::vector<harmonize::HouseholdRecord>& records,
                            const harmonize::SynonymMap& synonyms, const SynthConfig& cfg,
                            PoolReport& report, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Synthesis

/// splitmix64 finalizer; also derives per-sample seeds from the master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Portable random draws over mt19937_64 (the standard distributions are not
/// reproducible across library implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), unbiased. n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Box-Muller.
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
};

/// Seed of sample `index` under master seed `seed`.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

struct Component {
  std::string appliance;
  std::size_t window;  // index into pool[appliance]
  bool operator==(const Component&) const = default;
};

struct SynthResult {
  WindowSample sample;
  std::vector<double> aggregate;  // pre-normalization sum
  std::vector<Component> components;
  bool clipped = false;  // k exceeded the number of pool appliances
};

/// `classes` gives label bit positions. Appliances are chosen uniformly
/// without replacement among pool entries with windows; components are
/// summed in pool-name order. Throws InsufficientDataError on an empty pool.
SynthResult synth_household(const Pool& pool, const std::vector<std::string>& classes,
                            const SynthConfig& cfg, Rng& rng);

/// Element-wise window sum in the given order (the pre-normalization
/// aggregate of synth_household), exposed for regeneration checks.
std::vector<double> aggregate_components(const Pool& pool, const std::vector<Component>& parts);

struct DatasetReport {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t clipped = 0;
  std::filesystem::path train_file;
  std::filesystem::path test_file;
};

/// Writes `<dir>/train.ekgw` and `<dir>/test.ekgw` plus sidecars. Sample i
/// uses sample_seed(cfg.seed, i); the first `train` samples go to the train
/// file. Byte-deterministic for a given pool, class list and config. Throws
/// InsufficientDataError before writing anything when the pool is empty.
DatasetReport build_dataset(const Pool& pool, const std::vector<std::string>& classes,
                            const SynthConfig& cfg, const std::filesystem::path& dir,
                            unsigned threads = 0);

// ---------------------------------------------------------------------------
// Window file
//
// Little-endian: "EKGW", u16 version = 1, u32 sample_len = 2688,
// u16 n_classes = 64, u64 record_count; then per record 2688 float32 inputs
// and a u64 label mask. The header is 20 bytes.

inline constexpr std::size_t kHeaderBytes = 20;
inline constexpr std::size_t kRecordBytes = kWindowLength * 4 + 8;
inline constexpr std::uint16_t kFormatVersion = 1;

std::string encode_header(std::uint64_t records);
void append_record(std::string& out, const WindowSample& s);

void write_windows(const std::vector<WindowSample>& samples, const std::filesystem::path& path);
/// Throws FormatError on bad magic, version, dimensions or length.
std::vector<WindowSample> read_windows(const std::filesystem::path& path);
std::vector<WindowSample> decode_windows(std::string_view bytes, const std::string& origin);

/// `<file>.json`: class names in bit order, seed, config, record count.
void write_sidecar(const std::filesystem::path& window_file, const std::vector<std::string>& classes,
                   const SynthConfig& cfg, std::size_t records, const std::string& split);

// ---------------------------------------------------------------------------
// Prediction windows

struct PredictionReport {
  std::string dataset;
  std::string household;
  std::size_t windows = 0;
  std::filesystem::path file;
};

/// Normalized aggregate windows of one household prepared as for training
/// (8 s, clamp, 6 h, missing cap, activity floor; no ceiling). Labels are 0.
std::vector<WindowSample> prediction_windows(const TimeSeries& aggregate, const SynthConfig& cfg);

/// Window files for every unsubmetered household with an aggregate series
/// and a sampling period of at most 8 s: `<dir>/<dataset>_<household>.ekgw`.
std::vector<PredictionReport> write_prediction_windows(
    const std::vector<harmonize::HouseholdRecord>& records, const std::vector<std::string>& classes,
    const SynthConfig& cfg, const std::filesystem::path& dir);

}  // namespace elkg::mldata
