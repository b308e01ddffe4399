#pragma once

// Data-parallel inner loops used by window preparation and synthesis.
//
// Every kernel has a scalar reference implementation and vectorized variants
// (AVX2 on x86-64, NEON on AArch64). All variants perform the same IEEE
// operations per element, so results are bit-identical to the scalar path;
// the equivalence tests hold them to that.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace elkg::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

/// Best variant supported by the running CPU.
Isa detect_isa() noexcept;

/// Variants usable on this machine, scalar first.
std::vector<Isa> available_isas();

/// Variant used by the free functions below. Defaults to detect_isa(); the
/// ELKG_ISA environment variable (scalar|avx2|neon) overrides at startup.
Isa active_isa() noexcept;

/// Force a variant (must be available). Intended for tests and benchmarks.
void set_active_isa(Isa isa);

struct MinMax {
  double min;
  double max;
};

/// Function table for one variant.
struct KernelTable {
  /// acc[i] += x[i]
  void (*add_into)(double* acc, const double* x, std::size_t n);
  /// x[i] = x[i] <= 0 ? +0 : x[i]  (also folds -0 to +0)
  void (*clamp_negative)(double* x, std::size_t n);
  /// n > 0. A zero result is always +0.
  MinMax (*minmax)(const double* x, std::size_t n);
  /// out[i] = (x[i] - lo) / range
  void (*scale_offset)(const double* x, double* out, std::size_t n, double lo,
                       double range);
  /// Number of elements strictly greater than `limit`.
  std::size_t (*count_above)(const double* x, std::size_t n, double limit);
  /// out[i] = float(x[i]), round to nearest.
  void (*to_float)(const double* x, float* out, std::size_t n);
};

const KernelTable& table(Isa isa);

// Convenience wrappers over the active table.

void add_into(std::span<double> acc, std::span<const double> x);
void clamp_negative(std::span<double> x);
MinMax minmax(std::span<const double> x);
std::size_t count_above(std::span<const double> x, double limit);
void to_float(std::span<const double> x, std::span<float> out);

/// Min-max normalization into [0, 1]. A constant (or empty) input yields all
/// zeros.
void minmax_normalize(std::span<const double> x, std::span<double> out);

}  // namespace elkg::kernels
