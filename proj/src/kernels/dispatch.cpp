#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#include "elkg/error.hpp"
#include "kernels_impl.hpp"

namespace elkg::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

namespace {

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(ELKG_HAVE_AVX2_KERNELS)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(ELKG_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("ELKG_ISA")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa) && supported(isa)) return isa;
    }
  }
  return detect_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detect_isa() noexcept {
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!supported(isa)) {
    throw ConfigError("kernel variant '" + std::string(isa_name(isa)) +
                      "' is not available on this machine");
  }
  active().store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
  switch (isa) {
#if defined(ELKG_HAVE_AVX2_KERNELS)
    case Isa::avx2: return avx2::kTable;
#endif
#if defined(ELKG_HAVE_NEON_KERNELS)
    case Isa::neon: return neon::kTable;
#endif
    default: return scalar::kTable;
  }
}

namespace {
const KernelTable& current() { return table(active_isa()); }
}  // namespace

void add_into(std::span<double> acc, std::span<const double> x) {
  current().add_into(acc.data(), x.data(), std::min(acc.size(), x.size()));
}

void clamp_negative(std::span<double> x) {
  current().clamp_negative(x.data(), x.size());
}

MinMax minmax(std::span<const double> x) {
  if (x.empty()) return {0.0, 0.0};
  return current().minmax(x.data(), x.size());
}

std::size_t count_above(std::span<const double> x, double limit) {
  return current().count_above(x.data(), x.size(), limit);
}

void to_float(std::span<const double> x, std::span<float> out) {
  current().to_float(x.data(), out.data(), std::min(x.size(), out.size()));
}

void minmax_normalize(std::span<const double> x, std::span<double> out) {
  const std::size_t n = std::min(x.size(), out.size());
  if (n == 0) return;
  const KernelTable& k = current();
  const MinMax mm = k.minmax(x.data(), n);
  if (!(mm.max > mm.min)) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    return;
  }
  k.scale_offset(x.data(), out.data(), n, mm.min, mm.max - mm.min);
}

}  // namespace elkg::kernels
