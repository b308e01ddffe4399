#include "kernels_impl.hpp"

namespace elkg::kernels::scalar {

void add_into(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void clamp_negative(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] <= 0.0 ? 0.0 : x[i];
}

MinMax minmax(const double* x, std::size_t n) {
  MinMax r{x[0], x[0]};
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return canonical(r);
}

void scale_offset(const double* x, double* out, std::size_t n, double lo,
                  double range) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - lo) / range;
}

std::size_t count_above(const double* x, std::size_t n, double limit) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += x[i] > limit ? 1 : 0;
  return c;
}

void to_float(const double* x, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(x[i]);
}

const KernelTable kTable{add_into, clamp_negative, minmax,
                         scale_offset, count_above, to_float};

}  // namespace elkg::kernels::scalar
