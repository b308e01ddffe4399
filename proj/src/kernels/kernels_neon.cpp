#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace elkg::kernels::neon {

namespace {

void add_into(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vld1q_f64(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void clamp_negative(double* x, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    uint64x2_t le = vcleq_f64(v, zero);
    vst1q_f64(x + i, vbslq_f64(le, zero, v));
  }
  for (; i < n; ++i) x[i] = x[i] <= 0.0 ? 0.0 : x[i];
}

MinMax minmax(const double* x, std::size_t n) {
  MinMax r{x[0], x[0]};
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t lo = vld1q_f64(x);
    float64x2_t hi = lo;
    for (i = 2; i + 2 <= n; i += 2) {
      float64x2_t v = vld1q_f64(x + i);
      lo = vminq_f64(lo, v);
      hi = vmaxq_f64(hi, v);
    }
    r = {vminvq_f64(lo), vmaxvq_f64(hi)};
  }
  for (; i < n; ++i) {
    if (x[i] < r.min) r.min = x[i];
    if (x[i] > r.max) r.max = x[i];
  }
  return canonical(r);
}

void scale_offset(const double* x, double* out, std::size_t n, double lo,
                  double range) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vrange = vdupq_n_f64(range);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vdivq_f64(vsubq_f64(vld1q_f64(x + i), vlo), vrange));
  }
  for (; i < n; ++i) out[i] = (x[i] - lo) / range;
}

std::size_t count_above(const double* x, std::size_t n, double limit) {
  const float64x2_t vlimit = vdupq_n_f64(limit);
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t gt = vcgtq_f64(vld1q_f64(x + i), vlimit);
    c += static_cast<std::size_t>((vgetq_lane_u64(gt, 0) & 1) +
                                  (vgetq_lane_u64(gt, 1) & 1));
  }
  for (; i < n; ++i) c += x[i] > limit ? 1 : 0;
  return c;
}

void to_float(const double* x, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1_f32(out + i, vcvt_f32_f64(vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = static_cast<float>(x[i]);
}

}  // namespace

const KernelTable kTable{add_into, clamp_negative, minmax,
                         scale_offset, count_above, to_float};

}  // namespace elkg::kernels::neon
