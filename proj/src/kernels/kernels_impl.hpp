#pragma once

#include "elkg/kernels.hpp"

namespace elkg::kernels {

// Signed zeros compare equal, so which one a reduction keeps depends on
// evaluation order. Fold them so every variant reports the same bits.
inline MinMax canonical(MinMax r) {
  if (r.min == 0.0) r.min = 0.0;
  if (r.max == 0.0) r.max = 0.0;
  return r;
}

namespace scalar {
extern const KernelTable kTable;
}
#if defined(ELKG_HAVE_AVX2_KERNELS)
namespace avx2 {
extern const KernelTable kTable;
}
#endif
#if defined(ELKG_HAVE_NEON_KERNELS)
namespace neon {
extern const KernelTable kTable;
}
#endif

}  // namespace elkg::kernels
