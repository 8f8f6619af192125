#pragma once

#include "h2rat/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define H2RAT_HAVE_AVX2_VARIANT 1
#else
#define H2RAT_HAVE_AVX2_VARIANT 0
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define H2RAT_HAVE_NEON_VARIANT 1
#else
#define H2RAT_HAVE_NEON_VARIANT 0
#endif

namespace h2rat::kernels {

#if H2RAT_HAVE_AVX2_VARIANT
const KernelTable& avx2_table();
#endif

#if H2RAT_HAVE_NEON_VARIANT
const KernelTable& neon_table();
#endif

}  // namespace h2rat::kernels
