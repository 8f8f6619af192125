// Compiled with -mavx2 (and never -mfma): see kernels.hpp on bit-exactness.

#include "kernel_variants.hpp"

#if H2RAT_HAVE_AVX2_VARIANT

#include <immintrin.h>

#include <cmath>

namespace h2rat::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void matmul(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
            std::size_t r) {
  const std::size_t vec_end = r - r % kLanes;
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = c + i * r;
    for (std::size_t j = 0; j < r; ++j) crow[j] = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      const __m256d av = _mm256_set1_pd(aik);
      const double* brow = b + k * r;
      std::size_t j = 0;
      for (; j < vec_end; j += kLanes) {
        const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
      }
      for (; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void accumulate(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

void add_row_bias(const double* m, const double* v, double* out, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const __m256d bias = _mm256_set1_pd(v[i]);
    const double* src = m + i * cols;
    double* dst = out + i * cols;
    std::size_t j = 0;
    for (; j + kLanes <= cols; j += kLanes) {
      _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_loadu_pd(src + j), bias));
    }
    for (; j < cols; ++j) dst[j] = src[j] + v[i];
  }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double c1, double c2) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d one_minus_b1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d one_minus_b2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vc1 = _mm256_set1_pd(c1);
  const __m256d vc2 = _mm256_set1_pd(c2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d veps = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)),
                                     _mm256_mul_pd(one_minus_b1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(one_minus_b2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, vc1);
    const __m256d vhat = _mm256_div_pd(vi, vc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(vlr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), veps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g);
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2", matmul, add, mul, axpy, accumulate, add_row_bias, adam,
  };
  return table;
}

}  // namespace h2rat::kernels

#endif  // H2RAT_HAVE_AVX2_VARIANT
