#include "kernel_variants.hpp"

#if H2RAT_HAVE_NEON_VARIANT

#include <arm_neon.h>

#include <cmath>

namespace h2rat::kernels {
namespace {

constexpr std::size_t kLanes = 2;

// vmulq/vaddq only: vfmaq would round once and break parity with scalar.
void matmul(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
            std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* crow = c + i * r;
    for (std::size_t j = 0; j < r; ++j) crow[j] = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      const float64x2_t av = vdupq_n_f64(aik);
      const double* brow = b + k * r;
      std::size_t j = 0;
      for (; j + kLanes <= r; j += kLanes) {
        vst1q_f64(crow + j, vaddq_f64(vld1q_f64(crow + j), vmulq_f64(av, vld1q_f64(brow + j))));
      }
      for (; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void accumulate(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += x[i];
}

void add_row_bias(const double* m, const double* v, double* out, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const float64x2_t bias = vdupq_n_f64(v[i]);
    std::size_t j = 0;
    for (; j + kLanes <= cols; j += kLanes) {
      vst1q_f64(out + i * cols + j, vaddq_f64(vld1q_f64(m + i * cols + j), bias));
    }
    for (; j < cols; ++j) out[i * cols + j] = m[i * cols + j] + v[i];
  }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double c1, double c2) {
  // The update is dominated by the division and square root; lanes buy little
  // here, so this stays scalar and trivially matches the reference.
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * (g * g);
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      "neon", matmul, add, mul, axpy, accumulate, add_row_bias, adam,
  };
  return table;
}

}  // namespace h2rat::kernels

#endif  // H2RAT_HAVE_NEON_VARIANT
