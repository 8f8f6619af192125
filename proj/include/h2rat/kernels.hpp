#pragma once

// Dense float64 inner loops used by the tensor layer.
//
// Every variant must produce bit-identical results to the scalar reference:
// products are accumulated in ascending k order with a separate multiply and
// add (no fused multiply-add), so vector lanes only ever run across output
// columns. This keeps training trajectories reproducible regardless of which
// variant the host selects.

#include <cstddef>
#include <string_view>
#include <vector>

namespace h2rat::kernels {

struct KernelTable {
  std::string_view name;

  // c[p x r] = a[p x q] * b[q x r], all row-major, c fully overwritten.
  void (*matmul)(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
                 std::size_t r);
  // out = x + y
  void (*add)(const double* x, const double* y, double* out, std::size_t n);
  // out = x * y (elementwise)
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += x
  void (*accumulate)(const double* x, double* y, std::size_t n);
  // out[i, j] = m[i, j] + v[i] over a rows x cols row-major block
  void (*add_row_bias)(const double* m, const double* v, double* out, std::size_t rows,
                       std::size_t cols);
  // One bias-corrected Adam update. c1 = 1 - beta1^t, c2 = 1 - beta2^t.
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n, double lr,
               double beta1, double beta2, double eps, double c1, double c2);
};

const KernelTable& scalar_table();

// Variants compiled into this binary and supported by the running CPU,
// scalar first.
std::vector<const KernelTable*> available_tables();

// The table used by tensor operations. Chosen once on first use: the
// H2RAT_KERNELS environment variable ("scalar", "avx2", "neon") wins when it
// names an available variant, otherwise the widest available one.
const KernelTable& active();

// Override the active table by name. Throws InvalidArgument if unavailable.
void select(std::string_view name);

}  // namespace h2rat::kernels
