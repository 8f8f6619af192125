#include <atomic>
#include <cstdlib>
#include <string>

#include "h2rat/errors.hpp"
#include "kernel_variants.hpp"

namespace h2rat::kernels {
namespace {

bool cpu_has_avx2() {
#if H2RAT_HAVE_AVX2_VARIANT && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available_tables()) {
    if (t->name == name) return t;
  }
  return nullptr;
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("H2RAT_KERNELS"); env != nullptr && *env != '\0') {
    if (const KernelTable* t = find(env)) return t;
  }
  return available_tables().back();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_choice()};
  return table;
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
#if H2RAT_HAVE_AVX2_VARIANT
  if (cpu_has_avx2()) tables.push_back(&avx2_table());
#endif
#if H2RAT_HAVE_NEON_VARIANT
  tables.push_back(&neon_table());
#endif
  return tables;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(std::string_view name) {
  const KernelTable* t = find(name);
  if (t == nullptr) {
    throw InvalidArgument("kernel variant '" + std::string(name) + "' is not available");
  }
  current().store(t, std::memory_order_release);
}

}  // namespace h2rat::kernels
