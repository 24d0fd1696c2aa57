#include <cstdlib>
#include <string_view>

#include "detcal/kernels/kernels.hpp"

namespace detcal::kernels {

#ifdef DETCAL_HAVE_AVX2
const KernelTable& avx2_table();
#endif

const KernelTable* avx2() {
#ifdef DETCAL_HAVE_AVX2
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* forced = std::getenv("DETCAL_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") {
      return scalar();
    }
    if (const KernelTable* table = avx2()) return *table;
    return scalar();
  }();
  return chosen;
}

}  // namespace detcal::kernels
