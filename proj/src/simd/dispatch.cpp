#include <cstdlib>
#include <string_view>

#include "fluororeg/simd/kernels.hpp"

namespace fluororeg::simd {

#if defined(FLUOROREG_HAVE_AVX2)
extern const Kernels kAvx2Kernels;
#endif

const Kernels* avx2_kernels() {
#if defined(FLUOROREG_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &kAvx2Kernels : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active_kernels() {
  static const Kernels& chosen = [] () -> const Kernels& {
    const char* env = std::getenv("FLUOROREG_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
    if (const Kernels* k = avx2_kernels()) return *k;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace fluororeg::simd
