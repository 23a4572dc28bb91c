#include <cstdlib>
#include <string_view>

#include "trajkit/kernels.hpp"

namespace trajkit::kernels {

#if defined(TRAJKIT_HAVE_AVX2)
namespace detail {
const KernelTable& avx2_table_impl();
}
#endif

const KernelTable* avx2_table() {
#if defined(TRAJKIT_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &detail::avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("TRAJKIT_KERNELS");
    const std::string_view want = env ? env : "auto";
    if (want == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace trajkit::kernels
