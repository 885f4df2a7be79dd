#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "tsfn/kernels.hpp"

namespace tsfn::kern {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* pick() {
  const Kernels* avx2 = avx2_table();
  const char* want = std::getenv("TSFN_KERNELS");
  if (want != nullptr && std::strcmp(want, "") != 0 &&
      std::strcmp(want, "auto") != 0) {
    if (std::strcmp(want, "scalar") == 0) return &scalar_table();
    if (std::strcmp(want, "avx2") == 0) {
      if (avx2 != nullptr && cpu_has_avx2()) return avx2;
      std::fprintf(stderr,
                   "tsfn: TSFN_KERNELS=avx2 requested but AVX2 is unavailable, "
                   "using scalar kernels\n");
      return &scalar_table();
    }
    std::fprintf(stderr, "tsfn: unknown TSFN_KERNELS value '%s', using auto\n",
                 want);
  }
  if (avx2 != nullptr && cpu_has_avx2()) return avx2;
  return &scalar_table();
}

}  // namespace

const Kernels& active() {
  static const Kernels* chosen = pick();
  return *chosen;
}

}  // namespace tsfn::kern
