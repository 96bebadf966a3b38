#include <atomic>
#include <cstdlib>
#include <string>

#include "ampiifd/error.hpp"
#include "ampiifd/simd.hpp"

namespace ampiifd::simd {
namespace {

Level best_supported() noexcept {
  return supported(Level::Avx2) ? Level::Avx2 : Level::Scalar;
}

Level initial_level() {
  if (const char* env = std::getenv("AMPIIFD_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Level::Scalar;
    if (v == "avx2" && supported(Level::Avx2)) return Level::Avx2;
  }
  return best_supported();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(initial_level())};
  return table;
}

}  // namespace

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::Scalar:
      return "scalar";
    case Level::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Level level) noexcept {
  switch (level) {
    case Level::Scalar:
      return true;
    case Level::Avx2:
#if defined(AMPIIFD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Level level) {
  if (!supported(level)) {
    fail(ErrorKind::InvalidArgument,
         "SIMD level not available: " + std::string(level_name(level)));
  }
#if defined(AMPIIFD_HAVE_AVX2)
  if (level == Level::Avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

const KernelTable& kernels() { return *active_table().load(); }

Level active_level() { return kernels().level; }

void set_active_level(Level level) { active_table().store(&kernels_for(level)); }

}  // namespace ampiifd::simd
