#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops, with a scalar reference implementation and
// vectorized variants chosen at runtime. Every variant evaluates the same
// arithmetic in the same order (no FMA contraction, identical reduction
// trees), so results are bitwise identical across levels.

namespace ampiifd::simd {

enum class Level { Scalar, Avx2 };

std::string_view level_name(Level level) noexcept;

/// Horizontal convolution with clamp-to-edge borders. `taps` has odd length
/// 2r+1 and is centred on index r.
using ConvolveFn = void (*)(const double* src, double* dst, int width,
                            int height, const double* taps, int radius);

/// Solves (I - 2 tau A) u = rhs independently down every column, where A is
/// the 1-D zero-flux diffusion operator with half-point conductivities
/// (c_i + c_{i+1}) / 2.
using TridiagonalColumnsFn = void (*)(const double* conductivity,
                                      const double* rhs, double* out,
                                      int width, int height, double tau);

/// Sum of squared differences, four-lane partial sums then
/// (s0 + s1) + (s2 + s3), then the tail in order.
using SquaredDistanceFn = double (*)(const double* a, const double* b,
                                     std::size_t n);

struct KernelTable {
  Level level;
  ConvolveFn convolve_rows;
  ConvolveFn convolve_cols;
  TridiagonalColumnsFn tridiagonal_columns;
  SquaredDistanceFn squared_distance;
};

bool supported(Level level) noexcept;

/// Table for an explicit level; throws if the level is not compiled in or
/// not supported by this CPU.
const KernelTable& kernels_for(Level level);

/// Active table. Defaults to the best supported level; the environment
/// variable AMPIIFD_SIMD=scalar|avx2 overrides it at first use.
const KernelTable& kernels();

Level active_level();
void set_active_level(Level level);

namespace detail {
extern const KernelTable scalar_table;
#if defined(AMPIIFD_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace ampiifd::simd
