// Compiled with -mavx2 only (no -mfma): every lane performs the same
// multiply-then-add sequence as the scalar reference.
#include <immintrin.h>

#include <algorithm>
#include <vector>

#include "ampiifd/simd.hpp"

namespace ampiifd::simd {
namespace {

inline double conv_row_point(const double* in, int width, int x,
                             const double* taps, int radius) {
  double acc = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    acc += taps[k + radius] * in[std::clamp(x + k, 0, width - 1)];
  }
  return acc;
}

void convolve_rows_avx2(const double* src, double* dst, int width, int height,
                        const double* taps, int radius) {
  for (int y = 0; y < height; ++y) {
    const double* in = src + static_cast<std::size_t>(y) * width;
    double* out = dst + static_cast<std::size_t>(y) * width;
    int x = 0;
    for (; x < std::min(radius, width); ++x) {
      out[x] = conv_row_point(in, width, x, taps, radius);
    }
    for (; x + 3 + radius < width; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (int k = -radius; k <= radius; ++k) {
        const __m256d w = _mm256_set1_pd(taps[k + radius]);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w, _mm256_loadu_pd(in + x + k)));
      }
      _mm256_storeu_pd(out + x, acc);
    }
    for (; x < width; ++x) {
      out[x] = conv_row_point(in, width, x, taps, radius);
    }
  }
}

void convolve_cols_avx2(const double* src, double* dst, int width, int height,
                        const double* taps, int radius) {
  for (int y = 0; y < height; ++y) {
    double* out = dst + static_cast<std::size_t>(y) * width;
    int x = 0;
    for (; x + 4 <= width; x += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, height - 1);
        const __m256d w = _mm256_set1_pd(taps[k + radius]);
        const __m256d v =
            _mm256_loadu_pd(src + static_cast<std::size_t>(yy) * width + x);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(w, v));
      }
      _mm256_storeu_pd(out + x, acc);
    }
    for (; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, height - 1);
        acc += taps[k + radius] * src[static_cast<std::size_t>(yy) * width + x];
      }
      out[x] = acc;
    }
  }
}

void tridiagonal_columns_avx2(const double* cond, const double* rhs,
                              double* out, int width, int height, double tau) {
  const double tt = 2.0 * tau;
  const auto at = [width](int x, int y) {
    return static_cast<std::size_t>(y) * width + x;
  };
  const int blocked = width - width % 4;
  if (blocked > 0) {
    std::vector<double> gbuf(4 * static_cast<std::size_t>(height));
    std::vector<double> dbuf(gbuf.size());
    const auto G = [&gbuf](int i) { return gbuf.data() + 4 * static_cast<std::size_t>(i); };
    const auto D = [&dbuf](int i) { return dbuf.data() + 4 * static_cast<std::size_t>(i); };
    const __m256d vtt = _mm256_set1_pd(tt);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sign = _mm256_set1_pd(-0.0);
    for (int x = 0; x < blocked; x += 4) {
      for (int i = 0; i < height; ++i) {
        const __m256d ci = _mm256_loadu_pd(cond + at(x, i));
        const __m256d cm =
            i > 0 ? _mm256_mul_pd(
                        _mm256_add_pd(_mm256_loadu_pd(cond + at(x, i - 1)), ci),
                        half)
                  : zero;
        const __m256d cp =
            i < height - 1
                ? _mm256_mul_pd(
                      _mm256_add_pd(ci, _mm256_loadu_pd(cond + at(x, i + 1))),
                      half)
                : zero;
        const __m256d diag =
            _mm256_add_pd(one, _mm256_mul_pd(vtt, _mm256_add_pd(cm, cp)));
        const __m256d lower = _mm256_xor_pd(_mm256_mul_pd(vtt, cm), sign);
        const __m256d upper = _mm256_xor_pd(_mm256_mul_pd(vtt, cp), sign);
        const __m256d r = _mm256_loadu_pd(rhs + at(x, i));
        if (i == 0) {
          _mm256_storeu_pd(G(0), _mm256_div_pd(upper, diag));
          _mm256_storeu_pd(D(0), _mm256_div_pd(r, diag));
        } else {
          const __m256d denom = _mm256_sub_pd(
              diag, _mm256_mul_pd(lower, _mm256_loadu_pd(G(i - 1))));
          _mm256_storeu_pd(G(i), _mm256_div_pd(upper, denom));
          _mm256_storeu_pd(
              D(i), _mm256_div_pd(_mm256_sub_pd(r, _mm256_mul_pd(
                                                      lower, _mm256_loadu_pd(D(i - 1)))),
                                  denom));
        }
      }
      __m256d next = _mm256_loadu_pd(D(height - 1));
      _mm256_storeu_pd(out + at(x, height - 1), next);
      for (int i = height - 2; i >= 0; --i) {
        next = _mm256_sub_pd(_mm256_loadu_pd(D(i)),
                             _mm256_mul_pd(_mm256_loadu_pd(G(i)), next));
        _mm256_storeu_pd(out + at(x, i), next);
      }
    }
  }
  if (blocked < width) {
    // Remaining columns go through the scalar reference on a narrow view.
    const int rest = width - blocked;
    std::vector<double> c(static_cast<std::size_t>(rest) * height);
    std::vector<double> r(c.size());
    std::vector<double> o(c.size());
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < rest; ++x) {
        c[static_cast<std::size_t>(y) * rest + x] = cond[at(blocked + x, y)];
        r[static_cast<std::size_t>(y) * rest + x] = rhs[at(blocked + x, y)];
      }
    }
    detail::scalar_table.tridiagonal_columns(c.data(), r.data(), o.data(), rest,
                                             height, tau);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < rest; ++x) {
        out[at(blocked + x, y)] = o[static_cast<std::size_t>(y) * rest + x];
      }
    }
  }
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d diff =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) {
    const double diff = a[i] - b[i];
    total += diff * diff;
  }
  return total;
}

}  // namespace

namespace detail {
const KernelTable avx2_table{
    Level::Avx2,         convolve_rows_avx2,    convolve_cols_avx2,
    tridiagonal_columns_avx2, squared_distance_avx2,
};
}  // namespace detail

}  // namespace ampiifd::simd
