#include <algorithm>
#include <vector>

#include "ampiifd/simd.hpp"

namespace ampiifd::simd {
namespace {

void convolve_rows_scalar(const double* src, double* dst, int width,
                          int height, const double* taps, int radius) {
  for (int y = 0; y < height; ++y) {
    const double* in = src + static_cast<std::size_t>(y) * width;
    double* out = dst + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, width - 1);
        acc += taps[k + radius] * in[xx];
      }
      out[x] = acc;
    }
  }
}

void convolve_cols_scalar(const double* src, double* dst, int width,
                          int height, const double* taps, int radius) {
  for (int y = 0; y < height; ++y) {
    double* out = dst + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, height - 1);
        acc += taps[k + radius] * src[static_cast<std::size_t>(yy) * width + x];
      }
      out[x] = acc;
    }
  }
}

void tridiagonal_columns_scalar(const double* cond, const double* rhs,
                                double* out, int width, int height,
                                double tau) {
  const double tt = 2.0 * tau;
  std::vector<double> gamma(height);
  std::vector<double> d(height);
  const auto at = [width](int x, int y) {
    return static_cast<std::size_t>(y) * width + x;
  };
  for (int x = 0; x < width; ++x) {
    for (int i = 0; i < height; ++i) {
      const double cm = i > 0 ? (cond[at(x, i - 1)] + cond[at(x, i)]) * 0.5 : 0.0;
      const double cp =
          i < height - 1 ? (cond[at(x, i)] + cond[at(x, i + 1)]) * 0.5 : 0.0;
      const double diag = 1.0 + tt * (cm + cp);
      const double lower = -(tt * cm);
      const double upper = -(tt * cp);
      if (i == 0) {
        gamma[0] = upper / diag;
        d[0] = rhs[at(x, 0)] / diag;
      } else {
        const double denom = diag - lower * gamma[i - 1];
        gamma[i] = upper / denom;
        d[i] = (rhs[at(x, i)] - lower * d[i - 1]) / denom;
      }
    }
    out[at(x, height - 1)] = d[height - 1];
    for (int i = height - 2; i >= 0; --i) {
      out[at(x, i)] = d[i] - gamma[i] * out[at(x, i + 1)];
    }
  }
}

double squared_distance_scalar(const double* a, const double* b,
                               std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double diff = a[i + l] - b[i + l];
      s[l] += diff * diff;
    }
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) {
    const double diff = a[i] - b[i];
    total += diff * diff;
  }
  return total;
}

}  // namespace

namespace detail {
const KernelTable scalar_table{
    Level::Scalar,          convolve_rows_scalar,   convolve_cols_scalar,
    tridiagonal_columns_scalar, squared_distance_scalar,
};
}  // namespace detail

}  // namespace ampiifd::simd
