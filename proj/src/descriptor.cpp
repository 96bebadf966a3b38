#include "ampiifd/descriptor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "ampiifd/error.hpp"

namespace ampiifd {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBinWidth = kPi / kFoldedBins;  // 22.5 degrees
constexpr double kMinEnergy = 1e-12;
constexpr double kMinInsideFraction = 0.25;
constexpr double kClampLevel = 0.2;
constexpr char kMagic[4] = {'A', 'M', 'P', 'D'};

// Cell index along one axis, mirrored so that sample j and side-1-j land in
// cells c and 3-c.
int cell_of(int j, int side) {
  const auto forward = [side](int k) {
    return std::min(kGridCells - 1,
                    static_cast<int>(std::floor((k + 0.5) * kGridCells / side)));
  };
  if (2 * j < side) return forward(j);
  return kGridCells - 1 - forward(side - 1 - j);
}

bool normalize(std::array<double, kDescriptorSize>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 0.0) || !std::isfinite(sq)) return false;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return true;
}

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "descriptor dump assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) fail(ErrorKind::Input, "truncated descriptor file: " + path.string());
  return value;
}

}  // namespace

void DescriptorParams::validate() const {
  if (!(combine_scale > 0.0)) fail(ErrorKind::Config, "combine_scale: C > 0 violated");
  if (min_region < 4) fail(ErrorKind::Config, "min_region: must be >= 4");
  if (!(region_multiplier >= 1.0)) {
    fail(ErrorKind::Config, "region_multiplier: k >= 1 violated");
  }
}

double DescriptorGrid::total() const {
  double t = 0.0;
  for (const auto& row : cells)
    for (const auto& h : row)
      for (double b : h) t += b;
  return t;
}

double RegionSample::magnitude() const { return std::hypot(gu, gv); }

double RegionSample::angle() const {
  double a = std::atan2(gv, gu);
  if (a < 0.0) a += 2.0 * kPi;
  return a >= 2.0 * kPi ? 0.0 : a;
}

int region_side(double mu, const DescriptorParams& params) {
  return std::max(static_cast<int>(std::lround(params.region_multiplier * mu)),
                  params.min_region);
}

std::optional<double> main_orientation(const EvolutionLevel& level,
                                       const KeyPoint& kp,
                                       const DescriptorParams& params) {
  const double side = params.region_multiplier * kp.mu;
  const double sigma_w = side / 4.0;
  const int half = static_cast<int>(std::floor(side / 2.0));
  const double xmax = level.image.width() - 1;
  const double ymax = level.image.height() - 1;
  double sxx = 0.0;  // sum w (gx^2 - gy^2)
  double sxy = 0.0;  // sum w 2 gx gy
  bool any_inside = false;
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const double px = kp.x + dx;
      const double py = kp.y + dy;
      if (px < 0.0 || py < 0.0 || px > xmax || py > ymax) continue;
      any_inside = true;
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_w * sigma_w));
      const double gx = bilinear_sample(level.grad.gx, px, py);
      const double gy = bilinear_sample(level.grad.gy, px, py);
      sxx += w * (gx * gx - gy * gy);
      sxy += w * 2.0 * gx * gy;
    }
  }
  if (!any_inside) return std::nullopt;
  if (std::abs(sxx) < kMinEnergy && std::abs(sxy) < kMinEnergy) return std::nullopt;
  double theta = 0.5 * std::atan2(sxy, sxx);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta -= kPi;
  return theta;
}

std::optional<RegionSamples> sample_region(const EvolutionLevel& level,
                                           const KeyPoint& kp, double orientation,
                                           const DescriptorParams& params) {
  RegionSamples region;
  region.side = region_side(kp.mu, params);
  const int side = region.side;
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  const double xmax = level.image.width() - 1;
  const double ymax = level.image.height() - 1;
  region.samples.reserve(static_cast<std::size_t>(side) * side);
  for (int i = 0; i < side; ++i) {
    const double v = (i + 0.5) - side / 2.0;
    for (int j = 0; j < side; ++j) {
      const double u = (j + 0.5) - side / 2.0;
      const double px = kp.x + c * u - s * v;
      const double py = kp.y + s * u + c * v;
      if (px < 0.0 || py < 0.0 || px > xmax || py > ymax) continue;
      const double gx = bilinear_sample(level.grad.gx, px, py);
      const double gy = bilinear_sample(level.grad.gy, px, py);
      RegionSample sample;
      sample.u = u;
      sample.v = v;
      sample.cell_row = cell_of(i, side);
      sample.cell_col = cell_of(j, side);
      sample.gu = c * gx + s * gy;
      sample.gv = -s * gx + c * gy;
      region.samples.push_back(sample);
    }
  }
  const double inside = static_cast<double>(region.samples.size()) /
                        (static_cast<double>(side) * side);
  if (inside < kMinInsideFraction) return std::nullopt;
  return region;
}

DescriptorGrid build_histograms(const RegionSamples& region) {
  std::array<std::array<std::array<double, kRawBins>, kGridCells>, kGridCells> raw{};
  const double sigma = region.side / 2.0;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  for (const auto& sample : region.samples) {
    const double mag = sample.magnitude();
    if (!(mag > 0.0)) continue;
    // Reduce (gu, gv) to the upper half plane; the flip selects the raw half
    // [pi, 2pi) so that g and -g vote into bins exactly 8 apart.
    const bool flip = sample.gv < 0.0 || (sample.gv == 0.0 && sample.gu < 0.0);
    const double a = flip ? -sample.gu : sample.gu;
    const double b = flip ? -sample.gv : sample.gv;
    const double alpha = std::atan2(b, a);  // [0, pi)
    const double pos = std::clamp(alpha / kBinWidth, 0.0, kFoldedBins - 1e-12);
    const int lo = static_cast<int>(std::floor(pos));
    const double frac = pos - lo;
    const int b0 = lo + (flip ? kFoldedBins : 0);
    const int b1 = (b0 + 1) % kRawBins;
    const double weight =
        std::exp(-(sample.u * sample.u + sample.v * sample.v) * inv_two_sigma2);
    const double vote = weight * mag;
    auto& hist = raw[sample.cell_row][sample.cell_col];
    hist[b0] += vote * (1.0 - frac);
    hist[b1] += vote * frac;
  }
  DescriptorGrid grid;
  for (int r = 0; r < kGridCells; ++r) {
    for (int c = 0; c < kGridCells; ++c) {
      for (int b = 0; b < kFoldedBins; ++b) {
        grid.cells[r][c][b] = raw[r][c][b] + raw[r][c][b + kFoldedBins];
      }
    }
  }
  return grid;
}

std::optional<Descriptor> assemble_piifd(const DescriptorGrid& grid,
                                         const DescriptorParams& params) {
  if (!(grid.total() > 0.0)) return std::nullopt;
  Descriptor d;
  std::size_t k = 0;
  for (int r = 0; r < kGridCells; ++r) {
    for (int c = 0; c < kGridCells; ++c) {
      const auto& h = grid.cells[r][c];
      const auto& q = grid.cells[kGridCells - 1 - r][kGridCells - 1 - c];
      for (int b = 0; b < kFoldedBins; ++b) {
        d.values[k++] = r < kGridCells / 2
                            ? h[b] + q[b]
                            : params.combine_scale * std::abs(h[b] - q[b]);
      }
    }
  }
  if (!normalize(d.values)) return std::nullopt;
  if (params.clamp) {
    for (double& x : d.values) x = std::min(x, kClampLevel);
    if (!normalize(d.values)) return std::nullopt;
  }
  return d;
}

std::vector<DescribedKeyPoint> describe(const NonlinearScaleSpace& space,
                                        const std::vector<KeyPoint>& keypoints,
                                        const DescriptorParams& params) {
  params.validate();
  std::vector<DescribedKeyPoint> out;
  out.reserve(keypoints.size());
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    KeyPoint kp = keypoints[i];
    const EvolutionLevel& level = space.level(kp.octave, kp.sublevel);
    const auto orientation = main_orientation(level, kp, params);
    if (!orientation) continue;
    const auto region = sample_region(level, kp, *orientation, params);
    if (!region) continue;
    auto descriptor = assemble_piifd(build_histograms(*region), params);
    if (!descriptor) continue;
    kp.orientation = *orientation;
    descriptor->keypoint_id = i;
    out.push_back({kp, *descriptor});
  }
  return out;
}

// Record layout: x y mu lambda response orientation octave sublevel (f64),
// then 128 f32 descriptor values.
void write_descriptors(const std::vector<DescribedKeyPoint>& described,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Input, "unwritable path: " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, described.size());
  for (const auto& d : described) {
    const KeyPoint& kp = d.keypoint;
    for (double f : {kp.x, kp.y, kp.mu, kp.lambda, kp.response, kp.orientation,
                     static_cast<double>(kp.octave), static_cast<double>(kp.sublevel)}) {
      put<double>(out, f);
    }
    for (double v : d.descriptor.values) put<float>(out, static_cast<float>(v));
  }
  if (!out) fail(ErrorKind::Input, "write failed: " + path.string());
}

std::vector<DescribedKeyPoint> read_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Input, "unreadable file: " + path.string());
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    fail(ErrorKind::Input, "not a descriptor file: " + path.string());
  }
  const auto count = get<std::uint64_t>(in, path);
  std::vector<DescribedKeyPoint> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    DescribedKeyPoint d;
    KeyPoint& kp = d.keypoint;
    kp.x = get<double>(in, path);
    kp.y = get<double>(in, path);
    kp.mu = get<double>(in, path);
    kp.lambda = get<double>(in, path);
    kp.response = get<double>(in, path);
    kp.orientation = get<double>(in, path);
    kp.octave = static_cast<int>(get<double>(in, path));
    kp.sublevel = static_cast<int>(get<double>(in, path));
    for (double& v : d.descriptor.values) v = get<float>(in, path);
    d.descriptor.keypoint_id = i;
    out.push_back(d);
  }
  return out;
}

}  // namespace ampiifd
