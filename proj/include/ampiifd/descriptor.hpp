#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "ampiifd/detector.hpp"
#include "ampiifd/scale_space.hpp"

namespace ampiifd {

inline constexpr int kGridCells = 4;
inline constexpr int kFoldedBins = 8;
inline constexpr int kRawBins = 16;
inline constexpr std::size_t kDescriptorSize = kGridCells * kGridCells * kFoldedBins;

struct DescriptorParams {
  double region_multiplier = 6.0;
  double combine_scale = 1.0;  // C, weight of the |H - Q| rows
  int min_region = 8;
  bool clamp = true;           // 0.2 component clamp + renormalization

  void validate() const;
};

/// 4x4 cells of folded 8-bin orientation histograms; bin b covers
/// [b pi/8, (b+1) pi/8). cells[row][col].
struct DescriptorGrid {
  using Histogram = std::array<double, kFoldedBins>;
  std::array<std::array<Histogram, kGridCells>, kGridCells> cells{};

  double total() const;
  friend bool operator==(const DescriptorGrid&, const DescriptorGrid&) = default;
};

struct Descriptor {
  std::array<double, kDescriptorSize> values{};
  std::size_t keypoint_id = 0;
};

/// One gradient sample in the keypoint's canonical (rotated) frame.
struct RegionSample {
  double u = 0.0;  // rotated-frame offset from the keypoint, pixels
  double v = 0.0;
  int cell_row = 0;
  int cell_col = 0;
  double gu = 0.0;  // gradient rotated into the canonical frame
  double gv = 0.0;

  double magnitude() const;
  /// Angle of (gu, gv) in [0, 2pi).
  double angle() const;
};

struct RegionSamples {
  int side = 0;
  std::vector<RegionSample> samples;
};

struct DescribedKeyPoint {
  KeyPoint keypoint;
  Descriptor descriptor;
};

/// Region side for a scale factor: max(round(k mu), min_region).
int region_side(double mu, const DescriptorParams& params);

/// Dominant direction modulo pi from Gaussian-weighted averaged squared
/// gradients; nullopt when the window carries no gradient energy.
std::optional<double> main_orientation(const EvolutionLevel& level,
                                       const KeyPoint& kp,
                                       const DescriptorParams& params);

/// Samples the rotated side x side grid; nullopt when fewer than 25% of the
/// samples fall inside the image.
std::optional<RegionSamples> sample_region(const EvolutionLevel& level,
                                           const KeyPoint& kp, double orientation,
                                           const DescriptorParams& params);

/// 16-bin [0, 2pi) histograms per cell with linear angular interpolation and
/// a Gaussian spatial weight (sigma = side / 2), folded to 8 bins.
DescriptorGrid build_histograms(const RegionSamples& region);

/// Combines the grid with its 180-degree spatial rotation Q: rows 0-1 take
/// H + Q, rows 2-3 take C |H - Q|; flattened (row, col, bin) and normalized.
/// nullopt for a zero-energy grid.
std::optional<Descriptor> assemble_piifd(const DescriptorGrid& grid,
                                         const DescriptorParams& params);

/// Full description of every keypoint; undescribable keypoints are dropped and
/// the survivors keep input order. keypoint_id indexes the input list.
std::vector<DescribedKeyPoint> describe(const NonlinearScaleSpace& space,
                                        const std::vector<KeyPoint>& keypoints,
                                        const DescriptorParams& params = {});

/// Binary dump: "AMPD", u64 count, then per record 8 f64 keypoint fields
/// (x y mu lambda response orientation octave sublevel) and 128 f32 values,
/// little-endian.
void write_descriptors(const std::vector<DescribedKeyPoint>& described,
                       const std::filesystem::path& path);
std::vector<DescribedKeyPoint> read_descriptors(const std::filesystem::path& path);

}  // namespace ampiifd
