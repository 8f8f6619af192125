#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "h2rat/tape.hpp"
#include "h2rat/tensor.hpp"

namespace h2rat {

struct GridGeometry {
  std::size_t rows = 4;
  std::size_t cols = 4;

  std::size_t regions() const { return rows * cols; }
  std::size_t index(std::size_t row, std::size_t col) const { return row * cols + col; }
  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

enum class FeatureSource : std::uint8_t { kSynthetic = 0, kFile = 1 };

/// Raw per-region features F_I, one column per region (f x d).
struct RegionGrid {
  GridGeometry geometry;
  Tensor features;
  FeatureSource source = FeatureSource::kSynthetic;

  std::size_t feature_dim() const { return features.rows(); }
  // Throws DimensionError if features do not have one column per region.
  void validate() const;
};

struct ProjectionParams {
  Parameter weight;  // m x f
  Parameter bias;    // m x 1

  static ProjectionParams zeros(std::size_t m, std::size_t f);
};

// V_I = tanh(W F + b), bias added to every region column.
Var project_regions(Tape& tape, Var features, const ProjectionParams& p);
Tensor project_regions(const RegionGrid& grid, const ProjectionParams& p);

struct EdgeFilterSpec {
  std::size_t border_width = 1;
};

bool is_rim(const GridGeometry& g, std::size_t region, std::size_t border_width);
std::vector<std::size_t> interior_regions(const GridGeometry& g, std::size_t border_width);

// Zeroes the outer border_width rings of a d x 1 attention vector and
// renormalizes the interior to sum to one. When the interior holds no mass
// the result is uniform over the interior.
Tensor apply_edge_filter(const Tensor& attention, const GridGeometry& geometry,
                         const EdgeFilterSpec& spec = {});

// "H2RF" feature files: magic, u32 version = 1, u32 rows, u32 cols, u32 f,
// then rows*cols*f little-endian f32 values, region-major.
RegionGrid load_feature_file(const std::filesystem::path& path);
void save_feature_file(const RegionGrid& grid, const std::filesystem::path& path);

}  // namespace h2rat
