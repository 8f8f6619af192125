#include "h2rat/vision.hpp"

#include "binio.hpp"
#include "h2rat/errors.hpp"

namespace h2rat {

void RegionGrid::validate() const {
  if (features.cols() != geometry.regions()) {
    throw DimensionError("region grid " + std::to_string(geometry.rows) + "x" +
                         std::to_string(geometry.cols) + " has feature matrix " +
                         features.shape().str());
  }
}

ProjectionParams ProjectionParams::zeros(std::size_t m, std::size_t f) {
  return ProjectionParams{Parameter{"projection.weight", Tensor(m, f)},
                          Parameter{"projection.bias", Tensor(m, 1)}};
}

Var project_regions(Tape& tape, Var features, const ProjectionParams& p) {
  Var wf = tape.matmul(tape.param(p.weight), features);
  return tape.tanh(tape.broadcast_add_columns(wf, tape.param(p.bias)));
}

Tensor project_regions(const RegionGrid& grid, const ProjectionParams& p) {
  grid.validate();
  Tape tape;
  return tape.value(project_regions(tape, tape.constant(grid.features), p));
}

bool is_rim(const GridGeometry& g, std::size_t region, std::size_t border_width) {
  const std::size_t r = region / g.cols;
  const std::size_t c = region % g.cols;
  return r < border_width || c < border_width || r + border_width >= g.rows ||
         c + border_width >= g.cols;
}

std::vector<std::size_t> interior_regions(const GridGeometry& g, std::size_t border_width) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.regions(); ++i) {
    if (!is_rim(g, i, border_width)) out.push_back(i);
  }
  return out;
}

Tensor apply_edge_filter(const Tensor& attention, const GridGeometry& geometry,
                         const EdgeFilterSpec& spec) {
  if (attention.cols() != 1 || attention.rows() != geometry.regions()) {
    throw DimensionError("edge filter: attention " + attention.shape().str() + " does not match " +
                         std::to_string(geometry.rows) + "x" + std::to_string(geometry.cols) +
                         " grid");
  }
  if (2 * spec.border_width >= std::min(geometry.rows, geometry.cols)) {
    throw InvalidArgument("edge filter: border width " + std::to_string(spec.border_width) +
                          " leaves no interior region");
  }
  Tensor out(attention.rows(), 1);
  double interior_mass = 0.0;
  for (std::size_t i = 0; i < attention.rows(); ++i) {
    if (!is_rim(geometry, i, spec.border_width)) {
      out[i] = attention[i];
      interior_mass += attention[i];
    }
  }
  if (interior_mass > 0.0) {
    for (std::size_t i = 0; i < out.rows(); ++i) out[i] /= interior_mass;
  } else {
    const auto interior = interior_regions(geometry, spec.border_width);
    const double share = 1.0 / static_cast<double>(interior.size());
    for (std::size_t i : interior) out[i] = share;
  }
  return out;
}

namespace {
constexpr std::uint32_t kFeatureVersion = 1;
}

RegionGrid load_feature_file(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  binio::Reader in(bytes, "feature file");
  in.expect_magic("H2RF");
  if (const auto version = in.u32(); version != kFeatureVersion) {
    throw VersionError("feature file version " + std::to_string(version) + " is not supported");
  }
  RegionGrid grid;
  grid.source = FeatureSource::kFile;
  grid.geometry.rows = in.u32();
  grid.geometry.cols = in.u32();
  const std::size_t f = in.u32();
  const std::size_t d = grid.geometry.regions();
  if (d == 0 || f == 0) throw FormatError("feature file declares an empty grid");
  grid.features = Tensor(f, d);
  for (std::size_t region = 0; region < d; ++region) {
    for (std::size_t k = 0; k < f; ++k) grid.features(k, region) = in.f32();
  }
  if (!in.at_end()) throw FormatError("feature file has trailing bytes");
  require_finite(grid.features, "feature file");
  return grid;
}

void save_feature_file(const RegionGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  binio::Writer out;
  out.magic("H2RF");
  out.u32(kFeatureVersion);
  out.u32(static_cast<std::uint32_t>(grid.geometry.rows));
  out.u32(static_cast<std::uint32_t>(grid.geometry.cols));
  out.u32(static_cast<std::uint32_t>(grid.feature_dim()));
  for (std::size_t region = 0; region < grid.geometry.regions(); ++region) {
    for (std::size_t k = 0; k < grid.feature_dim(); ++k) out.f32(grid.features(k, region));
  }
  binio::write_file(path, out.bytes());
}

}  // namespace h2rat
