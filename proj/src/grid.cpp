#include "dnmfc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dnmfc {

namespace {

Voxel floor_cell(const std::array<double, 3>& p) {
  return {static_cast<int>(std::floor(p[0])), static_cast<int>(std::floor(p[1])),
          static_cast<int>(std::floor(p[2]))};
}

}  // namespace

std::vector<Voxel> rasterize_polyline(const Polyline& polyline, const VoxelGrid& grid) {
  if (polyline.points.empty()) throw InvalidInputError("cannot rasterize an empty polyline");

  std::set<Voxel> cells;
  auto visit = [&](const std::array<double, 3>& p) {
    Voxel c = floor_cell(p);
    if (grid.in_bounds(c[0], c[1], c[2])) cells.insert(c);
  };

  visit(polyline.points.front());
  std::vector<double> ts;
  for (std::size_t s = 0; s + 1 < polyline.points.size(); ++s) {
    const auto& a = polyline.points[s];
    const auto& b = polyline.points[s + 1];
    visit(b);

    // Parameters where the segment crosses an integer plane; between two
    // consecutive crossings it stays inside one cell, so sampling each
    // interval's midpoint yields exactly the cells with positive chord length.
    ts.assign({0.0, 1.0});
    for (int ax = 0; ax < 3; ++ax) {
      double d = b[ax] - a[ax];
      if (d == 0.0) continue;
      double lo = std::min(a[ax], b[ax]), hi = std::max(a[ax], b[ax]);
      for (double m = std::floor(lo) + 1.0; m < hi; ++m) {
        double t = (m - a[ax]) / d;
        if (t > 0.0 && t < 1.0) ts.push_back(t);
      }
    }
    std::sort(ts.begin(), ts.end());
    for (std::size_t c = 0; c + 1 < ts.size(); ++c) {
      if (!(ts[c + 1] > ts[c])) continue;
      double u = 0.5 * (ts[c] + ts[c + 1]);
      visit({a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]), a[2] + u * (b[2] - a[2])});
    }
  }
  return {cells.begin(), cells.end()};
}

FeatureTable annotate(const std::vector<StreamlineBundle>& bundles, const VoxelGrid& grid) {
  grid.validate();
  if (grid.mask_count() == 0) throw InvalidInputError("grid mask is empty");
  if (bundles.size() != static_cast<std::size_t>(kBundleCount))
    throw InvalidInputError("annotate expects exactly 6 bundles");

  std::array<const StreamlineBundle*, kBundleCount> by_id{};
  for (const auto& b : bundles) {
    if (b.cluster_id < 1 || b.cluster_id > kBundleCount)
      throw InvalidInputError("bundle cluster_id outside 1..6");
    if (by_id[b.cluster_id - 1] != nullptr)
      throw InvalidInputError("duplicate bundle cluster_id");
    by_id[b.cluster_id - 1] = &b;
  }

  // Dense per-cell scratch: one bit set per intersecting bundle, plus raw
  // vertex counts. Sized by the grid, not the mask, so lookups stay O(1).
  std::vector<std::uint8_t> bits(grid.cell_count(), 0);
  std::vector<int> counts(grid.cell_count(), 0);

  for (int j = 0; j < kBundleCount; ++j) {
    const StreamlineBundle& bundle = *by_id[j];
    for (const auto& line : bundle.polylines) {
      for (const Voxel& c : rasterize_polyline(line, grid))
        bits[grid.index(c[0], c[1], c[2])] |= static_cast<std::uint8_t>(1u << j);
      for (const auto& p : line.points) {
        Voxel c = {static_cast<int>(std::floor(p[0])), static_cast<int>(std::floor(p[1])),
                   static_cast<int>(std::floor(p[2]))};
        if (grid.in_bounds(c[0], c[1], c[2])) ++counts[grid.index(c[0], c[1], c[2])];
      }
    }
  }

  FeatureTable table;
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        if (!grid.masked(i, j, k)) continue;
        std::size_t cell = grid.index(i, j, k);
        table.voxels.push_back({i, j, k});
        std::array<std::uint8_t, kBundleCount> x{};
        for (int b = 0; b < kBundleCount; ++b) x[b] = (bits[cell] >> b) & 1u;
        table.features.push_back(x);
        table.point_counts.push_back(counts[cell]);
      }
  return table;
}

}  // namespace dnmfc
