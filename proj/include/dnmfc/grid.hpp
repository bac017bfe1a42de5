#pragma once

#include <set>
#include <vector>

#include "dnmfc/types.hpp"

namespace dnmfc {

// Every lattice cell visited by the polyline: the exact limit of supersampling
// each segment ever more finely and flooring each sample to a cell, computed by
// enumerating integer-plane crossings. Cells outside the grid are dropped; the
// result is deduplicated and sorted.
std::vector<Voxel> rasterize_polyline(const Polyline& polyline, const VoxelGrid& grid);

// Binary bundle-intersection features and raw vertex counts for every in-mask voxel.
// Expects exactly six bundles carrying cluster ids 1..6.
FeatureTable annotate(const std::vector<StreamlineBundle>& bundles, const VoxelGrid& grid);

}  // namespace dnmfc
