#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dnmfc/errors.hpp"

namespace dnmfc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

using Voxel = std::array<int, 3>;  // (i, j, k)

constexpr int kBundleCount = 6;

// 3-D lattice with a binary in/out mask, stored x-fastest.
struct VoxelGrid {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> mask;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  bool masked(int i, int j, int k) const {
    return in_bounds(i, j, k) && mask[index(i, j, k)] != 0;
  }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t mask_count() const;
  void validate() const;
};

struct Polyline {
  std::vector<std::array<double, 3>> points;
};

struct StreamlineBundle {
  int cluster_id = 0;  // 1..6
  std::vector<Polyline> polylines;
};

// Per in-mask voxel: binary bundle-intersection vector plus raw streamline-point count.
// Rows follow (k, j, i) order, i fastest.
struct FeatureTable {
  std::vector<Voxel> voxels;
  std::vector<std::array<std::uint8_t, kBundleCount>> features;
  std::vector<int> point_counts;

  std::size_t size() const { return voxels.size(); }
  void validate() const;
};

struct LabelMap {
  std::vector<Voxel> voxels;
  std::vector<int> labels;  // 1..k_count
  int k_count = 0;

  std::size_t size() const { return voxels.size(); }
  void validate() const;
};

// Feature tables of several subjects stacked for training. X holds one voxel per
// row, raw binary features as doubles.
struct PooledFeatures {
  MatrixXd x;                       // N x 6
  VectorXi point_counts;            // N
  std::vector<int> subject_of;      // N, index into subject list
  std::vector<std::string> subject_ids;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

PooledFeatures pool_features(const std::vector<const FeatureTable*>& tables,
                             const std::vector<std::string>& ids);
MatrixXd feature_matrix(const FeatureTable& table);  // N x 6

}  // namespace dnmfc
