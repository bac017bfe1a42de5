#include "dnmfc/types.hpp"

#include <algorithm>
#include <set>

namespace dnmfc {

std::size_t VoxelGrid::mask_count() const {
  std::size_t n = 0;
  for (auto v : mask) n += (v != 0);
  return n;
}

void VoxelGrid::validate() const {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
    throw InvalidInputError("grid dims must all be >= 1");
  if (mask.size() != cell_count())
    throw InvalidInputError("mask storage length does not match grid dims");
  for (auto v : mask)
    if (v > 1) throw InvalidInputError("mask entries must be 0 or 1");
}

void FeatureTable::validate() const {
  if (features.size() != voxels.size() || point_counts.size() != voxels.size())
    throw InvalidInputError("feature table columns have mismatched lengths");
  std::set<Voxel> seen;
  for (std::size_t r = 0; r < voxels.size(); ++r) {
    if (!seen.insert(voxels[r]).second)
      throw InvalidInputError("feature table lists a voxel twice");
    if (point_counts[r] < 0) throw InvalidInputError("negative point count");
    // Note: point_count 0 with a nonzero feature is allowed — a segment can
    // cross a voxel without placing a vertex in it.
    for (auto b : features[r])
      if (b > 1) throw InvalidInputError("feature entries must be 0 or 1");
  }
}

void LabelMap::validate() const {
  if (labels.size() != voxels.size())
    throw InvalidInputError("label map columns have mismatched lengths");
  if (k_count < 1) throw InvalidInputError("label map needs k_count >= 1");
  for (int l : labels)
    if (l < 1 || l > k_count) throw InvalidInputError("label outside 1..K");
}

PooledFeatures pool_features(const std::vector<const FeatureTable*>& tables,
                             const std::vector<std::string>& ids) {
  if (tables.empty()) throw InvalidInputError("no feature tables to pool");
  if (ids.size() != tables.size())
    throw InvalidInputError("one subject id per feature table required");

  std::size_t total = 0;
  for (const auto* t : tables) total += t->size();
  if (total == 0) throw InvalidInputError("pooled feature set is empty");

  PooledFeatures pooled;
  pooled.x.resize(static_cast<Eigen::Index>(total), kBundleCount);
  pooled.point_counts.resize(static_cast<Eigen::Index>(total));
  pooled.subject_of.reserve(total);
  pooled.subject_ids = ids;

  Eigen::Index row = 0;
  for (std::size_t s = 0; s < tables.size(); ++s) {
    const FeatureTable& t = *tables[s];
    for (std::size_t r = 0; r < t.size(); ++r, ++row) {
      for (int j = 0; j < kBundleCount; ++j) pooled.x(row, j) = t.features[r][j];
      pooled.point_counts(row) = t.point_counts[r];
      pooled.subject_of.push_back(static_cast<int>(s));
    }
  }
  return pooled;
}

MatrixXd feature_matrix(const FeatureTable& table) {
  MatrixXd x(static_cast<Eigen::Index>(table.size()), kBundleCount);
  for (std::size_t r = 0; r < table.size(); ++r)
    for (int j = 0; j < kBundleCount; ++j)
      x(static_cast<Eigen::Index>(r), j) = table.features[r][j];
  return x;
}

}  // namespace dnmfc
