#pragma once

#include <cstdint>
#include <vector>

#include "dnmfc/types.hpp"

namespace dnmfc::synth {

// Desk-scale stand-in for a tractography cohort: an ellipsoid mask partitioned
// into contiguous parcels (parcel 1 deliberately receives no bundles), six
// bundle templates covering the bundled parcels, and per-subject rigid jitter,
// polyline dropout and point noise.
struct CohortSpec {
  std::array<int, 3> grid_dims{24, 24, 24};
  std::array<double, 3> mask_center{12.0, 12.0, 12.0};
  std::array<double, 3> mask_semi_axes{7.5, 6.0, 5.0};
  int true_parcel_count = 3;
  double jitter = 1.0;       // max norm of the per-subject translation, voxels
  double dropout = 0.1;      // per-polyline drop probability
  double point_noise = 0.2;  // per-coordinate Gaussian sigma, voxels
  int subjects = 12;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Subject {
  VoxelGrid grid;
  std::vector<StreamlineBundle> bundles;
  LabelMap truth;
};

// Deterministic in (spec.seed, subject_index); indices are 1-based.
Subject generate_subject(const CohortSpec& spec, int subject_index);

std::vector<Subject> generate_cohort(const CohortSpec& spec);

// Bundle subset targeting each true parcel; parcel 1 gets the empty set.
std::vector<std::vector<int>> parcel_bundle_subsets(const CohortSpec& spec);

}  // namespace dnmfc::synth
