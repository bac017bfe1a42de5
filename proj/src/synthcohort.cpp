#include "dnmfc/synthcohort.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dnmfc::synth {

namespace {

// Parcel 1 is the bundle-free cap of the ellipsoid above this fraction of the
// z semi-axis; the rest of the mask splits into equal-width x blocks.
constexpr double kCapFraction = 0.5;

struct Geometry {
  std::array<double, 3> center;
  std::array<double, 3> axes;
  int parcels;

  double cap_z() const { return center[2] + kCapFraction * axes[2]; }
  double block_x0() const { return center[0] - axes[0]; }
  double block_width() const { return 2.0 * axes[0] / (parcels - 1); }

  int classify(double x, double, double z) const {
    if (z >= cap_z()) return 1;
    int block = static_cast<int>(std::floor((x - block_x0()) / block_width()));
    return 2 + std::clamp(block, 0, parcels - 2);
  }
};

VoxelGrid build_mask(const CohortSpec& spec) {
  VoxelGrid grid;
  grid.dims = spec.grid_dims;
  grid.mask.assign(grid.cell_count(), 0);
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        double dx = (i + 0.5 - spec.mask_center[0]) / spec.mask_semi_axes[0];
        double dy = (j + 0.5 - spec.mask_center[1]) / spec.mask_semi_axes[1];
        double dz = (k + 0.5 - spec.mask_center[2]) / spec.mask_semi_axes[2];
        if (dx * dx + dy * dy + dz * dz <= 1.0) grid.mask[grid.index(i, j, k)] = 1;
      }
  return grid;
}

// Template polylines per parcel: for every (j, k) row of the mask, maximal
// contiguous x runs of one parcel, each traced through voxel centers.
std::vector<std::vector<Polyline>> build_templates(const CohortSpec& spec,
                                                   const VoxelGrid& grid,
                                                   const Geometry& geom) {
  std::vector<std::vector<Polyline>> per_parcel(spec.true_parcel_count);
  std::vector<long> voxel_counts(spec.true_parcel_count, 0);

  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j) {
      int run_parcel = 0;
      Polyline run;
      auto flush = [&]() {
        if (!run.points.empty() && run_parcel >= 2)
          per_parcel[run_parcel - 1].push_back(run);
        run.points.clear();
      };
      for (int i = 0; i < grid.dims[0]; ++i) {
        if (!grid.masked(i, j, k)) {
          flush();
          run_parcel = 0;
          continue;
        }
        int parcel = geom.classify(i + 0.5, j + 0.5, k + 0.5);
        ++voxel_counts[parcel - 1];
        if (parcel != run_parcel) {
          flush();
          run_parcel = parcel;
        }
        run.points.push_back({i + 0.5, j + 0.5, k + 0.5});
      }
      flush();
    }

  if (grid.mask_count() == 0) throw InvalidSpecError("mask is empty");
  for (int p = 0; p < spec.true_parcel_count; ++p)
    if (voxel_counts[p] == 0)
      throw InvalidSpecError("parcel " + std::to_string(p + 1) +
                             " receives no mask voxels; adjust grid or parcel count");
  return per_parcel;
}

int target_parcel(int bundle, int parcels) { return 2 + (bundle - 1) % (parcels - 1); }

}  // namespace

void CohortSpec::validate() const {
  if (grid_dims[0] < 1 || grid_dims[1] < 1 || grid_dims[2] < 1)
    throw InvalidSpecError("grid dims must all be >= 1");
  for (double a : mask_semi_axes)
    if (!(a > 0)) throw InvalidSpecError("mask semi-axes must be positive");
  if (true_parcel_count < 2 || true_parcel_count > kBundleCount + 1)
    throw InvalidSpecError("true_parcel_count must be in 2..7 (six bundles)");
  if (jitter < 0) throw InvalidSpecError("jitter must be >= 0");
  if (dropout < 0 || dropout >= 1) throw InvalidSpecError("dropout must be in [0, 1)");
  if (point_noise < 0) throw InvalidSpecError("point_noise must be >= 0");
  if (subjects < 0) throw InvalidSpecError("subjects must be >= 0");
}

std::vector<std::vector<int>> parcel_bundle_subsets(const CohortSpec& spec) {
  spec.validate();
  std::vector<std::vector<int>> subsets(spec.true_parcel_count);
  for (int b = 1; b <= kBundleCount; ++b)
    subsets[target_parcel(b, spec.true_parcel_count) - 1].push_back(b);
  return subsets;
}

Subject generate_subject(const CohortSpec& spec, int subject_index) {
  spec.validate();
  if (subject_index < 1) throw InvalidInputError("subject_index is 1-based");

  Geometry geom{spec.mask_center, spec.mask_semi_axes, spec.true_parcel_count};
  Subject subject;
  subject.grid = build_mask(spec);
  auto templates = build_templates(spec, subject.grid, geom);

  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(subject_index)};
  std::mt19937_64 rng(seq);

  // one rigid translation per subject, uniform in the jitter ball
  std::array<double, 3> u{0.0, 0.0, 0.0};
  if (spec.jitter > 0) {
    std::uniform_real_distribution<double> cube(-spec.jitter, spec.jitter);
    do {
      for (double& c : u) c = cube(rng);
    } while (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] > spec.jitter * spec.jitter);
  }

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.point_noise > 0 ? spec.point_noise : 1.0);
  for (int b = 1; b <= kBundleCount; ++b) {
    const auto& tmpl = templates[target_parcel(b, spec.true_parcel_count) - 1];
    StreamlineBundle bundle;
    bundle.cluster_id = b;
    for (const Polyline& line : tmpl) {
      if (spec.dropout > 0 && u01(rng) < spec.dropout) continue;
      Polyline out;
      out.points.reserve(line.points.size());
      for (const auto& p : line.points) {
        std::array<double, 3> q{p[0] + u[0], p[1] + u[1], p[2] + u[2]};
        if (spec.point_noise > 0)
          for (double& c : q) c += noise(rng);
        out.points.push_back(q);
      }
      bundle.polylines.push_back(std::move(out));
    }
    if (bundle.polylines.empty() && !tmpl.empty()) {
      // dropout must not erase a bundle outright: keep its first template line
      Polyline out;
      for (const auto& p : tmpl.front().points) {
        std::array<double, 3> q{p[0] + u[0], p[1] + u[1], p[2] + u[2]};
        if (spec.point_noise > 0)
          for (double& c : q) c += noise(rng);
        out.points.push_back(q);
      }
      bundle.polylines.push_back(std::move(out));
    }
    subject.bundles.push_back(std::move(bundle));
  }

  // truth: the subject's anatomy is the template geometry shifted by u, read
  // off at the shared mask voxels
  subject.truth.k_count = spec.true_parcel_count;
  for (int k = 0; k < subject.grid.dims[2]; ++k)
    for (int j = 0; j < subject.grid.dims[1]; ++j)
      for (int i = 0; i < subject.grid.dims[0]; ++i) {
        if (!subject.grid.masked(i, j, k)) continue;
        subject.truth.voxels.push_back({i, j, k});
        subject.truth.labels.push_back(
            geom.classify(i + 0.5 - u[0], j + 0.5 - u[1], k + 0.5 - u[2]));
      }
  return subject;
}

std::vector<Subject> generate_cohort(const CohortSpec& spec) {
  spec.validate();
  std::vector<Subject> subjects;
  subjects.reserve(static_cast<std::size_t>(spec.subjects));
  for (int s = 1; s <= spec.subjects; ++s) subjects.push_back(generate_subject(spec, s));
  return subjects;
}

}  // namespace dnmfc::synth
