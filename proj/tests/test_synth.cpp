#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dnmfc/grid.hpp"
#include "dnmfc/metrics.hpp"
#include "dnmfc/synthcohort.hpp"

using namespace dnmfc;
using synth::CohortSpec;
using synth::Subject;

namespace {

// The documented ellipsoid partition: the cap above half the z semi-axis is
// parcel 1, the rest splits into equal-width x blocks.
int classify_ref(const CohortSpec& s, double x, double z) {
  double cap = s.mask_center[2] + 0.5 * s.mask_semi_axes[2];
  if (z >= cap) return 1;
  double x0 = s.mask_center[0] - s.mask_semi_axes[0];
  double width = 2.0 * s.mask_semi_axes[0] / (s.true_parcel_count - 1);
  int block = static_cast<int>(std::floor((x - x0) / width));
  return 2 + std::clamp(block, 0, s.true_parcel_count - 2);
}

bool inside_mask_ref(const CohortSpec& s, int i, int j, int k) {
  double dx = (i + 0.5 - s.mask_center[0]) / s.mask_semi_axes[0];
  double dy = (j + 0.5 - s.mask_center[1]) / s.mask_semi_axes[1];
  double dz = (k + 0.5 - s.mask_center[2]) / s.mask_semi_axes[2];
  return dx * dx + dy * dy + dz * dz <= 1.0;
}

CohortSpec noiseless() {
  CohortSpec s;
  s.jitter = 0.0;
  s.dropout = 0.0;
  s.point_noise = 0.0;
  return s;
}

std::size_t total_lines(const Subject& s) {
  std::size_t n = 0;
  for (const auto& b : s.bundles) n += b.polylines.size();
  return n;
}

}  // namespace

TEST_CASE("cohort spec validation") {
  CohortSpec ok;
  CHECK_NOTHROW(ok.validate());

  CohortSpec s = ok;
  s.grid_dims = {0, 24, 24};
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);

  s = ok;
  s.mask_semi_axes = {7.5, 0.0, 5.0};
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);
  s.mask_semi_axes = {7.5, -1.0, 5.0};
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);

  s = ok;
  s.true_parcel_count = 1;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);
  s.true_parcel_count = 8;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);
  s.true_parcel_count = 2;
  CHECK_NOTHROW(s.validate());
  s.true_parcel_count = 7;
  CHECK_NOTHROW(s.validate());

  s = ok;
  s.jitter = -0.1;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);

  s = ok;
  s.dropout = -0.1;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);
  s.dropout = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);
  s.dropout = 0.999;
  CHECK_NOTHROW(s.validate());

  s = ok;
  s.point_noise = -0.5;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);

  s = ok;
  s.subjects = -1;
  CHECK_THROWS_AS(s.validate(), InvalidSpecError);
  s.subjects = 0;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("mask and truth follow the ellipsoid partition") {
  CohortSpec spec = noiseless();
  Subject subject = synth::generate_subject(spec, 1);

  const VoxelGrid& g = subject.grid;
  CHECK(g.dims == spec.grid_dims);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        CHECK(g.masked(i, j, k) == inside_mask_ref(spec, i, j, k));

  REQUIRE(subject.truth.size() == g.mask_count());
  CHECK(subject.truth.k_count == 3);
  for (std::size_t r = 0; r < subject.truth.size(); ++r) {
    const Voxel& v = subject.truth.voxels[r];
    CHECK(subject.truth.labels[r] == classify_ref(spec, v[0] + 0.5, v[2] + 0.5));
  }
  // all three parcels are populated
  for (int p = 1; p <= 3; ++p)
    CHECK(std::count(subject.truth.labels.begin(), subject.truth.labels.end(), p) > 0);
}

TEST_CASE("noiseless bundles annotate to exact per-parcel signatures") {
  CohortSpec spec = noiseless();
  Subject subject = synth::generate_subject(spec, 1);

  REQUIRE(subject.bundles.size() == 6);
  for (int b = 0; b < 6; ++b) {
    CHECK(subject.bundles[b].cluster_id == b + 1);
    CHECK(!subject.bundles[b].polylines.empty());
  }

  FeatureTable table = annotate(subject.bundles, subject.grid);
  REQUIRE(table.size() == subject.truth.size());
  CHECK(table.voxels == subject.truth.voxels);

  // odd bundles run through parcel 2, even bundles through parcel 3; the cap
  // parcel carries nothing, so its voxels stay all-zero with zero vertices
  const std::array<std::uint8_t, 6> empty{0, 0, 0, 0, 0, 0};
  const std::array<std::uint8_t, 6> two{1, 0, 1, 0, 1, 0};
  const std::array<std::uint8_t, 6> three{0, 1, 0, 1, 0, 1};
  for (std::size_t r = 0; r < table.size(); ++r) {
    int truth = subject.truth.labels[r];
    const auto& expected = truth == 1 ? empty : truth == 2 ? two : three;
    CHECK(table.features[r] == expected);
    CHECK(table.point_counts[r] == (truth == 1 ? 0 : 3));
  }
}

TEST_CASE("noiseless generation is identical across subjects and calls") {
  CohortSpec spec = noiseless();
  Subject a = synth::generate_subject(spec, 1);
  Subject b = synth::generate_subject(spec, 2);
  Subject c = synth::generate_subject(spec, 1);

  CHECK(a.truth.labels == b.truth.labels);
  CHECK(a.truth.labels == c.truth.labels);
  REQUIRE(a.bundles.size() == b.bundles.size());
  for (std::size_t i = 0; i < a.bundles.size(); ++i) {
    REQUIRE(a.bundles[i].polylines.size() == b.bundles[i].polylines.size());
    for (std::size_t l = 0; l < a.bundles[i].polylines.size(); ++l) {
      CHECK(a.bundles[i].polylines[l].points == b.bundles[i].polylines[l].points);
      CHECK(a.bundles[i].polylines[l].points == c.bundles[i].polylines[l].points);
    }
  }
}

TEST_CASE("jitter applies one rigid translation per subject") {
  CohortSpec spec = noiseless();
  Subject base = synth::generate_subject(spec, 1);

  CohortSpec jittered = spec;
  jittered.jitter = 2.0;
  Subject moved = synth::generate_subject(jittered, 1);

  REQUIRE(total_lines(moved) == total_lines(base));
  const auto& p0 = base.bundles[0].polylines[0].points[0];
  const auto& q0 = moved.bundles[0].polylines[0].points[0];
  std::array<double, 3> u{q0[0] - p0[0], q0[1] - p0[1], q0[2] - p0[2]};
  double norm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  CHECK(norm > 0.0);
  CHECK(norm <= 2.0);

  for (std::size_t b = 0; b < 6; ++b) {
    REQUIRE(moved.bundles[b].polylines.size() == base.bundles[b].polylines.size());
    for (std::size_t l = 0; l < moved.bundles[b].polylines.size(); ++l) {
      const auto& tp = base.bundles[b].polylines[l].points;
      const auto& mp = moved.bundles[b].polylines[l].points;
      REQUIRE(mp.size() == tp.size());
      for (std::size_t s = 0; s < mp.size(); ++s)
        for (int ax = 0; ax < 3; ++ax)
          CHECK(mp[s][ax] - tp[s][ax] == doctest::Approx(u[ax]).epsilon(1e-12));
    }
  }

  // the truth anatomy moves with the same translation
  for (std::size_t r = 0; r < moved.truth.size(); ++r) {
    const Voxel& v = moved.truth.voxels[r];
    CHECK(moved.truth.labels[r] ==
          classify_ref(jittered, v[0] + 0.5 - u[0], v[2] + 0.5 - u[2]));
  }

  // different subjects draw different translations
  Subject other = synth::generate_subject(jittered, 2);
  const auto& r0 = other.bundles[0].polylines[0].points[0];
  CHECK((r0[0] != q0[0] || r0[1] != q0[1] || r0[2] != q0[2]));
}

TEST_CASE("dropout removes polylines but never empties a bundle") {
  CohortSpec spec = noiseless();
  Subject base = synth::generate_subject(spec, 1);

  CohortSpec dropped = spec;
  dropped.dropout = 0.5;
  Subject subject = synth::generate_subject(dropped, 1);

  REQUIRE(subject.bundles.size() == 6);
  for (std::size_t b = 0; b < 6; ++b) {
    CHECK(subject.bundles[b].polylines.size() >= 1);
    CHECK(subject.bundles[b].polylines.size() <= base.bundles[b].polylines.size());
  }
  CHECK(total_lines(subject) < total_lines(base));

  CohortSpec heavy = spec;
  heavy.dropout = 0.999;  // the backstop keeps one line per bundle
  Subject survivor = synth::generate_subject(heavy, 1);
  for (const auto& bundle : survivor.bundles) CHECK(!bundle.polylines.empty());
}

TEST_CASE("point noise perturbs vertices without changing line structure") {
  CohortSpec spec = noiseless();
  Subject base = synth::generate_subject(spec, 1);

  CohortSpec noisy = spec;
  noisy.point_noise = 0.5;
  Subject subject = synth::generate_subject(noisy, 1);

  REQUIRE(total_lines(subject) == total_lines(base));
  double first_delta = subject.bundles[0].polylines[0].points[0][0] -
                       base.bundles[0].polylines[0].points[0][0];
  bool any_moved = false, any_differs = false;
  for (std::size_t b = 0; b < 6; ++b)
    for (std::size_t l = 0; l < subject.bundles[b].polylines.size(); ++l) {
      const auto& np = subject.bundles[b].polylines[l].points;
      const auto& tp = base.bundles[b].polylines[l].points;
      REQUIRE(np.size() == tp.size());
      for (std::size_t s = 0; s < np.size(); ++s)
        for (int ax = 0; ax < 3; ++ax) {
          double d = np[s][ax] - tp[s][ax];
          if (d != 0.0) any_moved = true;
          if (d != first_delta) any_differs = true;
        }
    }
  CHECK(any_moved);
  CHECK(any_differs);  // independent per coordinate, not one rigid shift
}

TEST_CASE("default cohort truths stay reproducible across subjects") {
  CohortSpec spec;  // defaults: 12 subjects, jitter 1.0, dropout 0.1, noise 0.2
  std::vector<Subject> cohort = synth::generate_cohort(spec);
  REQUIRE(cohort.size() == 12);

  std::vector<LabelMap> truths;
  for (const auto& s : cohort) {
    REQUIRE(s.truth.size() == s.grid.mask_count());
    truths.push_back(s.truth);
  }
  metrics::DiceSummary dice = metrics::dice_summary(truths, 3);
  CHECK(dice.mean >= 0.8);  // one-voxel jitter keeps parcels overlapping
  CHECK(dice.both_empty_pairs == 0);
  CHECK(dice.one_empty_pairs == 0);

  // jitter actually moved the anatomy between subjects
  bool truths_differ = false;
  for (std::size_t s = 1; s < truths.size() && !truths_differ; ++s)
    truths_differ = truths[s].labels != truths[0].labels;
  CHECK(truths_differ);

  // the cohort is the per-index generation, 1-based
  Subject first = synth::generate_subject(spec, 1);
  CHECK(cohort[0].truth.labels == first.truth.labels);
  REQUIRE(cohort[0].bundles.size() == first.bundles.size());
  for (std::size_t b = 0; b < first.bundles.size(); ++b) {
    REQUIRE(cohort[0].bundles[b].polylines.size() == first.bundles[b].polylines.size());
    for (std::size_t l = 0; l < first.bundles[b].polylines.size(); ++l)
      CHECK(cohort[0].bundles[b].polylines[l].points ==
            first.bundles[b].polylines[l].points);
  }

  // annotated tables cover the mask even under noise
  FeatureTable table = annotate(cohort[0].bundles, cohort[0].grid);
  CHECK(table.size() == cohort[0].grid.mask_count());

  CHECK_THROWS_AS(synth::generate_subject(spec, 0), InvalidInputError);
  CohortSpec none = spec;
  none.subjects = 0;
  CHECK(synth::generate_cohort(none).empty());
}

TEST_CASE("bundle subsets alternate over the bundled parcels") {
  CohortSpec spec;
  auto subsets = synth::parcel_bundle_subsets(spec);
  REQUIRE(subsets.size() == 3);
  CHECK(subsets[0].empty());
  CHECK(subsets[1] == std::vector<int>{1, 3, 5});
  CHECK(subsets[2] == std::vector<int>{2, 4, 6});

  for (int parcels = 2; parcels <= 7; ++parcels) {
    CohortSpec s;
    s.true_parcel_count = parcels;
    auto sub = synth::parcel_bundle_subsets(s);
    REQUIRE(static_cast<int>(sub.size()) == parcels);
    CHECK(sub[0].empty());
    std::set<int> seen;
    for (std::size_t p = 1; p < sub.size(); ++p) {
      CHECK(!sub[p].empty());  // every bundled parcel is reachable
      for (int b : sub[p]) seen.insert(b);
    }
    CHECK(seen == std::set<int>{1, 2, 3, 4, 5, 6});
  }
}

TEST_CASE("degenerate geometry is rejected") {
  CohortSpec empty;
  empty.grid_dims = {6, 6, 6};
  empty.mask_center = {3.0, 3.0, 3.0};
  empty.mask_semi_axes = {0.3, 0.3, 0.3};  // no voxel center inside
  CHECK_THROWS_AS(synth::generate_subject(empty, 1), InvalidSpecError);

  CohortSpec starved;
  starved.grid_dims = {8, 8, 8};
  starved.mask_center = {4.0, 4.0, 4.0};
  starved.mask_semi_axes = {1.1, 1.1, 1.1};  // 2x2x2 mask
  starved.true_parcel_count = 7;             // cannot populate 7 parcels
  CHECK_THROWS_AS(synth::generate_subject(starved, 1), InvalidSpecError);
}
