#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "dnmfc/dnmfc.hpp"
#include "dnmfc/metrics.hpp"

using namespace dnmfc;

namespace {

// Three disjoint-support feature blobs; every voxel of blob 1 is
// low-connectivity (point_count 0 or 1), matching the anatomy where the
// region of parcel 1 is crossed by almost no streamline points.
PooledFeatures blob_pool(std::mt19937_64& rng, int per_blob) {
  std::uniform_real_distribution<double> hi(0.85, 1.0);
  PooledFeatures f;
  f.x = MatrixXd::Zero(3 * per_blob, 6);
  f.point_counts.resize(3 * per_blob);
  for (int g = 0; g < 3; ++g)
    for (int r = 0; r < per_blob; ++r) {
      int row = g * per_blob + r;
      f.x(row, g) = hi(rng);
      f.x(row, g + 3) = hi(rng);
      f.point_counts(row) = (g == 0) ? (r % 2) : 5;
      f.subject_of.push_back(0);
    }
  f.subject_ids = {"s1"};
  return f;
}

VoxelGrid full_grid(int nx, int ny, int nz) {
  VoxelGrid g;
  g.dims = {nx, ny, nz};
  g.mask.assign(static_cast<std::size_t>(nx) * ny * nz, 1);
  return g;
}

// Feature table covering the grid's mask in (k, j, i) order.
FeatureTable table_on(const VoxelGrid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> bit(0, 1), pc(0, 6);
  FeatureTable t;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        if (!g.masked(i, j, k)) continue;
        t.voxels.push_back({i, j, k});
        std::array<std::uint8_t, kBundleCount> row{};
        for (auto& b : row) b = static_cast<std::uint8_t>(bit(rng));
        t.features.push_back(row);
        t.point_counts.push_back(pc(rng));
      }
  return t;
}

LabelMap map_on(const VoxelGrid& g, const std::vector<int>& labels, int k) {
  LabelMap m;
  for (int kk = 0; kk < g.dims[2]; ++kk)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (g.masked(i, j, kk)) m.voxels.push_back({i, j, kk});
  m.labels = labels;
  m.k_count = k;
  return m;
}

int label_at(const LabelMap& m, const Voxel& v) {
  for (std::size_t r = 0; r < m.size(); ++r)
    if (m.voxels[r] == v) return m.labels[r];
  FAIL("voxel not found");
  return 0;
}

}  // namespace

TEST_CASE("initialize flags point_count <= 1 voxels and labels them parcel 1") {
  std::mt19937_64 rng(123);
  PooledFeatures feats = blob_pool(rng, 20);
  CaeModel cae = pretrain(feats.x, {.epochs = 400, .seed = 9, .batch_size = 8});
  TrainConfig cfg;
  cfg.k = 3;
  cfg.seed = 1;
  DnmfcInit init = initialize(cae, feats, cfg);

  REQUIRE(init.state.labels.size() == 60);
  REQUIRE(init.state.flagged.size() == 60);
  CHECK(init.w0.rows() == 36);
  CHECK(init.w0.cols() == 3);
  CHECK(init.w0.minCoeff() >= 0.0);
  for (int i = 0; i < 60; ++i) {
    bool low = feats.point_counts(i) <= 1;
    CHECK(init.state.flagged[i] == (low ? 1 : 0));
    if (low) {
      CHECK(init.state.labels(i) == 1);       // covers point_count 0 and 1
      CHECK(init.state.p(0, i) == 1.0);       // target forced one-hot on parcel 1
      CHECK(init.state.p.col(i).sum() == 1.0);
    }
  }

  // the unflagged voxels split into their blobs
  std::vector<int> labels, truth;
  for (int i = 0; i < 60; ++i) {
    if (feats.point_counts(i) <= 1) continue;
    labels.push_back(init.state.labels(i));
    truth.push_back(i / 20 + 1);
  }
  CHECK(metrics::adjusted_rand(labels, truth) >= 0.9);
}

TEST_CASE("initialize backstops an all-zero first component") {
  // zero autoencoder: every embedding is exactly zero
  PooledFeatures feats;
  feats.x = MatrixXd::Constant(8, 6, 0.5);
  feats.point_counts.resize(8);
  feats.point_counts << 0, 1, 4, 4, 4, 4, 4, 4;
  feats.subject_of.assign(8, 0);
  feats.subject_ids = {"s1"};
  TrainConfig cfg;
  cfg.k = 3;
  DnmfcInit init = initialize(CaeModel(), feats, cfg);
  CHECK((init.w0.col(0).array() == 1e-6).all());
  for (int i = 0; i < 8; ++i) CHECK(init.state.labels(i) == 1);  // uniform ties
}

TEST_CASE("initialize input validation") {
  TrainConfig cfg;
  cfg.k = 3;
  CaeModel cae(1);

  PooledFeatures tiny;
  tiny.x = MatrixXd::Constant(2, 6, 0.5);
  tiny.point_counts.resize(2);
  tiny.point_counts << 5, 5;
  CHECK_THROWS_AS(initialize(cae, tiny, cfg), InvalidInputError);  // N < K

  PooledFeatures sparse;
  sparse.x = MatrixXd::Constant(6, 6, 0.5);
  sparse.point_counts.resize(6);
  sparse.point_counts << 0, 1, 1, 0, 5, 5;  // only 2 unflagged
  CHECK_THROWS_AS(initialize(cae, sparse, cfg), InvalidInputError);

  TrainConfig bad = cfg;
  bad.k = 1;
  PooledFeatures ok;
  ok.x = MatrixXd::Constant(8, 6, 0.5);
  ok.point_counts = VectorXi::Constant(8, 5);
  CHECK_THROWS_AS(initialize(cae, ok, bad), InvalidInputError);
}

TEST_CASE("training on a blob cohort converges before max_steps") {
  std::mt19937_64 rng(123);
  PooledFeatures feats = blob_pool(rng, 20);
  CaeModel cae = pretrain(feats.x, {.epochs = 150, .seed = 4, .batch_size = 16});
  TrainConfig cfg;
  cfg.k = 3;
  cfg.seed = 2;
  cfg.batch_size = 64;
  DnmfcModel model = train(cae, feats, cfg);

  CHECK(model.trace.steps_run < cfg.max_steps);
  REQUIRE(!model.trace.refreshes.empty());
  CHECK(model.trace.refreshes.back().label_change_fraction < cfg.delta);
  CHECK(model.w.minCoeff() >= 0.0);
  CHECK(model.w.cols() == 3);
  CHECK(model.trace.degenerate_reinits == 0);

  // the parcel-1 rule is visible in the recorded trace
  REQUIRE(model.trace.initial_labels.size() == 60);
  for (int i = 0; i < 60; ++i)
    if (feats.point_counts(i) <= 1) CHECK(model.trace.initial_labels[i] == 1);
}

TEST_CASE("parcellate assigns by argmax with ties to parcel 1 on zero embeddings") {
  VoxelGrid grid = full_grid(3, 3, 2);
  std::mt19937_64 rng(8);
  FeatureTable feats = table_on(grid, rng);

  DnmfcModel model;
  model.cae = CaeModel();  // zero parameters: every embedding is zero
  std::uniform_real_distribution<double> u(0.1, 1.0);
  model.w.resize(36, 3);
  for (int i = 0; i < model.w.size(); ++i) model.w.data()[i] = u(rng);

  LabelMap map = parcellate(model, feats, grid, false);
  CHECK(map.k_count == 3);
  CHECK(map.voxels == feats.voxels);
  for (int l : map.labels) CHECK(l == 1);  // uniform soft labels tie to parcel 1
}

TEST_CASE("parcellate is deterministic and filtering composes") {
  std::mt19937_64 rng(123);
  PooledFeatures pool = blob_pool(rng, 20);
  CaeModel cae = pretrain(pool.x, {.epochs = 60, .seed = 4, .batch_size = 16});
  TrainConfig cfg;
  cfg.k = 3;
  cfg.batch_size = 64;
  DnmfcModel model = train(cae, pool, cfg);

  VoxelGrid grid = full_grid(4, 4, 4);
  FeatureTable feats = table_on(grid, rng);
  LabelMap raw = parcellate(model, feats, grid, false);
  LabelMap again = parcellate(model, feats, grid, false);
  CHECK(raw.labels == again.labels);
  CHECK(raw.voxels == feats.voxels);
  for (int l : raw.labels) {
    CHECK(l >= 1);
    CHECK(l <= 3);
  }

  LabelMap filtered = parcellate(model, feats, grid, true);
  LabelMap composed = median_filter(raw, grid);
  CHECK(filtered.labels == composed.labels);
}

TEST_CASE("parcellate input validation") {
  DnmfcModel model;
  model.cae = CaeModel(3);
  model.w = MatrixXd::Constant(36, 2, 0.5);

  VoxelGrid grid = full_grid(2, 2, 2);
  grid.mask[grid.index(1, 1, 1)] = 0;

  FeatureTable outside;
  outside.voxels = {{1, 1, 1}};
  outside.features = {{1, 0, 0, 0, 0, 0}};
  outside.point_counts = {3};
  CHECK_THROWS_AS(parcellate(model, outside, grid, false), InvalidInputError);

  FeatureTable empty;
  CHECK_THROWS_AS(parcellate(model, empty, grid, false), InvalidInputError);
}

TEST_CASE("median filter corrects an isolated voxel") {
  VoxelGrid grid = full_grid(3, 3, 3);
  std::vector<int> labels(27, 1);
  LabelMap m = map_on(grid, labels, 2);
  // center voxel (1,1,1) sits at row index 13 in (k, j, i) order
  m.labels[13] = 2;
  REQUIRE(m.voxels[13] == Voxel{1, 1, 1});

  LabelMap out = median_filter(m, grid);
  CHECK(label_at(out, {1, 1, 1}) == 1);
  for (std::size_t r = 0; r < out.size(); ++r)
    CHECK(out.labels[r] == 1);  // neighbors keep their modal label 1
}

TEST_CASE("median filter is idempotent on uniform maps") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    VoxelGrid g = full_grid(3 + trial % 3, 3, 2);
    for (auto& v : g.mask) v = u(rng) < 0.7 ? 1 : 0;
    if (g.mask_count() == 0) continue;
    int label = 1 + trial % 4;
    LabelMap m = map_on(g, std::vector<int>(g.mask_count(), label), 4);
    LabelMap out = median_filter(m, g);
    CHECK(out.labels == m.labels);
    CHECK(out.voxels == m.voxels);
  }
}

TEST_CASE("median filter tie rules on mask boundaries") {
  // 2x2x1 sheet: voxel (0,0) has exactly 3 in-mask neighbors
  VoxelGrid g = full_grid(2, 2, 1);

  // neighborhood counts {1: 2, 2: 2} — own label is modal, so it stays
  LabelMap m = map_on(g, {2, 1, 1, 2}, 2);  // rows: (0,0),(1,0),(0,1),(1,1)
  CHECK(label_at(median_filter(m, g), {0, 0, 0}) == 2);

  // own label outvoted: counts {1: 3, 2: 1} — becomes 1
  LabelMap n = map_on(g, {2, 1, 1, 1}, 2);
  LabelMap out = median_filter(n, g);
  CHECK(label_at(out, {0, 0, 0}) == 1);
  for (int l : out.labels) CHECK(l == 1);

  // own label not modal and two labels tied on top: smallest modal label wins
  VoxelGrid row6 = full_grid(3, 2, 1);
  //            (0,0) (1,0) (2,0) (0,1) (1,1) (2,1)
  LabelMap t = map_on(row6, {1, 2, 3, 1, 3, 4}, 4);
  // voxel (1,0): neighborhood is the whole sheet; counts 1:2, 2:1, 3:2, 4:1
  // -> modal {1,3}, own 2 not modal -> 1
  CHECK(label_at(median_filter(t, row6), {1, 0, 0}) == 1);
}

TEST_CASE("median filter never introduces new labels over 1000 random maps") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(3, 5), kpick(2, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    VoxelGrid g = full_grid(dim(rng), dim(rng), dim(rng));
    for (auto& v : g.mask) v = u(rng) < 0.6 ? 1 : 0;
    if (g.mask_count() == 0) continue;
    int k = kpick(rng);
    std::uniform_int_distribution<int> lab(1, k);
    std::vector<int> labels(g.mask_count());
    for (auto& l : labels) l = lab(rng);
    LabelMap m = map_on(g, labels, k);
    LabelMap out = median_filter(m, g);

    CHECK(out.voxels == m.voxels);
    CHECK(out.k_count == m.k_count);
    std::set<int> in(m.labels.begin(), m.labels.end());
    for (int l : out.labels) CHECK(in.count(l) == 1);
  }
}

TEST_CASE("median filter validates coverage") {
  VoxelGrid g = full_grid(2, 2, 1);
  LabelMap short_map = map_on(g, {1, 1, 1, 1}, 2);
  short_map.voxels.pop_back();
  short_map.labels.pop_back();
  CHECK_THROWS_AS(median_filter(short_map, g), InvalidInputError);

  LabelMap outside = map_on(g, {1, 1, 1, 1}, 2);
  outside.voxels[3] = {5, 5, 5};
  CHECK_THROWS_AS(median_filter(outside, g), InvalidInputError);

  LabelMap bad_label = map_on(g, {1, 1, 1, 3}, 2);  // label outside 1..K
  CHECK_THROWS_AS(median_filter(bad_label, g), InvalidInputError);
}
