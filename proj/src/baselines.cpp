#include "dnmfc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dnmfc/dnmfc.hpp"
#include "dnmfc/nmf.hpp"

namespace dnmfc {

// ---------------------------------------------------------------------------
// k-means

namespace {

VectorXi nearest_centroids(const MatrixXd& z, const MatrixXd& centroids) {
  VectorXi labels(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = (z.row(i) - centroids.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < centroids.rows(); ++k) {
      double d = (z.row(i) - centroids.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels(i) = static_cast<int>(best);
  }
  return labels;
}

}  // namespace

KmeansResult kmeans(const MatrixXd& z, int k, std::uint64_t seed, int max_iters) {
  if (!z.allFinite()) throw InvalidInputError("kmeans: non-finite input");
  if (k < 1) throw InvalidInputError("kmeans: K must be >= 1");
  if (z.rows() < k) throw InvalidInputError("kmeans: fewer points than clusters");

  std::mt19937_64 rng(seed);
  const Eigen::Index n = z.rows();

  // k-means++ seeding: first centroid uniform, the rest proportional to the
  // squared distance to the nearest chosen centroid.
  MatrixXd centroids(k, z.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = z.row(first(rng));
  VectorXd d2 = (z.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0.0;
      for (pick = 0; pick < n - 1; ++pick) {
        acc += d2(pick);
        if (acc >= r && d2(pick) > 0.0) break;
      }
      if (d2(pick) == 0.0)  // boundary landed on an already-chosen point
        for (pick = 0; d2(pick) == 0.0 && pick < n - 1; ++pick) {
        }
    }
    // total == 0 means every point coincides with a chosen centroid (duplicate
    // data); row 0 is as good as any and keeps the pick deterministic.
    centroids.row(c) = z.row(pick);
    d2 = d2.cwiseMin((z.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  VectorXi labels = nearest_centroids(z, centroids);
  for (int it = 0; it < max_iters; ++it) {
    // means
    MatrixXd sums = MatrixXd::Zero(k, z.cols());
    VectorXi sizes = VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels(i)) += z.row(i);
      ++sizes(labels(i));
    }
    std::vector<std::uint8_t> taken(n, 0);
    for (int c = 0; c < k; ++c) {
      if (sizes(c) > 0) {
        centroids.row(c) = sums.row(c) / sizes(c);
        continue;
      }
      // emptied cluster: reseed to the point farthest from its own centroid
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[i]) continue;
        double d = (z.row(i) - centroids.row(labels(i))).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centroids.row(c) = z.row(far);
      taken[far] = 1;
    }
    VectorXi next = nearest_centroids(z, centroids);
    bool changed = (next.array() != labels.array()).any();
    labels = next;
    if (!changed) break;
  }
  return {centroids, labels};
}

// ---------------------------------------------------------------------------
// Student-t head

MatrixXd student_t_assign(const MatrixXd& z, const MatrixXd& centroids) {
  if (!z.allFinite() || !centroids.allFinite())
    throw InvalidInputError("student_t_assign: non-finite input");
  if (z.cols() != centroids.cols())
    throw InvalidInputError("student_t_assign: dimension mismatch");
  MatrixXd q(z.rows(), centroids.rows());
  for (Eigen::Index k = 0; k < centroids.rows(); ++k)
    q.col(k) = 1.0 / ((z.rowwise() - centroids.row(k)).rowwise().squaredNorm().array() + 1.0);
  VectorXd sums = q.rowwise().sum();
  q.array().colwise() /= sums.array();
  return q;
}

MatrixXd TDistHead::soft_labels_rows(const MatrixXd& z) const {
  return student_t_assign(z, centroids_);
}

void TDistHead::backward(const MatrixXd& z, const MatrixXd& h, const MatrixXd& dh,
                         MatrixXd* dz, VectorXd* dparams) const {
  // a_ik = (1 + ||z_i - mu_k||^2)^-1, q = a / rowsum(a):
  // dL/da_ik = (dh_ik - sum_j dh_ij q_ij) / s_i, then da/d d2 = -a^2.
  const Eigen::Index b = z.rows(), k = centroids_.rows();
  MatrixXd a(b, k);
  for (Eigen::Index c = 0; c < k; ++c)
    a.col(c) = 1.0 / ((z.rowwise() - centroids_.row(c)).rowwise().squaredNorm().array() + 1.0);
  VectorXd s = a.rowwise().sum();
  VectorXd dot = (dh.array() * h.array()).rowwise().sum();
  MatrixXd da = (dh.array().colwise() - dot.array()).colwise() / s.array();
  // g_ik = dL/d d2_ik * 2 = -2 a^2 da; d d2/dz_i = (z_i - mu_k), d d2/dmu_k = -(z_i - mu_k)
  MatrixXd g = -2.0 * da.array() * a.array().square();
  *dz = g.rowwise().sum().asDiagonal() * z - g * centroids_;
  MatrixXd dmu = -(g.transpose() * z);
  dmu += g.colwise().sum().asDiagonal() * centroids_;
  *dparams = Eigen::Map<const VectorXd>(dmu.data(), dmu.size());
}

VectorXd TDistHead::params() const {
  return Eigen::Map<const VectorXd>(centroids_.data(), centroids_.size());
}

void TDistHead::set_params(const Eigen::Ref<const VectorXd>& p) {
  if (p.size() != centroids_.size())
    throw InvalidInputError("TDistHead: parameter size mismatch");
  centroids_ = Eigen::Map<const MatrixXd>(p.data(), centroids_.rows(), centroids_.cols());
}

// ---------------------------------------------------------------------------
// DCEC

DcecInit dcec_initialize(const CaeModel& cae, const PooledFeatures& feats,
                         const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = feats.x.rows();
  if (n < cfg.k) throw InvalidInputError("dcec_initialize: need at least K voxels");

  std::vector<std::uint8_t> flagged(n, 0);
  std::vector<Eigen::Index> unflagged;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (feats.point_counts(i) <= 1)
      flagged[i] = 1;
    else
      unflagged.push_back(i);
  }
  if (static_cast<Eigen::Index>(unflagged.size()) < cfg.k)
    throw InvalidInputError("dcec_initialize: fewer than K voxels with point_count > 1");

  MatrixXd z = cae.encode(feats.x);

  VectorXd c1 = VectorXd::Zero(z.cols());
  Eigen::Index flagged_count = n - static_cast<Eigen::Index>(unflagged.size());
  for (Eigen::Index i = 0; i < n; ++i)
    if (flagged[i]) c1 += z.row(i).transpose();
  if (flagged_count > 0) c1 /= static_cast<double>(flagged_count);

  MatrixXd z_unflagged(static_cast<Eigen::Index>(unflagged.size()), z.cols());
  for (std::size_t r = 0; r < unflagged.size(); ++r)
    z_unflagged.row(static_cast<Eigen::Index>(r)) = z.row(unflagged[r]);
  KmeansResult km = kmeans(z_unflagged, cfg.k - 1, cfg.seed);

  MatrixXd centroids(cfg.k, z.cols());
  centroids.row(0) = c1.transpose();
  centroids.bottomRows(cfg.k - 1) = km.centroids;

  MatrixXd q = student_t_assign(z, centroids);  // N x K
  VectorXi labels = argmax_labels(q);
  MatrixXd h = q.transpose();                   // K x N
  for (Eigen::Index i = 0; i < n; ++i)
    if (flagged[i]) {
      labels(i) = 1;
      h.col(i).setZero();
      h(0, i) = 1.0;
    }

  DcecInit init;
  init.centroids0 = std::move(centroids);
  init.state.p = nmf::target_distribution(h);
  init.state.labels = std::move(labels);
  init.state.flagged = std::move(flagged);
  return init;
}

DcecModel dcec_train(const CaeModel& pretrained, const PooledFeatures& feats,
                     const TrainConfig& cfg) {
  DcecInit init = dcec_initialize(pretrained, feats, cfg);
  DcecModel model;
  model.cae = pretrained;
  model.config = cfg;
  TDistHead head(init.centroids0);
  model.trace = joint_train(model.cae, head, feats.x, init.state, cfg);
  model.centroids = head.centroids();
  return model;
}

namespace {

LabelMap labels_from_rows(const MatrixXd& h_rows, const FeatureTable& feats, int k) {
  LabelMap map;
  map.voxels = feats.voxels;
  VectorXi labels = argmax_labels(h_rows);
  map.labels.assign(labels.data(), labels.data() + labels.size());
  map.k_count = k;
  return map;
}

}  // namespace

LabelMap parcellate(const DcecModel& model, const FeatureTable& feats, const VoxelGrid& grid,
                    bool apply_filter) {
  grid.validate();
  for (const Voxel& v : feats.voxels)
    if (!grid.masked(v[0], v[1], v[2]))
      throw InvalidInputError("feature table lists a voxel outside the grid mask");
  if (feats.size() == 0) throw InvalidInputError("parcellate: empty feature table");
  MatrixXd q = student_t_assign(model.cae.encode(feature_matrix(feats)), model.centroids);
  LabelMap map = labels_from_rows(q, feats, static_cast<int>(model.centroids.rows()));
  return apply_filter ? median_filter(map, grid) : map;
}

// ---------------------------------------------------------------------------
// Flat NMF baseline

LabelMap flat_nmf_parcellate(const FeatureTable& feats, int k, std::uint64_t seed) {
  feats.validate();
  if (k < 2) throw InvalidInputError("flat_nmf_parcellate: K must be >= 2");
  const Eigen::Index n = static_cast<Eigen::Index>(feats.size());
  if (n < k) throw InvalidInputError("flat_nmf_parcellate: fewer voxels than parcels");

  MatrixXd f = feature_matrix(feats).transpose();  // 6 x N

  std::vector<Eigen::Index> unflagged;
  VectorXd col1 = VectorXd::Zero(f.rows());
  Eigen::Index flagged_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (feats.point_counts[i] <= 1) {
      col1 += f.col(i);
      ++flagged_count;
    } else {
      unflagged.push_back(i);
    }
  }
  if (static_cast<Eigen::Index>(unflagged.size()) < k - 1)
    throw InvalidInputError("flat_nmf_parcellate: too few voxels with point_count > 1");
  if (flagged_count > 0) col1 /= static_cast<double>(flagged_count);
  if (col1.isZero(0.0)) col1.array() += 1e-6;

  MatrixXd f_unflagged(f.rows(), static_cast<Eigen::Index>(unflagged.size()));
  for (std::size_t c = 0; c < unflagged.size(); ++c)
    f_unflagged.col(static_cast<Eigen::Index>(c)) = f.col(unflagged[c]);
  nmf::FactorizeResult seeded = nmf::factorize(f_unflagged, k - 1, 500, seed);

  MatrixXd w0(f.rows(), k);
  w0.col(0) = col1;
  w0.rightCols(k - 1) = seeded.w;
  MatrixXd h0 = nmf::soft_labels(w0, f);  // strictly positive start

  nmf::FactorizeResult fact = nmf::factorize_from(f, w0, h0, 2000);

  // column-normalize H, argmax with ties to the smaller parcel
  MatrixXd h = fact.h.array() + 1e-12;
  Eigen::RowVectorXd sums = h.colwise().sum();
  h.array().rowwise() /= sums.array();

  LabelMap map;
  map.voxels = feats.voxels;
  map.k_count = k;
  map.labels.resize(feats.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (h(c, i) > h(best, i)) best = c;
    map.labels[static_cast<std::size_t>(i)] = best + 1;
  }
  return map;
}

}  // namespace dnmfc
