#include "dnmfc/dnmfc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dnmfc {

namespace {
constexpr double kEps = 1e-12;
}

// ---------------------------------------------------------------------------
// NmfHead

MatrixXd NmfHead::soft_labels_rows(const MatrixXd& z) const {
  if (z.cols() != w_.rows())
    throw InvalidInputError("soft labels: embedding width does not match W");
  MatrixXd h = (z * w_).array() + kEps;
  VectorXd sums = h.rowwise().sum();
  h.array().colwise() /= sums.array();
  return h;
}

void NmfHead::backward(const MatrixXd& z, const MatrixXd& h, const MatrixXd& dh,
                       MatrixXd* dz, VectorXd* dparams) const {
  // h_ik = (r_ik + eps) / s_i with r = zW, s_i the shifted row sum, so
  // dL/dr_ik = (dh_ik - sum_j dh_ij h_ij) / s_i.
  MatrixXd shifted = (z * w_).array() + kEps;
  VectorXd s = shifted.rowwise().sum();
  VectorXd dot = (dh.array() * h.array()).rowwise().sum();
  MatrixXd dr = (dh.array().colwise() - dot.array()).colwise() / s.array();
  *dz = dr * w_.transpose();
  MatrixXd dw = z.transpose() * dr;
  *dparams = Eigen::Map<const VectorXd>(dw.data(), dw.size());
}

VectorXd NmfHead::params() const {
  return Eigen::Map<const VectorXd>(w_.data(), w_.size());
}

void NmfHead::set_params(const Eigen::Ref<const VectorXd>& p) {
  if (p.size() != w_.size()) throw InvalidInputError("NmfHead: parameter size mismatch");
  w_ = Eigen::Map<const MatrixXd>(p.data(), w_.rows(), w_.cols());
}

// ---------------------------------------------------------------------------
// Initialization and training

DnmfcInit initialize(const CaeModel& cae, const PooledFeatures& feats,
                     const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = feats.x.rows();
  if (n < cfg.k) throw InvalidInputError("initialize: need at least K voxels");

  std::vector<std::uint8_t> flagged(n, 0);
  std::vector<Eigen::Index> unflagged;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (feats.point_counts(i) <= 1)
      flagged[i] = 1;
    else
      unflagged.push_back(i);
  }
  if (static_cast<Eigen::Index>(unflagged.size()) < cfg.k)
    throw InvalidInputError("initialize: fewer than K voxels with point_count > 1");

  MatrixXd z = cae.encode(feats.x);  // N x 36

  // component 1: mean embedding of the low-connectivity voxels
  VectorXd col1 = VectorXd::Zero(z.cols());
  Eigen::Index flagged_count = n - static_cast<Eigen::Index>(unflagged.size());
  for (Eigen::Index i = 0; i < n; ++i)
    if (flagged[i]) col1 += z.row(i).transpose();
  if (flagged_count > 0) col1 /= static_cast<double>(flagged_count);
  if (col1.isZero(0.0)) col1.array() += 1e-6;

  // components 2..K: NMF of the remaining voxels' embeddings
  MatrixXd f_unflagged(z.cols(), static_cast<Eigen::Index>(unflagged.size()));
  for (std::size_t c = 0; c < unflagged.size(); ++c)
    f_unflagged.col(static_cast<Eigen::Index>(c)) = z.row(unflagged[c]).transpose();
  nmf::FactorizeResult fact = nmf::factorize(f_unflagged, cfg.k - 1, 500, cfg.seed);

  MatrixXd w0(z.cols(), cfg.k);
  w0.col(0) = col1;
  w0.rightCols(cfg.k - 1) = fact.w;

  NmfHead head(w0);
  MatrixXd h_rows = head.soft_labels_rows(z);  // N x K
  VectorXi labels = argmax_labels(h_rows);
  MatrixXd h = h_rows.transpose();             // K x N
  for (Eigen::Index i = 0; i < n; ++i)
    if (flagged[i]) {
      labels(i) = 1;
      h.col(i).setZero();
      h(0, i) = 1.0;
    }

  DnmfcInit init;
  init.w0 = std::move(w0);
  init.state.p = nmf::target_distribution(h);
  init.state.labels = std::move(labels);
  init.state.flagged = std::move(flagged);
  return init;
}

DnmfcModel train(const CaeModel& pretrained, const PooledFeatures& feats,
                 const TrainConfig& cfg) {
  DnmfcInit init = initialize(pretrained, feats, cfg);
  DnmfcModel model;
  model.cae = pretrained;
  model.config = cfg;
  NmfHead head(init.w0);
  model.trace = joint_train(model.cae, head, feats.x, init.state, cfg);
  model.w = head.w();
  return model;
}

// ---------------------------------------------------------------------------
// Parcellation

namespace {

LabelMap assign_labels(const MatrixXd& h_rows, const FeatureTable& feats, int k) {
  LabelMap map;
  map.voxels = feats.voxels;
  VectorXi labels = argmax_labels(h_rows);
  map.labels.assign(labels.data(), labels.data() + labels.size());
  map.k_count = k;
  return map;
}

void check_inside_mask(const FeatureTable& feats, const VoxelGrid& grid) {
  grid.validate();
  for (const Voxel& v : feats.voxels)
    if (!grid.masked(v[0], v[1], v[2]))
      throw InvalidInputError("feature table lists a voxel outside the grid mask");
}

}  // namespace

LabelMap parcellate(const DnmfcModel& model, const FeatureTable& feats, const VoxelGrid& grid,
                    bool apply_filter) {
  check_inside_mask(feats, grid);
  if (feats.size() == 0) throw InvalidInputError("parcellate: empty feature table");
  NmfHead head(model.w);
  MatrixXd h_rows = head.soft_labels_rows(model.cae.encode(feature_matrix(feats)));
  LabelMap map = assign_labels(h_rows, feats, static_cast<int>(model.w.cols()));
  return apply_filter ? median_filter(map, grid) : map;
}

LabelMap median_filter(const LabelMap& labels, const VoxelGrid& grid) {
  labels.validate();
  grid.validate();
  if (labels.size() != grid.mask_count())
    throw InvalidInputError("median filter: label map does not cover the mask");

  std::vector<int> dense(grid.cell_count(), 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const Voxel& v = labels.voxels[r];
    if (!grid.masked(v[0], v[1], v[2]))
      throw InvalidInputError("median filter: label map lists a voxel outside the mask");
    dense[grid.index(v[0], v[1], v[2])] = labels.labels[r];
  }

  LabelMap out = labels;
  std::vector<int> count(static_cast<std::size_t>(labels.k_count) + 1, 0);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const Voxel& v = labels.voxels[r];
    std::fill(count.begin(), count.end(), 0);
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          int i = v[0] + di, j = v[1] + dj, k = v[2] + dk;
          if (grid.masked(i, j, k)) ++count[dense[grid.index(i, j, k)]];
        }
    // modal set and tie rule: keep the current label when it is modal,
    // otherwise take the smallest modal label
    int top = 0;
    for (int l = 1; l <= labels.k_count; ++l) top = std::max(top, count[l]);
    int own = labels.labels[r];
    if (count[own] == top) {
      out.labels[r] = own;
    } else {
      for (int l = 1; l <= labels.k_count; ++l)
        if (count[l] == top) {
          out.labels[r] = l;
          break;
        }
    }
  }
  return out;
}

}  // namespace dnmfc
