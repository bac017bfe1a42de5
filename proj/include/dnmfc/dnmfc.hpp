#pragma once

#include "dnmfc/cae.hpp"
#include "dnmfc/nmf.hpp"
#include "dnmfc/training.hpp"
#include "dnmfc/types.hpp"

namespace dnmfc {

// NMF clustering layer: soft labels are column-normalized W^T f.
class NmfHead : public ClusterHead {
 public:
  explicit NmfHead(MatrixXd w) : w_(std::move(w)) {}

  int k() const override { return static_cast<int>(w_.cols()); }
  MatrixXd soft_labels_rows(const MatrixXd& z) const override;
  void backward(const MatrixXd& z, const MatrixXd& h, const MatrixXd& dh, MatrixXd* dz,
                VectorXd* dparams) const override;
  VectorXd params() const override;
  void set_params(const Eigen::Ref<const VectorXd>& p) override;
  void project() override { w_ = w_.cwiseMax(0.0); }
  MatrixXd components() const override { return w_.transpose(); }
  void replace_component(int index, const VectorXd& z) override { w_.col(index) = z; }

  const MatrixXd& w() const { return w_; }

 private:
  MatrixXd w_;  // 36 x K
};

struct DnmfcModel {
  CaeModel cae;
  MatrixXd w;  // 36 x K, elementwise >= 0
  TrainConfig config;
  TrainTrace trace;
};

struct DnmfcInit {
  MatrixXd w0;
  InitState state;
};

// Component matrix, target distribution and hard labels from a pretrained CAE.
// Voxels with point_count <= 1 are flagged low-connectivity: component 1 is
// their mean embedding and their initial labels (and the soft-label columns
// used to build P0) are forced to parcel 1.
DnmfcInit initialize(const CaeModel& cae, const PooledFeatures& feats, const TrainConfig& cfg);

DnmfcModel train(const CaeModel& pretrained, const PooledFeatures& feats,
                 const TrainConfig& cfg);

// Per-voxel argmax of soft_labels(W, encode(x)); ties to the smaller parcel.
LabelMap parcellate(const DnmfcModel& model, const FeatureTable& feats, const VoxelGrid& grid,
                    bool apply_filter = true);

// One pass of the 3x3x3 in-mask neighborhood mode, the voxel itself included.
// Ties keep the current label when it is modal, otherwise the smallest label.
LabelMap median_filter(const LabelMap& labels, const VoxelGrid& grid);

}  // namespace dnmfc
