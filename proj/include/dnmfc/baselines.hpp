#pragma once

#include "dnmfc/cae.hpp"
#include "dnmfc/training.hpp"
#include "dnmfc/types.hpp"

namespace dnmfc {

struct KmeansResult {
  MatrixXd centroids;  // K x d
  VectorXi labels;     // 0-based cluster indices
};

// Lloyd iterations from seeded k-means++ starts. Nearest-centroid ties go to
// the smaller index; an emptied cluster is reseeded to the point farthest from
// its assigned centroid.
KmeansResult kmeans(const MatrixXd& z, int k, std::uint64_t seed, int max_iters = 100);

// q_ik = (1 + ||z_i - mu_k||^2)^-1, rows normalized to sum 1.
MatrixXd student_t_assign(const MatrixXd& z, const MatrixXd& centroids);

// DCEC clustering layer: Student-t kernel against trainable centroids.
class TDistHead : public ClusterHead {
 public:
  explicit TDistHead(MatrixXd centroids) : centroids_(std::move(centroids)) {}

  int k() const override { return static_cast<int>(centroids_.rows()); }
  MatrixXd soft_labels_rows(const MatrixXd& z) const override;
  void backward(const MatrixXd& z, const MatrixXd& h, const MatrixXd& dh, MatrixXd* dz,
                VectorXd* dparams) const override;
  VectorXd params() const override;
  void set_params(const Eigen::Ref<const VectorXd>& p) override;
  MatrixXd components() const override { return centroids_; }
  void replace_component(int index, const VectorXd& z) override { centroids_.row(index) = z.transpose(); }

  const MatrixXd& centroids() const { return centroids_; }

 private:
  MatrixXd centroids_;  // K x 36
};

struct DcecModel {
  CaeModel cae;
  MatrixXd centroids;  // K x 36
  TrainConfig config;
  TrainTrace trace;
};

struct DcecInit {
  MatrixXd centroids0;
  InitState state;
};

// Mirror of dnmfc::initialize with k-means centroids in place of NMF components.
DcecInit dcec_initialize(const CaeModel& cae, const PooledFeatures& feats,
                         const TrainConfig& cfg);

DcecModel dcec_train(const CaeModel& pretrained, const PooledFeatures& feats,
                     const TrainConfig& cfg);

LabelMap parcellate(const DcecModel& model, const FeatureTable& feats, const VoxelGrid& grid,
                    bool apply_filter = true);

// Factorizes the raw 6 x N binary feature matrix directly; component 1 is
// seeded from the mean feature vector of low-connectivity voxels, the rest from
// a factorization of the remaining voxels.
LabelMap flat_nmf_parcellate(const FeatureTable& feats, int k, std::uint64_t seed);

}  // namespace dnmfc
