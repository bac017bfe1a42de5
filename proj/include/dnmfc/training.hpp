#pragma once

#include <cstdint>
#include <vector>

#include "dnmfc/cae.hpp"
#include "dnmfc/types.hpp"

namespace dnmfc {

struct TrainConfig {
  int k = 3;
  double gamma = 0.1;
  double delta = 0.001;  // stop when label-change fraction < delta
  int pretrain_epochs = 200;
  int update_interval = 140;
  long max_steps = 20000;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;

  void validate() const;
};

// Embedded clustering layer: maps a batch of embeddings to row-stochastic soft
// labels and backpropagates through that map. The NMF component matrix and the
// DCEC centroid table both implement this.
class ClusterHead {
 public:
  virtual ~ClusterHead() = default;
  virtual int k() const = 0;
  // B x 36 embeddings -> B x K soft labels, rows summing to 1
  virtual MatrixXd soft_labels_rows(const MatrixXd& z) const = 0;
  // dh is dL/d(soft labels); fills dz (B x 36) and dparams
  virtual void backward(const MatrixXd& z, const MatrixXd& h, const MatrixXd& dh,
                        MatrixXd* dz, VectorXd* dparams) const = 0;
  virtual VectorXd params() const = 0;
  virtual void set_params(const Eigen::Ref<const VectorXd>& p) = 0;
  virtual void project() {}
  // components as points in embedding space, K x 36
  virtual MatrixXd components() const = 0;
  virtual void replace_component(int index, const VectorXd& z) = 0;
};

enum class LossKind { Reconstruction, Clustering, Total };

struct JointLossGrad {
  double value = 0;
  VectorXd cae_grad;
  VectorXd head_grad;
};

// Value and exact gradient of the selected loss on one batch. Reconstruction is
// the batch/component mean of squared error; clustering is the batch mean of
// per-voxel KL(p_i || h_i) against the fixed rows p_rows; total adds them with
// weight gamma. loss_scale multiplies the selected loss.
JointLossGrad joint_loss_gradient(const CaeModel& m, const ClusterHead& head,
                                  const MatrixXd& batch, const MatrixXd& p_rows,
                                  LossKind kind, double gamma, double loss_scale = 1.0);

struct RefreshRecord {
  long step = 0;
  double loss_total = 0, loss_recon = 0, loss_cluster = 0;
  double label_change_fraction = 0;
};

struct TrainTrace {
  std::vector<RefreshRecord> refreshes;
  std::vector<int> initial_labels;            // pooled voxel order
  std::vector<std::uint8_t> low_connectivity; // point_count <= 1 flags
  int degenerate_reinits = 0;
  long steps_run = 0;
};

struct InitState {
  MatrixXd p;                          // K x N target distribution
  VectorXi labels;                     // 1..K
  std::vector<std::uint8_t> flagged;
};

// Hard labels from row-stochastic soft labels; ties go to the smaller index.
VectorXi argmax_labels(const MatrixXd& h_rows);

// Mini-batch Adam on L = L_r + gamma * L_c over CAE parameters and the head
// jointly; the target distribution is refreshed every update_interval steps and
// training stops once the refresh-to-refresh label-change fraction drops below
// delta, or at max_steps.
TrainTrace joint_train(CaeModel& cae, ClusterHead& head, const MatrixXd& x,
                       const InitState& init, const TrainConfig& cfg);

}  // namespace dnmfc
