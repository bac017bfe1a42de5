#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dnmfc/types.hpp"

namespace dnmfc {

enum class LayerKind { Conv1d, TConv1d, Dense };

// One linear block of the fixed autoencoder. Convolutions and transposed
// convolutions are expressed as sparse linear maps over flattened (channel,
// position) features; `links` lists every (weight index, input feature,
// output feature) connection, so forward/backward reduce to dense GEMMs plus
// a gather/scatter on the shared weights.
struct LayerDef {
  std::string name;
  LayerKind kind;
  int in_channels, in_length, out_channels, out_length, kernel, stride;
  Eigen::Index w_offset = 0, b_offset = 0;
  std::vector<std::array<int, 3>> links;

  int in_features() const { return in_channels * in_length; }
  int out_features() const { return out_channels * out_length; }
  int weight_count() const {
    return kind == LayerKind::Dense ? out_channels * in_channels
                                    : out_channels * in_channels * kernel;
  }
  int bias_count() const { return out_channels; }
};

struct CaeConfig {
  int input_dim = 6;
  int embedding_dim = 36;
  std::uint64_t seed = 0;
  int epochs_trained = 0;
  double learning_rate = 1e-3;
  int batch_size = 256;
};

// Fixed 6 -> 36 -> 6 convolutional autoencoder. Every block is linear map +
// ReLU; encoder lengths run 6 -> 3 -> 2 -> 1, decoder mirrors them back.
// Parameters live in one flat vector addressed through the layer table.
class CaeModel {
 public:
  CaeModel();                          // zero parameters
  explicit CaeModel(std::uint64_t seed);  // Glorot-uniform weights, zero biases

  static const std::vector<LayerDef>& layers();
  static Eigen::Index parameter_count();
  static constexpr int encoder_blocks() { return 4; }

  CaeConfig config;
  VectorXd params;

  MatrixXd encode(const MatrixXd& x) const;  // B x 6 -> B x 36, elementwise >= 0
  MatrixXd decode(const MatrixXd& f) const;  // B x 36 -> B x 6, elementwise >= 0
  VectorXd encode_one(const VectorXd& x) const;
  VectorXd decode_one(const VectorXd& f) const;

  double reconstruction_loss(const MatrixXd& batch) const;
};

// Activations kept from a forward pass for the reverse sweep.
struct ForwardCache {
  std::vector<MatrixXd> inputs;  // per block
  std::vector<MatrixXd> preact;  // per block, pre-ReLU
  MatrixXd out;                  // final post-ReLU
  int first_block = 0;
};

ForwardCache forward_blocks(const CaeModel& m, const MatrixXd& x, int first_block,
                            int last_block);

// Reverse-mode sweep over blocks [first_block, last_block) of the cache.
// d_out is dL/d(final output); d_embed_extra, when nonempty, is added to the
// flowing gradient at the embedding boundary (after block 4's ReLU). Returns
// dL/d params (full-length vector, untouched blocks zero).
VectorXd backward_blocks(const CaeModel& m, const ForwardCache& cache, const MatrixXd& d_out,
                         const MatrixXd& d_embed_extra);

// Reconstruction loss and its exact gradient; loss_scale multiplies both.
struct ReconGrad {
  double value = 0;
  VectorXd grad;
};
ReconGrad reconstruction_gradient(const CaeModel& m, const MatrixXd& batch,
                                  double loss_scale = 1.0);

struct Adam {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  VectorXd m, v;
  long t = 0;
  Adam(Eigen::Index n, double learning_rate);
  void step(VectorXd& theta, const VectorXd& grad);
};

// Seeded index batches; reshuffles every time the data set is exhausted, so a
// fixed seed yields one reproducible stream of mini-batches.
class BatchStream {
 public:
  BatchStream(std::size_t n, int batch_size, std::uint64_t seed);
  const std::vector<int>& next();
  int batches_per_epoch() const { return batches_per_epoch_; }

 private:
  std::vector<int> order_, current_;
  std::size_t pos_ = 0;
  int batch_;
  int batches_per_epoch_;
  std::mt19937_64 rng_;
};

// Adam steps on the reconstruction loss alone. Shared by pretraining and the
// gamma = 0 path of joint training.
void run_reconstruction_steps(CaeModel& m, const MatrixXd& x, long steps, int batch_size,
                              double lr, std::uint64_t stream_seed);

struct PretrainOptions {
  int epochs = 200;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int batch_size = 256;
};

// Seeded init + epochs of mini-batch Adam on reconstruction loss. When trace
// is given it receives the full-set loss after every epoch.
CaeModel pretrain(const MatrixXd& x, const PretrainOptions& opt,
                  std::vector<double>* trace = nullptr);

}  // namespace dnmfc
