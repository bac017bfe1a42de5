#include "dnmfc/cae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dnmfc {

namespace {

// ---------------------------------------------------------------------------
// Layer table

// Keras-style same padding: total = max((out-1)*stride + kernel - in, 0),
// split with the smaller half first.
LayerDef make_conv(std::string name, int in_ch, int in_len, int out_ch, int out_len,
                   int kernel, int stride) {
  LayerDef def{std::move(name), LayerKind::Conv1d, in_ch, in_len, out_ch, out_len,
               kernel,          stride,            0,     0,      {}};
  int pad = std::max((out_len - 1) * stride + kernel - in_len, 0) / 2;
  for (int oc = 0; oc < out_ch; ++oc)
    for (int ic = 0; ic < in_ch; ++ic)
      for (int t = 0; t < out_len; ++t)
        for (int u = 0; u < kernel; ++u) {
          int idx = t * stride + u - pad;
          if (idx < 0 || idx >= in_len) continue;
          def.links.push_back({(oc * in_ch + ic) * kernel + u, ic * in_len + idx,
                               oc * out_len + t});
        }
  return def;
}

// Transposed convolution cropped to the mirror length: full output position
// p = q*stride + u; kept positions are [offset, offset + out_len) with
// offset = (kernel - stride) / 2.
LayerDef make_tconv(std::string name, int in_ch, int in_len, int out_ch, int out_len,
                    int kernel, int stride) {
  LayerDef def{std::move(name), LayerKind::TConv1d, in_ch, in_len, out_ch, out_len,
               kernel,          stride,             0,     0,      {}};
  int offset = (kernel - stride) / 2;
  for (int oc = 0; oc < out_ch; ++oc)
    for (int ic = 0; ic < in_ch; ++ic)
      for (int t = 0; t < out_len; ++t)
        for (int q = 0; q < in_len; ++q) {
          int u = t + offset - q * stride;
          if (u < 0 || u >= kernel) continue;
          def.links.push_back({(oc * in_ch + ic) * kernel + u, ic * in_len + q,
                               oc * out_len + t});
        }
  return def;
}

LayerDef make_dense(std::string name, int in_ch, int out_ch) {
  LayerDef def{std::move(name), LayerKind::Dense, in_ch, 1, out_ch, 1, 0, 0, 0, 0, {}};
  for (int oc = 0; oc < out_ch; ++oc)
    for (int ic = 0; ic < in_ch; ++ic) def.links.push_back({oc * in_ch + ic, ic, oc});
  return def;
}

std::vector<LayerDef> build_layers() {
  std::vector<LayerDef> defs;
  defs.push_back(make_conv("conv1", 1, 6, 32, 3, 6, 2));
  defs.push_back(make_conv("conv2", 32, 3, 64, 2, 4, 2));
  defs.push_back(make_conv("conv3", 64, 2, 128, 1, 2, 2));
  defs.push_back(make_dense("dense_embed", 128, 36));
  defs.push_back(make_dense("dense_expand", 36, 128));
  defs.push_back(make_tconv("tconv1", 128, 1, 64, 2, 2, 2));
  defs.push_back(make_tconv("tconv2", 64, 2, 32, 3, 4, 2));
  defs.push_back(make_tconv("tconv3", 32, 3, 1, 6, 6, 2));

  Eigen::Index offset = 0;
  for (auto& def : defs) {
    def.w_offset = offset;
    def.b_offset = offset + def.weight_count();
    offset = def.b_offset + def.bias_count();
  }
  return defs;
}

// Dense in_features x out_features matrix realizing the layer's linear map.
MatrixXd assemble(const LayerDef& def, const VectorXd& params) {
  MatrixXd u = MatrixXd::Zero(def.in_features(), def.out_features());
  for (const auto& [w, in_f, out_f] : def.links) u(in_f, out_f) += params(def.w_offset + w);
  return u;
}

void check_batch(const MatrixXd& x, int want_cols, const char* what) {
  if (x.rows() == 0) throw InvalidInputError(std::string(what) + ": empty batch");
  if (x.cols() != want_cols)
    throw InvalidInputError(std::string(what) + ": expected " + std::to_string(want_cols) +
                            " columns, got " + std::to_string(x.cols()));
  if (!x.allFinite()) throw InvalidInputError(std::string(what) + ": non-finite input");
}

}  // namespace

const std::vector<LayerDef>& CaeModel::layers() {
  static const std::vector<LayerDef> table = build_layers();
  return table;
}

Eigen::Index CaeModel::parameter_count() {
  const auto& table = layers();
  const LayerDef& last = table.back();
  return last.b_offset + last.bias_count();
}

CaeModel::CaeModel() : params(VectorXd::Zero(parameter_count())) {}

CaeModel::CaeModel(std::uint64_t seed) : params(VectorXd::Zero(parameter_count())) {
  config.seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& def : layers()) {
    int fan_in = def.in_channels, fan_out = def.out_channels;
    if (def.kind != LayerKind::Dense) {
      fan_in *= def.kernel;
      fan_out *= def.kernel;
    }
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int w = 0; w < def.weight_count(); ++w) params(def.w_offset + w) = dist(rng);
    // biases stay zero
  }
}

ForwardCache forward_blocks(const CaeModel& m, const MatrixXd& x, int first_block,
                            int last_block) {
  const auto& table = CaeModel::layers();
  ForwardCache cache;
  cache.first_block = first_block;
  MatrixXd cur = x;
  for (int b = first_block; b < last_block; ++b) {
    const LayerDef& def = table[b];
    cache.inputs.push_back(cur);
    MatrixXd pre = cur * assemble(def, m.params);
    for (int oc = 0; oc < def.out_channels; ++oc)
      pre.middleCols(static_cast<Eigen::Index>(oc) * def.out_length, def.out_length)
          .array() += m.params(def.b_offset + oc);
    cache.preact.push_back(pre);
    cur = pre.cwiseMax(0.0);
  }
  cache.out = cur;
  return cache;
}

VectorXd backward_blocks(const CaeModel& m, const ForwardCache& cache, const MatrixXd& d_out,
                         const MatrixXd& d_embed_extra) {
  const auto& table = CaeModel::layers();
  VectorXd grad = VectorXd::Zero(CaeModel::parameter_count());
  MatrixXd d = d_out;
  int blocks = static_cast<int>(cache.inputs.size());
  for (int i = blocks - 1; i >= 0; --i) {
    int b = cache.first_block + i;
    const LayerDef& def = table[b];
    // through the rectifier
    MatrixXd d_pre = (cache.preact[i].array() > 0.0).select(d, MatrixXd::Zero(d.rows(), d.cols()));
    // bias gradient: sum over batch rows and positions of one channel
    for (int oc = 0; oc < def.out_channels; ++oc)
      grad(def.b_offset + oc) =
          d_pre.middleCols(static_cast<Eigen::Index>(oc) * def.out_length, def.out_length).sum();
    // weight gradient: dense map gradient scattered onto shared kernel weights
    MatrixXd du = cache.inputs[i].transpose() * d_pre;
    for (const auto& [w, in_f, out_f] : def.links)
      grad(def.w_offset + w) += du(in_f, out_f);
    d = d_pre * assemble(def, m.params).transpose();
    if (b == CaeModel::encoder_blocks() && d_embed_extra.size() > 0)
      d += d_embed_extra;  // clustering-loss path joins at the embedding
  }
  return grad;
}

MatrixXd CaeModel::encode(const MatrixXd& x) const {
  check_batch(x, config.input_dim, "encode");
  return forward_blocks(*this, x, 0, encoder_blocks()).out;
}

MatrixXd CaeModel::decode(const MatrixXd& f) const {
  check_batch(f, config.embedding_dim, "decode");
  return forward_blocks(*this, f, encoder_blocks(),
                        static_cast<int>(layers().size())).out;
}

VectorXd CaeModel::encode_one(const VectorXd& x) const {
  return encode(x.transpose()).row(0).transpose();
}

VectorXd CaeModel::decode_one(const VectorXd& f) const {
  return decode(f.transpose()).row(0).transpose();
}

double CaeModel::reconstruction_loss(const MatrixXd& batch) const {
  check_batch(batch, config.input_dim, "reconstruction_loss");
  ForwardCache cache = forward_blocks(*this, batch, 0, static_cast<int>(layers().size()));
  return (cache.out - batch).squaredNorm() /
         (static_cast<double>(batch.rows()) * batch.cols());
}

ReconGrad reconstruction_gradient(const CaeModel& m, const MatrixXd& batch,
                                  double loss_scale) {
  check_batch(batch, m.config.input_dim, "reconstruction_gradient");
  ForwardCache cache =
      forward_blocks(m, batch, 0, static_cast<int>(CaeModel::layers().size()));
  double denom = static_cast<double>(batch.rows()) * batch.cols();
  ReconGrad out;
  out.value = loss_scale * (cache.out - batch).squaredNorm() / denom;
  MatrixXd d_out = (cache.out - batch) * (2.0 * loss_scale / denom);
  out.grad = backward_blocks(m, cache, d_out, MatrixXd());
  return out;
}

Adam::Adam(Eigen::Index n, double learning_rate)
    : lr(learning_rate), m(VectorXd::Zero(n)), v(VectorXd::Zero(n)) {}

void Adam::step(VectorXd& theta, const VectorXd& grad) {
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  theta -= (lr / c1) * m.cwiseQuotient(((v / c2).cwiseSqrt().array() + eps).matrix());
}

BatchStream::BatchStream(std::size_t n, int batch_size, std::uint64_t seed)
    : order_(n), batch_(std::min<std::size_t>(batch_size, n)), rng_(seed) {
  if (n == 0) throw InvalidInputError("batch stream over an empty data set");
  if (batch_size < 1) throw InvalidInputError("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), 0);
  std::shuffle(order_.begin(), order_.end(), rng_);
  batches_per_epoch_ = static_cast<int>((n + batch_ - 1) / batch_);
}

const std::vector<int>& BatchStream::next() {
  if (pos_ >= order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }
  std::size_t take = std::min<std::size_t>(batch_, order_.size() - pos_);
  current_.assign(order_.begin() + pos_, order_.begin() + pos_ + take);
  pos_ += take;
  return current_;
}

void run_reconstruction_steps(CaeModel& m, const MatrixXd& x, long steps, int batch_size,
                              double lr, std::uint64_t stream_seed) {
  BatchStream stream(static_cast<std::size_t>(x.rows()), batch_size, stream_seed);
  Adam adam(CaeModel::parameter_count(), lr);
  for (long s = 0; s < steps; ++s) {
    const auto& idx = stream.next();
    MatrixXd batch = x(idx, Eigen::all);
    adam.step(m.params, reconstruction_gradient(m, batch).grad);
  }
}

CaeModel pretrain(const MatrixXd& x, const PretrainOptions& opt, std::vector<double>* trace) {
  if (x.rows() == 0) throw InvalidInputError("pretrain: empty feature set");
  if (opt.epochs < 0) throw InvalidInputError("pretrain: epochs must be >= 0");
  CaeModel m(opt.seed);
  m.config.learning_rate = opt.learning_rate;
  m.config.batch_size = opt.batch_size;

  BatchStream stream(static_cast<std::size_t>(x.rows()), opt.batch_size, opt.seed + 1);
  Adam adam(CaeModel::parameter_count(), opt.learning_rate);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (int b = 0; b < stream.batches_per_epoch(); ++b) {
      const auto& idx = stream.next();
      MatrixXd batch = x(idx, Eigen::all);
      adam.step(m.params, reconstruction_gradient(m, batch).grad);
    }
    if (trace != nullptr) trace->push_back(m.reconstruction_loss(x));
  }
  m.config.epochs_trained = opt.epochs;
  return m;
}

}  // namespace dnmfc
