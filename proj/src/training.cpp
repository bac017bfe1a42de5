#include "dnmfc/training.hpp"

#include <algorithm>
#include <cmath>

#include "dnmfc/nmf.hpp"

namespace dnmfc {

namespace {
constexpr double kEps = 1e-12;
}

void TrainConfig::validate() const {
  if (k < 2) throw InvalidInputError("config: K must be >= 2");
  if (gamma < 0) throw InvalidInputError("config: gamma must be >= 0");
  if (!(delta > 0) || delta > 1) throw InvalidInputError("config: delta must be in (0, 1]");
  if (pretrain_epochs < 0) throw InvalidInputError("config: pretrain_epochs must be >= 0");
  if (update_interval < 1) throw InvalidInputError("config: update_interval must be >= 1");
  if (max_steps < 1) throw InvalidInputError("config: max_steps must be >= 1");
  if (batch_size < 1) throw InvalidInputError("config: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw InvalidInputError("config: learning_rate must be > 0");
}

VectorXi argmax_labels(const MatrixXd& h_rows) {
  VectorXi labels(h_rows.rows());
  for (Eigen::Index i = 0; i < h_rows.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < h_rows.cols(); ++k)
      if (h_rows(i, k) > h_rows(i, best)) best = k;
    labels(i) = best + 1;
  }
  return labels;
}

JointLossGrad joint_loss_gradient(const CaeModel& m, const ClusterHead& head,
                                  const MatrixXd& batch, const MatrixXd& p_rows,
                                  LossKind kind, double gamma, double loss_scale) {
  if (batch.rows() == 0) throw InvalidInputError("joint loss: empty batch");
  const int all_blocks = static_cast<int>(CaeModel::layers().size());
  ForwardCache cache = forward_blocks(m, batch, 0, all_blocks);
  const MatrixXd& z = cache.inputs[CaeModel::encoder_blocks()];  // embedding rows
  const double b = static_cast<double>(batch.rows());

  JointLossGrad out;
  out.head_grad = VectorXd::Zero(head.params().size());

  // reconstruction term
  double recon_weight = kind == LossKind::Clustering ? 0.0 : loss_scale;
  double loss_recon = (cache.out - batch).squaredNorm() / (b * batch.cols());
  MatrixXd d_out = kind == LossKind::Clustering
                       ? MatrixXd::Zero(batch.rows(), batch.cols())
                       : MatrixXd((cache.out - batch) *
                                  (2.0 * recon_weight / (b * batch.cols())));

  // clustering term: batch mean of KL(p_i || h_i)
  MatrixXd d_embed;
  double loss_cluster = 0.0;
  if (kind != LossKind::Reconstruction) {
    if (p_rows.rows() != batch.rows() || p_rows.cols() != head.k())
      throw InvalidInputError("joint loss: target rows do not match batch and K");
    double cluster_weight =
        loss_scale * (kind == LossKind::Total ? gamma : 1.0);
    MatrixXd h = head.soft_labels_rows(z);
    MatrixXd dh = MatrixXd::Zero(h.rows(), h.cols());
    for (Eigen::Index i = 0; i < h.rows(); ++i)
      for (Eigen::Index k = 0; k < h.cols(); ++k) {
        double pv = p_rows(i, k);
        if (pv <= 0.0) continue;
        double hv = h(i, k);
        loss_cluster += pv * std::log(pv / std::max(hv, kEps));
        if (hv >= kEps) dh(i, k) = -(cluster_weight / b) * pv / hv;
      }
    loss_cluster /= b;
    MatrixXd dz;
    head.backward(z, h, dh, &dz, &out.head_grad);
    d_embed = std::move(dz);
  }

  switch (kind) {
    case LossKind::Reconstruction:
      out.value = loss_scale * loss_recon;
      break;
    case LossKind::Clustering:
      out.value = loss_scale * loss_cluster;
      break;
    case LossKind::Total:
      out.value = loss_scale * (loss_recon + gamma * loss_cluster);
      break;
  }
  out.cae_grad = backward_blocks(m, cache, d_out, d_embed);
  return out;
}

namespace {

// Full-set soft labels, replacing any zero-mass component with the embedding
// farthest from every current component. Returns the row-form labels.
MatrixXd refresh_soft_labels(ClusterHead& head, const MatrixXd& z, TrainTrace& trace) {
  for (;;) {
    MatrixXd h_rows = head.soft_labels_rows(z);
    VectorXd mass = h_rows.colwise().sum();
    int dead = -1;
    for (Eigen::Index k = 0; k < mass.size(); ++k)
      if (mass(k) <= 0.0) {
        dead = static_cast<int>(k);
        break;
      }
    if (dead < 0) return h_rows;
    if (++trace.degenerate_reinits > 10)
      throw TrainingFailureError("more than 10 degenerate-cluster reinitializations");
    MatrixXd components = head.components();  // K x 36
    Eigen::Index farthest = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      double nearest = (components.rowwise() - z.row(i)).rowwise().squaredNorm().minCoeff();
      if (nearest > best) {
        best = nearest;
        farthest = i;
      }
    }
    head.replace_component(dead, z.row(farthest).transpose());
  }
}

}  // namespace

TrainTrace joint_train(CaeModel& cae, ClusterHead& head, const MatrixXd& x,
                       const InitState& init, const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.rows();
  const int k = head.k();
  if (init.p.rows() != k || init.p.cols() != n || init.labels.size() != n)
    throw InvalidInputError("joint_train: initialization does not match data and K");

  TrainTrace trace;
  trace.initial_labels.assign(init.labels.data(), init.labels.data() + n);
  trace.low_connectivity = init.flagged;

  MatrixXd p = init.p;  // K x N, held fixed between refreshes
  VectorXi labels_prev = init.labels;

  const Eigen::Index n_cae = CaeModel::parameter_count();
  const Eigen::Index n_head = head.params().size();
  VectorXd theta(n_cae + n_head);
  theta.head(n_cae) = cae.params;
  theta.tail(n_head) = head.params();
  Adam adam(theta.size(), cfg.learning_rate);
  BatchStream stream(static_cast<std::size_t>(n), cfg.batch_size, cfg.seed + 2);

  VectorXd grad(theta.size());
  for (long step = 1; step <= cfg.max_steps; ++step) {
    const auto& idx = stream.next();
    MatrixXd batch = x(idx, Eigen::all);
    MatrixXd p_rows(static_cast<Eigen::Index>(idx.size()), k);
    for (std::size_t r = 0; r < idx.size(); ++r) p_rows.row(r) = p.col(idx[r]).transpose();

    JointLossGrad g =
        joint_loss_gradient(cae, head, batch, p_rows, LossKind::Total, cfg.gamma);
    grad.head(n_cae) = g.cae_grad;
    grad.tail(n_head) = g.head_grad;
    adam.step(theta, grad);
    cae.params = theta.head(n_cae);
    head.set_params(theta.tail(n_head));
    head.project();
    theta.tail(n_head) = head.params();
    trace.steps_run = step;

    if (step % cfg.update_interval != 0) continue;

    // refresh: full-set soft labels, losses against the pre-refresh target,
    // label-change fraction, then the new target distribution
    MatrixXd z = cae.encode(x);
    MatrixXd h_rows = refresh_soft_labels(head, z, trace);
    theta.tail(n_head) = head.params();  // may have been reinitialized
    MatrixXd h = h_rows.transpose();

    RefreshRecord rec;
    rec.step = step;
    rec.loss_recon = cae.reconstruction_loss(x);
    rec.loss_cluster = nmf::clustering_loss(p, h) / static_cast<double>(n);
    rec.loss_total = rec.loss_recon + cfg.gamma * rec.loss_cluster;
    VectorXi labels = argmax_labels(h_rows);
    long changed = 0;
    for (Eigen::Index i = 0; i < n; ++i) changed += labels(i) != labels_prev(i);
    rec.label_change_fraction = static_cast<double>(changed) / static_cast<double>(n);
    trace.refreshes.push_back(rec);

    labels_prev = labels;
    p = nmf::target_distribution(h);
    if (rec.label_change_fraction < cfg.delta) break;
  }
  return trace;
}

}  // namespace dnmfc
