#include "dnmfc/nmf.hpp"

#include <cmath>
#include <random>

namespace dnmfc::nmf {

namespace {

constexpr double kEps = 1e-12;

void check_nonneg(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InvalidInputError(std::string(what) + " has non-finite entries");
  if (m.size() > 0 && m.minCoeff() < 0.0)
    throw InvalidInputError(std::string(what) + " has negative entries");
}

MatrixXd uniform_positive(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.01, 1.01);
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

double objective(const MatrixXd& f, const MatrixXd& w, const MatrixXd& h) {
  return 0.5 * (f - w * h).squaredNorm();
}

FactorizeResult factorize_from(const MatrixXd& f, MatrixXd w0, MatrixXd h0, int max_iters,
                               double min_rel_decrease) {
  check_nonneg(f, "factorize: F");
  check_nonneg(w0, "factorize: W0");
  check_nonneg(h0, "factorize: H0");
  if (w0.rows() != f.rows() || h0.cols() != f.cols() || w0.cols() != h0.rows())
    throw InvalidInputError("factorize: factor shapes do not match F");

  FactorizeResult res;
  res.w = std::move(w0);
  res.h = std::move(h0);
  double prev = objective(f, res.w, res.h);
  for (int it = 0; it < max_iters; ++it) {
    res.h.array() *= (res.w.transpose() * f).array() /
                     ((res.w.transpose() * res.w) * res.h).array().max(kEps);
    res.w.array() *= (f * res.h.transpose()).array() /
                     (res.w * (res.h * res.h.transpose())).array().max(kEps);
    double cur = objective(f, res.w, res.h);
    res.objective_trace.push_back(cur);
    res.iterations = it + 1;
    if (prev - cur < min_rel_decrease * std::max(prev, 1e-300)) break;
    prev = cur;
  }
  return res;
}

FactorizeResult factorize(const MatrixXd& f, int k, int max_iters, std::uint64_t seed,
                          double min_rel_decrease) {
  check_nonneg(f, "factorize: F");
  if (k < 1) throw InvalidInputError("factorize: K must be >= 1");
  if (k > f.cols())
    throw InvalidInputError("factorize: K exceeds the number of data columns");
  std::mt19937_64 rng(seed);
  MatrixXd w0 = uniform_positive(f.rows(), k, rng);
  MatrixXd h0 = uniform_positive(k, f.cols(), rng);
  return factorize_from(f, std::move(w0), std::move(h0), max_iters, min_rel_decrease);
}

MatrixXd soft_labels(const MatrixXd& w, const MatrixXd& f) {
  check_nonneg(w, "soft_labels: W");
  check_nonneg(f, "soft_labels: F");
  if (w.rows() != f.rows())
    throw InvalidInputError("soft_labels: W and F row counts differ");
  MatrixXd h = (w.transpose() * f).array() + kEps;
  Eigen::RowVectorXd sums = h.colwise().sum();
  h.array().rowwise() /= sums.array();
  return h;
}

MatrixXd target_distribution(const MatrixXd& h) {
  if (h.rows() < 1 || h.cols() < 1)
    throw InvalidInputError("target_distribution: empty soft-label matrix");
  check_nonneg(h, "target_distribution: H");
  for (Eigen::Index c = 0; c < h.cols(); ++c)
    if (std::abs(h.col(c).sum() - 1.0) > 1e-6)
      throw InvalidInputError("target_distribution: H columns must sum to 1");

  VectorXd mass = h.rowwise().sum();  // soft cluster size f_k
  for (Eigen::Index k = 0; k < mass.size(); ++k)
    if (mass(k) <= 0.0)
      throw DegenerateClusterError("cluster " + std::to_string(k + 1) +
                                   " has zero soft mass");

  MatrixXd p = h.array().square().colwise() / mass.array();
  Eigen::RowVectorXd sums = p.colwise().sum();
  p.array().rowwise() /= sums.array();
  return p;
}

double clustering_loss(const MatrixXd& p, const MatrixXd& h) {
  if (p.rows() != h.rows() || p.cols() != h.cols())
    throw InvalidInputError("clustering_loss: P and H shapes differ");
  double loss = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c)
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      double pv = p(r, c);
      if (pv <= 0.0) continue;
      loss += pv * std::log(pv / std::max(h(r, c), kEps));
    }
  return loss;
}

}  // namespace dnmfc::nmf
