#pragma once

#include <cstdint>
#include <vector>

#include "dnmfc/types.hpp"

namespace dnmfc::nmf {

struct FactorizeResult {
  MatrixXd w;  // D x K
  MatrixXd h;  // K x N
  std::vector<double> objective_trace;  // 0.5 * ||F - WH||_F^2 after each iteration
  int iterations = 0;
};

// Multiplicative-update factorization of a nonnegative D x N matrix under the
// halved squared Frobenius objective. Runs from seeded uniform-positive factors
// until max_iters or the relative objective decrease drops below min_rel_decrease.
FactorizeResult factorize(const MatrixXd& f, int k, int max_iters, std::uint64_t seed,
                          double min_rel_decrease = 1e-9);

// Same updates from caller-supplied starting factors.
FactorizeResult factorize_from(const MatrixXd& f, MatrixXd w0, MatrixXd h0, int max_iters,
                               double min_rel_decrease = 1e-9);

double objective(const MatrixXd& f, const MatrixXd& w, const MatrixXd& h);

// Soft labels W^T F, each column shifted by 1e-12 and normalized to sum 1.
// An all-zero raw column therefore comes out uniform.
MatrixXd soft_labels(const MatrixXd& w, const MatrixXd& f);

// Self-training target: p_ik = (h_ik^2 / f_k) / sum_k' (h_ik'^2 / f_k') with
// f_k the soft cluster mass. Throws DegenerateClusterError when some f_k = 0.
MatrixXd target_distribution(const MatrixXd& h);

// sum_i sum_k p_ik log(p_ik / h_ik) over matching column-stochastic matrices,
// with h clamped below at 1e-12 and 0 * log(0/...) = 0.
double clustering_loss(const MatrixXd& p, const MatrixXd& h);

}  // namespace dnmfc::nmf
