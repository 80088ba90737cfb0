#pragma once

#include <cstdint>
#include <random>

#include "mgsagc/linalg.hpp"

namespace mgsagc {

/// Train: batch statistics, running statistics updated, dropout active.
/// Eval: running statistics, dropout off.
/// Check: batch statistics with no side effects and dropout off, so a pass is
/// a pure function of its inputs (finite-difference checks rely on this).
enum class Mode { Train, Eval, Check };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct DenseParams {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

/// Normal weights with variance gain / in (2 suits a following ReLU), zero bias.
DenseParams init_dense(int in, int out, std::mt19937_64& rng, double gain = 2.0);

/// y = x W + b
Matrix dense_forward(const Matrix& x, const DenseParams& p);
/// Accumulates dW, db into `grad`; returns dL/dx.
Matrix dense_backward(const Matrix& x, const Matrix& dy, const DenseParams& p, DenseParams& grad);

struct BatchNormParams {
  Matrix gamma;  // 1 x F
  Matrix beta;
  Matrix running_mean;
  Matrix running_var;
  bool enabled = true;
};

BatchNormParams init_batchnorm(int features, bool enabled);

struct BatchNormCache {
  Matrix xhat;
  Matrix inv_std;  // 1 x F
  bool batch_stats = false;
};

Matrix batchnorm_forward(const Matrix& x, BatchNormParams& p, Mode mode, BatchNormCache& cache);
Matrix batchnorm_backward(const Matrix& dy, const BatchNormParams& p, const BatchNormCache& cache,
                          BatchNormParams& grad);

inline Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }
/// Gradient through a ReLU given its output.
inline Matrix relu_backward(const Matrix& y, const Matrix& dy) {
  return (y.array() > 0.0).select(dy, 0.0);
}

/// Inverted dropout. Returns the mask (0 or 1/(1-rate)); identity mask when
/// not training or rate is 0.
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

/// FNV-1a over the sign pattern of a post-ReLU activation. Finite-difference
/// checks compare these to detect perturbations that cross a kink.
std::uint64_t hash_active(const Matrix& y, std::uint64_t h);
std::uint64_t hash_indices(const IndexMatrix& idx, std::uint64_t h);

}  // namespace mgsagc
