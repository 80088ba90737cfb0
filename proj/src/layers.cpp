#include "mgsagc/layers.hpp"

#include <cmath>

#include "mgsagc/error.hpp"

namespace mgsagc {

DenseParams init_dense(int in, int out, std::mt19937_64& rng, double gain) {
  DenseParams p;
  p.weight.resize(in, out);
  std::normal_distribution<double> nd(0.0, std::sqrt(gain / in));
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = nd(rng);
  p.bias = Matrix::Zero(1, out);
  return p;
}

Matrix dense_forward(const Matrix& x, const DenseParams& p) {
  if (x.cols() != p.weight.rows())
    throw Error(ErrorCode::Shape, "dense: input width " + std::to_string(x.cols()) + " != " +
                                      std::to_string(p.weight.rows()));
  Matrix y = x * p.weight;
  y.rowwise() += p.bias.row(0);
  return y;
}

Matrix dense_backward(const Matrix& x, const Matrix& dy, const DenseParams& p, DenseParams& grad) {
  grad.weight.noalias() += x.transpose() * dy;
  grad.bias += dy.colwise().sum();
  return dy * p.weight.transpose();
}

BatchNormParams init_batchnorm(int features, bool enabled) {
  BatchNormParams p;
  p.gamma = Matrix::Ones(1, features);
  p.beta = Matrix::Zero(1, features);
  p.running_mean = Matrix::Zero(1, features);
  p.running_var = Matrix::Ones(1, features);
  p.enabled = enabled;
  return p;
}

Matrix batchnorm_forward(const Matrix& x, BatchNormParams& p, Mode mode, BatchNormCache& cache) {
  if (!p.enabled) {
    cache = {};
    return x;
  }
  if (x.cols() != p.gamma.cols()) throw Error(ErrorCode::Shape, "batchnorm: channel count mismatch");
  cache.batch_stats = mode != Mode::Eval;
  if (cache.batch_stats) {
    if (x.rows() == 0) throw Error(ErrorCode::Shape, "batchnorm: empty batch");
    const Matrix mean = x.colwise().mean();
    cache.xhat = x.rowwise() - mean.row(0);
    const Matrix var = cache.xhat.array().square().colwise().mean();
    cache.inv_std = (var.array() + kBatchNormEps).rsqrt();
    if (mode == Mode::Train) {
      p.running_mean = kBatchNormMomentum * p.running_mean + (1.0 - kBatchNormMomentum) * mean;
      p.running_var = kBatchNormMomentum * p.running_var + (1.0 - kBatchNormMomentum) * var;
    }
  } else {
    cache.xhat = x.rowwise() - p.running_mean.row(0);
    cache.inv_std = (p.running_var.array() + kBatchNormEps).rsqrt();
  }
  cache.xhat.array().rowwise() *= cache.inv_std.row(0).array();
  Matrix y = cache.xhat.array().rowwise() * p.gamma.row(0).array();
  y.rowwise() += p.beta.row(0);
  return y;
}

Matrix batchnorm_backward(const Matrix& dy, const BatchNormParams& p, const BatchNormCache& cache,
                          BatchNormParams& grad) {
  if (!p.enabled) return dy;
  if (dy.rows() != cache.xhat.rows() || dy.cols() != cache.xhat.cols())
    throw Error(ErrorCode::Shape, "batchnorm: gradient does not match cached forward pass");
  grad.gamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  grad.beta += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * p.gamma.row(0).array();
  if (!cache.batch_stats) {
    dxhat.array().rowwise() *= cache.inv_std.row(0).array();
    return dxhat;
  }
  const double r = static_cast<double>(dy.rows());
  const Matrix sum_dxhat = dxhat.colwise().sum();
  const Matrix sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
  Matrix dx = (dxhat * r).rowwise() - sum_dxhat.row(0);
  dx.array() -= cache.xhat.array().rowwise() * sum_dxhat_xhat.row(0).array();
  const RowVector scale = cache.inv_std.row(0) / r;
  dx.array().rowwise() *= scale.array();
  return dx;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  Matrix mask(rows, cols);
  if (rate <= 0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return mask;
}

namespace {
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
}

std::uint64_t hash_active(const Matrix& y, std::uint64_t h) {
  for (Eigen::Index i = 0; i < y.size(); ++i) h = (h ^ static_cast<std::uint64_t>(y.data()[i] > 0)) * kFnvPrime;
  return h;
}

std::uint64_t hash_indices(const IndexMatrix& idx, std::uint64_t h) {
  for (Eigen::Index i = 0; i < idx.size(); ++i) h = (h ^ static_cast<std::uint64_t>(idx.data()[i])) * kFnvPrime;
  return h;
}

}  // namespace mgsagc
