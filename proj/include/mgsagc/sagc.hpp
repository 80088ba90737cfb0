#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "mgsagc/cheb.hpp"
#include "mgsagc/layers.hpp"
#include "mgsagc/linalg.hpp"
#include "mgsagc/msgraph.hpp"

namespace mgsagc {

/// One scale of a batch of clouds, stacked into a single disjoint graph whose
/// rows are the concatenated vertices. Edge inputs are stored already mapped
/// into the Chebyshev domain using each cloud's own scale radius.
struct EdgeBatch {
  std::size_t rows = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> neighbors;
  std::vector<double> x_d;
  std::vector<double> x_theta;

  std::size_t num_edges() const { return neighbors.size(); }
};

EdgeBatch make_edge_batch(std::span<const ScaleGraph* const> graphs);
EdgeBatch make_edge_batch(const ScaleGraph& graph);

using EdgeBatchPtr = std::shared_ptr<const EdgeBatch>;

/// Per-scale edge batches for a batch of multiscale graphs; element k-1 holds scale k.
std::vector<EdgeBatchPtr> make_scale_batches(std::span<const MultiScaleGraph* const> graphs);

struct SAGCLayerParams {
  DenseParams linear;  // F_in x F_out channel mixing applied before aggregation
  Matrix cheb_d;       // (order+1) x F_out; column c is channel c's distance weights
  Matrix cheb_theta;   // (order+1) x F_out
  BatchNormParams bn;
  bool mean_aggregation = false;

  int in_features() const { return static_cast<int>(linear.weight.rows()); }
  int out_features() const { return static_cast<int>(linear.weight.cols()); }
  int order() const { return static_cast<int>(cheb_d.rows()) - 1; }
  ChebKernelParams kernel(int channel) const;
};

SAGCLayerParams init_sagc_layer(int f_in, int f_out, int order, bool batch_norm, std::mt19937_64& rng);

struct SAGCCache {
  EdgeBatchPtr edges;
  Matrix x;
  Matrix h;  // x W + b
  BatchNormCache bn;
  Matrix y;  // post-ReLU output
};

struct SAGCForward {
  Matrix y;
  SAGCCache cache;
};

/// z_i[c] = sum over (j, e) in adj(i) of f_c(e) * h_j[c], then batch norm and ReLU.
SAGCForward sagc_forward(EdgeBatchPtr edges, const Matrix& x, SAGCLayerParams& params, Mode mode);
SAGCForward sagc_forward(const ScaleGraph& graph, const Matrix& x, SAGCLayerParams& params, Mode mode);

struct SAGCBackward {
  Matrix dx;
  SAGCLayerParams grad;
};

SAGCBackward sagc_backward(const SAGCCache& cache, const Matrix& dy, const SAGCLayerParams& params);
/// Accumulating form used by the network; returns dL/dx.
Matrix sagc_backward_into(const SAGCCache& cache, const Matrix& dy, const SAGCLayerParams& params,
                          SAGCLayerParams& grad);

struct MGModuleParams {
  std::vector<SAGCLayerParams> per_scale;
};

MGModuleParams init_mg_module(int k_max, int features, int order, bool batch_norm, std::mt19937_64& rng);

struct MGModuleCache {
  std::vector<SAGCCache> scales;
  IndexMatrix argmax;  // winning scale per element; ties go to the lowest scale
};

struct MGModuleForward {
  Matrix y;
  MGModuleCache cache;
};

/// Per-scale SAGC followed by elementwise max across scales.
MGModuleForward mg_module_forward(std::span<const EdgeBatchPtr> scales, const Matrix& x, MGModuleParams& params,
                                  Mode mode);
MGModuleForward mg_module_forward(const MultiScaleGraph& graph, const Matrix& x, MGModuleParams& params, Mode mode);

struct MGModuleBackward {
  Matrix dx;
  MGModuleParams grad;
};

MGModuleBackward mg_module_backward(const MGModuleCache& cache, const Matrix& dy, const MGModuleParams& params);
Matrix mg_module_backward_into(const MGModuleCache& cache, const Matrix& dy, const MGModuleParams& params,
                               MGModuleParams& grad);

SAGCLayerParams zeros_like(const SAGCLayerParams& p);
MGModuleParams zeros_like(const MGModuleParams& p);

}  // namespace mgsagc
