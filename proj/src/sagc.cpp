#include "mgsagc/sagc.hpp"

#include <cmath>

#include "mgsagc/error.hpp"

namespace mgsagc {

namespace {

// Edges are processed in row-aligned chunks of roughly this many edges so the
// per-edge kernel matrices stay cache resident. Chunk boundaries depend only on
// the graph, which keeps accumulation order fixed.
constexpr std::size_t kChunkEdges = 1024;

template <class F>
void for_each_chunk(const EdgeBatch& eb, F&& f) {
  std::size_t r0 = 0;
  while (r0 < eb.rows) {
    std::size_t r1 = r0 + 1;
    while (r1 < eb.rows && eb.offsets[r1 + 1] - eb.offsets[r0] <= kChunkEdges) ++r1;
    f(r0, r1);
    r0 = r1;
  }
}

struct ChunkKernel {
  Matrix basis_d, basis_theta;  // m x (order+1)
  Matrix k_d, k_theta;          // m x F

  void compute(const EdgeBatch& eb, std::size_t e0, std::size_t e1, const SAGCLayerParams& p) {
    const auto m = static_cast<Eigen::Index>(e1 - e0);
    const auto p1 = p.cheb_d.rows();
    basis_d.resize(m, p1);
    basis_theta.resize(m, p1);
    for (Eigen::Index e = 0; e < m; ++e) {
      cheb_basis_into(eb.x_d[e0 + e], std::span<double>(basis_d.row(e).data(), p1));
      cheb_basis_into(eb.x_theta[e0 + e], std::span<double>(basis_theta.row(e).data(), p1));
    }
    k_d.noalias() = basis_d * p.cheb_d;
    k_theta.noalias() = basis_theta * p.cheb_theta;
  }
};

void check_layer(const SAGCLayerParams& p) {
  if (p.cheb_d.rows() < 1 || p.cheb_d.rows() != p.cheb_theta.rows() || p.cheb_d.cols() != p.out_features() ||
      p.cheb_theta.cols() != p.out_features() || p.linear.bias.cols() != p.out_features())
    throw Error(ErrorCode::Shape, "SAGC layer parameters have inconsistent dimensions");
}

}  // namespace

EdgeBatch make_edge_batch(std::span<const ScaleGraph* const> graphs) {
  EdgeBatch eb;
  std::size_t total_edges = 0;
  for (const auto* g : graphs) {
    eb.rows += g->num_vertices();
    total_edges += g->num_edges();
  }
  eb.offsets.reserve(eb.rows + 1);
  eb.neighbors.reserve(total_edges);
  eb.x_d.reserve(total_edges);
  eb.x_theta.reserve(total_edges);
  eb.offsets.push_back(0);
  std::uint32_t base = 0;
  for (const auto* g : graphs) {
    for (std::size_t i = 0; i < g->num_vertices(); ++i) {
      for (auto e = g->offsets[i]; e < g->offsets[i + 1]; ++e) {
        const auto [xd, xt] = normalize_edge_inputs(g->dist[e], g->theta[e], g->radius);
        eb.neighbors.push_back(base + g->neighbors[e]);
        eb.x_d.push_back(xd);
        eb.x_theta.push_back(xt);
      }
      eb.offsets.push_back(eb.neighbors.size());
    }
    base += static_cast<std::uint32_t>(g->num_vertices());
  }
  return eb;
}

EdgeBatch make_edge_batch(const ScaleGraph& graph) {
  const ScaleGraph* g = &graph;
  return make_edge_batch(std::span<const ScaleGraph* const>(&g, 1));
}

std::vector<EdgeBatchPtr> make_scale_batches(std::span<const MultiScaleGraph* const> graphs) {
  if (graphs.empty()) throw Error(ErrorCode::InvalidArgument, "make_scale_batches: empty batch");
  const std::size_t nscales = graphs.front()->scales.size();
  std::vector<EdgeBatchPtr> out;
  std::vector<const ScaleGraph*> per;
  for (std::size_t s = 0; s < nscales; ++s) {
    per.clear();
    for (const auto* g : graphs) {
      if (g->scales.size() != nscales) throw Error(ErrorCode::Shape, "graphs in a batch differ in scale count");
      per.push_back(&g->scales[s]);
    }
    out.push_back(std::make_shared<const EdgeBatch>(make_edge_batch(per)));
  }
  return out;
}

ChebKernelParams SAGCLayerParams::kernel(int channel) const {
  ChebKernelParams k;
  k.w_d.resize(cheb_d.rows());
  k.w_theta.resize(cheb_theta.rows());
  for (Eigen::Index n = 0; n < cheb_d.rows(); ++n) {
    k.w_d[n] = cheb_d(n, channel);
    k.w_theta[n] = cheb_theta(n, channel);
  }
  return k;
}

SAGCLayerParams init_sagc_layer(int f_in, int f_out, int order, bool batch_norm, std::mt19937_64& rng) {
  if (f_in < 1 || f_out < 1 || order < 0) throw Error(ErrorCode::InvalidArgument, "init_sagc_layer: bad dimensions");
  SAGCLayerParams p;
  p.linear = init_dense(f_in, f_out, rng);
  p.cheb_d.resize(order + 1, f_out);
  p.cheb_theta.resize(order + 1, f_out);
  for (int c = 0; c < f_out; ++c) {
    const auto wd = init_cheb_weights(order, f_in, rng);
    const auto wt = init_cheb_weights(order, f_in, rng);
    for (int n = 0; n <= order; ++n) {
      p.cheb_d(n, c) = wd[n];
      p.cheb_theta(n, c) = wt[n];
    }
  }
  p.bn = init_batchnorm(f_out, batch_norm);
  return p;
}

SAGCForward sagc_forward(EdgeBatchPtr edges, const Matrix& x, SAGCLayerParams& params, Mode mode) {
  if (!edges) throw Error(ErrorCode::InvalidArgument, "sagc_forward: null graph");
  check_layer(params);
  const EdgeBatch& eb = *edges;
  if (static_cast<std::size_t>(x.rows()) != eb.rows)
    throw Error(ErrorCode::Shape, "sagc_forward: feature rows " + std::to_string(x.rows()) + " != vertex count " +
                                      std::to_string(eb.rows));
  if (x.cols() != params.in_features()) throw Error(ErrorCode::Shape, "sagc_forward: feature width mismatch");
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "sagc_forward: non-finite input features");

  SAGCForward out;
  out.cache.edges = edges;
  out.cache.x = x;
  out.cache.h = dense_forward(x, params.linear);
  const Matrix& h = out.cache.h;
  const Eigen::Index F = params.out_features();
  Matrix z = Matrix::Zero(x.rows(), F);

  ChunkKernel ck;
  for_each_chunk(eb, [&](std::size_t r0, std::size_t r1) {
    const auto e0 = eb.offsets[r0];
    ck.compute(eb, e0, eb.offsets[r1], params);
    for (std::size_t i = r0; i < r1; ++i) {
      double* zi = z.row(static_cast<Eigen::Index>(i)).data();
      for (auto e = eb.offsets[i]; e < eb.offsets[i + 1]; ++e) {
        const auto le = static_cast<Eigen::Index>(e - e0);
        const double* kd = ck.k_d.row(le).data();
        const double* kt = ck.k_theta.row(le).data();
        const double* hj = h.row(eb.neighbors[e]).data();
        for (Eigen::Index c = 0; c < F; ++c) zi[c] += kd[c] * kt[c] * hj[c];
      }
      if (params.mean_aggregation) z.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(eb.offsets[i + 1] - eb.offsets[i]);
    }
  });

  out.y = relu(batchnorm_forward(z, params.bn, mode, out.cache.bn));
  out.cache.y = out.y;
  return out;
}

SAGCForward sagc_forward(const ScaleGraph& graph, const Matrix& x, SAGCLayerParams& params, Mode mode) {
  return sagc_forward(std::make_shared<const EdgeBatch>(make_edge_batch(graph)), x, params, mode);
}

Matrix sagc_backward_into(const SAGCCache& cache, const Matrix& dy, const SAGCLayerParams& params,
                          SAGCLayerParams& grad) {
  if (!cache.edges || cache.y.size() == 0) throw Error(ErrorCode::InvalidArgument, "sagc_backward: empty cache");
  if (dy.rows() != cache.y.rows() || dy.cols() != cache.y.cols() || cache.h.cols() != params.out_features() ||
      cache.x.cols() != params.in_features())
    throw Error(ErrorCode::Shape, "sagc_backward: cache does not match gradient or parameters");
  const EdgeBatch& eb = *cache.edges;
  const Matrix& h = cache.h;

  Matrix dz = batchnorm_backward(relu_backward(cache.y, dy), params.bn, cache.bn, grad.bn);
  if (params.mean_aggregation)
    for (std::size_t i = 0; i < eb.rows; ++i)
      dz.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(eb.offsets[i + 1] - eb.offsets[i]);

  const Eigen::Index F = h.cols();
  Matrix dh = Matrix::Zero(h.rows(), F);
  ChunkKernel ck;
  Matrix dk_d, dk_theta;
  for_each_chunk(eb, [&](std::size_t r0, std::size_t r1) {
    const auto e0 = eb.offsets[r0];
    ck.compute(eb, e0, eb.offsets[r1], params);
    dk_d.resize(ck.k_d.rows(), ck.k_d.cols());
    dk_theta.resize(ck.k_d.rows(), ck.k_d.cols());
    for (std::size_t i = r0; i < r1; ++i) {
      const double* dzi = dz.row(static_cast<Eigen::Index>(i)).data();
      for (auto e = eb.offsets[i]; e < eb.offsets[i + 1]; ++e) {
        const auto le = static_cast<Eigen::Index>(e - e0);
        const auto j = static_cast<Eigen::Index>(eb.neighbors[e]);
        const double* kd = ck.k_d.row(le).data();
        const double* kt = ck.k_theta.row(le).data();
        const double* hj = h.row(j).data();
        double* gd = dk_d.row(le).data();
        double* gt = dk_theta.row(le).data();
        double* dhj = dh.row(j).data();
        for (Eigen::Index c = 0; c < F; ++c) {
          const double g = dzi[c] * hj[c];
          gd[c] = g * kt[c];
          gt[c] = g * kd[c];
          dhj[c] += kd[c] * kt[c] * dzi[c];
        }
      }
    }
    grad.cheb_d.noalias() += ck.basis_d.transpose() * dk_d;
    grad.cheb_theta.noalias() += ck.basis_theta.transpose() * dk_theta;
  });

  return dense_backward(cache.x, dh, params.linear, grad.linear);
}

SAGCBackward sagc_backward(const SAGCCache& cache, const Matrix& dy, const SAGCLayerParams& params) {
  SAGCBackward out;
  out.grad = zeros_like(params);
  out.dx = sagc_backward_into(cache, dy, params, out.grad);
  return out;
}

MGModuleParams init_mg_module(int k_max, int features, int order, bool batch_norm, std::mt19937_64& rng) {
  MGModuleParams p;
  for (int k = 0; k < k_max; ++k) p.per_scale.push_back(init_sagc_layer(features, features, order, batch_norm, rng));
  return p;
}

MGModuleForward mg_module_forward(std::span<const EdgeBatchPtr> scales, const Matrix& x, MGModuleParams& params,
                                  Mode mode) {
  if (scales.size() != params.per_scale.size() || scales.empty())
    throw Error(ErrorCode::Shape, "mg_module_forward: graph has " + std::to_string(scales.size()) +
                                      " scales, module has " + std::to_string(params.per_scale.size()));
  MGModuleForward out;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    auto f = sagc_forward(scales[s], x, params.per_scale[s], mode);
    if (s == 0) {
      out.y = std::move(f.y);
      out.cache.argmax = IndexMatrix::Zero(out.y.rows(), out.y.cols());
    } else {
      if (f.y.cols() != out.y.cols()) throw Error(ErrorCode::Shape, "mg_module_forward: scale widths differ");
      for (Eigen::Index i = 0; i < out.y.size(); ++i) {
        if (f.y.data()[i] > out.y.data()[i]) {
          out.y.data()[i] = f.y.data()[i];
          out.cache.argmax.data()[i] = static_cast<int>(s);
        }
      }
    }
    out.cache.scales.push_back(std::move(f.cache));
  }
  return out;
}

MGModuleForward mg_module_forward(const MultiScaleGraph& graph, const Matrix& x, MGModuleParams& params, Mode mode) {
  const MultiScaleGraph* g = &graph;
  const auto batches = make_scale_batches(std::span<const MultiScaleGraph* const>(&g, 1));
  return mg_module_forward(batches, x, params, mode);
}

Matrix mg_module_backward_into(const MGModuleCache& cache, const Matrix& dy, const MGModuleParams& params,
                               MGModuleParams& grad) {
  if (cache.scales.size() != params.per_scale.size() || cache.scales.empty())
    throw Error(ErrorCode::Shape, "mg_module_backward: cache does not match parameters");
  if (dy.rows() != cache.argmax.rows() || dy.cols() != cache.argmax.cols())
    throw Error(ErrorCode::Shape, "mg_module_backward: gradient shape mismatch");
  Matrix dx;
  for (std::size_t s = 0; s < cache.scales.size(); ++s) {
    const Matrix routed = (cache.argmax.array() == static_cast<int>(s)).select(dy, 0.0);
    Matrix d = sagc_backward_into(cache.scales[s], routed, params.per_scale[s], grad.per_scale[s]);
    if (s == 0)
      dx = std::move(d);
    else
      dx += d;
  }
  return dx;
}

MGModuleBackward mg_module_backward(const MGModuleCache& cache, const Matrix& dy, const MGModuleParams& params) {
  MGModuleBackward out;
  out.grad = zeros_like(params);
  out.dx = mg_module_backward_into(cache, dy, params, out.grad);
  return out;
}

SAGCLayerParams zeros_like(const SAGCLayerParams& p) {
  SAGCLayerParams z;
  z.linear.weight = Matrix::Zero(p.linear.weight.rows(), p.linear.weight.cols());
  z.linear.bias = Matrix::Zero(1, p.linear.bias.cols());
  z.cheb_d = Matrix::Zero(p.cheb_d.rows(), p.cheb_d.cols());
  z.cheb_theta = Matrix::Zero(p.cheb_theta.rows(), p.cheb_theta.cols());
  z.bn.gamma = Matrix::Zero(1, p.bn.gamma.cols());
  z.bn.beta = Matrix::Zero(1, p.bn.beta.cols());
  z.bn.running_mean = Matrix::Zero(1, p.bn.running_mean.cols());
  z.bn.running_var = Matrix::Zero(1, p.bn.running_var.cols());
  z.bn.enabled = p.bn.enabled;
  z.mean_aggregation = p.mean_aggregation;
  return z;
}

MGModuleParams zeros_like(const MGModuleParams& p) {
  MGModuleParams z;
  for (const auto& l : p.per_scale) z.per_scale.push_back(zeros_like(l));
  return z;
}

}  // namespace mgsagc
