#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mgsagc/layers.hpp"
#include "mgsagc/msgraph.hpp"
#include "mgsagc/pcio.hpp"
#include "mgsagc/sagc.hpp"

namespace mgsagc {

struct ModelConfig {
  int k_max = 3;
  int cheb_order = 16;
  int feature_dim = 64;
  int encoder_hidden = 64;
  int num_mg_modules = 3;
  std::vector<int> head_hidden = {512, 256};
  int num_classes = 8;
  double dropout = 0.5;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int num_points = 1024;
  std::uint64_t seed = 0;
  SpacingMode spacing = SpacingMode::NearestNeighbor;
  bool batch_norm = true;
  bool mean_aggregation = false;

  void validate() const;
  /// True when both configs produce parameter sets of identical shape.
  bool same_architecture(const ModelConfig& other) const;
  int embedding_dim() const { return head_hidden.front(); }
};

/// Learnable tensors plus batch-norm running statistics. Gradients and Adam
/// moments reuse this type.
struct ModelParams {
  std::vector<DenseParams> encoder;  // 3 -> hidden -> F
  std::vector<BatchNormParams> encoder_bn;
  std::vector<MGModuleParams> mg_modules;
  std::vector<DenseParams> head;  // F -> head_hidden... -> C
  std::vector<BatchNormParams> head_bn;

  /// Calls f(name, Matrix&) for every learnable tensor in a fixed order.
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f, false);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f, false);
  }
  /// Like visit() but also includes batch-norm running statistics.
  template <class F>
  void visit_all(F&& f) {
    visit_impl(*this, f, true);
  }
  template <class F>
  void visit_all(F&& f) const {
    visit_impl(*this, f, true);
  }

  std::size_t num_parameters() const;

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f, bool with_state) {
    auto bn = [&](auto& b, const std::string& name) {
      f(name + ".gamma", b.gamma);
      f(name + ".beta", b.beta);
      if (with_state) {
        f(name + ".running_mean", b.running_mean);
        f(name + ".running_var", b.running_var);
      }
    };
    for (std::size_t i = 0; i < self.encoder.size(); ++i) {
      const std::string n = "encoder." + std::to_string(i);
      f(n + ".weight", self.encoder[i].weight);
      f(n + ".bias", self.encoder[i].bias);
      bn(self.encoder_bn[i], n + ".bn");
    }
    for (std::size_t m = 0; m < self.mg_modules.size(); ++m) {
      auto& mod = self.mg_modules[m];
      for (std::size_t s = 0; s < mod.per_scale.size(); ++s) {
        auto& l = mod.per_scale[s];
        const std::string n = "mg." + std::to_string(m) + ".scale" + std::to_string(s + 1);
        f(n + ".weight", l.linear.weight);
        f(n + ".bias", l.linear.bias);
        f(n + ".cheb_d", l.cheb_d);
        f(n + ".cheb_theta", l.cheb_theta);
        bn(l.bn, n + ".bn");
      }
    }
    for (std::size_t i = 0; i < self.head.size(); ++i) {
      const std::string n = "head." + std::to_string(i);
      f(n + ".weight", self.head[i].weight);
      f(n + ".bias", self.head[i].bias);
      if (i < self.head_bn.size()) bn(self.head_bn[i], n + ".bn");
    }
  }
};

ModelParams init_params(const ModelConfig& config);
ModelParams zeros_like(const ModelParams& p);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState init_adam(const ModelParams& params);

struct Model {
  ModelConfig config;
  ModelParams params;
  AdamState adam;
};

Model make_model(const ModelConfig& config);

// ---- encoder --------------------------------------------------------------

struct EncoderCache {
  Matrix input;
  std::vector<Matrix> pre;  // dense outputs
  std::vector<BatchNormCache> bn;
  std::vector<Matrix> out;  // post-ReLU outputs
};

/// Shared per-point MLP: dense -> batch norm -> ReLU per layer.
Matrix encode_points(const Matrix& positions, std::vector<DenseParams>& dense, std::vector<BatchNormParams>& bn,
                     Mode mode, EncoderCache& cache);
Matrix encode_points_backward(const EncoderCache& cache, const Matrix& dy, const std::vector<DenseParams>& dense,
                              const std::vector<BatchNormParams>& bn, std::vector<DenseParams>& dense_grad,
                              std::vector<BatchNormParams>& bn_grad);

Matrix positions_matrix(std::span<const PointCloud* const> clouds);
Matrix positions_matrix(const PointCloud& cloud);

// ---- full model -----------------------------------------------------------

struct ModelCache {
  std::vector<std::size_t> row_offsets;  // per cloud, size B+1
  EncoderCache encoder;
  std::vector<MGModuleCache> mg;
  Matrix pooled_input;  // last MG output
  IndexMatrix pool_argmax;  // B x F global row index of each channel's max
  std::vector<Matrix> head_in;  // input to each head dense layer
  std::vector<BatchNormCache> head_bn;
  std::vector<Matrix> head_act;  // post-ReLU activations of hidden layers
  std::vector<Matrix> dropout;
  std::size_t num_classes = 0;

  /// Fingerprint of every ReLU sign pattern and max-routing decision.
  std::uint64_t activation_signature() const;
};

struct ForwardResult {
  Matrix logits;     // B x C
  Matrix embedding;  // B x head_hidden[0]
  ModelCache cache;
};

/// Forward pass over a batch; graphs[b] must be built from clouds[b] with
/// config.k_max scales. `dropout_rng` is required in Train mode.
ForwardResult forward(std::span<const PointCloud* const> clouds, std::span<const MultiScaleGraph* const> graphs,
                      ModelParams& params, const ModelConfig& config, Mode mode,
                      std::mt19937_64* dropout_rng = nullptr);
ForwardResult forward(const PointCloud& cloud, const MultiScaleGraph& graph, ModelParams& params,
                      const ModelConfig& config, Mode mode, std::mt19937_64* dropout_rng = nullptr);

struct LossResult {
  double loss = 0;  // mean cross-entropy over the batch
  ModelParams grads;
};

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits);

LossResult loss_and_backward(const Matrix& logits, std::span<const int> labels, const ModelCache& cache,
                             const ModelParams& params);

/// Bias-corrected Adam. Throws before touching any state if a gradient is non-finite.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

// ---- training -------------------------------------------------------------

/// Clouds with labels plus their multiscale graphs, built once and reused.
struct LabeledClouds {
  std::vector<PointCloud> clouds;
  std::vector<int> labels;
  std::vector<MultiScaleGraph> graphs;

  std::size_t size() const { return clouds.size(); }
  void build_graphs(int k_max, SpacingMode mode);
  bool graphs_match(int k_max) const;
};

struct EpochMetrics {
  double loss = 0;
  double accuracy = 0;
};

EpochMetrics train_epoch(LabeledClouds& data, Model& model, int epoch);

/// Eval-mode loss and accuracy.
EpochMetrics evaluate(LabeledClouds& data, Model& model);

// ---- persistence ----------------------------------------------------------

std::string serialize_model(const Model& model);
Model deserialize_model(const std::string& bytes);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
/// Loads and checks the stored architecture against `expected`.
Model load_model(const std::string& path, const ModelConfig& expected);

}  // namespace mgsagc
