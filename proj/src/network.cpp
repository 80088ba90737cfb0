#include "mgsagc/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binio.hpp"
#include "mgsagc/error.hpp"

namespace mgsagc {

void ModelConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string("invalid model config: ") + what);
  };
  need(k_max >= 1, "k_max must be >= 1");
  need(cheb_order >= 0, "cheb_order must be >= 0");
  need(feature_dim >= 1, "feature_dim must be >= 1");
  need(encoder_hidden >= 1, "encoder_hidden must be >= 1");
  need(num_mg_modules >= 1, "num_mg_modules must be >= 1");
  need(!head_hidden.empty(), "head needs at least one hidden layer");
  need(std::all_of(head_hidden.begin(), head_hidden.end(), [](int w) { return w >= 1; }), "head widths must be >= 1");
  need(num_classes >= 2, "num_classes must be >= 2");
  need(dropout >= 0 && dropout < 1, "dropout must be in [0, 1)");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(learning_rate >= 0 && std::isfinite(learning_rate), "learning_rate must be >= 0");
  need(num_points >= 1, "num_points must be >= 1");
}

bool ModelConfig::same_architecture(const ModelConfig& o) const {
  return k_max == o.k_max && cheb_order == o.cheb_order && feature_dim == o.feature_dim &&
         encoder_hidden == o.encoder_hidden && num_mg_modules == o.num_mg_modules && head_hidden == o.head_hidden &&
         num_classes == o.num_classes && batch_norm == o.batch_norm && mean_aggregation == o.mean_aggregation;
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  ModelParams p;
  p.encoder.push_back(init_dense(3, config.encoder_hidden, rng));
  p.encoder.push_back(init_dense(config.encoder_hidden, config.feature_dim, rng));
  p.encoder_bn.push_back(init_batchnorm(config.encoder_hidden, config.batch_norm));
  p.encoder_bn.push_back(init_batchnorm(config.feature_dim, config.batch_norm));
  for (int m = 0; m < config.num_mg_modules; ++m) {
    p.mg_modules.push_back(init_mg_module(config.k_max, config.feature_dim, config.cheb_order, config.batch_norm, rng));
    for (auto& l : p.mg_modules.back().per_scale) l.mean_aggregation = config.mean_aggregation;
  }
  int in = config.feature_dim;
  for (int w : config.head_hidden) {
    p.head.push_back(init_dense(in, w, rng));
    p.head_bn.push_back(init_batchnorm(w, config.batch_norm));
    in = w;
  }
  p.head.push_back(init_dense(in, config.num_classes, rng, 1.0));
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.visit_all([](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

AdamState init_adam(const ModelParams& params) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

Model make_model(const ModelConfig& config) {
  Model m;
  m.config = config;
  m.params = init_params(config);
  m.adam = init_adam(m.params);
  return m;
}

// ---- encoder --------------------------------------------------------------

Matrix encode_points(const Matrix& positions, std::vector<DenseParams>& dense, std::vector<BatchNormParams>& bn,
                     Mode mode, EncoderCache& cache) {
  if (dense.size() != bn.size()) throw Error(ErrorCode::Shape, "encoder: layer count mismatch");
  if (!positions.allFinite()) throw Error(ErrorCode::NonFinite, "encoder: non-finite input");
  cache = {};
  cache.input = positions;
  Matrix x = positions;
  for (std::size_t l = 0; l < dense.size(); ++l) {
    cache.pre.push_back(dense_forward(x, dense[l]));
    cache.bn.emplace_back();
    x = relu(batchnorm_forward(cache.pre.back(), bn[l], mode, cache.bn.back()));
    cache.out.push_back(x);
  }
  return x;
}

Matrix encode_points_backward(const EncoderCache& cache, const Matrix& dy, const std::vector<DenseParams>& dense,
                              const std::vector<BatchNormParams>& bn, std::vector<DenseParams>& dense_grad,
                              std::vector<BatchNormParams>& bn_grad) {
  if (cache.out.size() != dense.size()) throw Error(ErrorCode::Shape, "encoder backward: stale cache");
  Matrix d = dy;
  for (std::size_t l = dense.size(); l-- > 0;) {
    d = batchnorm_backward(relu_backward(cache.out[l], d), bn[l], cache.bn[l], bn_grad[l]);
    d = dense_backward(l == 0 ? cache.input : cache.out[l - 1], d, dense[l], dense_grad[l]);
  }
  return d;
}

Matrix positions_matrix(std::span<const PointCloud* const> clouds) {
  std::size_t rows = 0;
  for (const auto* c : clouds) rows += c->size();
  Matrix x(static_cast<Eigen::Index>(rows), 3);
  Eigen::Index r = 0;
  for (const auto* c : clouds)
    for (const auto& p : c->positions) {
      x(r, 0) = p.x;
      x(r, 1) = p.y;
      x(r, 2) = p.z;
      ++r;
    }
  return x;
}

Matrix positions_matrix(const PointCloud& cloud) {
  const PointCloud* c = &cloud;
  return positions_matrix(std::span<const PointCloud* const>(&c, 1));
}

// ---- full model -----------------------------------------------------------

std::uint64_t ModelCache::activation_signature() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& y : encoder.out) h = hash_active(y, h);
  for (const auto& m : mg) {
    for (const auto& s : m.scales) h = hash_active(s.y, h);
    h = hash_indices(m.argmax, h);
  }
  h = hash_indices(pool_argmax, h);
  for (const auto& a : head_act) h = hash_active(a, h);
  return h;
}

namespace {

void check_params(const ModelParams& p, const ModelConfig& c) {
  bool ok = p.encoder.size() == 2 && p.encoder_bn.size() == 2 &&
            p.mg_modules.size() == static_cast<std::size_t>(c.num_mg_modules) &&
            p.head.size() == c.head_hidden.size() + 1 && p.head_bn.size() == c.head_hidden.size();
  if (ok) ok = p.encoder[0].weight.rows() == 3 && p.encoder[1].weight.cols() == c.feature_dim;
  if (ok)
    for (const auto& m : p.mg_modules) ok = ok && m.per_scale.size() == static_cast<std::size_t>(c.k_max);
  if (ok) ok = p.head.front().weight.rows() == c.feature_dim && p.head.back().weight.cols() == c.num_classes;
  if (!ok) throw Error(ErrorCode::Shape, "model parameters do not match the model config");
}

}  // namespace

ForwardResult forward(std::span<const PointCloud* const> clouds, std::span<const MultiScaleGraph* const> graphs,
                      ModelParams& params, const ModelConfig& config, Mode mode, std::mt19937_64* dropout_rng) {
  check_params(params, config);
  if (clouds.empty() || clouds.size() != graphs.size())
    throw Error(ErrorCode::InvalidArgument, "forward: need one graph per cloud and a non-empty batch");
  if (mode == Mode::Train && config.dropout > 0 && !dropout_rng)
    throw Error(ErrorCode::InvalidArgument, "forward: training mode needs a dropout RNG");

  ForwardResult out;
  ModelCache& cache = out.cache;
  cache.num_classes = static_cast<std::size_t>(config.num_classes);
  cache.row_offsets.push_back(0);
  for (std::size_t b = 0; b < clouds.size(); ++b) {
    if (clouds[b]->empty()) throw Error(ErrorCode::InvalidArgument, "forward: empty cloud");
    if (graphs[b]->scales.size() != static_cast<std::size_t>(config.k_max) ||
        graphs[b]->num_vertices() != clouds[b]->size())
      throw Error(ErrorCode::Shape, "forward: graph does not match cloud or k_max");
    cache.row_offsets.push_back(cache.row_offsets.back() + clouds[b]->size());
  }

  Matrix x = encode_points(positions_matrix(clouds), params.encoder, params.encoder_bn, mode, cache.encoder);
  const auto batches = make_scale_batches(graphs);
  for (auto& module : params.mg_modules) {
    auto f = mg_module_forward(batches, x, module, mode);
    x = std::move(f.y);
    cache.mg.push_back(std::move(f.cache));
  }

  const auto B = static_cast<Eigen::Index>(clouds.size());
  const auto F = x.cols();
  Matrix g(B, F);
  cache.pool_argmax.resize(B, F);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto r0 = static_cast<Eigen::Index>(cache.row_offsets[b]);
    const auto r1 = static_cast<Eigen::Index>(cache.row_offsets[b + 1]);
    for (Eigen::Index c = 0; c < F; ++c) {
      Eigen::Index best = r0;
      for (Eigen::Index r = r0 + 1; r < r1; ++r)
        if (x(r, c) > x(best, c)) best = r;
      g(b, c) = x(best, c);
      cache.pool_argmax(b, c) = static_cast<int>(best);
    }
  }
  cache.pooled_input.resize(x.rows(), 0);

  Matrix h = std::move(g);
  const std::size_t L = params.head.size();
  for (std::size_t l = 0; l < L; ++l) {
    cache.head_in.push_back(h);
    h = dense_forward(h, params.head[l]);
    if (l + 1 == L) break;
    cache.head_bn.emplace_back();
    h = relu(batchnorm_forward(h, params.head_bn[l], mode, cache.head_bn.back()));
    cache.head_act.push_back(h);
    if (l == 0) out.embedding = h;
    if (mode == Mode::Train && config.dropout > 0) {
      cache.dropout.push_back(dropout_mask(h.rows(), h.cols(), config.dropout, *dropout_rng));
      h.array() *= cache.dropout.back().array();
    } else {
      cache.dropout.emplace_back();
    }
  }
  out.logits = std::move(h);
  return out;
}

ForwardResult forward(const PointCloud& cloud, const MultiScaleGraph& graph, ModelParams& params,
                      const ModelConfig& config, Mode mode, std::mt19937_64* dropout_rng) {
  const PointCloud* c = &cloud;
  const MultiScaleGraph* g = &graph;
  return forward(std::span<const PointCloud* const>(&c, 1), std::span<const MultiScaleGraph* const>(&g, 1), params,
                 config, mode, dropout_rng);
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits) {
  const auto B = logits.rows();
  if (static_cast<std::size_t>(B) != labels.size() || B == 0)
    throw Error(ErrorCode::Shape, "loss: one label per row required");
  double total = 0;
  if (dlogits) dlogits->resize(B, logits.cols());
  for (Eigen::Index b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= logits.cols())
      throw Error(ErrorCode::InvalidArgument, "loss: label " + std::to_string(y) + " out of range");
    const double mx = logits.row(b).maxCoeff();
    const Eigen::ArrayXd e = (logits.row(b).array() - mx).exp().transpose();
    const double z = e.sum();
    total += std::log(z) - (logits(b, y) - mx);
    if (dlogits) {
      dlogits->row(b) = (e / z).transpose().matrix();
      (*dlogits)(b, y) -= 1.0;
    }
  }
  if (dlogits) *dlogits /= static_cast<double>(B);
  return total / static_cast<double>(B);
}

LossResult loss_and_backward(const Matrix& logits, std::span<const int> labels, const ModelCache& cache,
                             const ModelParams& params) {
  if (cache.head_in.size() != params.head.size() || cache.mg.size() != params.mg_modules.size() ||
      logits.cols() != static_cast<Eigen::Index>(cache.num_classes) ||
      logits.rows() != cache.pool_argmax.rows())
    throw Error(ErrorCode::Shape, "loss_and_backward: stale or mismatched cache");
  LossResult out;
  Matrix d;
  out.loss = softmax_cross_entropy(logits, labels, &d);
  out.grads = zeros_like(params);
  ModelParams& g = out.grads;

  for (std::size_t l = params.head.size(); l-- > 0;) {
    if (l + 1 < params.head.size()) {
      if (cache.dropout[l].size() != 0) d.array() *= cache.dropout[l].array();
      d = batchnorm_backward(relu_backward(cache.head_act[l], d), params.head_bn[l], cache.head_bn[l], g.head_bn[l]);
    }
    d = dense_backward(cache.head_in[l], d, params.head[l], g.head[l]);
  }

  Matrix dx = Matrix::Zero(cache.pooled_input.rows(), d.cols());
  for (Eigen::Index b = 0; b < d.rows(); ++b)
    for (Eigen::Index c = 0; c < d.cols(); ++c) dx(cache.pool_argmax(b, c), c) += d(b, c);

  for (std::size_t m = params.mg_modules.size(); m-- > 0;)
    dx = mg_module_backward_into(cache.mg[m], dx, params.mg_modules[m], g.mg_modules[m]);

  encode_points_backward(cache.encoder, dx, params.encoder, params.encoder_bn, g.encoder, g.encoder_bn);
  return out;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
  if (!(lr >= 0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "adam_step: lr must be >= 0");
  std::vector<const Matrix*> gs;
  grads.visit([&](const std::string& name, const Matrix& m) {
    if (!m.allFinite()) throw Error(ErrorCode::NonFinite, "adam_step: non-finite gradient in " + name);
    gs.push_back(&m);
  });
  std::vector<Matrix*> ms, vs;
  state.m.visit([&](const std::string&, Matrix& m) { ms.push_back(&m); });
  state.v.visit([&](const std::string&, Matrix& m) { vs.push_back(&m); });
  std::size_t i = 0;
  bool shapes_ok = ms.size() == gs.size() && vs.size() == gs.size();
  params.visit([&](const std::string&, Matrix& p) {
    if (i < gs.size())
      shapes_ok = shapes_ok && p.rows() == gs[i]->rows() && p.cols() == gs[i]->cols() && p.rows() == ms[i]->rows() &&
                  p.cols() == ms[i]->cols();
    ++i;
  });
  if (!shapes_ok || i != gs.size()) throw Error(ErrorCode::Shape, "adam_step: gradient/parameter shape mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  i = 0;
  params.visit([&](const std::string&, Matrix& p) {
    const Matrix& g = *gs[i];
    Matrix& m = *ms[i];
    Matrix& v = *vs[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
    ++i;
  });
}

// ---- training -------------------------------------------------------------

void LabeledClouds::build_graphs(int k_max, SpacingMode mode) {
  graphs.clear();
  graphs.reserve(clouds.size());
  for (const auto& c : clouds) graphs.push_back(build_multiscale_graph(c, k_max, mode));
}

bool LabeledClouds::graphs_match(int k_max) const {
  if (graphs.size() != clouds.size()) return false;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    if (graphs[i].scales.size() != static_cast<std::size_t>(k_max) || graphs[i].num_vertices() != clouds[i].size())
      return false;
  return true;
}

namespace {

struct BatchView {
  std::vector<const PointCloud*> clouds;
  std::vector<const MultiScaleGraph*> graphs;
  std::vector<int> labels;
};

BatchView gather(const LabeledClouds& data, std::span<const std::size_t> idx) {
  BatchView v;
  for (auto i : idx) {
    v.clouds.push_back(&data.clouds[i]);
    v.graphs.push_back(&data.graphs[i]);
    v.labels.push_back(data.labels[i]);
  }
  return v;
}

std::size_t count_correct(const Matrix& logits, std::span<const int> labels) {
  std::size_t correct = 0;
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    Eigen::Index arg = 0;
    logits.row(b).maxCoeff(&arg);
    if (arg == labels[b]) ++correct;
  }
  return correct;
}

void prepare(LabeledClouds& data, const ModelConfig& config) {
  if (data.size() == 0) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
  if (data.labels.size() != data.clouds.size()) throw Error(ErrorCode::Shape, "dataset: one label per cloud required");
  if (!data.graphs_match(config.k_max)) data.build_graphs(config.k_max, config.spacing);
}

}  // namespace

EpochMetrics train_epoch(LabeledClouds& data, Model& model, int epoch) {
  const ModelConfig& cfg = model.config;
  prepare(data, cfg);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(cfg.seed + static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  double loss_sum = 0;
  std::size_t correct = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0, batch = 0; start < order.size(); start += bs, ++batch) {
    const std::size_t end = std::min(order.size(), start + bs);
    const auto view = gather(data, std::span<const std::size_t>(order.data() + start, end - start));
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(batch)};
    std::mt19937_64 drop_rng(seq);
    auto f = forward(view.clouds, view.graphs, model.params, cfg, Mode::Train, &drop_rng);
    auto lr = loss_and_backward(f.logits, view.labels, f.cache, model.params);
    adam_step(model.params, lr.grads, model.adam, cfg.learning_rate);
    loss_sum += lr.loss * static_cast<double>(end - start);
    correct += count_correct(f.logits, view.labels);
  }
  const double n = static_cast<double>(data.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

EpochMetrics evaluate(LabeledClouds& data, Model& model) {
  const ModelConfig& cfg = model.config;
  prepare(data, cfg);
  double loss_sum = 0;
  std::size_t correct = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t end = std::min(order.size(), start + bs);
    const auto view = gather(data, std::span<const std::size_t>(order.data() + start, end - start));
    auto f = forward(view.clouds, view.graphs, model.params, cfg, Mode::Eval);
    loss_sum += softmax_cross_entropy(f.logits, view.labels, nullptr) * static_cast<double>(end - start);
    correct += count_correct(f.logits, view.labels);
  }
  const double n = static_cast<double>(data.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

// ---- persistence ----------------------------------------------------------

namespace {

constexpr char kModelMagic[5] = "MGSM";
constexpr std::uint32_t kModelVersion = 1;

void put_config(detail::ByteWriter& w, const ModelConfig& c) {
  w.put<std::int32_t>(c.k_max);
  w.put<std::int32_t>(c.cheb_order);
  w.put<std::int32_t>(c.feature_dim);
  w.put<std::int32_t>(c.encoder_hidden);
  w.put<std::int32_t>(c.num_mg_modules);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.head_hidden.size()));
  for (int h : c.head_hidden) w.put<std::int32_t>(h);
  w.put<std::int32_t>(c.num_classes);
  w.put(c.dropout);
  w.put<std::int32_t>(c.batch_size);
  w.put(c.learning_rate);
  w.put<std::int32_t>(c.num_points);
  w.put(c.seed);
  w.put<std::uint8_t>(c.spacing == SpacingMode::PaperEq3 ? 1 : 0);
  w.put<std::uint8_t>(c.batch_norm ? 1 : 0);
  w.put<std::uint8_t>(c.mean_aggregation ? 1 : 0);
}

ModelConfig get_config(detail::ByteReader& r) {
  ModelConfig c;
  c.k_max = r.get<std::int32_t>();
  c.cheb_order = r.get<std::int32_t>();
  c.feature_dim = r.get<std::int32_t>();
  c.encoder_hidden = r.get<std::int32_t>();
  c.num_mg_modules = r.get<std::int32_t>();
  const auto nh = r.get<std::uint32_t>();
  if (nh > 64) throw Error(ErrorCode::Corrupt, "corrupt file: implausible head depth");
  c.head_hidden.resize(nh);
  for (auto& h : c.head_hidden) h = r.get<std::int32_t>();
  c.num_classes = r.get<std::int32_t>();
  c.dropout = r.get<double>();
  c.batch_size = r.get<std::int32_t>();
  c.learning_rate = r.get<double>();
  c.num_points = r.get<std::int32_t>();
  c.seed = r.get<std::uint64_t>();
  c.spacing = r.get<std::uint8_t>() ? SpacingMode::PaperEq3 : SpacingMode::NearestNeighbor;
  c.batch_norm = r.get<std::uint8_t>() != 0;
  c.mean_aggregation = r.get<std::uint8_t>() != 0;
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Corrupt, std::string("corrupt file: ") + e.what());
  }
  return c;
}

void put_tensors(detail::ByteWriter& w, const ModelParams& p, bool with_state) {
  auto put = [&](const std::string& name, const Matrix& m) {
    w.put_string(name);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    w.put_array(m.data(), static_cast<std::size_t>(m.size()));
  };
  if (with_state)
    p.visit_all(put);
  else
    p.visit(put);
}

void get_tensors(detail::ByteReader& r, ModelParams& p, bool with_state) {
  auto get = [&](const std::string& name, Matrix& m) {
    const std::string stored = r.get_string();
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (stored != name || rows != static_cast<std::uint64_t>(m.rows()) ||
        cols != static_cast<std::uint64_t>(m.cols()))
      throw Error(ErrorCode::Shape, "model tensor '" + stored + "' does not match expected '" + name + "' shape");
    r.get_array(m.data(), static_cast<std::size_t>(m.size()));
  };
  if (with_state)
    p.visit_all(get);
  else
    p.visit(get);
}

}  // namespace

std::string serialize_model(const Model& model) {
  detail::ByteWriter w;
  w.put_magic(kModelMagic);
  w.put(kModelVersion);
  put_config(w, model.config);
  w.put<std::int64_t>(model.adam.t);
  put_tensors(w, model.params, true);
  put_tensors(w, model.adam.m, false);
  put_tensors(w, model.adam.v, false);
  return w.take();
}

Model deserialize_model(const std::string& bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kModelMagic, "model file");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) throw Error(ErrorCode::Corrupt, "unsupported model file version " + std::to_string(version));
  Model m = make_model(get_config(r));
  m.adam.t = r.get<std::int64_t>();
  get_tensors(r, m.params, true);
  get_tensors(r, m.adam.m, false);
  get_tensors(r, m.adam.v, false);
  if (!r.at_end()) throw Error(ErrorCode::Corrupt, "corrupt file: trailing bytes");
  return m;
}

void save_model(const Model& model, const std::string& path) {
  detail::write_binary_file(path, serialize_model(model));
}

Model load_model(const std::string& path) { return deserialize_model(detail::read_binary_file(path)); }

Model load_model(const std::string& path, const ModelConfig& expected) {
  Model m = load_model(path);
  if (!m.config.same_architecture(expected))
    throw Error(ErrorCode::Shape, "model file architecture does not match the requested config");
  return m;
}

}  // namespace mgsagc
