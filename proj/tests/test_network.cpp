#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "expect.hpp"
#include "gradcheck.hpp"
#include "mgsagc/network.hpp"
#include "oracles.hpp"

using namespace mgsagc;

namespace {

PointCloud unit_cloud(std::size_t n, std::mt19937_64& rng) {
  return normalize_unit_sphere(oracle::random_cloud(n, rng, -1.0, 1.0));
}

/// Every vertex appears twice; each copy sees every copy of its original
/// neighbors with the original edge attributes.
MultiScaleGraph duplicate_graph(const MultiScaleGraph& g) {
  MultiScaleGraph out;
  out.d_m = g.d_m;
  const auto n = static_cast<std::uint32_t>(g.num_vertices());
  for (const auto& s : g.scales) {
    ScaleGraph d;
    d.radius = s.radius;
    d.k = s.k;
    d.offsets.push_back(0);
    for (std::uint32_t copy = 0; copy < 2; ++copy)
      for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t half = 0; half < 2; ++half)
          for (auto e = s.offsets[i]; e < s.offsets[i + 1]; ++e) {
            d.neighbors.push_back(s.neighbors[e] + half * n);
            d.dist.push_back(s.dist[e]);
            d.theta.push_back(s.theta[e]);
          }
        d.offsets.push_back(d.neighbors.size());
      }
    out.scales.push_back(std::move(d));
  }
  return out;
}

LabeledClouds random_labeled(std::size_t count, std::size_t points, int classes, std::mt19937_64& rng) {
  LabeledClouds d;
  std::uniform_int_distribution<int> label(0, classes - 1);
  for (std::size_t i = 0; i < count; ++i) {
    d.clouds.push_back(unit_cloud(points, rng));
    d.labels.push_back(label(rng));
  }
  return d;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  std::vector<const Matrix*> ta, tb;
  a.visit_all([&](const std::string&, const Matrix& m) { ta.push_back(&m); });
  b.visit_all([&](const std::string&, const Matrix& m) { tb.push_back(&m); });
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (*ta[i] != *tb[i]) return false;
  return true;
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c;
  CHECK_NOTHROW(c.validate());
  c.k_max = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidArgument);
  c = ModelConfig{};
  c.dropout = 1.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidArgument);
  c = ModelConfig{};
  c.head_hidden.clear();
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(ModelConfig{}.embedding_dim() == 512);
}

TEST_CASE("encoder examples") {
  std::mt19937_64 rng(1);
  auto model = make_model(gradcheck::small_config(1));
  auto dense = model.params.encoder;
  std::vector<BatchNormParams> bn_off;
  for (auto& d : dense) {
    d.weight.setZero();
    d.bias.setZero();
    bn_off.push_back(init_batchnorm(static_cast<int>(d.weight.cols()), false));
  }
  EncoderCache cache;
  const auto pos = positions_matrix(unit_cloud(10, rng));
  CHECK(encode_points(pos, dense, bn_off, Mode::Eval, cache).isZero(0.0));

  // per-point independence with eval statistics
  auto& p = model.params;
  const auto c2 = unit_cloud(2, rng);
  PointCloud c1;
  c1.positions = {c2.positions[0]};
  EncoderCache a, b;
  const Matrix y1 = encode_points(positions_matrix(c1), p.encoder, p.encoder_bn, Mode::Eval, a);
  const Matrix y2 = encode_points(positions_matrix(c2), p.encoder, p.encoder_bn, Mode::Eval, b);
  CHECK(y1.row(0) == y2.row(0));
}

TEST_CASE("encoder gradients match finite differences") {
  std::mt19937_64 rng(3);
  auto model = make_model(gradcheck::small_config(3));
  auto& p = model.params;
  for (auto& bn : p.encoder_bn) {
    bn.gamma = (oracle::random_matrix(1, bn.gamma.cols(), rng, 0.3).array() + 1.0).matrix();
    bn.beta = oracle::random_matrix(1, bn.beta.cols(), rng, 0.3);
  }
  Matrix pos = positions_matrix(unit_cloud(12, rng));
  const Matrix R = oracle::random_matrix(12, 8, rng);
  EncoderCache cache;
  const Matrix y = encode_points(pos, p.encoder, p.encoder_bn, Mode::Check, cache);
  std::vector<DenseParams> dg;
  std::vector<BatchNormParams> bg;
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    dg.push_back({Matrix::Zero(p.encoder[l].weight.rows(), p.encoder[l].weight.cols()),
                  Matrix::Zero(1, p.encoder[l].bias.cols())});
    bg.push_back(p.encoder_bn[l]);
    bg.back().gamma.setZero();
    bg.back().beta.setZero();
  }
  const Matrix dpos = encode_points_backward(cache, R, p.encoder, p.encoder_bn, dg, bg);

  std::uint64_t last = 0;
  auto loss = [&] {
    EncoderCache c;
    const Matrix out = encode_points(pos, p.encoder, p.encoder_bn, Mode::Check, c);
    last = 0;
    for (const auto& o : c.out) last = hash_active(o, last);
    return (out.array() * R.array()).sum();
  };
  auto sig = [&] { return last; };
  std::uint64_t base = 0;
  for (const auto& o : cache.out) base = hash_active(o, base);
  CHECK(base == (loss(), last));

  gradcheck::Report r;
  for (Eigen::Index i = 0; i < pos.size(); ++i)
    gradcheck::check_entry(pos, i, dpos.data()[i], loss, sig, base, "pos", r);
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    for (Eigen::Index i = 0; i < p.encoder[l].weight.size(); ++i)
      gradcheck::check_entry(p.encoder[l].weight, i, dg[l].weight.data()[i], loss, sig, base, "w", r);
    for (Eigen::Index i = 0; i < p.encoder_bn[l].gamma.size(); ++i) {
      gradcheck::check_entry(p.encoder_bn[l].gamma, i, bg[l].gamma.data()[i], loss, sig, base, "gamma", r);
      gradcheck::check_entry(p.encoder_bn[l].beta, i, bg[l].beta.data()[i], loss, sig, base, "beta", r);
    }
  }
  INFO(r.worst);
  CHECK(r.checked > 100);
  CHECK(r.max_rel <= 1e-5);
}

TEST_CASE("forward is invariant to point order") {
  std::mt19937_64 rng(5);
  auto cfg = gradcheck::small_config(5);
  cfg.dropout = 0.5;
  auto model = make_model(cfg);
  for (int t = 0; t < 5; ++t) {
    const auto c = unit_cloud(32, rng);
    std::vector<std::size_t> perm(c.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    PointCloud pc;
    for (auto i : perm) pc.positions.push_back(c.positions[i]);
    const auto a = forward(c, build_multiscale_graph(c, cfg.k_max), model.params, cfg, Mode::Eval);
    const auto b = forward(pc, build_multiscale_graph(pc, cfg.k_max), model.params, cfg, Mode::Eval);
    CHECK((a.logits - b.logits).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((a.embedding - b.embedding).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("duplicated points leave the pooled feature unchanged") {
  std::mt19937_64 rng(6);
  auto cfg = gradcheck::small_config(6);
  cfg.mean_aggregation = true;
  auto model = make_model(cfg);
  const auto c = unit_cloud(20, rng);
  PointCloud twice = c;
  twice.positions.insert(twice.positions.end(), c.positions.begin(), c.positions.end());
  const auto g = build_multiscale_graph(c, cfg.k_max);
  const auto a = forward(c, g, model.params, cfg, Mode::Eval);
  const auto b = forward(twice, duplicate_graph(g), model.params, cfg, Mode::Eval);
  CHECK((a.logits - b.logits).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("untrained model is at chance") {
  // batch statistics: running statistics are still at their (0, 1) init
  std::mt19937_64 rng(7);
  ModelConfig cfg;
  cfg.feature_dim = 32;
  cfg.encoder_hidden = 32;
  cfg.cheb_order = 8;
  cfg.num_points = 128;
  double total = 0;
  constexpr int kModels = 8;
  for (int m = 0; m < kModels; ++m) {
    cfg.seed = static_cast<std::uint64_t>(m);
    auto model = make_model(cfg);
    auto data = random_labeled(16, 128, 8, rng);
    data.build_graphs(cfg.k_max, cfg.spacing);
    std::vector<const PointCloud*> cp;
    std::vector<const MultiScaleGraph*> gp;
    for (std::size_t i = 0; i < data.size(); ++i) {
      cp.push_back(&data.clouds[i]);
      gp.push_back(&data.graphs[i]);
    }
    const auto f = forward(cp, gp, model.params, cfg, Mode::Check);
    total += softmax_cross_entropy(f.logits, data.labels, nullptr);
  }
  CHECK(std::abs(total / kModels - std::log(8.0)) <= 0.3);
}

TEST_CASE("softmax cross entropy closed forms") {
  Matrix logits = Matrix::Constant(2, 5, 0.7);
  std::vector<int> labels{1, 4};
  Matrix d;
  CHECK(softmax_cross_entropy(logits, labels, &d) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  for (Eigen::Index b = 0; b < 2; ++b)
    for (Eigen::Index c = 0; c < 5; ++c)
      CHECK(d(b, c) == doctest::Approx((0.2 - (c == labels[b])) / 2.0).epsilon(1e-14));

  Matrix margin = Matrix::Zero(1, 3);
  margin(0, 2) = 50.0;
  std::vector<int> two{2};
  CHECK(softmax_cross_entropy(margin, two, nullptr) < 1e-20);
  margin(0, 2) = 1000.0;
  CHECK(std::isfinite(softmax_cross_entropy(margin, std::vector<int>{0}, nullptr)));

  CHECK(code_of([&] { softmax_cross_entropy(logits, std::vector<int>{0}, nullptr); }) == ErrorCode::Shape);
  CHECK(code_of([&] { softmax_cross_entropy(logits, std::vector<int>{0, 5}, nullptr); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("end to end gradients match finite differences") {
  std::mt19937_64 rng(9);
  gradcheck::Report r;
  for (int t = 0; t < 4; ++t) r.merge(gradcheck::network_instance(rng));
  INFO(r.worst);
  CHECK(r.checked > 200);
  CHECK(r.max_rel <= 1e-4);
}

TEST_CASE("adam step") {
  auto model = make_model(gradcheck::small_config(2));
  const ModelParams before = model.params;
  auto ones = zeros_like(model.params);
  ones.visit([](const std::string&, Matrix& m) { m.setOnes(); });
  auto params = model.params;
  auto state = init_adam(params);
  adam_step(params, ones, state, 1e-3);
  CHECK(state.t == 1);
  std::vector<const Matrix*> a, b;
  params.visit([&](const std::string&, const Matrix& m) { a.push_back(&m); });
  before.visit([&](const std::string&, const Matrix& m) { b.push_back(&m); });
  const double expect = -1e-3 / (1.0 + 1e-8);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(((*a[i] - *b[i]).array() - expect).abs().maxCoeff() <= 1e-15);

  auto still = model.params;
  auto s2 = init_adam(still);
  adam_step(still, zeros_like(still), s2, 1e-3);
  CHECK(params_equal(still, model.params));

  auto x = model.params, y = model.params;
  auto sx = init_adam(x), sy = init_adam(y);
  std::mt19937_64 rng(4);
  auto g = zeros_like(x);
  g.visit([&](const std::string&, Matrix& m) { m = oracle::random_matrix(m.rows(), m.cols(), rng); });
  for (int k = 0; k < 3; ++k) {
    adam_step(x, g, sx, 1e-3);
    adam_step(y, g, sy, 1e-3);
  }
  CHECK(params_equal(x, y));

  auto bad = zeros_like(x);
  bad.head.back().bias(0, 0) = NAN;
  const auto snapshot = x;
  CHECK(code_of([&] { adam_step(x, bad, sx, 1e-3); }) == ErrorCode::NonFinite);
  CHECK(params_equal(x, snapshot));
  CHECK(sx.t == 3);
}

TEST_CASE("training memorizes a single sample") {
  std::mt19937_64 rng(10);
  // batch norm over a batch of one sample zeroes every normalized feature
  auto cfg = gradcheck::small_config(10);
  cfg.batch_norm = false;
  auto model = make_model(cfg);
  auto data = random_labeled(1, 16, cfg.num_classes, rng);
  EpochMetrics m;
  for (int e = 0; e < 200; ++e) m = train_epoch(data, model, e);
  CHECK(m.loss < 0.01);
  CHECK(m.accuracy == 1.0);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  std::mt19937_64 rng(11);
  auto cfg = gradcheck::small_config(11);
  cfg.learning_rate = 0.0;
  cfg.batch_size = 8;  // one full batch, so batch statistics do not depend on the shuffle
  auto model = make_model(cfg);
  const auto before = model.params;
  auto data = random_labeled(8, 16, cfg.num_classes, rng);
  const double l0 = train_epoch(data, model, 0).loss;
  const double l1 = train_epoch(data, model, 1).loss;
  CHECK(l0 == doctest::Approx(l1).epsilon(1e-12));
  std::vector<const Matrix*> a, b;
  model.params.visit([&](const std::string&, const Matrix& m) { a.push_back(&m); });
  before.visit([&](const std::string&, const Matrix& m) { b.push_back(&m); });
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
}

TEST_CASE("training is deterministic") {
  auto cfg = gradcheck::small_config(12);
  cfg.dropout = 0.3;
  cfg.batch_size = 3;
  std::mt19937_64 rng(12);
  const auto data = random_labeled(10, 16, cfg.num_classes, rng);
  auto run = [&] {
    auto model = make_model(cfg);
    auto d = data;
    std::vector<double> trace;
    for (int e = 0; e < 3; ++e) {
      const auto m = train_epoch(d, model, e);
      trace.push_back(m.loss);
      trace.push_back(m.accuracy);
    }
    return std::make_pair(trace, serialize_model(model));
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("model persistence") {
  std::mt19937_64 rng(13);
  auto cfg = gradcheck::small_config(13);
  auto model = make_model(cfg);
  auto data = random_labeled(6, 16, cfg.num_classes, rng);
  train_epoch(data, model, 0);

  const auto path = temp_path("mgsagc_model_test.bin");
  save_model(model, path);
  auto back = load_model(path, cfg);
  CHECK(serialize_model(back) == serialize_model(model));
  CHECK(back.adam.t == model.adam.t);
  const auto a = forward(data.clouds[0], data.graphs[0], model.params, cfg, Mode::Eval);
  const auto b = forward(data.clouds[0], data.graphs[0], back.params, back.config, Mode::Eval);
  CHECK(a.logits == b.logits);

  auto other = cfg;
  other.feature_dim = 16;
  CHECK(code_of([&] { load_model(path, other); }) == ErrorCode::Shape);

  const auto bytes = serialize_model(model);
  CHECK(code_of([&] { deserialize_model(bytes.substr(0, bytes.size() / 2)); }) == ErrorCode::Corrupt);
  CHECK(code_of([&] { deserialize_model(bytes + "x"); }) == ErrorCode::Corrupt);
  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  CHECK(code_of([&] { deserialize_model(wrong_version); }) == ErrorCode::Corrupt);
  {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
  }
  CHECK(code_of([&] { load_model(path); }) == ErrorCode::Corrupt);
  std::filesystem::remove(path);
  CHECK(code_of([&] { load_model(path); }) == ErrorCode::Io);
}
