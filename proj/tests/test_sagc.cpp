#include <doctest.h>

#include <cmath>

#include "expect.hpp"
#include "gradcheck.hpp"
#include "mgsagc/sagc.hpp"
#include "oracles.hpp"

using namespace mgsagc;

namespace {

/// W = I, b = 0, f = 1 on every edge, batch norm off.
SAGCLayerParams unit_layer(int f) {
  SAGCLayerParams p;
  p.linear.weight = Matrix::Identity(f, f);
  p.linear.bias = Matrix::Zero(1, f);
  p.cheb_d = Matrix::Ones(1, f);
  p.cheb_theta = Matrix::Ones(1, f);
  p.bn = init_batchnorm(f, false);
  return p;
}

PointCloud cloud_of(std::initializer_list<Vec3> pts) {
  PointCloud c;
  c.positions = pts;
  return c;
}

}  // namespace

TEST_CASE("isolated vertex passes its features through") {
  const auto c = cloud_of({{0, 0, 0}, {5, 0, 0}});
  const auto g = build_scale_graph(c, 1.0, 1);
  auto p = unit_layer(3);
  Matrix x(2, 3);
  x << 0.5, 1.5, 2.0, 3.0, 0.25, 4.0;
  const auto out = sagc_forward(g, x, p, Mode::Eval);
  CHECK(out.y == x);
}

TEST_CASE("two adjacent vertices sum self and neighbor") {
  const auto c = cloud_of({{0, 0, 0}, {0.5, 0, 0}});
  const auto g = build_scale_graph(c, 1.0, 1);
  auto p = unit_layer(2);
  Matrix x(2, 2);
  x << 1, 2, 3, 4;
  const auto out = sagc_forward(g, x, p, Mode::Eval);
  CHECK(out.y(0, 0) == 4.0);
  CHECK(out.y(0, 1) == 6.0);
  CHECK(out.y(1, 0) == 4.0);

  p.mean_aggregation = true;
  const auto mean = sagc_forward(g, x, p, Mode::Eval);
  CHECK(mean.y(0, 0) == 2.0);
  CHECK(mean.y(0, 1) == 3.0);
}

TEST_CASE("sagc_forward matches the dense oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> r(0.2, 0.9);
  for (int t = 0; t < 20; ++t) {
    const auto c = oracle::random_cloud(8, rng);
    const auto g = build_scale_graph(c, r(rng), 1);
    auto p = gradcheck::random_layer(3, 4, t % 7, rng);
    const Matrix x = oracle::random_matrix(8, 3, rng);

    p.bn = init_batchnorm(4, false);
    const auto raw = sagc_forward(g, x, p, Mode::Check);
    const Matrix z = oracle::dense_sagc_sum(c, g.radius, x, p.linear.weight, p.linear.bias, p.cheb_d, p.cheb_theta);
    CHECK((raw.y - z.cwiseMax(0.0)).cwiseAbs().maxCoeff() <= 1e-12);

    p.bn = init_batchnorm(4, true);
    p.bn.gamma = oracle::random_matrix(1, 4, rng);
    p.bn.beta = oracle::random_matrix(1, 4, rng);
    const auto normed = sagc_forward(g, x, p, Mode::Check);
    const Matrix expect = oracle::batch_norm(z, p.bn.gamma, p.bn.beta, kBatchNormEps).cwiseMax(0.0);
    CHECK((normed.y - expect).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("batched edges equal per-cloud evaluation") {
  std::mt19937_64 rng(5);
  const auto a = oracle::random_cloud(10, rng), b = oracle::random_cloud(7, rng);
  const auto ga = build_scale_graph(a, 0.5, 1), gb = build_scale_graph(b, 0.4, 1);
  auto p = gradcheck::random_layer(2, 3, 4, rng);
  p.bn = init_batchnorm(3, false);
  const Matrix xa = oracle::random_matrix(10, 2, rng), xb = oracle::random_matrix(7, 2, rng);
  const ScaleGraph* both[] = {&ga, &gb};
  const auto eb = std::make_shared<const EdgeBatch>(make_edge_batch(both));
  Matrix x(17, 2);
  x << xa, xb;
  const auto y = sagc_forward(eb, x, p, Mode::Eval).y;
  CHECK((y.topRows(10) - sagc_forward(ga, xa, p, Mode::Eval).y).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((y.bottomRows(7) - sagc_forward(gb, xb, p, Mode::Eval).y).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("sagc_forward rejects mismatched inputs") {
  const auto c = cloud_of({{0, 0, 0}, {0.5, 0, 0}});
  const auto g = build_scale_graph(c, 1.0, 1);
  auto p = unit_layer(2);
  CHECK(code_of([&] { sagc_forward(g, Matrix::Zero(3, 2), p, Mode::Eval); }) == ErrorCode::Shape);
  CHECK(code_of([&] { sagc_forward(g, Matrix::Zero(2, 5), p, Mode::Eval); }) == ErrorCode::Shape);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = NAN;
  CHECK(code_of([&] { sagc_forward(g, bad, p, Mode::Eval); }) == ErrorCode::NonFinite);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  std::mt19937_64 rng(2);
  const auto c = oracle::random_cloud(9, rng);
  const auto g = build_scale_graph(c, 0.6, 1);
  auto p = gradcheck::random_layer(3, 3, 5, rng);
  const auto f = sagc_forward(g, oracle::random_matrix(9, 3, rng), p, Mode::Check);
  const auto b = sagc_backward(f.cache, Matrix::Zero(9, 3), p);
  CHECK(b.dx.isZero(0.0));
  CHECK(b.grad.linear.weight.isZero(0.0));
  CHECK(b.grad.linear.bias.isZero(0.0));
  CHECK(b.grad.cheb_d.isZero(0.0));
  CHECK(b.grad.cheb_theta.isZero(0.0));
  CHECK(b.grad.bn.gamma.isZero(0.0));
  CHECK(b.grad.bn.beta.isZero(0.0));
}

TEST_CASE("sagc gradients match finite differences") {
  std::mt19937_64 rng(41);
  gradcheck::Report r;
  for (int t = 0; t < 30; ++t) r.merge(gradcheck::sagc_instance(rng));
  INFO(r.worst);
  CHECK(r.checked > 500);
  CHECK(r.max_rel <= 1e-5);
}

TEST_CASE("mg module with one scale equals a single layer") {
  std::mt19937_64 rng(17);
  const auto c = oracle::random_cloud(12, rng);
  const auto g = build_multiscale_graph(c, 1);
  MGModuleParams mg{{gradcheck::random_layer(4, 4, 3, rng)}};
  auto single = mg.per_scale[0];
  const Matrix x = oracle::random_matrix(12, 4, rng);
  const auto a = mg_module_forward(g, x, mg, Mode::Check);
  const auto b = sagc_forward(g.scales[0], x, single, Mode::Check);
  CHECK(a.y == b.y);
  const Matrix dy = oracle::random_matrix(12, 4, rng);
  const auto ga = mg_module_backward(a.cache, dy, mg);
  const auto gb = sagc_backward(b.cache, dy, single);
  CHECK(ga.dx == gb.dx);
  CHECK(ga.grad.per_scale[0].cheb_d == gb.grad.cheb_d);
  CHECK(ga.grad.per_scale[0].linear.weight == gb.grad.linear.weight);
}

TEST_CASE("mg module takes the elementwise max and routes gradients") {
  // one vertex, two scales, f = 1: scale outputs are x W_s
  const auto c = cloud_of({{0, 0, 0}, {10, 0, 0}});
  auto g = build_multiscale_graph(c, 2);
  MGModuleParams mg{{unit_layer(2), unit_layer(2)}};
  mg.per_scale[1].linear.weight << 2, 0, 0, 2.0 / 3.0;
  Matrix x(2, 2);
  x << 1, 3, 0, 0;
  const auto f = mg_module_forward(g, x, mg, Mode::Eval);
  CHECK(f.y(0, 0) == 2.0);
  CHECK(f.y(0, 1) == 3.0);
  CHECK(f.cache.argmax(0, 0) == 1);
  CHECK(f.cache.argmax(0, 1) == 0);

  Matrix dy = Matrix::Zero(2, 2);
  dy(0, 0) = 1.0;
  const auto b = mg_module_backward(f.cache, dy, mg);
  CHECK(b.grad.per_scale[0].linear.weight.isZero(0.0));
  CHECK(b.grad.per_scale[1].linear.weight(0, 0) == 1.0);
}

TEST_CASE("mg module equals per-scale evaluation plus max") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    const auto c = oracle::random_cloud(20, rng);
    const auto g = build_multiscale_graph(c, 3);
    MGModuleParams mg;
    for (int s = 0; s < 3; ++s) mg.per_scale.push_back(gradcheck::random_layer(3, 3, 4, rng));
    const Matrix x = oracle::random_matrix(20, 3, rng);
    const auto y = mg_module_forward(g, x, mg, Mode::Check).y;
    Matrix expect = sagc_forward(g.scales[0], x, mg.per_scale[0], Mode::Check).y;
    for (int s = 1; s < 3; ++s) expect = expect.cwiseMax(sagc_forward(g.scales[s], x, mg.per_scale[s], Mode::Check).y);
    CHECK(y == expect);
  }
}

TEST_CASE("mg gradients match finite differences") {
  std::mt19937_64 rng(43);
  gradcheck::Report r;
  for (int t = 0; t < 20; ++t) r.merge(gradcheck::mg_instance(rng));
  INFO(r.worst);
  CHECK(r.checked > 300);
  CHECK(r.max_rel <= 1e-5);
}
