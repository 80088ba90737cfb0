#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mgsagc/mgsagc.h"

namespace {

std::string temp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

mgsagc_config tiny_config() {
  mgsagc_config c;
  mgsagc_config_default(&c);
  c.k_max = 2;
  c.cheb_order = 3;
  c.feature_dim = 8;
  c.encoder_hidden = 8;
  c.num_mg_modules = 1;
  c.head_hidden1 = 16;
  c.head_hidden2 = 8;
  c.num_classes = 3;
  c.num_points = 32;
  c.batch_size = 4;
  return c;
}

mgsagc_dataset* tiny_dataset() {
  mgsagc_dataset_spec spec;
  mgsagc_dataset_spec_default(&spec);
  spec.classes = "sphere,plane,helix";
  spec.samples_per_class = 10;
  spec.num_points = 32;
  mgsagc_dataset* ds = nullptr;
  REQUIRE(mgsagc_dataset_generate(&spec, &ds) == MGSAGC_OK);
  return ds;
}

}  // namespace

TEST_CASE("status strings and defaults") {
  CHECK(std::string(mgsagc_status_string(MGSAGC_OK)) == "ok");
  CHECK(std::strlen(mgsagc_status_string(MGSAGC_ERR_CORRUPT)) > 0);
  CHECK(std::strlen(mgsagc_version()) > 0);
  mgsagc_config c;
  mgsagc_config_default(&c);
  CHECK(c.k_max == 3);
  CHECK(c.cheb_order == 16);
  CHECK(c.num_mg_modules == 3);
  CHECK(c.head_hidden1 == 512);
  CHECK(c.dropout == 0.5);
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.batch_size == 32);
  CHECK(c.num_points == 1024);
  CHECK(mgsagc_config_validate(&c) == MGSAGC_OK);
  CHECK(mgsagc_config_validate(nullptr) == MGSAGC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("clouds and graphs") {
  const double pts[] = {0, 0, 0, 1, 1, 1};
  mgsagc_cloud* c = nullptr;
  REQUIRE(mgsagc_cloud_from_points(pts, 2, &c) == MGSAGC_OK);
  CHECK(mgsagc_cloud_size(c) == 2);
  mgsagc_graph* g = nullptr;
  REQUIRE(mgsagc_graph_build(c, 3, MGSAGC_SPACING_EQ3, &g) == MGSAGC_OK);
  CHECK(std::abs(mgsagc_graph_spacing(g) - 2.0) <= 1e-12);
  CHECK(mgsagc_graph_num_scales(g) == 3);
  CHECK(mgsagc_graph_num_vertices(g) == 2);
  double r = 0;
  size_t e = 0;
  CHECK(mgsagc_graph_scale(g, 3, &r, &e) == MGSAGC_OK);
  CHECK(std::abs(r - 16.0) <= 1e-12);
  CHECK(e == 4);
  CHECK(mgsagc_graph_scale(g, 4, &r, &e) == MGSAGC_ERR_INVALID_ARGUMENT);

  const auto path = temp("capi_graph.bin");
  REQUIRE(mgsagc_graph_save(g, path.c_str()) == MGSAGC_OK);
  mgsagc_graph* back = nullptr;
  REQUIRE(mgsagc_graph_load(path.c_str(), &back) == MGSAGC_OK);
  CHECK(mgsagc_graph_spacing(back) == mgsagc_graph_spacing(g));
  mgsagc_graph_free(back);
  std::filesystem::resize_file(path, 10);
  CHECK(mgsagc_graph_load(path.c_str(), &back) == MGSAGC_ERR_CORRUPT);
  CHECK(std::string(mgsagc_last_error()).find("truncated") != std::string::npos);
  std::filesystem::remove(path);

  mgsagc_cloud_normalize(c);
  double out[6];
  REQUIRE(mgsagc_cloud_points(c, out, 6) == MGSAGC_OK);
  CHECK(std::abs(out[0] + 1.0 / std::sqrt(3.0)) <= 1e-12);
  CHECK(mgsagc_cloud_points(c, out, 5) == MGSAGC_ERR_INVALID_ARGUMENT);

  const double same[] = {1, 1, 1, 1, 1, 1};
  mgsagc_cloud* d = nullptr;
  REQUIRE(mgsagc_cloud_from_points(same, 2, &d) == MGSAGC_OK);
  mgsagc_graph* bad = nullptr;
  CHECK(mgsagc_graph_build(d, 1, MGSAGC_SPACING_NN, &bad) == MGSAGC_ERR_DOMAIN);
  CHECK(bad == nullptr);
  mgsagc_cloud_free(d);
  mgsagc_graph_free(g);
  mgsagc_cloud_free(c);
}

TEST_CASE("reading clouds and meshes") {
  const auto xyz = temp("capi_cloud.xyz");
  {
    std::ofstream out(xyz);
    out << "0 0 0\n1 0 0\n0 2 0\n";
  }
  mgsagc_cloud* c = nullptr;
  REQUIRE(mgsagc_cloud_read(xyz.c_str(), 0, 0, &c) == MGSAGC_OK);
  CHECK(mgsagc_cloud_size(c) == 3);
  mgsagc_cloud_free(c);
  REQUIRE(mgsagc_cloud_read(xyz.c_str(), 5, 1, &c) == MGSAGC_OK);
  CHECK(mgsagc_cloud_size(c) == 5);
  mgsagc_cloud_free(c);
  {
    std::ofstream out(xyz);
    out << "0 0 0\n1 x 0\n";
  }
  CHECK(mgsagc_cloud_read(xyz.c_str(), 0, 0, &c) == MGSAGC_ERR_PARSE);
  CHECK(std::string(mgsagc_last_error()).find("line 2") != std::string::npos);
  std::filesystem::remove(xyz);

  const auto off = temp("capi_mesh.off");
  {
    std::ofstream out(off);
    out << "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
  }
  REQUIRE(mgsagc_cloud_read(off.c_str(), 100, 3, &c) == MGSAGC_OK);
  CHECK(mgsagc_cloud_size(c) == 100);
  mgsagc_cloud_free(c);
  std::filesystem::remove(off);
  CHECK(mgsagc_cloud_read(off.c_str(), 100, 3, &c) == MGSAGC_ERR_IO);
}

TEST_CASE("datasets, training, evaluation and embeddings") {
  mgsagc_dataset* ds = tiny_dataset();
  CHECK(mgsagc_dataset_size(ds, MGSAGC_SPLIT_TRAIN) == 21);
  CHECK(mgsagc_dataset_size(ds, MGSAGC_SPLIT_VAL) == 3);
  CHECK(mgsagc_dataset_size(ds, MGSAGC_SPLIT_TEST) == 6);
  CHECK(mgsagc_dataset_num_classes(ds) == 3);
  CHECK(std::string(mgsagc_dataset_class_name(ds, 2)) == "helix");
  CHECK(mgsagc_dataset_class_name(ds, 7) == nullptr);

  const auto dir = temp("capi_dataset");
  std::filesystem::remove_all(dir);
  REQUIRE(mgsagc_dataset_save(ds, dir.c_str()) == MGSAGC_OK);
  mgsagc_dataset* loaded = nullptr;
  REQUIRE(mgsagc_dataset_load(dir.c_str(), &loaded) == MGSAGC_OK);
  CHECK(mgsagc_dataset_size(loaded, MGSAGC_SPLIT_TEST) == 6);
  mgsagc_dataset_free(loaded);
  std::filesystem::remove_all(dir);

  const auto cfg = tiny_config();
  mgsagc_model* m = nullptr;
  REQUIRE(mgsagc_model_create(&cfg, &m) == MGSAGC_OK);
  CHECK(mgsagc_model_num_parameters(m) > 0);

  std::vector<std::string> lines;
  auto cb = [](const mgsagc_metric_record* r, void* user) {
    char buf[256];
    mgsagc_format_metric(r, 0, buf, sizeof buf);
    static_cast<std::vector<std::string>*>(user)->push_back(buf);
  };
  REQUIRE(mgsagc_train(m, ds, 2, 1, cb, &lines) == MGSAGC_OK);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("1,train,", 0) == 0);
  CHECK(lines[3].rfind("2,val,", 0) == 0);

  double loss = 0, acc = -1;
  REQUIRE(mgsagc_evaluate(m, ds, MGSAGC_SPLIT_TEST, &loss, &acc) == MGSAGC_OK);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  CHECK(std::isfinite(loss));
  double racc = -1;
  REQUIRE(mgsagc_evaluate_rotated(m, ds, MGSAGC_SPLIT_TEST, 0.0, &racc) == MGSAGC_OK);
  CHECK(racc == acc);
  CHECK(mgsagc_evaluate_rotated(m, ds, MGSAGC_SPLIT_TEST, NAN, &racc) == MGSAGC_ERR_INVALID_ARGUMENT);
  std::vector<int> pred(6);
  REQUIRE(mgsagc_predict(m, ds, MGSAGC_SPLIT_TEST, pred.data(), pred.size()) == MGSAGC_OK);
  CHECK(mgsagc_predict(m, ds, MGSAGC_SPLIT_TEST, pred.data(), 2) == MGSAGC_ERR_INVALID_ARGUMENT);

  const auto model_path = temp("capi_model.bin");
  REQUIRE(mgsagc_model_save(m, model_path.c_str()) == MGSAGC_OK);
  mgsagc_model* m2 = nullptr;
  REQUIRE(mgsagc_model_load(model_path.c_str(), &m2) == MGSAGC_OK);
  mgsagc_config back;
  REQUIRE(mgsagc_model_config(m2, &back) == MGSAGC_OK);
  CHECK(back.feature_dim == 8);
  CHECK(back.head_hidden1 == 16);
  double loss2 = 0, acc2 = 0;
  REQUIRE(mgsagc_evaluate(m2, ds, MGSAGC_SPLIT_TEST, &loss2, &acc2) == MGSAGC_OK);
  CHECK(loss2 == loss);
  std::filesystem::remove(model_path);

  mgsagc_embeddings* e = nullptr;
  REQUIRE(mgsagc_embed(m2, ds, MGSAGC_SPLIT_TEST, &e) == MGSAGC_OK);
  CHECK(mgsagc_embeddings_rows(e) == 6);
  CHECK(mgsagc_embeddings_cols(e) == 16);
  CHECK(mgsagc_embeddings_labels(e)[5] == 2);
  mgsagc_retrieval_summary s;
  std::vector<double> ap(6);
  REQUIRE(mgsagc_retrieve(e, MGSAGC_METRIC_EUCLIDEAN, &s, ap.data(), ap.size()) == MGSAGC_OK);
  CHECK(s.evaluated_queries == 6);
  CHECK(s.mean_average_precision > 0.0);

  const auto emb_path = temp("capi_emb.bin");
  REQUIRE(mgsagc_embeddings_save(e, emb_path.c_str()) == MGSAGC_OK);
  mgsagc_embeddings* e2 = nullptr;
  REQUIRE(mgsagc_embeddings_load(emb_path.c_str(), &e2) == MGSAGC_OK);
  CHECK(std::memcmp(mgsagc_embeddings_values(e), mgsagc_embeddings_values(e2), 6 * 16 * sizeof(double)) == 0);
  std::filesystem::remove(emb_path);
  mgsagc_embeddings_free(e2);
  mgsagc_embeddings_free(e);

  mgsagc_model_free(m2);
  mgsagc_model_free(m);
  mgsagc_dataset_free(ds);
}

TEST_CASE("embeddings from raw data and retrieval") {
  const double v[] = {0, 0, 0.1, 0, 5, 5, 5.1, 5};
  const int labels[] = {0, 0, 1, 1};
  mgsagc_embeddings* e = nullptr;
  REQUIRE(mgsagc_embeddings_from_data(v, labels, 4, 2, &e) == MGSAGC_OK);
  mgsagc_retrieval_summary s;
  REQUIRE(mgsagc_retrieve(e, MGSAGC_METRIC_COSINE, &s, nullptr, 0) == MGSAGC_OK);
  REQUIRE(mgsagc_retrieve(e, MGSAGC_METRIC_EUCLIDEAN, &s, nullptr, 0) == MGSAGC_OK);
  CHECK(s.mean_average_precision == 1.0);
  mgsagc_embeddings_free(e);
  const int other[] = {0, 1};
  REQUIRE(mgsagc_embeddings_from_data(v, other, 2, 2, &e) == MGSAGC_OK);
  CHECK(mgsagc_retrieve(e, MGSAGC_METRIC_EUCLIDEAN, &s, nullptr, 0) == MGSAGC_ERR_INVALID_ARGUMENT);
  CHECK(std::string(mgsagc_last_error()).find("2 queries excluded") != std::string::npos);
  mgsagc_embeddings_free(e);
}

TEST_CASE("bench and sweep") {
  auto cfg = tiny_config();
  const int ns[] = {32, 64};
  mgsagc_bench_row rows[2];
  mgsagc_bench_fit fit;
  REQUIRE(mgsagc_bench(&cfg, ns, 2, 3, 0, rows, &fit) == MGSAGC_OK);
  CHECK(rows[1].n == 64);
  CHECK(rows[1].edges > rows[0].edges);

  mgsagc_dataset* ds = tiny_dataset();
  const int orders[] = {2}, ks[] = {1, 2}, mgs[] = {1};
  int count = 0;
  auto cb = [](const mgsagc_sweep_row*, void* user) { ++*static_cast<int*>(user); };
  REQUIRE(mgsagc_sweep(&cfg, ds, orders, 1, ks, 2, mgs, 1, 1, cb, &count) == MGSAGC_OK);
  CHECK(count == 2);
  mgsagc_dataset_free(ds);
}

TEST_CASE("null handles are rejected") {
  mgsagc_model* m = nullptr;
  CHECK(mgsagc_model_create(nullptr, &m) == MGSAGC_ERR_INVALID_ARGUMENT);
  CHECK(mgsagc_model_save(nullptr, "x") == MGSAGC_ERR_INVALID_ARGUMENT);
  CHECK(mgsagc_graph_build(nullptr, 1, MGSAGC_SPACING_NN, nullptr) == MGSAGC_ERR_INVALID_ARGUMENT);
  mgsagc_model_free(nullptr);
  mgsagc_cloud_free(nullptr);
}
