// mgsagc command-line tool. Talks to the library only through mgsagc.h.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mgsagc/mgsagc.h"

namespace {

struct Failure {
  mgsagc_status status;
};

void check(mgsagc_status s) {
  if (s != MGSAGC_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Cloud = std::unique_ptr<mgsagc_cloud, Deleter<mgsagc_cloud, mgsagc_cloud_free>>;
using Graph = std::unique_ptr<mgsagc_graph, Deleter<mgsagc_graph, mgsagc_graph_free>>;
using DatasetPtr = std::unique_ptr<mgsagc_dataset, Deleter<mgsagc_dataset, mgsagc_dataset_free>>;
using ModelPtr = std::unique_ptr<mgsagc_model, Deleter<mgsagc_model, mgsagc_model_free>>;
using Embeddings = std::unique_ptr<mgsagc_embeddings, Deleter<mgsagc_embeddings, mgsagc_embeddings_free>>;

const std::map<std::string, mgsagc_spacing> kSpacing{{"nn", MGSAGC_SPACING_NN}, {"eq3", MGSAGC_SPACING_EQ3}};
const std::map<std::string, mgsagc_split> kSplit{
    {"train", MGSAGC_SPLIT_TRAIN}, {"val", MGSAGC_SPLIT_VAL}, {"test", MGSAGC_SPLIT_TEST}};

// Flags mirroring the model configuration, shared by train, bench and sweep.
void add_config_flags(CLI::App* cmd, mgsagc_config& cfg) {
  cmd->add_option("--k-max", cfg.k_max, "Number of graph scales")->capture_default_str();
  cmd->add_option("--cheb-order", cfg.cheb_order, "Chebyshev truncation order")->capture_default_str();
  cmd->add_option("--mg-modules", cfg.num_mg_modules, "Number of MG modules")->capture_default_str();
  cmd->add_option("--feature-dim", cfg.feature_dim, "Per-point feature width inside MG modules")
      ->capture_default_str();
  cmd->add_option("--points", cfg.num_points, "Points per cloud")->capture_default_str();
  cmd->add_option("--batch-size", cfg.batch_size, "Clouds per minibatch")->capture_default_str();
  cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--dropout", cfg.dropout, "Dropout rate in the classifier head")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  cmd->add_option("--spacing", cfg.spacing, "Scale baseline: nn (mean nearest neighbor) or eq3 (bounding-box)")
      ->transform(CLI::CheckedTransformer(kSpacing, CLI::ignore_case))->option_text("nn|eq3")
      ->capture_default_str();
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  if (out.empty()) throw CLI::ValidationError("list", "expected a comma-separated list of integers");
  return out;
}

class MetricWriter {
 public:
  MetricWriter(const std::string& path, bool jsonl) : jsonl_(jsonl) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open metrics file '" + path + "'");
    }
    if (!jsonl_) out() << "epoch,split,loss,accuracy\n";
  }

  void write(const mgsagc_metric_record& r) {
    char buf[256];
    mgsagc_format_metric(&r, jsonl_, buf, sizeof(buf));
    out() << buf << '\n';
    out().flush();
  }

  static void callback(const mgsagc_metric_record* r, void* self) { static_cast<MetricWriter*>(self)->write(*r); }

 private:
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  bool jsonl_;
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale graph convolution for point-cloud classification and retrieval"};
  app.set_version_flag("--version", std::string(mgsagc_version()));
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  // data gen
  auto* data = app.add_subcommand("data", "Synthetic dataset tools");
  data->require_subcommand(1);
  auto* gen = data->add_subcommand("gen", "Generate the synthetic shape dataset");
  mgsagc_dataset_spec spec;
  mgsagc_dataset_spec_default(&spec);
  std::string gen_out, gen_classes, gen_rotation = "z";
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", gen_classes, "Comma-separated shape names (default: all eight)");
  gen->add_option("--samples-per-class", spec.samples_per_class)->capture_default_str();
  gen->add_option("--points", spec.num_points, "Points per cloud")->capture_default_str();
  gen->add_option("--noise", spec.noise_sigma, "Gaussian jitter sigma")->capture_default_str();
  gen->add_option("--rotation", gen_rotation, "none, z or so3")
      ->check(CLI::IsMember({"none", "z", "so3"}))
      ->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();

  // graph build
  auto* graph = app.add_subcommand("graph", "Multiscale graph tools");
  graph->require_subcommand(1);
  auto* gbuild = graph->add_subcommand("build", "Build a multiscale graph from an XYZ cloud or OFF mesh");
  std::string g_in, g_out;
  int g_k = 3, g_points = 1024;
  std::uint64_t g_seed = 0;
  mgsagc_spacing g_spacing = MGSAGC_SPACING_NN;
  bool g_normalize = false;
  gbuild->add_option("--in", g_in, "Input .xyz or .off")->required()->check(CLI::ExistingFile);
  gbuild->add_option("--out", g_out, "Output graph file");
  gbuild->add_option("--k-max", g_k)->capture_default_str();
  gbuild->add_option("--points", g_points, "Surface samples when the input is an OFF mesh")->capture_default_str();
  gbuild->add_option("--seed", g_seed)->capture_default_str();
  gbuild->add_option("--spacing", g_spacing)->transform(CLI::CheckedTransformer(kSpacing, CLI::ignore_case))->option_text("nn|eq3");
  gbuild->add_flag("--normalize", g_normalize, "Center and scale into the unit sphere first");

  // train
  auto* train = app.add_subcommand("train", "Train a classifier on a dataset directory");
  mgsagc_config train_cfg;
  mgsagc_config_default(&train_cfg);
  std::string t_data, t_model, t_metrics, t_format = "csv";
  int t_epochs = 50;
  train->add_option("--data", t_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--model-out", t_model, "Where to write the trained model")->required();
  train->add_option("--epochs", t_epochs)->capture_default_str();
  train->add_option("--metrics", t_metrics, "Metrics file (default: stdout)");
  train->add_option("--format", t_format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  add_config_flags(train, train_cfg);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a trained model");
  std::string e_data, e_model;
  mgsagc_split e_split = MGSAGC_SPLIT_TEST;
  eval->add_option("--data", e_data)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--model", e_model)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", e_split)->transform(CLI::CheckedTransformer(kSplit))->option_text("train|val|test [test]");
  std::vector<double> e_rotations;
  eval->add_option("--rotate-z", e_rotations, "Also report accuracy under these z rotations (degrees)")
      ->delimiter(',');

  // embed
  auto* embed = app.add_subcommand("embed", "Write embedding vectors for a dataset split");
  std::string m_data, m_model, m_out;
  mgsagc_split m_split = MGSAGC_SPLIT_TEST;
  embed->add_option("--data", m_data)->required()->check(CLI::ExistingDirectory);
  embed->add_option("--model", m_model)->required()->check(CLI::ExistingFile);
  embed->add_option("--out", m_out)->required();
  embed->add_option("--split", m_split)->transform(CLI::CheckedTransformer(kSplit))->option_text("train|val|test [test]");

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "Compute retrieval mAP from an embedding file");
  std::string r_in;
  std::string r_metric = "euclidean";
  bool r_per_query = false;
  retrieve->add_option("--embeddings", r_in)->required()->check(CLI::ExistingFile);
  retrieve->add_option("--metric", r_metric)->check(CLI::IsMember({"euclidean", "cosine"}));
  retrieve->add_flag("--per-query", r_per_query, "Also print the AP of every query");

  // bench
  auto* bench = app.add_subcommand("bench", "Time the forward pass against cloud size");
  mgsagc_config bench_cfg;
  mgsagc_config_default(&bench_cfg);
  std::string b_sizes = "256,512,1024,2048";
  int b_repeats = 5;
  bench->add_option("--sizes", b_sizes)->capture_default_str();
  bench->add_option("--repeats", b_repeats)->capture_default_str();
  add_config_flags(bench, bench_cfg);

  // sweep
  auto* sw = app.add_subcommand("sweep", "Train a grid of configurations");
  mgsagc_config sweep_cfg;
  mgsagc_config_default(&sweep_cfg);
  std::string s_data, s_orders = "4,8,16", s_ks = "1,2,3", s_mgs = "3";
  int s_epochs = 20;
  sw->add_option("--data", s_data)->required()->check(CLI::ExistingDirectory);
  sw->add_option("--orders", s_orders, "Chebyshev orders")->capture_default_str();
  sw->add_option("--k-values", s_ks, "k_max values")->capture_default_str();
  sw->add_option("--mg-values", s_mgs, "MG module counts")->capture_default_str();
  sw->add_option("--epochs", s_epochs)->capture_default_str();
  add_config_flags(sw, sweep_cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      spec.classes = gen_classes.c_str();
      spec.rotation = gen_rotation == "none" ? MGSAGC_ROTATION_NONE
                      : gen_rotation == "so3" ? MGSAGC_ROTATION_SO3
                                              : MGSAGC_ROTATION_Z;
      mgsagc_dataset* raw = nullptr;
      check(mgsagc_dataset_generate(&spec, &raw));
      DatasetPtr ds(raw);
      check(mgsagc_dataset_save(ds.get(), gen_out.c_str()));
      std::printf("wrote %s: %zu train, %zu val, %zu test clouds, %d classes\n", gen_out.c_str(),
                  mgsagc_dataset_size(ds.get(), MGSAGC_SPLIT_TRAIN), mgsagc_dataset_size(ds.get(), MGSAGC_SPLIT_VAL),
                  mgsagc_dataset_size(ds.get(), MGSAGC_SPLIT_TEST), mgsagc_dataset_num_classes(ds.get()));
    } else if (*gbuild) {
      mgsagc_cloud* rc = nullptr;
      check(mgsagc_cloud_read(g_in.c_str(), static_cast<size_t>(g_points), g_seed, &rc));
      Cloud cloud(rc);
      if (g_normalize) check(mgsagc_cloud_normalize(cloud.get()));
      mgsagc_graph* rg = nullptr;
      check(mgsagc_graph_build(cloud.get(), g_k, g_spacing, &rg));
      Graph g(rg);
      std::printf("vertices %zu, d_m %.6g\n", mgsagc_graph_num_vertices(g.get()), mgsagc_graph_spacing(g.get()));
      std::printf("scale,radius,edges\n");
      for (int s = 1; s <= mgsagc_graph_num_scales(g.get()); ++s) {
        double radius = 0;
        size_t edges = 0;
        check(mgsagc_graph_scale(g.get(), s, &radius, &edges));
        std::printf("%d,%.6g,%zu\n", s, radius, edges);
      }
      if (!g_out.empty()) check(mgsagc_graph_save(g.get(), g_out.c_str()));
    } else if (*train) {
      mgsagc_dataset* rd = nullptr;
      check(mgsagc_dataset_load(t_data.c_str(), &rd));
      DatasetPtr ds(rd);
      train_cfg.num_classes = mgsagc_dataset_num_classes(ds.get());
      mgsagc_model* rm = nullptr;
      check(mgsagc_model_create(&train_cfg, &rm));
      ModelPtr model(rm);
      MetricWriter writer(t_metrics, t_format == "jsonl");
      check(mgsagc_train(model.get(), ds.get(), t_epochs, 1, &MetricWriter::callback, &writer));
      if (mgsagc_dataset_size(ds.get(), MGSAGC_SPLIT_TEST) > 0) {
        double loss = 0, acc = 0;
        check(mgsagc_evaluate(model.get(), ds.get(), MGSAGC_SPLIT_TEST, &loss, &acc));
        writer.write({t_epochs, "test", loss, acc});
      }
      check(mgsagc_model_save(model.get(), t_model.c_str()));
    } else if (*eval) {
      mgsagc_dataset* rd = nullptr;
      check(mgsagc_dataset_load(e_data.c_str(), &rd));
      DatasetPtr ds(rd);
      mgsagc_model* rm = nullptr;
      check(mgsagc_model_load(e_model.c_str(), &rm));
      ModelPtr model(rm);
      double loss = 0, acc = 0;
      check(mgsagc_evaluate(model.get(), ds.get(), e_split, &loss, &acc));
      std::printf("split,clouds,loss,accuracy\n%s,%zu,%.6f,%.6f\n",
                  e_split == MGSAGC_SPLIT_TRAIN ? "train" : e_split == MGSAGC_SPLIT_VAL ? "val" : "test",
                  mgsagc_dataset_size(ds.get(), e_split), loss, acc);
      if (!e_rotations.empty()) std::printf("rotate_z_deg,accuracy\n");
      for (double deg : e_rotations) {
        double racc = 0;
        check(mgsagc_evaluate_rotated(model.get(), ds.get(), e_split, deg * std::acos(-1.0) / 180.0, &racc));
        std::printf("%g,%.6f\n", deg, racc);
      }
    } else if (*embed) {
      mgsagc_dataset* rd = nullptr;
      check(mgsagc_dataset_load(m_data.c_str(), &rd));
      DatasetPtr ds(rd);
      mgsagc_model* rm = nullptr;
      check(mgsagc_model_load(m_model.c_str(), &rm));
      ModelPtr model(rm);
      mgsagc_embeddings* re = nullptr;
      check(mgsagc_embed(model.get(), ds.get(), m_split, &re));
      Embeddings e(re);
      check(mgsagc_embeddings_save(e.get(), m_out.c_str()));
      std::printf("wrote %zu x %zu embeddings to %s\n", mgsagc_embeddings_rows(e.get()), mgsagc_embeddings_cols(e.get()),
                  m_out.c_str());
    } else if (*retrieve) {
      mgsagc_embeddings* re = nullptr;
      check(mgsagc_embeddings_load(r_in.c_str(), &re));
      Embeddings e(re);
      std::vector<double> ap(mgsagc_embeddings_rows(e.get()));
      mgsagc_retrieval_summary sum{};
      check(mgsagc_retrieve(e.get(), r_metric == "cosine" ? MGSAGC_METRIC_COSINE : MGSAGC_METRIC_EUCLIDEAN, &sum,
                            ap.data(), ap.size()));
      std::printf("mAP,evaluated_queries,excluded_queries\n%.6f,%zu,%zu\n", sum.mean_average_precision,
                  sum.evaluated_queries, sum.excluded_queries);
      if (r_per_query) {
        const int* labels = mgsagc_embeddings_labels(e.get());
        std::printf("query,label,ap\n");
        for (size_t i = 0; i < ap.size(); ++i) std::printf("%zu,%d,%.6f\n", i, labels[i], ap[i]);
      }
    } else if (*bench) {
      const auto sizes = parse_int_list(b_sizes);
      std::vector<mgsagc_bench_row> rows(sizes.size());
      mgsagc_bench_fit fit{};
      check(mgsagc_bench(&bench_cfg, sizes.data(), sizes.size(), b_repeats, bench_cfg.seed, rows.data(), &fit));
      std::printf("n,edges,graph_ms,forward_ms\n");
      for (const auto& r : rows) std::printf("%d,%zu,%.3f,%.3f\n", r.n, r.edges, r.graph_ms, r.forward_ms);
      std::printf("# linear fit forward_ms = %.6g * n + %.6g, R^2 = %.4f\n", fit.slope, fit.intercept, fit.r_squared);
    } else if (*sw) {
      mgsagc_dataset* rd = nullptr;
      check(mgsagc_dataset_load(s_data.c_str(), &rd));
      DatasetPtr ds(rd);
      sweep_cfg.num_classes = mgsagc_dataset_num_classes(ds.get());
      const auto orders = parse_int_list(s_orders), ks = parse_int_list(s_ks), mgs = parse_int_list(s_mgs);
      std::printf("cheb_order,k_max,mg_modules,val_accuracy,test_accuracy,final_train_loss\n");
      std::fflush(stdout);
      auto on_row = [](const mgsagc_sweep_row* r, void*) {
        std::printf("%d,%d,%d,%.6f,%.6f,%.6f\n", r->cheb_order, r->k_max, r->mg_modules, r->val_accuracy,
                    r->test_accuracy, r->final_train_loss);
        std::fflush(stdout);
      };
      check(mgsagc_sweep(&sweep_cfg, ds.get(), orders.data(), orders.size(), ks.data(), ks.size(), mgs.data(),
                         mgs.size(), s_epochs, on_row, nullptr));
    }
  } catch (const Failure& f) {
    const char* msg = mgsagc_last_error();
    std::fprintf(stderr, "error: %s\n", *msg ? msg : mgsagc_status_string(f.status));
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
