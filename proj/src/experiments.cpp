#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "mgsagc/error.hpp"
#include "mgsagc/harness.hpp"
#include "json.hpp"

namespace mgsagc {

namespace {

void ensure_graphs(LabeledClouds& data, const ModelConfig& config) {
  require(data.size() > 0, ErrorCode::InvalidArgument, "dataset is empty");
  if (!data.graphs_match(config.k_max)) data.build_graphs(config.k_max, config.spacing);
}

// Eval-mode forward over `data` in batches, handing each result to `sink`
// along with the index of its first cloud.
template <class Sink>
void forward_batches(Model& model, LabeledClouds& data, Sink&& sink) {
  ensure_graphs(data, model.config);
  const auto bs = static_cast<std::size_t>(model.config.batch_size);
  for (std::size_t start = 0; start < data.size(); start += bs) {
    const std::size_t end = std::min(data.size(), start + bs);
    std::vector<const PointCloud*> clouds;
    std::vector<const MultiScaleGraph*> graphs;
    for (std::size_t i = start; i < end; ++i) {
      clouds.push_back(&data.clouds[i]);
      graphs.push_back(&data.graphs[i]);
    }
    sink(start, forward(clouds, graphs, model.params, model.config, Mode::Eval));
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double evaluate_classification(Model& model, LabeledClouds& data) { return evaluate(data, model).accuracy; }

PointCloud rotate_z(const PointCloud& cloud, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  PointCloud out;
  out.positions.reserve(cloud.size());
  for (const auto& p : cloud.positions) out.positions.push_back({c * p.x - s * p.y, s * p.x + c * p.y, p.z});
  return out;
}

double rotated_accuracy(Model& model, const LabeledClouds& data, double radians) {
  LabeledClouds rotated;
  rotated.labels = data.labels;
  rotated.clouds.reserve(data.size());
  for (const auto& c : data.clouds) rotated.clouds.push_back(rotate_z(c, radians));
  return evaluate_classification(model, rotated);
}

std::vector<int> predict(Model& model, LabeledClouds& data) {
  std::vector<int> out(data.size());
  forward_batches(model, data, [&](std::size_t start, const ForwardResult& f) {
    for (Eigen::Index b = 0; b < f.logits.rows(); ++b) {
      Eigen::Index arg = 0;
      f.logits.row(b).maxCoeff(&arg);
      out[start + static_cast<std::size_t>(b)] = static_cast<int>(arg);
    }
  });
  return out;
}

Matrix extract_embeddings(Model& model, LabeledClouds& data) {
  Matrix out(static_cast<Eigen::Index>(data.size()), model.config.embedding_dim());
  forward_batches(model, data, [&](std::size_t start, const ForwardResult& f) {
    out.middleRows(static_cast<Eigen::Index>(start), f.embedding.rows()) = f.embedding;
  });
  return out;
}

std::vector<MetricRecord> train_model(Model& model, Dataset& data, const TrainOptions& opts,
                                      const MetricSink& sink) {
  require(opts.epochs >= 0, ErrorCode::InvalidArgument, "epochs must be >= 0");
  std::vector<MetricRecord> records;
  auto emit = [&](MetricRecord r) {
    if (sink) sink(r);
    records.push_back(std::move(r));
  };
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const EpochMetrics tm = train_epoch(data.train, model, epoch);
    emit({epoch, "train", tm.loss, tm.accuracy});
    if (opts.eval_val && data.val.size() > 0) {
      const EpochMetrics vm = evaluate(data.val, model);
      emit({epoch, "val", vm.loss, vm.accuracy});
      if (vm.accuracy >= opts.stop_at_val_accuracy) break;
    }
  }
  return records;
}

std::string format_metric_csv(const MetricRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g", r.epoch, r.split.c_str(), r.loss, r.accuracy);
  return buf;
}

std::string format_metric_jsonl(const MetricRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"split", r.split}, {"loss", r.loss}, {"accuracy", r.accuracy}};
  return j.dump();
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument, "fit_line needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, ErrorCode::InvalidArgument, "fit_line needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
  }
  f.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

BenchResult bench_forward(const ModelConfig& config, const std::vector<int>& n_list, int repeats,
                          std::uint64_t seed) {
  require(!n_list.empty(), ErrorCode::InvalidArgument, "bench: empty size list");
  require(repeats >= 1, ErrorCode::InvalidArgument, "bench: repeats must be >= 1");
  Model model = make_model(config);
  BenchResult res;
  std::vector<double> xs, ys;
  for (int n : n_list) {
    require(n >= 2, ErrorCode::InvalidArgument, "bench: point counts must be >= 2");
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(n));
    PointCloud raw = sample_shape(Shape::Sphere, static_cast<std::size_t>(n), rng);
    std::normal_distribution<double> jitter(0.0, 0.02);
    for (auto& p : raw.positions) p = p + Vec3{jitter(rng), jitter(rng), jitter(rng)};
    const PointCloud cloud = normalize_unit_sphere(raw);

    std::vector<double> graph_t, fwd_t;
    MultiScaleGraph graph;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      graph = build_multiscale_graph(cloud, config.k_max, config.spacing);
      graph_t.push_back(elapsed_ms(t0));
    }
    (void)forward(cloud, graph, model.params, config, Mode::Eval);
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      (void)forward(cloud, graph, model.params, config, Mode::Eval);
      fwd_t.push_back(elapsed_ms(t0));
    }
    BenchRow row;
    row.n = n;
    row.graph_ms = median(graph_t);
    row.forward_ms = median(fwd_t);
    for (const auto& s : graph.scales) row.edges += s.num_edges();
    res.rows.push_back(row);
    xs.push_back(n);
    ys.push_back(row.forward_ms);
  }
  if (xs.size() >= 2) {
    const LinearFit f = fit_line(xs, ys);
    res.slope = f.slope;
    res.intercept = f.intercept;
    res.r_squared = f.r_squared;
  }
  return res;
}

std::vector<SweepRow> sweep(const ModelConfig& base, const SweepGrid& grid, const Dataset& data, int epochs,
                            const std::function<void(const SweepRow&)>& on_row) {
  std::vector<SweepRow> rows;
  for (int k : grid.k_max) {
    Dataset local = data;
    for (int order : grid.cheb_orders) {
      for (int m : grid.mg_modules) {
        ModelConfig cfg = base;
        cfg.cheb_order = order;
        cfg.k_max = k;
        cfg.num_mg_modules = m;
        cfg.validate();
        Model model = make_model(cfg);
        TrainOptions opts;
        opts.epochs = epochs;
        opts.eval_val = false;
        const auto records = train_model(model, local, opts);
        SweepRow row;
        row.cheb_order = order;
        row.k_max = k;
        row.mg_modules = m;
        row.final_train_loss = records.empty() ? std::nan("") : records.back().loss;
        row.val_accuracy = local.val.size() ? evaluate(local.val, model).accuracy : std::nan("");
        row.test_accuracy = local.test.size() ? evaluate(local.test, model).accuracy : std::nan("");
        if (on_row) on_row(row);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

}  // namespace mgsagc
