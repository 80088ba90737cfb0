#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mgsagc/linalg.hpp"
#include "mgsagc/network.hpp"
#include "mgsagc/pcio.hpp"

namespace mgsagc {

// ---- synthetic shapes -----------------------------------------------------

enum class Shape { Sphere, Cube, Cylinder, Cone, Torus, Plane, Pyramid, Helix };
enum class Rotation { None, Z, SO3 };
enum class Split { Train, Val, Test };

inline constexpr int kNumShapes = 8;

const char* shape_name(Shape s);
Shape shape_from_name(const std::string& name);
const char* split_name(Split s);
Split split_from_name(const std::string& name);
Rotation rotation_from_name(const std::string& name);

struct SyntheticDatasetSpec {
  std::vector<Shape> classes = {Shape::Sphere, Shape::Cube,  Shape::Cylinder, Shape::Cone,
                                Shape::Torus,  Shape::Plane, Shape::Pyramid,  Shape::Helix};
  int samples_per_class = 100;
  int num_points = 1024;
  double noise_sigma = 0.02;
  Rotation rotation = Rotation::Z;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Noise-free points on the analytic surface of `shape`, before rotation and
/// normalization.
PointCloud sample_shape(Shape shape, std::size_t n, std::mt19937_64& rng);

struct Dataset {
  LabeledClouds train, val, test;
  std::vector<std::string> class_names;

  LabeledClouds& split(Split s);
  const LabeledClouds& split(Split s) const;
};

/// Per class: train/val/test sizes in 7:1:2 proportion (val and test rounded,
/// train takes the remainder).
struct SplitSizes {
  int train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(int samples_per_class);

Dataset generate_dataset(const SyntheticDatasetSpec& spec);

/// Dataset directory layout: manifest.csv ("file,label,split") next to one XYZ
/// file per cloud, plus classes.txt with one class name per line.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// ---- evaluation and retrieval ---------------------------------------------

double evaluate_classification(Model& model, LabeledClouds& data);

/// Rigid rotation about +z by `radians`, applied to every point.
PointCloud rotate_z(const PointCloud& cloud, double radians);

/// Accuracy on `data` with every cloud rotated about z by `radians` (graphs rebuilt).
/// Reported, not asserted: azimuths shift under rotation.
double rotated_accuracy(Model& model, const LabeledClouds& data, double radians);
std::vector<int> predict(Model& model, LabeledClouds& data);

/// One row per cloud, eval mode.
Matrix extract_embeddings(Model& model, LabeledClouds& data);

enum class Metric { Euclidean, Cosine };

struct RetrievalResult {
  std::vector<std::vector<std::size_t>> ranked;  // per query, excludes the query
  std::vector<double> average_precision;         // NaN for excluded queries
  double mean_average_precision = 0;
  std::size_t evaluated_queries = 0;
  std::size_t excluded_queries = 0;  // queries with no same-class item
};

RetrievalResult retrieve(const Matrix& embeddings, const std::vector<int>& labels, Metric metric = Metric::Euclidean);

struct EmbeddingSet {
  Matrix values;
  std::vector<int> labels;
};

void save_embeddings(const EmbeddingSet& e, const std::string& path);
EmbeddingSet load_embeddings(const std::string& path);

// ---- experiments ----------------------------------------------------------

struct MetricRecord {
  int epoch = 0;
  std::string split;
  double loss = 0;
  double accuracy = 0;
};

using MetricSink = std::function<void(const MetricRecord&)>;

struct TrainOptions {
  int epochs = 50;
  bool eval_val = true;
  /// Stop once validation accuracy reaches this value (>1 disables).
  double stop_at_val_accuracy = 2.0;
};

/// Runs `epochs` of train_epoch, emitting a train record (and a val record
/// when requested) per epoch.
std::vector<MetricRecord> train_model(Model& model, Dataset& data, const TrainOptions& opts,
                                      const MetricSink& sink = {});

std::string format_metric_csv(const MetricRecord& r);
std::string format_metric_jsonl(const MetricRecord& r);

struct BenchRow {
  int n = 0;
  double graph_ms = 0;    // median graph construction
  double forward_ms = 0;  // median eval-mode forward, graph excluded
  std::size_t edges = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  double slope = 0;  // ms per point
  double intercept = 0;
  double r_squared = 0;
};

/// Times the forward pass on a noisy unit-sphere cloud of each size.
BenchResult bench_forward(const ModelConfig& config, const std::vector<int>& n_list, int repeats,
                          std::uint64_t seed = 0);

struct LinearFit {
  double slope = 0, intercept = 0, r_squared = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct SweepGrid {
  std::vector<int> cheb_orders = {4, 8, 16};
  std::vector<int> k_max = {1, 2, 3};
  std::vector<int> mg_modules = {3};
};

struct SweepRow {
  int cheb_order = 0;
  int k_max = 0;
  int mg_modules = 0;
  double val_accuracy = 0;
  double test_accuracy = 0;
  double final_train_loss = 0;
};

std::vector<SweepRow> sweep(const ModelConfig& base, const SweepGrid& grid, const Dataset& data, int epochs,
                            const std::function<void(const SweepRow&)>& on_row = {});

}  // namespace mgsagc
