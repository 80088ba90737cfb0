#include "mgsagc/mgsagc.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>

#include "mgsagc/error.hpp"
#include "mgsagc/harness.hpp"

struct mgsagc_cloud {
  mgsagc::PointCloud value;
};
struct mgsagc_graph {
  mgsagc::MultiScaleGraph value;
};
struct mgsagc_dataset {
  mgsagc::Dataset value;
};
struct mgsagc_model {
  mgsagc::Model value;
};
struct mgsagc_embeddings {
  mgsagc::EmbeddingSet value;
};

namespace {

thread_local std::string g_last_error;

mgsagc_status to_status(mgsagc::ErrorCode code) {
  using mgsagc::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return MGSAGC_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return MGSAGC_ERR_PARSE;
    case ErrorCode::Domain: return MGSAGC_ERR_DOMAIN;
    case ErrorCode::Shape: return MGSAGC_ERR_SHAPE;
    case ErrorCode::Corrupt: return MGSAGC_ERR_CORRUPT;
    case ErrorCode::Io: return MGSAGC_ERR_IO;
    case ErrorCode::NonFinite: return MGSAGC_ERR_NON_FINITE;
  }
  return MGSAGC_ERR_INTERNAL;
}

template <class F>
mgsagc_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return MGSAGC_OK;
  } catch (const mgsagc::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MGSAGC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MGSAGC_ERR_INTERNAL;
  }
}

void need(bool cond, const char* what) {
  if (!cond) throw mgsagc::Error(mgsagc::ErrorCode::InvalidArgument, what);
}

mgsagc::ModelConfig from_c(const mgsagc_config& c) {
  mgsagc::ModelConfig m;
  m.k_max = c.k_max;
  m.cheb_order = c.cheb_order;
  m.feature_dim = c.feature_dim;
  m.encoder_hidden = c.encoder_hidden;
  m.num_mg_modules = c.num_mg_modules;
  m.head_hidden = {c.head_hidden1, c.head_hidden2};
  m.num_classes = c.num_classes;
  m.dropout = c.dropout;
  m.batch_size = c.batch_size;
  m.learning_rate = c.learning_rate;
  m.num_points = c.num_points;
  m.seed = c.seed;
  m.spacing = c.spacing == MGSAGC_SPACING_EQ3 ? mgsagc::SpacingMode::PaperEq3 : mgsagc::SpacingMode::NearestNeighbor;
  m.batch_norm = c.batch_norm != 0;
  m.mean_aggregation = c.mean_aggregation != 0;
  return m;
}

mgsagc_config to_c(const mgsagc::ModelConfig& m) {
  mgsagc_config c{};
  c.k_max = m.k_max;
  c.cheb_order = m.cheb_order;
  c.feature_dim = m.feature_dim;
  c.encoder_hidden = m.encoder_hidden;
  c.num_mg_modules = m.num_mg_modules;
  c.head_hidden1 = m.head_hidden.size() > 0 ? m.head_hidden[0] : 0;
  c.head_hidden2 = m.head_hidden.size() > 1 ? m.head_hidden[1] : 0;
  c.num_classes = m.num_classes;
  c.dropout = m.dropout;
  c.batch_size = m.batch_size;
  c.learning_rate = m.learning_rate;
  c.num_points = m.num_points;
  c.seed = m.seed;
  c.spacing = m.spacing == mgsagc::SpacingMode::PaperEq3 ? MGSAGC_SPACING_EQ3 : MGSAGC_SPACING_NN;
  c.batch_norm = m.batch_norm;
  c.mean_aggregation = m.mean_aggregation;
  return c;
}

mgsagc::Split from_c(mgsagc_split s) {
  switch (s) {
    case MGSAGC_SPLIT_TRAIN: return mgsagc::Split::Train;
    case MGSAGC_SPLIT_VAL: return mgsagc::Split::Val;
    case MGSAGC_SPLIT_TEST: return mgsagc::Split::Test;
  }
  throw mgsagc::Error(mgsagc::ErrorCode::InvalidArgument, "unknown split");
}

mgsagc::LabeledClouds& non_empty_split(mgsagc_dataset* ds, mgsagc_split split) {
  auto& part = ds->value.split(from_c(split));
  if (part.size() == 0)
    throw mgsagc::Error(mgsagc::ErrorCode::InvalidArgument,
                        std::string("dataset split '") + mgsagc::split_name(from_c(split)) + "' is empty");
  return part;
}

std::string lower_extension(const char* path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

template <class T>
void give(T* handle, T** out) {
  *out = handle;
}

}  // namespace

extern "C" {

const char* mgsagc_version(void) { return "0.1.0"; }

const char* mgsagc_last_error(void) { return g_last_error.c_str(); }

const char* mgsagc_status_string(mgsagc_status status) {
  switch (status) {
    case MGSAGC_OK: return "ok";
    case MGSAGC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MGSAGC_ERR_PARSE: return "parse error";
    case MGSAGC_ERR_DOMAIN: return "domain error";
    case MGSAGC_ERR_SHAPE: return "shape mismatch";
    case MGSAGC_ERR_CORRUPT: return "corrupt file";
    case MGSAGC_ERR_IO: return "i/o error";
    case MGSAGC_ERR_NON_FINITE: return "non-finite value";
    case MGSAGC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void mgsagc_config_default(mgsagc_config* out) {
  if (out) *out = to_c(mgsagc::ModelConfig{});
}

mgsagc_status mgsagc_config_validate(const mgsagc_config* config) {
  return guarded([&] {
    need(config, "config is null");
    from_c(*config).validate();
  });
}

// ---- clouds ----

mgsagc_status mgsagc_cloud_read(const char* path, size_t num_points, uint64_t seed, mgsagc_cloud** out) {
  return guarded([&] {
    need(path && out, "null argument");
    auto c = std::make_unique<mgsagc_cloud>();
    if (lower_extension(path) == ".off") {
      need(num_points > 0, "sampling an OFF mesh needs num_points > 0");
      c->value = mgsagc::sample_surface(mgsagc::read_off_file(path), num_points, seed);
    } else {
      c->value = mgsagc::read_xyz_file(path);
      if (num_points > 0) c->value = mgsagc::sample_points(c->value, num_points, seed);
    }
    give(c.release(), out);
  });
}

mgsagc_status mgsagc_cloud_from_points(const double* xyz, size_t n, mgsagc_cloud** out) {
  return guarded([&] {
    need(out && (xyz || n == 0), "null argument");
    auto c = std::make_unique<mgsagc_cloud>();
    c->value.positions.reserve(n);
    for (size_t i = 0; i < n; ++i) c->value.positions.push_back({xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]});
    mgsagc::check_finite(c->value);
    give(c.release(), out);
  });
}

mgsagc_status mgsagc_cloud_write_xyz(const mgsagc_cloud* cloud, const char* path) {
  return guarded([&] {
    need(cloud && path, "null argument");
    mgsagc::write_xyz_file(cloud->value, path);
  });
}

mgsagc_status mgsagc_cloud_normalize(mgsagc_cloud* cloud) {
  return guarded([&] {
    need(cloud, "null cloud");
    auto label = cloud->value.label;
    cloud->value = mgsagc::normalize_unit_sphere(cloud->value);
    cloud->value.label = label;
  });
}

size_t mgsagc_cloud_size(const mgsagc_cloud* cloud) { return cloud ? cloud->value.size() : 0; }

mgsagc_status mgsagc_cloud_points(const mgsagc_cloud* cloud, double* xyz_out, size_t capacity) {
  return guarded([&] {
    need(cloud && xyz_out, "null argument");
    need(capacity >= 3 * cloud->value.size(), "output buffer too small");
    for (size_t i = 0; i < cloud->value.size(); ++i) {
      const auto& p = cloud->value.positions[i];
      xyz_out[3 * i] = p.x;
      xyz_out[3 * i + 1] = p.y;
      xyz_out[3 * i + 2] = p.z;
    }
  });
}

void mgsagc_cloud_free(mgsagc_cloud* cloud) { delete cloud; }

// ---- graphs ----

mgsagc_status mgsagc_graph_build(const mgsagc_cloud* cloud, int k_max, mgsagc_spacing spacing, mgsagc_graph** out) {
  return guarded([&] {
    need(cloud && out, "null argument");
    auto g = std::make_unique<mgsagc_graph>();
    g->value = mgsagc::build_multiscale_graph(
        cloud->value, k_max,
        spacing == MGSAGC_SPACING_EQ3 ? mgsagc::SpacingMode::PaperEq3 : mgsagc::SpacingMode::NearestNeighbor);
    give(g.release(), out);
  });
}

mgsagc_status mgsagc_graph_save(const mgsagc_graph* graph, const char* path) {
  return guarded([&] {
    need(graph && path, "null argument");
    mgsagc::save_graph(graph->value, path);
  });
}

mgsagc_status mgsagc_graph_load(const char* path, mgsagc_graph** out) {
  return guarded([&] {
    need(path && out, "null argument");
    auto g = std::make_unique<mgsagc_graph>();
    g->value = mgsagc::load_graph(path);
    give(g.release(), out);
  });
}

int mgsagc_graph_num_scales(const mgsagc_graph* graph) {
  return graph ? static_cast<int>(graph->value.scales.size()) : 0;
}

size_t mgsagc_graph_num_vertices(const mgsagc_graph* graph) { return graph ? graph->value.num_vertices() : 0; }

double mgsagc_graph_spacing(const mgsagc_graph* graph) { return graph ? graph->value.d_m : 0.0; }

mgsagc_status mgsagc_graph_scale(const mgsagc_graph* graph, int scale, double* radius, size_t* edges) {
  return guarded([&] {
    need(graph, "null graph");
    need(scale >= 1 && static_cast<size_t>(scale) <= graph->value.scales.size(), "scale index out of range");
    const auto& s = graph->value.scales[static_cast<size_t>(scale - 1)];
    if (radius) *radius = s.radius;
    if (edges) *edges = s.num_edges();
  });
}

void mgsagc_graph_free(mgsagc_graph* graph) { delete graph; }

// ---- datasets ----

void mgsagc_dataset_spec_default(mgsagc_dataset_spec* out) {
  if (!out) return;
  const mgsagc::SyntheticDatasetSpec d;
  out->classes = nullptr;
  out->samples_per_class = d.samples_per_class;
  out->num_points = d.num_points;
  out->noise_sigma = d.noise_sigma;
  out->rotation = MGSAGC_ROTATION_Z;
  out->seed = d.seed;
}

mgsagc_status mgsagc_dataset_generate(const mgsagc_dataset_spec* spec, mgsagc_dataset** out) {
  return guarded([&] {
    need(spec && out, "null argument");
    mgsagc::SyntheticDatasetSpec s;
    if (spec->classes && *spec->classes) {
      s.classes.clear();
      std::stringstream ss(spec->classes);
      std::string name;
      while (std::getline(ss, name, ','))
        if (!name.empty()) s.classes.push_back(mgsagc::shape_from_name(name));
    }
    s.samples_per_class = spec->samples_per_class;
    s.num_points = spec->num_points;
    s.noise_sigma = spec->noise_sigma;
    switch (spec->rotation) {
      case MGSAGC_ROTATION_NONE: s.rotation = mgsagc::Rotation::None; break;
      case MGSAGC_ROTATION_Z: s.rotation = mgsagc::Rotation::Z; break;
      case MGSAGC_ROTATION_SO3: s.rotation = mgsagc::Rotation::SO3; break;
      default: need(false, "unknown rotation");
    }
    s.seed = spec->seed;
    auto d = std::make_unique<mgsagc_dataset>();
    d->value = mgsagc::generate_dataset(s);
    give(d.release(), out);
  });
}

mgsagc_status mgsagc_dataset_save(const mgsagc_dataset* ds, const char* dir) {
  return guarded([&] {
    need(ds && dir, "null argument");
    mgsagc::save_dataset(ds->value, dir);
  });
}

mgsagc_status mgsagc_dataset_load(const char* dir, mgsagc_dataset** out) {
  return guarded([&] {
    need(dir && out, "null argument");
    auto d = std::make_unique<mgsagc_dataset>();
    d->value = mgsagc::load_dataset(dir);
    give(d.release(), out);
  });
}

size_t mgsagc_dataset_size(const mgsagc_dataset* ds, mgsagc_split split) {
  if (!ds) return 0;
  try {
    return ds->value.split(from_c(split)).size();
  } catch (const std::exception&) {
    return 0;
  }
}

int mgsagc_dataset_num_classes(const mgsagc_dataset* ds) {
  return ds ? static_cast<int>(ds->value.class_names.size()) : 0;
}

const char* mgsagc_dataset_class_name(const mgsagc_dataset* ds, int label) {
  if (!ds || label < 0 || static_cast<size_t>(label) >= ds->value.class_names.size()) return nullptr;
  return ds->value.class_names[static_cast<size_t>(label)].c_str();
}

void mgsagc_dataset_free(mgsagc_dataset* ds) { delete ds; }

// ---- models ----

mgsagc_status mgsagc_model_create(const mgsagc_config* config, mgsagc_model** out) {
  return guarded([&] {
    need(config && out, "null argument");
    auto m = std::make_unique<mgsagc_model>();
    m->value = mgsagc::make_model(from_c(*config));
    give(m.release(), out);
  });
}

mgsagc_status mgsagc_model_save(const mgsagc_model* model, const char* path) {
  return guarded([&] {
    need(model && path, "null argument");
    mgsagc::save_model(model->value, path);
  });
}

mgsagc_status mgsagc_model_load(const char* path, mgsagc_model** out) {
  return guarded([&] {
    need(path && out, "null argument");
    auto m = std::make_unique<mgsagc_model>();
    m->value = mgsagc::load_model(path);
    give(m.release(), out);
  });
}

mgsagc_status mgsagc_model_config(const mgsagc_model* model, mgsagc_config* out) {
  return guarded([&] {
    need(model && out, "null argument");
    *out = to_c(model->value.config);
  });
}

size_t mgsagc_model_num_parameters(const mgsagc_model* model) {
  return model ? model->value.params.num_parameters() : 0;
}

void mgsagc_model_free(mgsagc_model* model) { delete model; }

size_t mgsagc_format_metric(const mgsagc_metric_record* record, int jsonl, char* buf, size_t capacity) {
  if (!record) return 0;
  const mgsagc::MetricRecord r{record->epoch, record->split ? record->split : "", record->loss, record->accuracy};
  const std::string s = jsonl ? mgsagc::format_metric_jsonl(r) : mgsagc::format_metric_csv(r);
  if (buf && capacity > 0) {
    const size_t n = std::min(s.size(), capacity - 1);
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return s.size();
}

mgsagc_status mgsagc_train(mgsagc_model* model, mgsagc_dataset* ds, int epochs, int eval_val,
                           mgsagc_metric_callback callback, void* user) {
  return guarded([&] {
    need(model && ds, "null argument");
    need(ds->value.train.size() > 0, "dataset has no training split");
    mgsagc::TrainOptions opts;
    opts.epochs = epochs;
    opts.eval_val = eval_val != 0;
    mgsagc::MetricSink sink;
    if (callback)
      sink = [&](const mgsagc::MetricRecord& r) {
        const mgsagc_metric_record c{r.epoch, r.split.c_str(), r.loss, r.accuracy};
        callback(&c, user);
      };
    mgsagc::train_model(model->value, ds->value, opts, sink);
  });
}

mgsagc_status mgsagc_evaluate(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split, double* loss,
                              double* accuracy) {
  return guarded([&] {
    need(model && ds, "null argument");
    const auto m = mgsagc::evaluate(non_empty_split(ds, split), model->value);
    if (loss) *loss = m.loss;
    if (accuracy) *accuracy = m.accuracy;
  });
}

mgsagc_status mgsagc_evaluate_rotated(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split,
                                       double radians, double* accuracy) {
  return guarded([&] {
    need(model && ds && accuracy, "null argument");
    need(std::isfinite(radians), "rotation angle must be finite");
    *accuracy = mgsagc::rotated_accuracy(model->value, non_empty_split(ds, split), radians);
  });
}

mgsagc_status mgsagc_predict(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split, int* labels_out,
                             size_t capacity) {
  return guarded([&] {
    need(model && ds && labels_out, "null argument");
    auto& part = non_empty_split(ds, split);
    need(capacity >= part.size(), "output buffer too small");
    const auto p = mgsagc::predict(model->value, part);
    std::copy(p.begin(), p.end(), labels_out);
  });
}

// ---- embeddings ----

mgsagc_status mgsagc_embed(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split, mgsagc_embeddings** out) {
  return guarded([&] {
    need(model && ds && out, "null argument");
    auto& part = non_empty_split(ds, split);
    auto e = std::make_unique<mgsagc_embeddings>();
    e->value.values = mgsagc::extract_embeddings(model->value, part);
    e->value.labels = part.labels;
    give(e.release(), out);
  });
}

mgsagc_status mgsagc_embeddings_from_data(const double* values, const int* labels, size_t rows, size_t cols,
                                          mgsagc_embeddings** out) {
  return guarded([&] {
    need(out && values && labels, "null argument");
    auto e = std::make_unique<mgsagc_embeddings>();
    e->value.values = Eigen::Map<const mgsagc::Matrix>(values, static_cast<Eigen::Index>(rows),
                                                       static_cast<Eigen::Index>(cols));
    e->value.labels.assign(labels, labels + rows);
    give(e.release(), out);
  });
}

mgsagc_status mgsagc_embeddings_save(const mgsagc_embeddings* e, const char* path) {
  return guarded([&] {
    need(e && path, "null argument");
    mgsagc::save_embeddings(e->value, path);
  });
}

mgsagc_status mgsagc_embeddings_load(const char* path, mgsagc_embeddings** out) {
  return guarded([&] {
    need(path && out, "null argument");
    auto e = std::make_unique<mgsagc_embeddings>();
    e->value = mgsagc::load_embeddings(path);
    give(e.release(), out);
  });
}

size_t mgsagc_embeddings_rows(const mgsagc_embeddings* e) {
  return e ? static_cast<size_t>(e->value.values.rows()) : 0;
}
size_t mgsagc_embeddings_cols(const mgsagc_embeddings* e) {
  return e ? static_cast<size_t>(e->value.values.cols()) : 0;
}
const double* mgsagc_embeddings_values(const mgsagc_embeddings* e) { return e ? e->value.values.data() : nullptr; }
const int* mgsagc_embeddings_labels(const mgsagc_embeddings* e) { return e ? e->value.labels.data() : nullptr; }
void mgsagc_embeddings_free(mgsagc_embeddings* e) { delete e; }

mgsagc_status mgsagc_retrieve(const mgsagc_embeddings* e, mgsagc_metric metric, mgsagc_retrieval_summary* summary,
                              double* average_precision, size_t capacity) {
  return guarded([&] {
    need(e && summary, "null argument");
    const auto r = mgsagc::retrieve(e->value.values, e->value.labels,
                                    metric == MGSAGC_METRIC_COSINE ? mgsagc::Metric::Cosine : mgsagc::Metric::Euclidean);
    summary->mean_average_precision = r.mean_average_precision;
    summary->evaluated_queries = r.evaluated_queries;
    summary->excluded_queries = r.excluded_queries;
    if (average_precision) {
      need(capacity >= r.average_precision.size(), "output buffer too small");
      std::copy(r.average_precision.begin(), r.average_precision.end(), average_precision);
    }
  });
}

// ---- experiments ----

mgsagc_status mgsagc_bench(const mgsagc_config* config, const int* n_list, size_t count, int repeats, uint64_t seed,
                           mgsagc_bench_row* rows_out, mgsagc_bench_fit* fit) {
  return guarded([&] {
    need(config && n_list && rows_out, "null argument");
    const auto cfg = from_c(*config);
    cfg.validate();
    const auto res = mgsagc::bench_forward(cfg, std::vector<int>(n_list, n_list + count), repeats, seed);
    for (size_t i = 0; i < res.rows.size(); ++i)
      rows_out[i] = {res.rows[i].n, res.rows[i].graph_ms, res.rows[i].forward_ms, res.rows[i].edges};
    if (fit) *fit = {res.slope, res.intercept, res.r_squared};
  });
}

mgsagc_status mgsagc_sweep(const mgsagc_config* base, const mgsagc_dataset* ds, const int* cheb_orders,
                           size_t n_orders, const int* k_values, size_t n_k, const int* mg_values, size_t n_mg,
                           int epochs, mgsagc_sweep_callback callback, void* user) {
  return guarded([&] {
    need(base && ds && cheb_orders && k_values && mg_values, "null argument");
    need(n_orders > 0 && n_k > 0 && n_mg > 0, "sweep grid must be non-empty");
    mgsagc::SweepGrid grid;
    grid.cheb_orders.assign(cheb_orders, cheb_orders + n_orders);
    grid.k_max.assign(k_values, k_values + n_k);
    grid.mg_modules.assign(mg_values, mg_values + n_mg);
    std::function<void(const mgsagc::SweepRow&)> on_row;
    if (callback)
      on_row = [&](const mgsagc::SweepRow& r) {
        const mgsagc_sweep_row c{r.cheb_order, r.k_max, r.mg_modules, r.val_accuracy, r.test_accuracy,
                                 r.final_train_loss};
        callback(&c, user);
      };
    mgsagc::sweep(from_c(*base), grid, ds->value, epochs, on_row);
  });
}

}  // extern "C"
