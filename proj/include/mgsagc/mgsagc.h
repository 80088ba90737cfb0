#ifndef MGSAGC_H
#define MGSAGC_H

/* C interface to the multiscale graph point-cloud network. Every function
 * returns a status code; on failure mgsagc_last_error() describes the problem
 * for the calling thread. Handles are opaque and released with their _free
 * function (NULL is accepted). */

#include <stddef.h>
#include <stdint.h>

#if defined(MGSAGC_BUILDING_LIBRARY)
#define MGSAGC_API __attribute__((visibility("default")))
#else
#define MGSAGC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mgsagc_status {
  MGSAGC_OK = 0,
  MGSAGC_ERR_INVALID_ARGUMENT = 1,
  MGSAGC_ERR_PARSE = 2,
  MGSAGC_ERR_DOMAIN = 3,
  MGSAGC_ERR_SHAPE = 4,
  MGSAGC_ERR_CORRUPT = 5,
  MGSAGC_ERR_IO = 6,
  MGSAGC_ERR_NON_FINITE = 7,
  MGSAGC_ERR_INTERNAL = 8
} mgsagc_status;

typedef enum mgsagc_spacing { MGSAGC_SPACING_NN = 0, MGSAGC_SPACING_EQ3 = 1 } mgsagc_spacing;
typedef enum mgsagc_split { MGSAGC_SPLIT_TRAIN = 0, MGSAGC_SPLIT_VAL = 1, MGSAGC_SPLIT_TEST = 2 } mgsagc_split;
typedef enum mgsagc_metric { MGSAGC_METRIC_EUCLIDEAN = 0, MGSAGC_METRIC_COSINE = 1 } mgsagc_metric;
typedef enum mgsagc_rotation { MGSAGC_ROTATION_NONE = 0, MGSAGC_ROTATION_Z = 1, MGSAGC_ROTATION_SO3 = 2 } mgsagc_rotation;

typedef struct mgsagc_cloud mgsagc_cloud;
typedef struct mgsagc_graph mgsagc_graph;
typedef struct mgsagc_dataset mgsagc_dataset;
typedef struct mgsagc_model mgsagc_model;
typedef struct mgsagc_embeddings mgsagc_embeddings;

MGSAGC_API const char* mgsagc_version(void);
MGSAGC_API const char* mgsagc_last_error(void);
MGSAGC_API const char* mgsagc_status_string(mgsagc_status status);

/* ---- model configuration ---- */

typedef struct mgsagc_config {
  int k_max;
  int cheb_order;
  int feature_dim;
  int encoder_hidden;
  int num_mg_modules;
  int head_hidden1; /* embedding width */
  int head_hidden2;
  int num_classes;
  double dropout;
  int batch_size;
  double learning_rate;
  int num_points;
  uint64_t seed;
  mgsagc_spacing spacing;
  int batch_norm;
  int mean_aggregation;
} mgsagc_config;

MGSAGC_API void mgsagc_config_default(mgsagc_config* out);
MGSAGC_API mgsagc_status mgsagc_config_validate(const mgsagc_config* config);

/* ---- point clouds ---- */

/* Reads an XYZ file, or samples `num_points` surface points from an OFF mesh.
 * For XYZ input a non-zero `num_points` resamples the cloud to that size. */
MGSAGC_API mgsagc_status mgsagc_cloud_read(const char* path, size_t num_points, uint64_t seed, mgsagc_cloud** out);
MGSAGC_API mgsagc_status mgsagc_cloud_from_points(const double* xyz, size_t n, mgsagc_cloud** out);
MGSAGC_API mgsagc_status mgsagc_cloud_write_xyz(const mgsagc_cloud* cloud, const char* path);
MGSAGC_API mgsagc_status mgsagc_cloud_normalize(mgsagc_cloud* cloud);
MGSAGC_API size_t mgsagc_cloud_size(const mgsagc_cloud* cloud);
MGSAGC_API mgsagc_status mgsagc_cloud_points(const mgsagc_cloud* cloud, double* xyz_out, size_t capacity);
MGSAGC_API void mgsagc_cloud_free(mgsagc_cloud* cloud);

/* ---- multiscale graphs ---- */

MGSAGC_API mgsagc_status mgsagc_graph_build(const mgsagc_cloud* cloud, int k_max, mgsagc_spacing spacing,
                                            mgsagc_graph** out);
MGSAGC_API mgsagc_status mgsagc_graph_save(const mgsagc_graph* graph, const char* path);
MGSAGC_API mgsagc_status mgsagc_graph_load(const char* path, mgsagc_graph** out);
MGSAGC_API int mgsagc_graph_num_scales(const mgsagc_graph* graph);
MGSAGC_API size_t mgsagc_graph_num_vertices(const mgsagc_graph* graph);
MGSAGC_API double mgsagc_graph_spacing(const mgsagc_graph* graph);
MGSAGC_API mgsagc_status mgsagc_graph_scale(const mgsagc_graph* graph, int scale, double* radius, size_t* edges);
MGSAGC_API void mgsagc_graph_free(mgsagc_graph* graph);

/* ---- synthetic datasets ---- */

typedef struct mgsagc_dataset_spec {
  const char* classes; /* comma-separated shape names; NULL or "" for all eight */
  int samples_per_class;
  int num_points;
  double noise_sigma;
  mgsagc_rotation rotation;
  uint64_t seed;
} mgsagc_dataset_spec;

MGSAGC_API void mgsagc_dataset_spec_default(mgsagc_dataset_spec* out);
MGSAGC_API mgsagc_status mgsagc_dataset_generate(const mgsagc_dataset_spec* spec, mgsagc_dataset** out);
MGSAGC_API mgsagc_status mgsagc_dataset_save(const mgsagc_dataset* ds, const char* dir);
MGSAGC_API mgsagc_status mgsagc_dataset_load(const char* dir, mgsagc_dataset** out);
MGSAGC_API size_t mgsagc_dataset_size(const mgsagc_dataset* ds, mgsagc_split split);
MGSAGC_API int mgsagc_dataset_num_classes(const mgsagc_dataset* ds);
MGSAGC_API const char* mgsagc_dataset_class_name(const mgsagc_dataset* ds, int label);
MGSAGC_API void mgsagc_dataset_free(mgsagc_dataset* ds);

/* ---- models ---- */

MGSAGC_API mgsagc_status mgsagc_model_create(const mgsagc_config* config, mgsagc_model** out);
MGSAGC_API mgsagc_status mgsagc_model_save(const mgsagc_model* model, const char* path);
MGSAGC_API mgsagc_status mgsagc_model_load(const char* path, mgsagc_model** out);
MGSAGC_API mgsagc_status mgsagc_model_config(const mgsagc_model* model, mgsagc_config* out);
MGSAGC_API size_t mgsagc_model_num_parameters(const mgsagc_model* model);
MGSAGC_API void mgsagc_model_free(mgsagc_model* model);

typedef struct mgsagc_metric_record {
  int epoch;
  const char* split; /* "train", "val" or "test" */
  double loss;
  double accuracy;
} mgsagc_metric_record;

typedef void (*mgsagc_metric_callback)(const mgsagc_metric_record* record, void* user);

/* Formats a record as one CSV row (jsonl = 0) or one JSON object (jsonl = 1),
 * without trailing newline. Returns the full length; output is truncated to
 * capacity - 1 characters. */
MGSAGC_API size_t mgsagc_format_metric(const mgsagc_metric_record* record, int jsonl, char* buf, size_t capacity);

/* Trains on the train split, evaluating the validation split after each epoch
 * when eval_val is non-zero. */
MGSAGC_API mgsagc_status mgsagc_train(mgsagc_model* model, mgsagc_dataset* ds, int epochs, int eval_val,
                                      mgsagc_metric_callback callback, void* user);
MGSAGC_API mgsagc_status mgsagc_evaluate(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split,
                                         double* loss, double* accuracy);
/* Accuracy with every cloud of the split rotated about +z by `radians`. */
MGSAGC_API mgsagc_status mgsagc_evaluate_rotated(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split,
                                                 double radians, double* accuracy);
/* Writes one predicted label per cloud of the split. */
MGSAGC_API mgsagc_status mgsagc_predict(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split, int* labels_out,
                                        size_t capacity);

/* ---- embeddings and retrieval ---- */

MGSAGC_API mgsagc_status mgsagc_embed(mgsagc_model* model, mgsagc_dataset* ds, mgsagc_split split,
                                      mgsagc_embeddings** out);
MGSAGC_API mgsagc_status mgsagc_embeddings_from_data(const double* values, const int* labels, size_t rows,
                                                     size_t cols, mgsagc_embeddings** out);
MGSAGC_API mgsagc_status mgsagc_embeddings_save(const mgsagc_embeddings* e, const char* path);
MGSAGC_API mgsagc_status mgsagc_embeddings_load(const char* path, mgsagc_embeddings** out);
MGSAGC_API size_t mgsagc_embeddings_rows(const mgsagc_embeddings* e);
MGSAGC_API size_t mgsagc_embeddings_cols(const mgsagc_embeddings* e);
/* Row-major values; valid until the handle is freed. */
MGSAGC_API const double* mgsagc_embeddings_values(const mgsagc_embeddings* e);
MGSAGC_API const int* mgsagc_embeddings_labels(const mgsagc_embeddings* e);
MGSAGC_API void mgsagc_embeddings_free(mgsagc_embeddings* e);

typedef struct mgsagc_retrieval_summary {
  double mean_average_precision;
  size_t evaluated_queries;
  size_t excluded_queries;
} mgsagc_retrieval_summary;

/* average_precision may be NULL; otherwise it receives one value per row (NaN
 * for excluded queries). */
MGSAGC_API mgsagc_status mgsagc_retrieve(const mgsagc_embeddings* e, mgsagc_metric metric,
                                         mgsagc_retrieval_summary* summary, double* average_precision,
                                         size_t capacity);

/* ---- experiments ---- */

typedef struct mgsagc_bench_row {
  int n;
  double graph_ms;
  double forward_ms;
  size_t edges;
} mgsagc_bench_row;

typedef struct mgsagc_bench_fit {
  double slope;
  double intercept;
  double r_squared;
} mgsagc_bench_fit;

MGSAGC_API mgsagc_status mgsagc_bench(const mgsagc_config* config, const int* n_list, size_t count, int repeats,
                                      uint64_t seed, mgsagc_bench_row* rows_out, mgsagc_bench_fit* fit);

typedef struct mgsagc_sweep_row {
  int cheb_order;
  int k_max;
  int mg_modules;
  double val_accuracy;
  double test_accuracy;
  double final_train_loss;
} mgsagc_sweep_row;

typedef void (*mgsagc_sweep_callback)(const mgsagc_sweep_row* row, void* user);

MGSAGC_API mgsagc_status mgsagc_sweep(const mgsagc_config* base, const mgsagc_dataset* ds, const int* cheb_orders,
                                      size_t n_orders, const int* k_values, size_t n_k, const int* mg_values,
                                      size_t n_mg, int epochs, mgsagc_sweep_callback callback, void* user);

#ifdef __cplusplus
}
#endif

#endif
