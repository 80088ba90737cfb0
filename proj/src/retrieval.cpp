#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "binio.hpp"
#include "mgsagc/error.hpp"
#include "mgsagc/harness.hpp"

namespace mgsagc {

namespace {

constexpr char kEmbeddingMagic[5] = "MGSE";
constexpr std::uint32_t kEmbeddingVersion = 1;

double pair_distance(const Matrix& e, Eigen::Index a, Eigen::Index b, Metric metric,
                     const std::vector<double>& norms) {
  if (metric == Metric::Euclidean) return (e.row(a) - e.row(b)).norm();
  const double na = norms[static_cast<std::size_t>(a)], nb = norms[static_cast<std::size_t>(b)];
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - e.row(a).dot(e.row(b)) / (na * nb);
}

}  // namespace

RetrievalResult retrieve(const Matrix& embeddings, const std::vector<int>& labels, Metric metric) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  require(n >= 2, ErrorCode::InvalidArgument, "retrieval needs at least 2 items");
  require(labels.size() == n, ErrorCode::Shape, "retrieval: one label per embedding row required");
  require(embeddings.allFinite(), ErrorCode::NonFinite, "retrieval: embeddings contain non-finite values");

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = embeddings.row(static_cast<Eigen::Index>(i)).norm();

  RetrievalResult r;
  r.ranked.resize(n);
  r.average_precision.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> dist(n);
  double ap_sum = 0;
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t j = 0; j < n; ++j)
      dist[j] = j == q ? 0.0
                       : pair_distance(embeddings, static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j),
                                       metric, norms);
    auto& ranked = r.ranked[q];
    ranked.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != q) ranked.push_back(j);
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
    });

    std::size_t hits = 0;
    double precision_sum = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      if (labels[ranked[k]] != labels[q]) continue;
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    if (hits == 0) {
      ++r.excluded_queries;
      continue;
    }
    r.average_precision[q] = precision_sum / static_cast<double>(hits);
    ap_sum += r.average_precision[q];
    ++r.evaluated_queries;
  }
  require(r.evaluated_queries > 0, ErrorCode::InvalidArgument,
          "retrieval needs at least one same-class pair (" + std::to_string(r.excluded_queries) +
              " queries excluded)");
  r.mean_average_precision = ap_sum / static_cast<double>(r.evaluated_queries);
  return r;
}

void save_embeddings(const EmbeddingSet& e, const std::string& path) {
  require(e.labels.size() == static_cast<std::size_t>(e.values.rows()), ErrorCode::Shape,
          "embeddings: one label per row required");
  detail::ByteWriter w;
  w.put_magic(kEmbeddingMagic);
  w.put(kEmbeddingVersion);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(e.values.rows()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(e.values.cols()));
  w.put_array(e.values.data(), static_cast<std::size_t>(e.values.size()));
  for (int y : e.labels) w.put<std::int32_t>(y);
  detail::write_binary_file(path, w.take());
}

EmbeddingSet load_embeddings(const std::string& path) {
  const std::string bytes = detail::read_binary_file(path);
  detail::ByteReader r(bytes);
  r.expect_magic(kEmbeddingMagic, "embedding file");
  const auto version = r.get<std::uint32_t>();
  if (version != kEmbeddingVersion)
    throw Error(ErrorCode::Corrupt, "embedding file: unsupported version " + std::to_string(version));
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  if (cols != 0 && rows > r.remaining() / sizeof(double) / cols)
    throw Error(ErrorCode::Corrupt, "corrupt file: truncated embedding matrix");
  EmbeddingSet e;
  e.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  r.get_array(e.values.data(), static_cast<std::size_t>(rows * cols));
  e.labels.resize(rows);
  for (auto& y : e.labels) y = r.get<std::int32_t>();
  if (!r.at_end()) throw Error(ErrorCode::Corrupt, "embedding file: trailing bytes");
  return e;
}

}  // namespace mgsagc
