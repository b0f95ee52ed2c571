#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wgcl/graph.hpp"

namespace wgcl {

struct Dataset {
  Graph graph;
  FeatureMatrix features;
  LabelVector labels;
};

/// Reads an edge list (TSV), features (CSV, one row per node) and labels (one
/// integer per line). The label file fixes the node count; the other files
/// must agree with it. Parse errors carry file and line number.
Dataset load_dataset(const std::filesystem::path& edges, const std::filesystem::path& features,
                     const std::filesystem::path& labels);

void save_dataset(const Dataset& d, const std::filesystem::path& edges,
                  const std::filesystem::path& features, const std::filesystem::path& labels);

FeatureMatrix read_features_csv(const std::filesystem::path& path);
void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& x);
LabelVector read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelVector& labels);

/// "id,v0,v1,..." per node.
void write_embeddings_csv(const std::filesystem::path& path, const Matrix& emb);
Matrix read_embeddings_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct SbmSpec {
  std::vector<std::size_t> block_sizes{50, 50};
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feature_dim = 16;
  /// Norm of each class mean vector.
  double mean_norm = 1.0;
  /// Standard deviation of the isotropic feature noise.
  double noise = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Planted-partition graph with Gaussian class-conditional features. Class
/// means are orthonormalized (then scaled) when feature_dim allows it.
Dataset gen_sbm(const SbmSpec& spec);

struct SplitSpec {
  enum class Mode { kRatio, kPerClass };
  Mode mode = Mode::kRatio;
  double train = 0.1;
  double val = 0.1;
  double test = 0.8;
  /// Training nodes per class in kPerClass mode.
  std::size_t per_class = 5;
  bool stratified = true;

  void validate() const;
};

/// Ratio mode draws test, then validation, then training nodes from a seeded
/// shuffle (per class when stratified). Per-class mode takes `per_class`
/// training nodes from every class and ratio-sized validation/test sets from
/// the remainder.
DataSplit make_split(const LabelVector& labels, const SplitSpec& spec, std::uint64_t seed);

}  // namespace wgcl
