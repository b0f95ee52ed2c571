#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "wgcl/graph.hpp"
#include "wgcl/matrix.hpp"

namespace wgcl {

enum class StructuralMode { kPprEntry, kPprRowCosine };
enum class SimilarityKind : std::uint32_t { kStructural = 1, kFeature = 2, kFused = 3 };

std::string to_string(StructuralMode m);
StructuralMode structural_mode_from_string(const std::string& s);

struct SimilarityConfig {
  double alpha_ppr = 0.15;
  int iterations = 10;
  StructuralMode structural_mode = StructuralMode::kPprEntry;
  double beta = 0.5;
  /// Empty means the scale factor is set so both sources share the same
  /// off-diagonal total.
  std::optional<double> gamma;
  bool clamp_nonnegative = true;

  void validate() const;
  std::uint64_t hash() const;
};

struct SimilarityMatrix {
  Matrix values;
  SimilarityKind kind = SimilarityKind::kFused;

  std::size_t size() const { return values.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

/// α(I − (1−α)Â)^{-1} by dense LU. Intended for n up to a few thousand.
Matrix ppr_exact(const NormalizedAdjacency& a, double alpha);

/// Truncated PPR series (1−α)^K Â^K + Σ_{k<K} α(1−α)^k Â^k, evaluated with the
/// recurrence P ← (1−α)·Â·P + α·I starting from P = I.
Matrix ppr_iterative(const NormalizedAdjacency& a, double alpha, int iterations);

SimilarityMatrix structural_similarity(const Matrix& ppr, StructuralMode mode);
SimilarityMatrix feature_similarity(const FeatureMatrix& x);

/// Pairwise row cosines; pairs involving an all-zero row score 0.
Matrix row_cosine(const Matrix& m);

/// Off-diagonal-sum ratio used when no fixed scale factor is configured.
double auto_gamma(const SimilarityMatrix& sim_g, const SimilarityMatrix& sim_f);

SimilarityMatrix fuse(const SimilarityMatrix& sim_g, const SimilarityMatrix& sim_f,
                      const SimilarityConfig& cfg);

/// Structural + feature + fusion on the unperturbed graph.
SimilarityMatrix compute_similarity(const Graph& g, const FeatureMatrix& x,
                                    const SimilarityConfig& cfg);

struct SimilarityStats {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};
SimilarityStats summarize(const SimilarityMatrix& s);

void write_similarity_cache(const std::filesystem::path& path, const SimilarityMatrix& s,
                            std::uint64_t config_hash);
/// Returns nothing when the file is missing or was written under another
/// configuration hash. Throws InputError on a corrupt file.
std::optional<SimilarityMatrix> read_similarity_cache(const std::filesystem::path& path,
                                                      std::uint64_t config_hash);

}  // namespace wgcl
