#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wgcl/graph.hpp"
#include "wgcl/similarity.hpp"

namespace wgcl {

struct TemperaturePair {
  double tau_pos = 0.5;
  double tau_neg = 0.5;

  void validate() const;
};

/// Counters for the soft failure modes of the weight computations.
struct WeightDiagnostics {
  std::size_t exponent_clamps = 0;
  std::size_t uniform_fallbacks = 0;
};

/// exp(s/τp) − 1 with the exponent clamped at 700.
double transform_pos(double s, double tau_pos, WeightDiagnostics* diag = nullptr);
/// exp(−s/τn).
double transform_neg(double s, double tau_neg);

struct CandidateSets {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

/// Mean-one positive importance weights of `anchor` over `candidates`.
///
/// Weights are proportional to exp(s/τp) − 1. When that expression would
/// overflow, the common factor exp(s_max/τp) is divided out first; the ratio
/// is unchanged. If every transformed value is zero the result is all ones.
std::vector<double> positive_weights(std::size_t anchor, const SimilarityMatrix& sims,
                                     std::span<const std::size_t> candidates, double tau_pos,
                                     WeightDiagnostics* diag = nullptr);

/// Mean-one negative importance weights, proportional to exp(−s/τn).
std::vector<double> negative_weights(std::size_t anchor, const SimilarityMatrix& sims,
                                     std::span<const std::size_t> candidates, double tau_neg,
                                     WeightDiagnostics* diag = nullptr);

struct WeightSet {
  std::vector<double> positive;
  std::vector<double> negative;
};

WeightSet compute_weight_set(std::size_t anchor, const SimilarityMatrix& sims,
                             const CandidateSets& sets, const TemperaturePair& temps,
                             WeightDiagnostics* diag = nullptr);

/// Weights for every anchor in `nodes` against candidates drawn from the same
/// node list. Entry (a, c) refers to nodes[a] and nodes[c]. Negatives always
/// exclude the anchor itself; positives include it when `self_positive`
/// holds. Excluded entries are zero.
struct WeightTable {
  Matrix positive;
  Matrix negative;
};

WeightTable weight_table(const SimilarityMatrix& sims, std::span<const std::size_t> nodes,
                         const TemperaturePair& temps, bool self_positive,
                         WeightDiagnostics* diag = nullptr);

/// Weights from ground-truth labels: same-class candidates share the positive
/// mass, other-class candidates share the negative mass. Used by the oracle
/// variant only.
WeightTable label_weight_table(const LabelVector& labels, std::span<const std::size_t> nodes,
                               bool self_positive);

}  // namespace wgcl
