#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wgcl/graph.hpp"
#include "wgcl/matrix.hpp"
#include "wgcl/rng.hpp"
#include "wgcl/weighting.hpp"

namespace wgcl {

struct ObjectiveConfig {
  double tau = 0.5;
  /// Numerator/denominator scalars of the sampled ideal objective. Zero
  /// means "use the sample counts" (l = n, q = m).
  double l = 0.0;
  double q = 0.0;
  int nc_hops = 2;
  double lambda_nc = 1.0;

  void validate() const;
};

/// A scalar loss and its gradient with respect to the embedding matrix the
/// loss was evaluated on (same shape, zero rows for uninvolved nodes).
struct LossResult {
  double value = 0.0;
  Matrix grad;
  /// Anchors dropped because their numerator was empty.
  std::size_t skipped = 0;
};

/// One term of a weighted softmax ratio for a fixed anchor:
/// −log(Σ num·e^{s}) + log(Σ den·e^{s}) with s = ⟨e_anchor, e_row⟩/τ.
struct RatioTerm {
  std::size_t row;
  double num_weight;
  double den_weight;
};

/// Adds scale·(loss, gradient) of the ratio for `anchor` into (value, grad).
/// Returns false and adds nothing when the numerator is empty.
bool accumulate_ratio(const Matrix& emb, std::size_t anchor, std::span<const RatioTerm> terms,
                      double tau, double scale, double& value, Matrix& grad);

/// Conventional InfoNCE for one anchor. An empty negative set gives 0.
LossResult infonce(const Matrix& emb, std::size_t anchor, std::size_t positive,
                   std::span<const std::size_t> negatives, double tau);

/// Label-oracle objective. The numerator sums over same-label members of
/// `population` other than the anchor; the denominator holds the counterpart
/// and every different-label member. `labels` is indexed by row of `emb`.
LossResult ideal_loss(const Matrix& emb, std::span<const std::size_t> population,
                      const LabelVector& labels, std::size_t anchor, std::size_t counterpart,
                      double tau);

/// −log((l/m)Σ e^{s⁺} / (e^{s'} + (q/n)Σ e^{s⁻})). Requires l > 0 and q > 0.
LossResult sampled_ideal_loss(const Matrix& emb, std::size_t anchor, std::size_t counterpart,
                              std::span<const std::size_t> positives,
                              std::span<const std::size_t> negatives, double l, double q,
                              double tau);

/// Similarity-weighted objective:
/// −log(Σ_M w⁺e^{s} / (e^{s'} + Σ_N w⁻e^{s})). Skipped when Σ w⁺ = 0.
LossResult enhanced_loss(const Matrix& emb, std::size_t anchor, std::size_t counterpart,
                         std::span<const std::size_t> vm, std::span<const double> w_pos,
                         std::span<const std::size_t> vn, std::span<const double> w_neg,
                         double tau);

/// Neighborhood contrastive loss over a batch. Row i of `batch_emb` is node
/// batch_nodes[i]; `adj_power` is the dense n×n Â^r. Averaged over anchors
/// whose numerator is non-empty.
LossResult nc_loss(const Matrix& batch_emb, std::span<const std::size_t> batch_nodes,
                   const Matrix& adj_power, double tau);

/// Weighted neighborhood contrastive loss; weights indexed by batch position
/// (entry (i, j) weighs node batch_nodes[j] for anchor batch_nodes[i]).
LossResult enhanced_nc_loss(const Matrix& batch_emb, const WeightTable& weights, double tau);

/// Mean softmax cross-entropy over `rows`; gradient with respect to logits.
LossResult cross_entropy(const Matrix& logits, const LabelVector& labels,
                         std::span<const std::size_t> rows);

struct CombinedLoss {
  double value = 0.0;
  double ce = 0.0;
  double nc = 0.0;
  Matrix d_logits;
  Matrix d_embeddings;
};

/// L_CE + λ·L_NC.
CombinedLoss combined_loss(const LossResult& ce, const LossResult& nc, double lambda_nc);

struct GraceLossResult {
  double value = 0.0;
  Matrix d_z1;
  Matrix d_z2;
  std::size_t skipped = 0;
};

/// Symmetric two-view objective over the nodes in `batch` (positions index
/// `batch`). Each anchor contrasts against the opposite view and, when
/// `intra_view` holds, against the other nodes of its own view. Without
/// positive weights the numerator is the counterpart alone; without negative
/// weights every negative counts once. The result averages all 2·|batch|
/// non-skipped anchors.
GraceLossResult grace_loss(const Matrix& z1, const Matrix& z2, std::span<const std::size_t> batch,
                           const Matrix* pos_weights, const Matrix* neg_weights, bool intra_view,
                           double tau);

/// Finite population with planted classes for the large-sample check.
struct PlantedPopulation {
  Matrix embeddings;
  LabelVector labels;
  std::size_t anchor = 0;
  std::vector<double> counterpart;
  double tau = 0.5;
  double l = 1.0;
  double q = 1.0;
};

struct GapStats {
  double monte_carlo = 0.0;
  double closed_form = 0.0;
  double gap = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo mean of the sampled ideal objective with m positives drawn
/// uniformly from the anchor's class and n negatives from the rest, against
/// its large-sample limit evaluated with exact class expectations.
GapStats theorem1_gap(const PlantedPopulation& pop, std::size_t m, std::size_t n,
                      std::size_t trials, Rng& rng);

}  // namespace wgcl
