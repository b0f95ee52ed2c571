#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wgcl/augment.hpp"
#include "wgcl/data.hpp"
#include "wgcl/nn.hpp"
#include "wgcl/objectives.hpp"
#include "wgcl/similarity.hpp"
#include "wgcl/weighting.hpp"

namespace wgcl {

enum class Variant {
  kBaseline,
  kEnhanced,
  /// Weighted positives, unit negatives.
  kEnhancedPos,
  /// Counterpart-only numerator, weighted negatives.
  kEnhancedNeg,
  /// Structure-only similarity (beta = 0).
  kEnhancedGraph,
  /// Feature-only similarity (beta = 1).
  kEnhancedFeature,
  /// Weights from ground-truth labels; diagnostic only.
  kIdealOracle,
};

enum class ModelKind { kGrace, kGraphMlp };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(ModelKind m);
ModelKind model_from_string(const std::string& s);

/// The six variants of the ablation table, in row order.
inline constexpr std::array<Variant, 6> kAblationVariants = {
    Variant::kBaseline,   Variant::kEnhanced,      Variant::kEnhancedPos,
    Variant::kEnhancedNeg, Variant::kEnhancedGraph, Variant::kEnhancedFeature};

struct ProbeConfig {
  double lr = 0.5;
  double l2 = 1e-4;
  int iterations = 300;
  int eval_every = 10;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::kGrace;
  Variant variant = Variant::kEnhanced;
  std::uint64_t seed = 0;
  int epochs = 100;
  double lr = 0.001;
  double weight_decay = 1e-5;
  /// 0 trains on the full node set every step.
  std::size_t batch_size = 0;
  std::size_t hidden = 64;
  std::size_t projection = 64;
  /// Same-view nodes join the negative set (two-view model only).
  bool intra_view_negatives = true;

  SimilarityConfig similarity;
  TemperaturePair temperatures;
  ObjectiveConfig objective;
  /// Rates for the two views; per-epoch seeds derive from `seed`.
  std::array<AugmentConfig, 2> augment{AugmentConfig{0.2, 0.3, 0}, AugmentConfig{0.4, 0.4, 0}};
  SplitSpec split;
  ProbeConfig probe;

  void validate() const;
  /// Similarity settings after applying the variant (beta forced for G/F).
  SimilarityConfig effective_similarity() const;
  /// Hash of the canonical JSON form.
  std::uint64_t hash() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::size_t skipped = 0;
};

struct RunReport {
  ModelKind model = ModelKind::kGrace;
  Variant variant = Variant::kBaseline;
  std::uint64_t config_hash = 0;
  std::vector<EpochRecord> epochs;
  std::vector<double> accuracies;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double wall_seconds = 0.0;
  /// Number of weight-table constructions; zero for the baseline.
  std::size_t weight_computations = 0;
  WeightDiagnostics weight_diagnostics;

  /// Hash of everything except wall-clock time.
  std::uint64_t hash() const;
};

struct GraceRun {
  Matrix embeddings;
  ParamStore params;
  RunReport report;
  /// Weight tables used during training (full-batch mode only).
  std::optional<WeightTable> weights;
};

/// Two-view contrastive pretraining. Labels are needed only for the
/// label-oracle variant. Similarities come from the unperturbed graph and
/// features; returned embeddings are encoder outputs on the original graph.
/// A precomputed similarity matrix (e.g. from the cache) may be passed in;
/// it must match cfg.effective_similarity().
GraceRun train_grace(const Graph& g, const FeatureMatrix& x, const ExperimentConfig& cfg,
                     const LabelVector* labels = nullptr,
                     const SimilarityMatrix* sims = nullptr);

struct ProbeResult {
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
};

/// Multinomial logistic regression on frozen embeddings: full-batch gradient
/// descent with ℓ2 penalty on the training set, the iterate with the best
/// validation accuracy scored on the test set.
ProbeResult linear_probe(const Matrix& embeddings, const LabelVector& labels,
                         const DataSplit& split, const ProbeConfig& cfg);

struct GraphMlpRun {
  ParamStore params;
  RunReport report;
  ProbeResult accuracy;
};

/// Semi-supervised MLP with cross-entropy on labeled nodes plus the
/// (optionally weighted) neighborhood contrastive loss. Batches always
/// contain every training node.
GraphMlpRun train_graphmlp(const Graph& g, const FeatureMatrix& x, const LabelVector& labels,
                           const DataSplit& split, const ExperimentConfig& cfg,
                           const SimilarityMatrix* sims = nullptr);

/// Whether the variant needs the fused similarity matrix at all.
bool uses_similarity(Variant v);

/// The split run_experiment uses for a given config.
DataSplit experiment_split(const LabelVector& labels, const ExperimentConfig& cfg);

/// Trains with `cfg` and scores one seed: probe accuracy for the two-view
/// model, best-validation test accuracy for the MLP.
RunReport run_experiment(const Dataset& data, const ExperimentConfig& cfg,
                         const SimilarityMatrix* sims = nullptr);

struct AblationRow {
  Variant variant = Variant::kBaseline;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> accuracies;
  std::vector<RunReport> reports;
};

/// Per-run hook, e.g. for progress output.
using RunCallback = std::function<void(const ExperimentConfig&, const RunReport&)>;

std::vector<AblationRow> run_ablation(const Dataset& data, const ExperimentConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      const RunCallback& on_run = {});

/// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& v);

/// One record per epoch followed by a summary record.
void write_report_jsonl(const std::filesystem::path& path, const RunReport& report,
                        bool append = false);
/// Columns: variant, mean_acc, std_acc, seeds (number of seeds).
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace wgcl
