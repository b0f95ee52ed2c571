#include "wgcl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "wgcl/config.hpp"
#include "wgcl/errors.hpp"

namespace wgcl {

namespace {

struct Name {
  Variant variant;
  const char* text;
};

constexpr Name kVariantNames[] = {
    {Variant::kBaseline, "baseline"},         {Variant::kEnhanced, "enhanced"},
    {Variant::kEnhancedPos, "enhanced-P"},    {Variant::kEnhancedNeg, "enhanced-N"},
    {Variant::kEnhancedGraph, "enhanced-G"},  {Variant::kEnhancedFeature, "enhanced-F"},
    {Variant::kIdealOracle, "ideal-oracle"},
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> all_nodes(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::size_t> sample_batch(std::size_t n, std::size_t size, Rng& rng) {
  auto v = all_nodes(n);
  std::shuffle(v.begin(), v.end(), rng);
  v.resize(size);
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double accuracy(const std::vector<int>& pred, const LabelVector& labels,
                std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i : rows) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

void check_finite_loss(double value, int epoch, const ExperimentConfig& cfg) {
  if (!std::isfinite(value)) {
    throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + " (model " +
                         to_string(cfg.model) + ", variant " + to_string(cfg.variant) +
                         ", seed " + std::to_string(cfg.seed) + ")");
  }
}

SimilarityMatrix resolve_similarity(const Graph& g, const FeatureMatrix& x,
                                    const ExperimentConfig& cfg, const SimilarityMatrix* given) {
  if (given) {
    if (given->size() != g.num_nodes()) {
      throw InputError("similarity matrix size differs from the node count");
    }
    return *given;
  }
  return compute_similarity(g, x, cfg.effective_similarity());
}

void finish_report(RunReport& r, double acc, std::chrono::steady_clock::time_point t0) {
  r.accuracies = {acc};
  r.accuracy_mean = acc;
  r.accuracy_std = 0.0;
  r.wall_seconds = seconds_since(t0);
}

}  // namespace

std::string to_string(Variant v) {
  for (const auto& n : kVariantNames) {
    if (n.variant == v) return n.text;
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  for (const auto& n : kVariantNames) {
    if (s == n.text) return n.variant;
  }
  throw ConfigError("unknown variant '" + s +
                    "' (expected baseline, enhanced, enhanced-P, enhanced-N, enhanced-G, "
                    "enhanced-F, ideal-oracle)");
}

std::string to_string(ModelKind m) { return m == ModelKind::kGrace ? "grace" : "graphmlp"; }

ModelKind model_from_string(const std::string& s) {
  if (s == "grace") return ModelKind::kGrace;
  if (s == "graphmlp") return ModelKind::kGraphMlp;
  throw ConfigError("unknown model '" + s + "' (expected grace or graphmlp)");
}

bool uses_similarity(Variant v) { return v != Variant::kBaseline && v != Variant::kIdealOracle; }

void ExperimentConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (hidden == 0 || projection == 0) throw ConfigError("hidden and projection must be >= 1");
  if (batch_size == 1) throw ConfigError("batch_size must be 0 or >= 2");
  similarity.validate();
  temperatures.validate();
  objective.validate();
  for (const auto& a : augment) a.validate();
  split.validate();
  if (!(probe.lr > 0.0)) throw ConfigError("probe.lr must be positive");
  if (!(probe.l2 >= 0.0)) throw ConfigError("probe.l2 must be >= 0");
  if (probe.iterations < 1) throw ConfigError("probe.iterations must be >= 1");
  if (probe.eval_every < 1) throw ConfigError("probe.eval_every must be >= 1");
}

SimilarityConfig ExperimentConfig::effective_similarity() const {
  SimilarityConfig s = similarity;
  if (variant == Variant::kEnhancedGraph) s.beta = 0.0;
  if (variant == Variant::kEnhancedFeature) s.beta = 1.0;
  return s;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(to_json(*this).dump()); }

namespace {

nlohmann::json summary_json(const RunReport& r) {
  return {{"type", "summary"},
          {"model", to_string(r.model)},
          {"variant", to_string(r.variant)},
          {"config_hash", r.config_hash},
          {"accuracies", r.accuracies},
          {"accuracy_mean", r.accuracy_mean},
          {"accuracy_std", r.accuracy_std},
          {"weight_computations", r.weight_computations},
          {"exponent_clamps", r.weight_diagnostics.exponent_clamps},
          {"uniform_fallbacks", r.weight_diagnostics.uniform_fallbacks}};
}

nlohmann::json epoch_json(const EpochRecord& e) {
  return {{"type", "epoch"}, {"epoch", e.epoch}, {"loss", e.loss}, {"skipped", e.skipped}};
}

}  // namespace

std::uint64_t RunReport::hash() const {
  std::uint64_t h = fnv1a64(summary_json(*this).dump());
  for (const auto& e : epochs) h = fnv1a64(epoch_json(e).dump(), h);
  return h;
}

GraceRun train_grace(const Graph& g, const FeatureMatrix& x, const ExperimentConfig& cfg,
                     const LabelVector* labels, const SimilarityMatrix* given) {
  cfg.validate();
  if (cfg.model != ModelKind::kGrace) throw ConfigError("train_grace needs model = grace");
  const std::size_t n = g.num_nodes();
  if (x.rows() != n) throw InputError("feature rows differ from the node count");
  if (n < 2) throw InputError("train_grace needs at least two nodes");
  if (cfg.variant == Variant::kIdealOracle && (!labels || labels->size() != n)) {
    throw InputError("the ideal-oracle variant needs labels for every node");
  }
  const auto t0 = std::chrono::steady_clock::now();

  GraceRun run;
  run.report.model = cfg.model;
  run.report.variant = cfg.variant;
  run.report.config_hash = cfg.hash();
  run.params = make_gcn_params({x.cols(), cfg.hidden, cfg.projection}, derive_seed(cfg.seed, "init"));

  std::optional<SimilarityMatrix> sims;
  if (uses_similarity(cfg.variant)) sims = resolve_similarity(g, x, cfg, given);

  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  auto tables_for = [&](std::span<const std::size_t> nodes) -> std::optional<WeightTable> {
    if (cfg.variant == Variant::kBaseline) return std::nullopt;
    ++run.report.weight_computations;
    if (cfg.variant == Variant::kIdealOracle) return label_weight_table(*labels, nodes, true);
    return weight_table(*sims, nodes, cfg.temperatures, true, &run.report.weight_diagnostics);
  };
  const bool use_pos = cfg.variant != Variant::kBaseline && cfg.variant != Variant::kEnhancedNeg;
  const bool use_neg = cfg.variant != Variant::kBaseline && cfg.variant != Variant::kEnhancedPos;

  const auto everyone = all_nodes(n);
  if (full_batch) run.weights = tables_for(everyone);

  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  Rng batch_rng = make_rng(cfg.seed, "batches");
  const std::uint64_t augment_root = derive_seed(cfg.seed, "augment");

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t es = derive_seed(augment_root, static_cast<std::uint64_t>(epoch));
    AugmentConfig a1 = cfg.augment[0];
    AugmentConfig a2 = cfg.augment[1];
    a1.seed = derive_seed(es, "view-1");
    a2.seed = derive_seed(es, "view-2");
    auto [v1, v2] = make_views(g, x, a1, a2);
    const auto adj1 = normalized_adjacency(v1.graph, true);
    const auto adj2 = normalized_adjacency(v2.graph, true);
    const GcnTrace t1 = gcn_forward(adj1, v1.features, run.params);
    const GcnTrace t2 = gcn_forward(adj2, v2.features, run.params);

    std::vector<std::size_t> batch;
    std::optional<WeightTable> local;
    const WeightTable* tables = nullptr;
    if (full_batch) {
      batch = everyone;
      if (run.weights) tables = &*run.weights;
    } else {
      batch = sample_batch(n, cfg.batch_size, batch_rng);
      local = tables_for(batch);
      if (local) tables = &*local;
    }

    const GraceLossResult loss =
        grace_loss(t1.projections, t2.projections, batch,
                   tables && use_pos ? &tables->positive : nullptr,
                   tables && use_neg ? &tables->negative : nullptr, cfg.intra_view_negatives,
                   cfg.objective.tau);
    check_finite_loss(loss.value, epoch, cfg);
    run.report.epochs.push_back({epoch, loss.value, loss.skipped});

    Gradients grads = gcn_backward(adj1, t1, loss.d_z1, Matrix(), run.params);
    const Gradients g2 = gcn_backward(adj2, t2, loss.d_z2, Matrix(), run.params);
    for (auto& [name, m] : grads) m += g2.at(name);
    adam_step(run.params, grads, adam);
  }

  run.embeddings = gcn_forward(normalized_adjacency(g, true), x, run.params).embeddings;
  run.report.wall_seconds = seconds_since(t0);
  return run;
}

ProbeResult linear_probe(const Matrix& emb, const LabelVector& labels, const DataSplit& split,
                         const ProbeConfig& cfg) {
  const std::size_t n = emb.rows();
  if (labels.size() != n) throw InputError("linear_probe: label count differs from embeddings");
  validate_split(split, n);
  if (split.train.empty()) throw InputError("linear_probe: empty training set");
  const std::size_t k = num_classes(labels);
  std::vector<bool> seen(k, false);
  for (std::size_t i : split.train) seen[labels[i]] = true;
  for (std::size_t c = 0; c < k; ++c) {
    if (!seen[c]) {
      throw InputError("linear_probe: class " + std::to_string(c) + " has no training node");
    }
  }

  const std::size_t d = emb.cols();
  double mean_sq = 0.0;
  for (std::size_t i : split.train) mean_sq += dot(emb.row(i), emb.row(i));
  mean_sq /= static_cast<double>(split.train.size());
  const double lr = cfg.lr / std::max(1.0, mean_sq);

  Matrix w(d, k);
  std::vector<double> bias(k, 0.0);
  const Matrix x_train = gather_rows(emb, split.train);

  auto predict = [&]() {
    Matrix logits = matmul(emb, w);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) logits(i, c) += bias[c];
    }
    return argmax_rows(logits);
  };

  ProbeResult best{-1.0, -1.0};
  const auto& select = split.val.empty() ? split.train : split.val;
  for (int it = 1; it <= cfg.iterations; ++it) {
    Matrix logits = matmul(x_train, w);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      for (std::size_t c = 0; c < k; ++c) logits(i, c) += bias[c];
    }
    LabelVector y(split.train.size());
    std::vector<std::size_t> rows(split.train.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      y[i] = labels[split.train[i]];
      rows[i] = i;
    }
    const LossResult ce = cross_entropy(logits, y, rows);
    Matrix gw = matmul_tn(x_train, ce.grad);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t c = 0; c < k; ++c) gw(j, c) += cfg.l2 * w(j, c);
    }
    for (std::size_t c = 0; c < k; ++c) {
      double gb = 0.0;
      for (std::size_t i = 0; i < ce.grad.rows(); ++i) gb += ce.grad(i, c);
      bias[c] -= lr * gb;
    }
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t c = 0; c < k; ++c) w(j, c) -= lr * gw(j, c);
    }

    if (it % cfg.eval_every == 0 || it == cfg.iterations) {
      const auto pred = predict();
      const double val = accuracy(pred, labels, select);
      if (val > best.val_accuracy) {
        best.val_accuracy = val;
        best.test_accuracy = accuracy(pred, labels, split.test);
      }
    }
  }
  return best;
}

GraphMlpRun train_graphmlp(const Graph& g, const FeatureMatrix& x, const LabelVector& labels,
                           const DataSplit& split, const ExperimentConfig& cfg,
                           const SimilarityMatrix* given) {
  cfg.validate();
  if (cfg.model != ModelKind::kGraphMlp) throw ConfigError("train_graphmlp needs model = graphmlp");
  const std::size_t n = g.num_nodes();
  if (x.rows() != n || labels.size() != n) {
    throw InputError("features, labels and graph disagree on the node count");
  }
  validate_split(split, n);
  if (split.train.empty()) throw InputError("train_graphmlp: empty training set");
  const auto t0 = std::chrono::steady_clock::now();

  GraphMlpRun run;
  run.report.model = cfg.model;
  run.report.variant = cfg.variant;
  run.report.config_hash = cfg.hash();
  const std::size_t k = num_classes(labels);
  run.params = make_mlp_params({x.cols(), cfg.hidden, k}, derive_seed(cfg.seed, "init"));

  const bool contrast = cfg.objective.lambda_nc > 0.0;
  std::optional<SimilarityMatrix> sims;
  if (contrast && uses_similarity(cfg.variant)) sims = resolve_similarity(g, x, cfg, given);
  Matrix adj_power;
  if (contrast && (cfg.variant == Variant::kBaseline || cfg.variant == Variant::kEnhancedNeg)) {
    adj_power = dense_power(normalized_adjacency(g, true), cfg.objective.nc_hops);
  }

  // Training nodes are always in the batch; the rest is filled uniformly.
  std::vector<std::size_t> others;
  {
    std::vector<bool> is_train(n, false);
    for (std::size_t i : split.train) is_train[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_train[i]) others.push_back(i);
    }
  }
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  Rng batch_rng = make_rng(cfg.seed, "batches");

  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  double best_val = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> batch;
    if (full_batch) {
      batch = all_nodes(n);
    } else {
      batch = split.train;
      if (cfg.batch_size > batch.size()) {
        std::shuffle(others.begin(), others.end(), batch_rng);
        const std::size_t extra = std::min(others.size(), cfg.batch_size - batch.size());
        batch.insert(batch.end(), others.begin(), others.begin() + static_cast<long>(extra));
      }
      std::sort(batch.begin(), batch.end());
    }

    const MlpTrace trace = mlp_forward(gather_rows(x, batch), run.params);
    LabelVector batch_labels(batch.size());
    std::vector<std::size_t> labeled;
    {
      std::vector<bool> is_train(n, false);
      for (std::size_t i : split.train) is_train[i] = true;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        batch_labels[i] = labels[batch[i]];
        if (is_train[batch[i]]) labeled.push_back(i);
      }
    }
    const LossResult ce = cross_entropy(trace.logits, batch_labels, labeled);

    LossResult nc{0.0, Matrix(batch.size(), trace.embeddings.cols()), 0};
    if (contrast && batch.size() >= 2) {
      switch (cfg.variant) {
        case Variant::kBaseline:
          nc = nc_loss(trace.embeddings, batch, adj_power, cfg.objective.tau);
          break;
        case Variant::kIdealOracle: {
          ++run.report.weight_computations;
          nc = enhanced_nc_loss(trace.embeddings, label_weight_table(labels, batch, false),
                                cfg.objective.tau);
          break;
        }
        default: {
          ++run.report.weight_computations;
          WeightTable t = weight_table(*sims, batch, cfg.temperatures, false,
                                       &run.report.weight_diagnostics);
          if (cfg.variant == Variant::kEnhancedPos) {
            t.negative.fill(1.0);
            for (std::size_t i = 0; i < batch.size(); ++i) t.negative(i, i) = 0.0;
          } else if (cfg.variant == Variant::kEnhancedNeg) {
            for (std::size_t i = 0; i < batch.size(); ++i) {
              for (std::size_t j = 0; j < batch.size(); ++j) {
                t.positive(i, j) = i == j ? 0.0 : adj_power(batch[i], batch[j]);
              }
            }
          }
          nc = enhanced_nc_loss(trace.embeddings, t, cfg.objective.tau);
          break;
        }
      }
    }

    const CombinedLoss total = combined_loss(ce, nc, cfg.objective.lambda_nc);
    check_finite_loss(total.value, epoch, cfg);
    run.report.epochs.push_back({epoch, total.value, nc.skipped});
    const Gradients grads = mlp_backward(trace, total.d_embeddings, total.d_logits, run.params);
    adam_step(run.params, grads, adam);

    const auto pred = argmax_rows(mlp_forward(x, run.params).logits);
    const auto& select = split.val.empty() ? split.train : split.val;
    const double val = accuracy(pred, labels, select);
    if (val > best_val) {
      best_val = val;
      run.accuracy = {accuracy(pred, labels, split.test), val};
    }
  }

  if (cfg.epochs == 0) {
    const auto pred = argmax_rows(mlp_forward(x, run.params).logits);
    const auto& select = split.val.empty() ? split.train : split.val;
    run.accuracy = {accuracy(pred, labels, split.test), accuracy(pred, labels, select)};
  }
  finish_report(run.report, run.accuracy.test_accuracy, t0);
  return run;
}

DataSplit experiment_split(const LabelVector& labels, const ExperimentConfig& cfg) {
  return make_split(labels, cfg.split, derive_seed(cfg.seed, "split"));
}

RunReport run_experiment(const Dataset& data, const ExperimentConfig& cfg,
                         const SimilarityMatrix* sims) {
  const auto t0 = std::chrono::steady_clock::now();
  const DataSplit split = experiment_split(data.labels, cfg);
  if (cfg.model == ModelKind::kGraphMlp) {
    return train_graphmlp(data.graph, data.features, data.labels, split, cfg, sims).report;
  }
  GraceRun run = train_grace(data.graph, data.features, cfg, &data.labels, sims);
  const ProbeResult probe = linear_probe(run.embeddings, data.labels, split, cfg.probe);
  finish_report(run.report, probe.test_accuracy, t0);
  return run.report;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

std::vector<AblationRow> run_ablation(const Dataset& data, const ExperimentConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      const RunCallback& on_run) {
  if (seeds.empty()) throw ConfigError("run_ablation needs at least one seed");
  std::vector<AblationRow> rows;
  for (Variant v : kAblationVariants) {
    AblationRow row;
    row.variant = v;
    for (std::uint64_t s : seeds) {
      ExperimentConfig cfg = base;
      cfg.variant = v;
      cfg.seed = s;
      RunReport r = run_experiment(data, cfg);
      if (on_run) on_run(cfg, r);
      row.accuracies.push_back(r.accuracy_mean);
      row.reports.push_back(std::move(r));
    }
    std::tie(row.mean_accuracy, row.std_accuracy) = mean_std(row.accuracies);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report_jsonl(const std::filesystem::path& path, const RunReport& report, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw InputError("cannot write report file " + path.string());
  for (const auto& e : report.epochs) out << epoch_json(e).dump() << '\n';
  auto s = summary_json(report);
  s["wall_seconds"] = report.wall_seconds;
  s["report_hash"] = report.hash();
  out << s.dump() << '\n';
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write table file " + path.string());
  out << "variant,mean_acc,std_acc,seeds\n";
  for (const auto& r : rows) {
    out << to_string(r.variant) << ',' << format_double(r.mean_accuracy) << ','
        << format_double(r.std_accuracy) << ',' << r.accuracies.size() << '\n';
  }
}

}  // namespace wgcl
