#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wgcl/config.hpp"
#include "wgcl/data.hpp"
#include "wgcl/errors.hpp"
#include "wgcl/pipeline.hpp"
#include "wgcl/similarity.hpp"

namespace fs = std::filesystem;
using namespace wgcl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

void log(const std::string& msg) { std::cerr << "[wgcl] " << msg << '\n'; }

Dataset load(const CliConfig& cfg) {
  if (cfg.data) return load_dataset(cfg.data->edges, cfg.data->features, cfg.data->labels);
  return gen_sbm(*cfg.synthetic);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw InputError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
  }
}

/// Cache key: similarity settings plus a fingerprint of the data they were computed on.
std::uint64_t cache_key(const SimilarityConfig& s, const Dataset& d) {
  std::uint64_t h = s.hash();
  for (const auto& [u, v] : d.graph.edge_list()) {
    h = derive_seed(h, (static_cast<std::uint64_t>(u) << 32) | v);
  }
  h = derive_seed(h, static_cast<std::uint64_t>(d.features.rows() * 1000003 + d.features.cols()));
  for (double x : d.features.flat()) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = derive_seed(h, bits);
  }
  return h;
}

SimilarityMatrix cached_similarity(const CliConfig& cfg, const Dataset& d, bool* from_cache) {
  const SimilarityConfig s = cfg.experiment.effective_similarity();
  const std::uint64_t key = cache_key(s, d);
  if (auto hit = read_similarity_cache(cfg.output.similarity_cache, key)) {
    if (from_cache) *from_cache = true;
    return *hit;
  }
  if (from_cache) *from_cache = false;
  SimilarityMatrix m = compute_similarity(d.graph, d.features, s);
  ensure_parent(cfg.output.similarity_cache);
  write_similarity_cache(cfg.output.similarity_cache, m, key);
  return m;
}

int cmd_sim(const std::string& path) {
  const CliConfig cfg = load_cli_config(path);
  const Dataset d = load(cfg);
  bool hit = false;
  const SimilarityMatrix m = cached_similarity(cfg, d, &hit);
  const auto st = summarize(m);
  const auto s = cfg.experiment.effective_similarity();
  log(std::string(hit ? "reused " : "wrote ") + cfg.output.similarity_cache.string());
  std::cout << "n=" << m.size() << " mode=" << to_string(s.structural_mode)
            << " beta=" << format_double(s.beta) << " min=" << format_double(st.min)
            << " mean=" << format_double(st.mean) << " max=" << format_double(st.max) << '\n';
  return kExitOk;
}

int cmd_train(const std::string& path) {
  const CliConfig cfg = load_cli_config(path);
  const ExperimentConfig& ex = cfg.experiment;
  const Dataset d = load(cfg);
  log("training " + to_string(ex.model) + " / " + to_string(ex.variant) + " on " +
      std::to_string(d.graph.num_nodes()) + " nodes, " + std::to_string(d.graph.num_edges()) +
      " edges");
  std::optional<SimilarityMatrix> sims;
  if (uses_similarity(ex.variant)) sims = cached_similarity(cfg, d, nullptr);
  const SimilarityMatrix* sp = sims ? &*sims : nullptr;

  const DataSplit split = experiment_split(d.labels, ex);
  RunReport report;
  Matrix embeddings;
  ParamStore params;
  if (ex.model == ModelKind::kGrace) {
    GraceRun run = train_grace(d.graph, d.features, ex, &d.labels, sp);
    const ProbeResult probe = linear_probe(run.embeddings, d.labels, split, ex.probe);
    report = std::move(run.report);
    report.accuracies = {probe.test_accuracy};
    report.accuracy_mean = probe.test_accuracy;
    embeddings = std::move(run.embeddings);
    params = std::move(run.params);
  } else {
    GraphMlpRun run = train_graphmlp(d.graph, d.features, d.labels, split, ex, sp);
    embeddings = mlp_forward(d.features, run.params).embeddings;
    report = std::move(run.report);
    params = std::move(run.params);
  }

  ensure_parent(cfg.output.embeddings);
  ensure_parent(cfg.output.report);
  ensure_parent(cfg.output.checkpoint);
  write_embeddings_csv(cfg.output.embeddings, embeddings);
  write_report_jsonl(cfg.output.report, report);
  save_checkpoint(cfg.output.checkpoint, params, report.config_hash);
  if (!report.epochs.empty()) log("final loss " + format_double(report.epochs.back().loss));
  log("test accuracy " + format_double(report.accuracy_mean) + ", wrote " +
      cfg.output.embeddings.string() + " and " + cfg.output.report.string());
  return kExitOk;
}

int cmd_probe(const std::string& path, const std::string& embeddings_override) {
  const CliConfig cfg = load_cli_config(path);
  const Dataset d = load(cfg);
  const fs::path emb_path = embeddings_override.empty() ? cfg.output.embeddings : fs::path(embeddings_override);
  const Matrix emb = read_embeddings_csv(emb_path);
  if (emb.rows() != d.labels.size()) {
    throw InputError("embedding file " + emb_path.string() + " has " + std::to_string(emb.rows()) +
                     " rows but the dataset has " + std::to_string(d.labels.size()) + " nodes");
  }
  const DataSplit split = experiment_split(d.labels, cfg.experiment);
  const ProbeResult r = linear_probe(emb, d.labels, split, cfg.experiment.probe);
  std::cout << "val_acc=" << format_double(r.val_accuracy)
            << " test_acc=" << format_double(r.test_accuracy) << '\n';
  return kExitOk;
}

int cmd_ablate(const std::string& path) {
  const CliConfig cfg = load_cli_config(path);
  const Dataset d = load(cfg);
  ensure_parent(cfg.output.report);
  ensure_parent(cfg.output.table);
  bool first = true;
  const auto rows = run_ablation(d, cfg.experiment, cfg.seeds,
                                 [&](const ExperimentConfig& c, const RunReport& r) {
                                   log(to_string(c.variant) + " seed " + std::to_string(c.seed) +
                                       ": accuracy " + format_double(r.accuracy_mean));
                                   write_report_jsonl(cfg.output.report, r, !first);
                                   first = false;
                                 });
  write_ablation_csv(cfg.output.table, rows);
  log("wrote " + cfg.output.table.string());
  return kExitOk;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  const nlohmann::json j = read_json_file(spec_path);
  const SbmSpec spec = sbm_from_json(j, "spec");
  const Dataset d = gen_sbm(spec);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create directory " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);
  save_dataset(d, dir / "edges.tsv", dir / "features.csv", dir / "labels.txt");
  log("wrote " + std::to_string(d.graph.num_nodes()) + " nodes and " +
      std::to_string(d.graph.num_edges()) + " edges to " + out_dir);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-weighted graph contrastive learning"};
  app.require_subcommand(1);

  std::string config;
  std::string embeddings;
  std::string spec;
  std::string out_dir;

  auto* sim = app.add_subcommand("sim", "Compute and cache the fused similarity matrix");
  sim->add_option("config", config, "JSON config file")->required();
  auto* train = app.add_subcommand("train", "Train one model and write embeddings and a report");
  train->add_option("config", config, "JSON config file")->required();
  auto* probe = app.add_subcommand("probe", "Linear-probe stored embeddings");
  probe->add_option("config", config, "JSON config file")->required();
  probe->add_option("--embeddings", embeddings, "Embedding CSV (default: output.embeddings)");
  auto* ablate = app.add_subcommand("ablate", "Run the six-variant ablation over all seeds");
  ablate->add_option("config", config, "JSON config file")->required();
  auto* synth = app.add_subcommand("synth", "Write a synthetic block-model dataset");
  synth->add_option("spec", spec, "JSON block-model spec")->required();
  synth->add_option("out_dir", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*sim) return cmd_sim(config);
    if (*train) return cmd_train(config);
    if (*probe) return cmd_probe(config, embeddings);
    if (*ablate) return cmd_ablate(config);
    if (*synth) return cmd_synth(spec, out_dir);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
