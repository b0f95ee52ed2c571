#include "wgcl/config.hpp"

#include <fstream>
#include <set>

#include "wgcl/errors.hpp"

namespace wgcl {

using nlohmann::json;

namespace {

bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

/// Reads fields of one JSON object and rejects any key it never consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + "." + key + ": unknown key");
    }
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0) {
            throw ConfigError("");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError("");
      }
      out = v->get<T>();
    } catch (const ConfigError&) {
      throw ConfigError(field(key) + ": wrong type (got " + std::string(v->type_name()) + ")");
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type (got " + std::string(v->type_name()) + ")");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + msg);
  }
}

json to_json(const SimilarityConfig& s) {
  json j;
  j["alpha_ppr"] = s.alpha_ppr;
  j["iterations"] = s.iterations;
  j["structural_mode"] = to_string(s.structural_mode);
  j["beta"] = s.beta;
  j["gamma"] = s.gamma ? json(*s.gamma) : json("auto");
  j["clamp_nonnegative"] = s.clamp_nonnegative;
  return j;
}

SimilarityConfig similarity_from_json(const json& j, const std::string& path) {
  SimilarityConfig s;
  ObjectReader r(j, path);
  r.get("alpha_ppr", s.alpha_ppr);
  r.get("iterations", s.iterations);
  if (const json* m = r.find("structural_mode")) {
    if (!m->is_string()) throw ConfigError(r.field("structural_mode") + ": expected a string");
    with_path(r.field("structural_mode"),
              [&] { s.structural_mode = structural_mode_from_string(m->get<std::string>()); });
  }
  r.get("beta", s.beta);
  if (const json* g = r.find("gamma")) {
    if (g->is_string() && g->get<std::string>() == "auto") {
      s.gamma.reset();
    } else if (g->is_number()) {
      s.gamma = g->get<double>();
    } else {
      throw ConfigError(r.field("gamma") + ": expected \"auto\" or a number");
    }
  }
  r.get("clamp_nonnegative", s.clamp_nonnegative);
  with_path(path, [&] { s.validate(); });
  return s;
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["variant"] = to_string(c.variant);
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["hidden"] = c.hidden;
  j["projection"] = c.projection;
  j["intra_view_negatives"] = c.intra_view_negatives;
  j["similarity"] = to_json(c.similarity);
  j["temperatures"] = {{"tau_pos", c.temperatures.tau_pos}, {"tau_neg", c.temperatures.tau_neg}};
  j["objective"] = {{"tau", c.objective.tau},
                    {"l", c.objective.l},
                    {"q", c.objective.q},
                    {"nc_hops", c.objective.nc_hops},
                    {"lambda_nc", c.objective.lambda_nc}};
  j["augment"] = json::array();
  for (const auto& a : c.augment) j["augment"].push_back({{"p_edge", a.p_edge}, {"p_feat", a.p_feat}});
  j["split"] = {{"mode", c.split.mode == SplitSpec::Mode::kRatio ? "ratio" : "per_class"},
                {"train", c.split.train},
                {"val", c.split.val},
                {"test", c.split.test},
                {"per_class", c.split.per_class},
                {"stratified", c.split.stratified}};
  j["probe"] = {{"lr", c.probe.lr},
                {"l2", c.probe.l2},
                {"iterations", c.probe.iterations},
                {"eval_every", c.probe.eval_every}};
  return j;
}

ExperimentConfig experiment_from_json(const json& j, const std::string& path) {
  ExperimentConfig c;
  ObjectReader r(j, path);
  std::string s;
  if (r.find("model")) {
    s = to_string(c.model);
    r.get("model", s);
    with_path(r.field("model"), [&] { c.model = model_from_string(s); });
  }
  if (r.find("variant")) {
    s = to_string(c.variant);
    r.get("variant", s);
    with_path(r.field("variant"), [&] { c.variant = variant_from_string(s); });
  }
  r.get("seed", c.seed);
  r.get("epochs", c.epochs);
  r.get("lr", c.lr);
  r.get("weight_decay", c.weight_decay);
  r.get("batch_size", c.batch_size);
  r.get("hidden", c.hidden);
  r.get("projection", c.projection);
  r.get("intra_view_negatives", c.intra_view_negatives);
  if (const json* v = r.find("similarity")) c.similarity = similarity_from_json(*v, r.field("similarity"));
  if (const json* v = r.find("temperatures")) {
    ObjectReader t(*v, r.field("temperatures"));
    t.get("tau_pos", c.temperatures.tau_pos);
    t.get("tau_neg", c.temperatures.tau_neg);
  }
  if (const json* v = r.find("objective")) {
    ObjectReader o(*v, r.field("objective"));
    o.get("tau", c.objective.tau);
    o.get("l", c.objective.l);
    o.get("q", c.objective.q);
    o.get("nc_hops", c.objective.nc_hops);
    o.get("lambda_nc", c.objective.lambda_nc);
  }
  if (const json* v = r.find("augment")) {
    if (!v->is_array() || v->size() != 2) {
      throw ConfigError(r.field("augment") + ": expected an array of two view settings");
    }
    for (std::size_t k = 0; k < 2; ++k) {
      ObjectReader a((*v)[k], r.field("augment") + "[" + std::to_string(k) + "]");
      a.get("p_edge", c.augment[k].p_edge);
      a.get("p_feat", c.augment[k].p_feat);
    }
  }
  if (const json* v = r.find("split")) {
    ObjectReader sp(*v, r.field("split"));
    std::string mode = c.split.mode == SplitSpec::Mode::kRatio ? "ratio" : "per_class";
    sp.get("mode", mode);
    if (mode == "ratio") {
      c.split.mode = SplitSpec::Mode::kRatio;
    } else if (mode == "per_class") {
      c.split.mode = SplitSpec::Mode::kPerClass;
    } else {
      throw ConfigError(sp.field("mode") + ": expected \"ratio\" or \"per_class\"");
    }
    sp.get("train", c.split.train);
    sp.get("val", c.split.val);
    sp.get("test", c.split.test);
    sp.get("per_class", c.split.per_class);
    sp.get("stratified", c.split.stratified);
  }
  if (const json* v = r.find("probe")) {
    ObjectReader p(*v, r.field("probe"));
    p.get("lr", c.probe.lr);
    p.get("l2", c.probe.l2);
    p.get("iterations", c.probe.iterations);
    p.get("eval_every", c.probe.eval_every);
  }
  with_path(path, [&] { c.validate(); });
  return c;
}

json to_json(const SbmSpec& s) {
  return {{"block_sizes", s.block_sizes}, {"p_in", s.p_in},           {"p_out", s.p_out},
          {"feature_dim", s.feature_dim}, {"mean_norm", s.mean_norm}, {"noise", s.noise},
          {"seed", s.seed}};
}

SbmSpec sbm_from_json(const json& j, const std::string& path) {
  SbmSpec s;
  ObjectReader r(j, path);
  if (const json* b = r.find("block_sizes")) {
    if (!b->is_array()) throw ConfigError(r.field("block_sizes") + ": expected an array");
    s.block_sizes.clear();
    for (const auto& e : *b) {
      if (!is_non_negative_integer(e) || e.get<long long>() == 0) {
        throw ConfigError(r.field("block_sizes") + ": entries must be positive integers");
      }
      s.block_sizes.push_back(e.get<std::size_t>());
    }
  }
  r.get("p_in", s.p_in);
  r.get("p_out", s.p_out);
  r.get("feature_dim", s.feature_dim);
  r.get("mean_norm", s.mean_norm);
  r.get("noise", s.noise);
  r.get("seed", s.seed);
  with_path(path, [&] { s.validate(); });
  return s;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

CliConfig cli_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  CliConfig c;
  ObjectReader r(j, "config");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base_dir / fp;
  };
  if (const json* d = r.find("data")) {
    ObjectReader dr(*d, "config.data");
    DataPaths paths;
    std::string e, f, l;
    dr.get("edges", e);
    dr.get("features", f);
    dr.get("labels", l);
    for (auto [key, val] : {std::pair{"edges", &e}, {"features", &f}, {"labels", &l}}) {
      if (val->empty()) throw ConfigError(dr.field(key) + ": required path missing");
    }
    paths.edges = resolve(e);
    paths.features = resolve(f);
    paths.labels = resolve(l);
    c.data = paths;
  }
  if (const json* s = r.find("synthetic")) c.synthetic = sbm_from_json(*s, "config.synthetic");
  if (c.data.has_value() == c.synthetic.has_value()) {
    throw ConfigError("config: exactly one of \"data\" and \"synthetic\" must be given");
  }
  if (const json* o = r.find("output")) {
    ObjectReader orr(*o, "config.output");
    std::string dir, sim, emb, rep, tab, ckpt;
    orr.get("dir", dir);
    orr.get("similarity_cache", sim);
    orr.get("embeddings", emb);
    orr.get("report", rep);
    orr.get("table", tab);
    orr.get("checkpoint", ckpt);
    if (!dir.empty()) c.output.dir = dir;
    c.output.dir = resolve(c.output.dir.string());
    auto pick = [&](const std::string& v, const char* def) {
      return v.empty() ? c.output.dir / def : resolve(v);
    };
    c.output.similarity_cache = pick(sim, "similarity.bin");
    c.output.embeddings = pick(emb, "embeddings.csv");
    c.output.report = pick(rep, "report.jsonl");
    c.output.table = pick(tab, "ablation.csv");
    c.output.checkpoint = pick(ckpt, "checkpoint.bin");
  } else {
    c.output.dir = resolve("out");
    c.output.similarity_cache = c.output.dir / "similarity.bin";
    c.output.embeddings = c.output.dir / "embeddings.csv";
    c.output.report = c.output.dir / "report.jsonl";
    c.output.table = c.output.dir / "ablation.csv";
    c.output.checkpoint = c.output.dir / "checkpoint.bin";
  }
  if (const json* e = r.find("experiment")) c.experiment = experiment_from_json(*e, "config.experiment");
  if (const json* s = r.find("seeds")) {
    if (!s->is_array() || s->empty()) throw ConfigError("config.seeds: expected a non-empty array");
    c.seeds.clear();
    for (const auto& v : *s) {
      if (!is_non_negative_integer(v)) throw ConfigError("config.seeds: entries must be non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  return c;
}

CliConfig load_cli_config(const std::filesystem::path& path) {
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cli_config_from_json(read_json_file(path), base);
}

}  // namespace wgcl
