#include "wgcl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "wgcl/errors.hpp"
#include "wgcl/rng.hpp"

namespace wgcl {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::ifstream open_in(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " file " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, const char* what) {
  std::ofstream out(path);
  if (!out) throw InputError(std::string("cannot write ") + what + " file " + path.string());
  return out;
}

double parse_double(std::string_view tok, const std::filesystem::path& path, std::size_t line) {
  while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\r')) tok.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty() || !std::isfinite(v)) {
    throw InputError(where(path, line) + ": non-numeric value '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<double> parse_csv_row(const std::string& line, const std::filesystem::path& path,
                                  std::size_t lineno) {
  std::vector<double> row;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto tok = std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    row.push_back(parse_double(tok, path, lineno));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return row;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  auto in = open_in(path, "feature");
  std::vector<double> flat;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = parse_csv_row(line, path, lineno);
    if (rows == 0) {
      cols = row.size();
    } else if (row.size() != cols) {
      throw InputError(where(path, lineno) + ": expected " + std::to_string(cols) +
                       " columns, found " + std::to_string(row.size()));
    }
    flat.insert(flat.end(), row.begin(), row.end());
    ++rows;
  }
  return Matrix(rows, cols, std::move(flat));
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& x) {
  auto out = open_out(path, "feature");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) out << ',';
      out << format_double(r[j]);
    }
    out << '\n';
  }
  if (!out) throw InputError("write failed for " + path.string());
}

LabelVector read_labels(const std::filesystem::path& path) {
  auto in = open_in(path, "label");
  LabelVector labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    int y = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), y);
    if (ec != std::errc{} || ptr != line.data() + line.size() || y < 0) {
      throw InputError(where(path, lineno) + ": bad label '" + line + "'");
    }
    labels.push_back(y);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const LabelVector& labels) {
  auto out = open_out(path, "label");
  for (int y : labels) out << y << '\n';
  if (!out) throw InputError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& edges, const std::filesystem::path& features,
                     const std::filesystem::path& labels) {
  Dataset d;
  d.labels = read_labels(labels);
  d.features = read_features_csv(features);
  const std::size_t n = d.labels.size();
  if (d.features.rows() != n) {
    throw InputError("feature file " + features.string() + " has " +
                     std::to_string(d.features.rows()) + " rows but label file " +
                     labels.string() + " has " + std::to_string(n) + " nodes");
  }
  if (!std::filesystem::exists(edges)) throw InputError("cannot open edge list " + edges.string());
  d.graph = read_edge_list(edges, n);
  if (d.graph.num_nodes() != n) {
    throw InputError("edge list " + edges.string() + " implies " +
                     std::to_string(d.graph.num_nodes()) + " nodes but label file has " +
                     std::to_string(n));
  }
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& edges,
                  const std::filesystem::path& features, const std::filesystem::path& labels) {
  write_edge_list(edges, d.graph);
  write_features_csv(features, d.features);
  write_labels(labels, d.labels);
}

void write_embeddings_csv(const std::filesystem::path& path, const Matrix& emb) {
  auto out = open_out(path, "embedding");
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    out << i;
    for (double v : emb.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw InputError("write failed for " + path.string());
}

Matrix read_embeddings_csv(const std::filesystem::path& path) {
  const Matrix raw = read_features_csv(path);
  if (raw.cols() < 2) throw InputError(path.string() + ": embedding rows need an id and values");
  Matrix emb(raw.rows(), raw.cols() - 1);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    if (raw(i, 0) != static_cast<double>(i)) {
      throw InputError(where(path, i + 1) + ": expected node id " + std::to_string(i));
    }
    for (std::size_t j = 1; j < raw.cols(); ++j) emb(i, j - 1) = raw(i, j);
  }
  return emb;
}

void SbmSpec::validate() const {
  if (block_sizes.empty()) throw ConfigError("SBM needs at least one block");
  for (auto s : block_sizes) {
    if (s < 1) throw ConfigError("SBM block sizes must be >= 1");
  }
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
    throw ConfigError("SBM edge probabilities must lie in [0, 1]");
  }
  if (feature_dim < 1) throw ConfigError("SBM feature_dim must be >= 1");
  if (!(noise >= 0.0) || !(mean_norm >= 0.0)) {
    throw ConfigError("SBM noise and mean_norm must be >= 0");
  }
}

Dataset gen_sbm(const SbmSpec& spec) {
  spec.validate();
  const std::size_t n = std::accumulate(spec.block_sizes.begin(), spec.block_sizes.end(),
                                        std::size_t{0});
  const std::size_t k = spec.block_sizes.size();
  Dataset d;
  d.labels.reserve(n);
  for (std::size_t b = 0; b < k; ++b) d.labels.insert(d.labels.end(), spec.block_sizes[b], static_cast<int>(b));

  Rng edge_rng = make_rng(spec.seed, "sbm-edges");
  std::bernoulli_distribution in_block(spec.p_in);
  std::bernoulli_distribution across(spec.p_out);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const bool same = d.labels[i] == d.labels[j];
      if (same ? in_block(edge_rng) : across(edge_rng)) edges.emplace_back(i, j);
    }
  }
  d.graph = build_graph(edges, n);

  Rng feat_rng = make_rng(spec.seed, "sbm-features");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t dim = spec.feature_dim;
  Matrix means(k, dim);
  for (double& v : means.flat()) v = gauss(feat_rng);
  const bool orthogonal = dim >= k;
  for (std::size_t c = 0; c < k; ++c) {
    auto mc = means.row(c);
    if (orthogonal) {
      for (std::size_t p = 0; p < c; ++p) {
        auto mp = means.row(p);
        const double proj = dot(mc, mp);
        for (std::size_t j = 0; j < dim; ++j) mc[j] -= proj * mp[j];
      }
    }
    const double nrm = norm2(mc);
    for (double& v : mc) v = nrm > 0.0 ? v / nrm : 0.0;
  }
  means *= spec.mean_norm;

  d.features = Matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = d.features.row(i);
    auto mean = means.row(static_cast<std::size_t>(d.labels[i]));
    for (std::size_t j = 0; j < dim; ++j) row[j] = mean[j] + spec.noise * gauss(feat_rng);
  }
  return d;
}

void SplitSpec::validate() const {
  for (double r : {train, val, test}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("split ratios must lie in [0, 1]");
  }
  if (train + val + test > 1.0 + 1e-12) throw ConfigError("split ratios sum to more than 1");
}

namespace {

std::size_t count_for(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

}  // namespace

DataSplit make_split(const LabelVector& labels, const SplitSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = labels.size();
  Rng rng = make_rng(seed, "split");
  DataSplit split;

  auto take = [](std::vector<std::size_t>& pool, std::size_t count, std::vector<std::size_t>& dst) {
    count = std::min(count, pool.size());
    dst.insert(dst.end(), pool.end() - static_cast<std::ptrdiff_t>(count), pool.end());
    pool.resize(pool.size() - count);
  };

  const std::size_t classes = num_classes(labels);
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

  if (spec.mode == SplitSpec::Mode::kPerClass) {
    std::vector<std::size_t> rest;
    for (std::size_t c = 0; c < classes; ++c) {
      auto pool = by_class[c];
      if (pool.size() < spec.per_class) {
        throw InputError("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                         " nodes, fewer than the " + std::to_string(spec.per_class) +
                         " training nodes requested");
      }
      take(pool, spec.per_class, split.train);
      rest.insert(rest.end(), pool.begin(), pool.end());
    }
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    take(rest, count_for(spec.test, n), split.test);
    take(rest, count_for(spec.val, n), split.val);
  } else if (spec.stratified) {
    for (std::size_t c = 0; c < classes; ++c) {
      auto pool = by_class[c];
      const std::size_t nc = pool.size();
      take(pool, count_for(spec.test, nc), split.test);
      take(pool, count_for(spec.val, nc), split.val);
      const std::size_t want = count_for(spec.train, nc);
      if (spec.train > 0.0 && (want == 0 || pool.empty())) {
        throw InputError("stratified split infeasible: class " + std::to_string(c) + " with " +
                         std::to_string(nc) + " nodes gets no training node");
      }
      take(pool, want, split.train);
    }
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    take(all, count_for(spec.test, n), split.test);
    take(all, count_for(spec.val, n), split.val);
    take(all, count_for(spec.train, n), split.train);
  }

  for (auto* part : {&split.train, &split.val, &split.test}) std::sort(part->begin(), part->end());
  return split;
}

}  // namespace wgcl
