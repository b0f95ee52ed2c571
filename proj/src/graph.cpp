#include "wgcl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "wgcl/errors.hpp"

namespace wgcl {

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> d(num_nodes());
  for (std::size_t v = 0; v < d.size(); ++v) d[v] = degree(static_cast<NodeId>(v));
  return d;
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

Graph build_graph(std::span<const Edge> edges, std::size_t n) {
  std::vector<Edge> both;
  both.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
    if (u == v) continue;
    both.emplace_back(u, v);
    both.emplace_back(v, u);
  }
  std::sort(both.begin(), both.end());
  both.erase(std::unique(both.begin(), both.end()), both.end());

  Graph g;
  g.indptr_.assign(n + 1, 0);
  g.indices_.reserve(both.size());
  for (auto [u, v] : both) {
    ++g.indptr_[u + 1];
    g.indices_.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) g.indptr_[i + 1] += g.indptr_[i];
  return g;
}

std::size_t num_classes(const LabelVector& labels) {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

Matrix NormalizedAdjacency::to_dense() const {
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = indptr[i]; k < indptr[i + 1]; ++k) d(i, indices[k]) = values[k];
  return d;
}

NormalizedAdjacency normalized_adjacency(const Graph& g, bool add_self_loops) {
  const std::size_t n = g.num_nodes();
  NormalizedAdjacency a;
  a.n = n;
  a.self_loops = add_self_loops;
  a.indptr.assign(n + 1, 0);

  std::vector<double> inv_sqrt(n, 0.0);
  for (NodeId v = 0; v < n; ++v) {
    const double deg = static_cast<double>(g.degree(v)) + (add_self_loops ? 1.0 : 0.0);
    inv_sqrt[v] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }

  for (NodeId u = 0; u < n; ++u) {
    auto nb = g.neighbors(u);
    bool self_done = !add_self_loops;
    for (NodeId v : nb) {
      if (!self_done && u < v) {
        a.indices.push_back(u);
        a.values.push_back(inv_sqrt[u] * inv_sqrt[u]);
        self_done = true;
      }
      a.indices.push_back(v);
      a.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
    }
    if (!self_done) {
      a.indices.push_back(u);
      a.values.push_back(inv_sqrt[u] * inv_sqrt[u]);
    }
    a.indptr[u + 1] = a.indices.size();
  }
  return a;
}

Matrix spmm(const NormalizedAdjacency& a, const Matrix& x) {
  if (x.rows() != a.n) {
    throw InputError("spmm: adjacency is " + std::to_string(a.n) + "x" +
                     std::to_string(a.n) + " but right operand has " +
                     std::to_string(x.rows()) + " rows");
  }
  Matrix out(a.n, x.cols());
  for (std::size_t i = 0; i < a.n; ++i) {
    auto dst = out.row(i);
    for (std::size_t k = a.indptr[i]; k < a.indptr[i + 1]; ++k) {
      const double w = a.values[k];
      auto src = x.row(a.indices[k]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

Matrix spmm_transposed(const NormalizedAdjacency& a, const Matrix& x) {
  if (x.rows() != a.n) throw InputError("spmm_transposed: dimension mismatch");
  Matrix out(a.n, x.cols());
  for (std::size_t i = 0; i < a.n; ++i) {
    auto src = x.row(i);
    for (std::size_t k = a.indptr[i]; k < a.indptr[i + 1]; ++k) {
      const double w = a.values[k];
      auto dst = out.row(a.indices[k]);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

Matrix dense_power(const NormalizedAdjacency& a, int r) {
  if (r < 0) throw ConfigError("dense_power: negative exponent");
  Matrix p = Matrix::identity(a.n);
  for (int k = 0; k < r; ++k) p = spmm(a, p);
  return p;
}

void validate_split(const DataSplit& split, std::size_t n) {
  std::vector<char> seen(n, 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= n) throw InputError("split index " + std::to_string(i) + " out of range");
      if (seen[i]) throw InputError("split index " + std::to_string(i) + " appears twice");
      seen[i] = 1;
    }
  }
}

namespace {

NodeId parse_node(std::string_view tok, const std::filesystem::path& path, std::size_t line) {
  NodeId v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": bad node id '" +
                     std::string(tok) + "'");
  }
  return v;
}

}  // namespace

Graph read_edge_list(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_id = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": expected 'u<TAB>v'");
    }
    std::string_view sv(line);
    const NodeId u = parse_node(sv.substr(0, tab), path, lineno);
    const NodeId v = parse_node(sv.substr(tab + 1), path, lineno);
    max_id = std::max<std::size_t>(max_id, std::max(u, v));
    edges.emplace_back(u, v);
  }
  if (n == 0 && !edges.empty()) n = max_id + 1;
  return build_graph(edges, n);
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write edge list " + path.string());
  for (auto [u, v] : g.edge_list()) out << u << '\t' << v << '\n';
  if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace wgcl
