#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "wgcl/matrix.hpp"

namespace wgcl {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected simple graph in CSR form with both directions stored.
///
/// Neighbor lists are sorted ascending, so two graphs built from the same edge
/// set compare equal regardless of input order.
class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const { return indptr_.empty() ? 0 : indptr_.size() - 1; }
  /// Number of undirected edges.
  std::size_t num_edges() const { return indices_.size() / 2; }

  std::size_t degree(NodeId v) const { return indptr_[v + 1] - indptr_[v]; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {indices_.data() + indptr_[v], degree(v)};
  }
  bool has_edge(NodeId u, NodeId v) const;

  std::vector<std::size_t> degrees() const;
  /// Undirected edges as (u, v) with u < v, in CSR order.
  std::vector<Edge> edge_list() const;

  std::span<const std::size_t> indptr() const { return indptr_; }
  std::span<const NodeId> indices() const { return indices_; }

  bool operator==(const Graph&) const = default;

 private:
  friend Graph build_graph(std::span<const Edge> edges, std::size_t n);

  std::vector<std::size_t> indptr_{0};
  std::vector<NodeId> indices_;
};

/// Symmetrizes, drops self-loops and duplicates. Throws InputError on an
/// endpoint outside [0, n).
Graph build_graph(std::span<const Edge> edges, std::size_t n);

/// Feature rows are nodes.
using FeatureMatrix = Matrix;
using LabelVector = std::vector<int>;

std::size_t num_classes(const LabelVector& labels);

/// Sparse D^{-1/2} A D^{-1/2}, optionally with A + I in place of A.
struct NormalizedAdjacency {
  std::size_t n = 0;
  bool self_loops = false;
  std::vector<std::size_t> indptr{0};
  std::vector<NodeId> indices;
  std::vector<double> values;

  Matrix to_dense() const;
};

NormalizedAdjacency normalized_adjacency(const Graph& g, bool add_self_loops);

/// Exact sparse-dense product a·x.
Matrix spmm(const NormalizedAdjacency& a, const Matrix& x);
/// aᵀ·x; equals spmm for the symmetric matrices built here but kept separate
/// so backward passes do not rely on symmetry.
Matrix spmm_transposed(const NormalizedAdjacency& a, const Matrix& x);

/// Dense r-th power of Â (r >= 0).
Matrix dense_power(const NormalizedAdjacency& a, int r);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Throws InputError when sets overlap or an index is out of range.
void validate_split(const DataSplit& split, std::size_t n);

/// Tab-separated "u\tv" lines, '#' comments, 0-indexed. When n is 0 the node
/// count is taken as one more than the largest endpoint.
Graph read_edge_list(const std::filesystem::path& path, std::size_t n = 0);
void write_edge_list(const std::filesystem::path& path, const Graph& g);

}  // namespace wgcl
