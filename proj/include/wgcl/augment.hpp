#pragma once

#include <cstdint>
#include <utility>

#include "wgcl/graph.hpp"
#include "wgcl/rng.hpp"

namespace wgcl {

struct AugmentConfig {
  double p_edge = 0.2;
  double p_feat = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct View {
  Graph graph;
  FeatureMatrix features;
  std::uint64_t seed = 0;
};

/// Removes each undirected edge independently with probability p.
Graph drop_edges(const Graph& g, double p, Rng& rng);

/// Zeroes each feature column with probability p; one mask for all rows.
FeatureMatrix mask_features(const FeatureMatrix& x, double p, Rng& rng);

View make_view(const Graph& g, const FeatureMatrix& x, const AugmentConfig& cfg);

/// Two augmentations. Each view uses its own sub-stream of its config's
/// seed, so the pair stays independent even when both seeds coincide.
std::pair<View, View> make_views(const Graph& g, const FeatureMatrix& x,
                                 const AugmentConfig& cfg1, const AugmentConfig& cfg2);

}  // namespace wgcl
