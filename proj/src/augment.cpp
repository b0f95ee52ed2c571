#include "wgcl/augment.hpp"

#include "wgcl/errors.hpp"

namespace wgcl {

void AugmentConfig::validate() const {
  if (!(p_edge >= 0.0 && p_edge <= 1.0)) throw ConfigError("p_edge must lie in [0, 1]");
  if (!(p_feat >= 0.0 && p_feat <= 1.0)) throw ConfigError("p_feat must lie in [0, 1]");
}

Graph drop_edges(const Graph& g, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("edge drop probability must lie in [0, 1]");
  std::bernoulli_distribution drop(p);
  std::vector<Edge> kept;
  for (const Edge& e : g.edge_list()) {
    if (!drop(rng)) kept.push_back(e);
  }
  return build_graph(kept, g.num_nodes());
}

FeatureMatrix mask_features(const FeatureMatrix& x, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("feature mask probability must lie in [0, 1]");
  std::bernoulli_distribution mask(p);
  std::vector<char> zeroed(x.cols());
  for (auto& z : zeroed) z = mask(rng) ? 1 : 0;
  FeatureMatrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j)
      if (zeroed[j]) r[j] = 0.0;
  }
  return out;
}

View make_view(const Graph& g, const FeatureMatrix& x, const AugmentConfig& cfg) {
  cfg.validate();
  Rng edge_rng = make_rng(cfg.seed, "edges");
  Rng feat_rng = make_rng(cfg.seed, "features");
  return {drop_edges(g, cfg.p_edge, edge_rng), mask_features(x, cfg.p_feat, feat_rng), cfg.seed};
}

std::pair<View, View> make_views(const Graph& g, const FeatureMatrix& x,
                                 const AugmentConfig& cfg1, const AugmentConfig& cfg2) {
  AugmentConfig a = cfg1;
  AugmentConfig b = cfg2;
  a.seed = derive_seed(cfg1.seed, "view-1");
  b.seed = derive_seed(cfg2.seed, "view-2");
  View v1 = make_view(g, x, a);
  View v2 = make_view(g, x, b);
  v1.seed = cfg1.seed;
  v2.seed = cfg2.seed;
  return {std::move(v1), std::move(v2)};
}

}  // namespace wgcl
