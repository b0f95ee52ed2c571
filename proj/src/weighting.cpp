#include "wgcl/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wgcl/errors.hpp"

namespace wgcl {

namespace {

constexpr double kMaxExponent = 700.0;

std::vector<double> mean_normalize(std::vector<double> v, WeightDiagnostics* diag) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    if (diag) ++diag->uniform_fallbacks;
    std::fill(v.begin(), v.end(), 1.0);
    return v;
  }
  for (double& x : v) x /= mean;
  return v;
}

void check_candidates(const SimilarityMatrix& sims, std::size_t anchor,
                      std::span<const std::size_t> candidates) {
  if (candidates.empty()) throw InputError("candidate set is empty");
  if (anchor >= sims.size()) throw InputError("anchor index out of range");
  for (std::size_t c : candidates) {
    if (c >= sims.size()) throw InputError("candidate index out of range");
  }
}

}  // namespace

void TemperaturePair::validate() const {
  if (!(tau_pos > 0.0) || !std::isfinite(tau_pos)) {
    throw ConfigError("tau_pos must be positive and finite");
  }
  if (!(tau_neg > 0.0) || !std::isfinite(tau_neg)) {
    throw ConfigError("tau_neg must be positive and finite");
  }
}

double transform_pos(double s, double tau_pos, WeightDiagnostics* diag) {
  double e = s / tau_pos;
  if (e > kMaxExponent) {
    e = kMaxExponent;
    if (diag) ++diag->exponent_clamps;
  }
  return std::expm1(e);
}

double transform_neg(double s, double tau_neg) { return std::exp(-s / tau_neg); }

std::vector<double> positive_weights(std::size_t anchor, const SimilarityMatrix& sims,
                                     std::span<const std::size_t> candidates, double tau_pos,
                                     WeightDiagnostics* diag) {
  if (!(tau_pos > 0.0)) throw ConfigError("tau_pos must be positive");
  check_candidates(sims, anchor, candidates);
  double s_max = -std::numeric_limits<double>::infinity();
  for (std::size_t c : candidates) s_max = std::max(s_max, sims(anchor, c));

  std::vector<double> t(candidates.size());
  if (s_max / tau_pos <= kMaxExponent) {
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = std::expm1(sims(anchor, candidates[k]) / tau_pos);
  } else {
    // T(s)·exp(−s_max/τp); the shift cancels in the normalization.
    const double offset = std::exp(-s_max / tau_pos);
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = std::exp((sims(anchor, candidates[k]) - s_max) / tau_pos) - offset;
    }
  }
  for (double& v : t) v = std::max(v, 0.0);
  return mean_normalize(std::move(t), diag);
}

std::vector<double> negative_weights(std::size_t anchor, const SimilarityMatrix& sims,
                                     std::span<const std::size_t> candidates, double tau_neg,
                                     WeightDiagnostics* diag) {
  if (!(tau_neg > 0.0)) throw ConfigError("tau_neg must be positive");
  check_candidates(sims, anchor, candidates);
  double s_min = std::numeric_limits<double>::infinity();
  for (std::size_t c : candidates) s_min = std::min(s_min, sims(anchor, c));

  // exp(−(s − s_min)/τn) is D(s) up to a shared factor, and stays in (0, 1].
  std::vector<double> d(candidates.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    d[k] = std::exp(-(sims(anchor, candidates[k]) - s_min) / tau_neg);
  }
  return mean_normalize(std::move(d), diag);
}

WeightSet compute_weight_set(std::size_t anchor, const SimilarityMatrix& sims,
                             const CandidateSets& sets, const TemperaturePair& temps,
                             WeightDiagnostics* diag) {
  temps.validate();
  return {positive_weights(anchor, sims, sets.positives, temps.tau_pos, diag),
          negative_weights(anchor, sims, sets.negatives, temps.tau_neg, diag)};
}

WeightTable weight_table(const SimilarityMatrix& sims, std::span<const std::size_t> nodes,
                         const TemperaturePair& temps, bool self_positive,
                         WeightDiagnostics* diag) {
  temps.validate();
  const std::size_t b = nodes.size();
  if (b < 2) throw InputError("weight_table needs at least two nodes");
  WeightTable table{Matrix(b, b), Matrix(b, b)};

  std::vector<std::size_t> others;
  std::vector<std::size_t> others_pos;
  others.reserve(b - 1);
  for (std::size_t a = 0; a < b; ++a) {
    others.clear();
    others_pos.clear();
    for (std::size_t c = 0; c < b; ++c) {
      if (c == a) continue;
      others.push_back(nodes[c]);
      others_pos.push_back(c);
    }

    const auto neg = negative_weights(nodes[a], sims, others, temps.tau_neg, diag);
    for (std::size_t k = 0; k < neg.size(); ++k) table.negative(a, others_pos[k]) = neg[k];

    if (self_positive) {
      const auto pos = positive_weights(nodes[a], sims, nodes, temps.tau_pos, diag);
      std::copy(pos.begin(), pos.end(), table.positive.row(a).begin());
    } else {
      const auto pos = positive_weights(nodes[a], sims, others, temps.tau_pos, diag);
      for (std::size_t k = 0; k < pos.size(); ++k) table.positive(a, others_pos[k]) = pos[k];
    }
  }
  return table;
}

WeightTable label_weight_table(const LabelVector& labels, std::span<const std::size_t> nodes,
                               bool self_positive) {
  const std::size_t b = nodes.size();
  WeightTable table{Matrix(b, b), Matrix(b, b)};
  for (std::size_t a = 0; a < b; ++a) {
    const int ya = labels.at(nodes[a]);
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::size_t n_pos_cands = 0;
    for (std::size_t c = 0; c < b; ++c) {
      const bool same = labels.at(nodes[c]) == ya;
      if (c == a) {
        if (self_positive) {
          ++n_pos_cands;
          ++n_pos;
        }
        continue;
      }
      ++n_pos_cands;
      if (same) ++n_pos; else ++n_neg;
    }
    for (std::size_t c = 0; c < b; ++c) {
      const bool same = labels.at(nodes[c]) == ya;
      if (c != a || self_positive) {
        if (same && n_pos > 0) {
          table.positive(a, c) =
              static_cast<double>(n_pos_cands) / static_cast<double>(n_pos);
        }
      }
      if (c != a && !same && n_neg > 0) {
        table.negative(a, c) = static_cast<double>(b - 1) / static_cast<double>(n_neg);
      }
    }
  }
  return table;
}

}  // namespace wgcl
