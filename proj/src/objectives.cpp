#include "wgcl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wgcl/errors.hpp"

namespace wgcl {

void ObjectiveConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (l < 0.0 || q < 0.0) throw ConfigError("l and q must be non-negative");
  if (nc_hops < 1) throw ConfigError("nc_hops must be >= 1");
  if (!(lambda_nc >= 0.0)) throw ConfigError("lambda_nc must be >= 0");
}

bool accumulate_ratio(const Matrix& emb, std::size_t anchor, std::span<const RatioTerm> terms,
                      double tau, double scale, double& value, Matrix& grad) {
  const auto a = emb.row(anchor);
  std::vector<double> s(terms.size());
  double s_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < terms.size(); ++k) {
    s[k] = dot(a, emb.row(terms[k].row)) / tau;
    if (terms[k].num_weight > 0.0 || terms[k].den_weight > 0.0) s_max = std::max(s_max, s[k]);
  }
  if (s_max == -std::numeric_limits<double>::infinity()) return false;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    s[k] = std::exp(s[k] - s_max);
    num += terms[k].num_weight * s[k];
    den += terms[k].den_weight * s[k];
  }
  if (!(num > 0.0)) return false;
  if (!(den > 0.0)) throw InputError("contrastive denominator is empty");

  value += scale * (std::log(den) - std::log(num));

  auto ga = grad.row(anchor);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const double g =
        scale * (terms[k].den_weight * s[k] / den - terms[k].num_weight * s[k] / num) / tau;
    if (g == 0.0) continue;
    auto other = emb.row(terms[k].row);
    auto go = grad.row(terms[k].row);
    for (std::size_t j = 0; j < a.size(); ++j) {
      ga[j] += g * other[j];
      go[j] += g * a[j];
    }
  }
  return true;
}

namespace {

LossResult single_anchor(const Matrix& emb, std::size_t anchor,
                         const std::vector<RatioTerm>& terms, double tau) {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (anchor >= emb.rows()) throw InputError("anchor index out of range");
  for (const auto& t : terms) {
    if (t.row >= emb.rows()) throw InputError("candidate index out of range");
  }
  LossResult r{0.0, Matrix(emb.rows(), emb.cols()), 0};
  if (!accumulate_ratio(emb, anchor, terms, tau, 1.0, r.value, r.grad)) r.skipped = 1;
  return r;
}

void check_weights(std::span<const double> w, std::size_t expected, const char* what) {
  if (w.size() != expected) {
    throw InputError(std::string(what) + " weights do not match the candidate count");
  }
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError(std::string(what) + " weights must be finite and non-negative");
    }
  }
}

}  // namespace

LossResult infonce(const Matrix& emb, std::size_t anchor, std::size_t positive,
                   std::span<const std::size_t> negatives, double tau) {
  std::vector<RatioTerm> terms;
  terms.reserve(negatives.size() + 1);
  terms.push_back({positive, 1.0, 1.0});
  for (std::size_t k : negatives) terms.push_back({k, 0.0, 1.0});
  return single_anchor(emb, anchor, terms, tau);
}

LossResult ideal_loss(const Matrix& emb, std::span<const std::size_t> population,
                      const LabelVector& labels, std::size_t anchor, std::size_t counterpart,
                      double tau) {
  if (labels.size() < emb.rows()) throw InputError("ideal_loss: labels shorter than embeddings");
  std::vector<RatioTerm> terms;
  terms.reserve(population.size() + 1);
  terms.push_back({counterpart, 0.0, 1.0});
  for (std::size_t j : population) {
    if (j == anchor) continue;
    if (labels[j] == labels[anchor]) {
      terms.push_back({j, 1.0, 0.0});
    } else {
      terms.push_back({j, 0.0, 1.0});
    }
  }
  return single_anchor(emb, anchor, terms, tau);
}

LossResult sampled_ideal_loss(const Matrix& emb, std::size_t anchor, std::size_t counterpart,
                              std::span<const std::size_t> positives,
                              std::span<const std::size_t> negatives, double l, double q,
                              double tau) {
  if (!(l > 0.0) || !(q > 0.0)) throw ConfigError("sampled_ideal_loss needs l > 0 and q > 0");
  if (positives.empty() || negatives.empty()) {
    throw InputError("sampled_ideal_loss needs at least one positive and one negative sample");
  }
  const double pw = l / static_cast<double>(positives.size());
  const double nw = q / static_cast<double>(negatives.size());
  std::vector<RatioTerm> terms;
  terms.reserve(positives.size() + negatives.size() + 1);
  terms.push_back({counterpart, 0.0, 1.0});
  for (std::size_t j : positives) terms.push_back({j, pw, 0.0});
  for (std::size_t k : negatives) terms.push_back({k, 0.0, nw});
  return single_anchor(emb, anchor, terms, tau);
}

LossResult enhanced_loss(const Matrix& emb, std::size_t anchor, std::size_t counterpart,
                         std::span<const std::size_t> vm, std::span<const double> w_pos,
                         std::span<const std::size_t> vn, std::span<const double> w_neg,
                         double tau) {
  if (vm.empty()) throw InputError("enhanced_loss: positive candidate set is empty");
  check_weights(w_pos, vm.size(), "positive");
  check_weights(w_neg, vn.size(), "negative");
  std::vector<RatioTerm> terms;
  terms.reserve(vm.size() + vn.size() + 1);
  terms.push_back({counterpart, 0.0, 1.0});
  for (std::size_t k = 0; k < vm.size(); ++k) terms.push_back({vm[k], w_pos[k], 0.0});
  for (std::size_t k = 0; k < vn.size(); ++k) terms.push_back({vn[k], 0.0, w_neg[k]});
  return single_anchor(emb, anchor, terms, tau);
}

namespace {

template <typename WeightFn>
LossResult batch_contrast(const Matrix& batch_emb, double tau, WeightFn weights) {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  const std::size_t b = batch_emb.rows();
  LossResult r{0.0, Matrix(b, batch_emb.cols()), 0};
  std::vector<RatioTerm> terms;
  terms.reserve(b);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < b; ++i) {
    terms.clear();
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      auto [wn, wd] = weights(i, j);
      terms.push_back({j, wn, wd});
    }
    if (accumulate_ratio(batch_emb, i, terms, tau, 1.0, r.value, r.grad)) {
      ++kept;
    } else {
      ++r.skipped;
    }
  }
  if (kept > 0) {
    const double inv = 1.0 / static_cast<double>(kept);
    r.value *= inv;
    r.grad *= inv;
  }
  return r;
}

}  // namespace

LossResult nc_loss(const Matrix& batch_emb, std::span<const std::size_t> batch_nodes,
                   const Matrix& adj_power, double tau) {
  if (batch_nodes.size() != batch_emb.rows()) {
    throw InputError("nc_loss: batch index count differs from embedding rows");
  }
  for (std::size_t v : batch_nodes) {
    if (v >= adj_power.rows()) throw InputError("nc_loss: batch node out of range");
  }
  return batch_contrast(batch_emb, tau, [&](std::size_t i, std::size_t j) {
    return std::pair{adj_power(batch_nodes[i], batch_nodes[j]), 1.0};
  });
}

LossResult enhanced_nc_loss(const Matrix& batch_emb, const WeightTable& weights, double tau) {
  const std::size_t b = batch_emb.rows();
  if (weights.positive.rows() != b || weights.positive.cols() != b ||
      weights.negative.rows() != b || weights.negative.cols() != b) {
    throw InputError("enhanced_nc_loss: weight table does not match the batch");
  }
  return batch_contrast(batch_emb, tau, [&](std::size_t i, std::size_t j) {
    return std::pair{weights.positive(i, j), weights.negative(i, j)};
  });
}

LossResult cross_entropy(const Matrix& logits, const LabelVector& labels,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("cross_entropy: empty index set");
  LossResult r{0.0, Matrix(logits.rows(), logits.cols()), 0};
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (std::size_t i : rows) {
    const int y = labels.at(i);
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols()) {
      throw InputError("cross_entropy: label outside the logit range");
    }
    auto z = logits.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    r.value += inv * (lse - z[y]);
    auto g = r.grad.row(i);
    for (std::size_t c = 0; c < z.size(); ++c) g[c] = inv * std::exp(z[c] - lse);
    g[y] -= inv;
  }
  return r;
}

CombinedLoss combined_loss(const LossResult& ce, const LossResult& nc, double lambda_nc) {
  if (!(lambda_nc >= 0.0)) throw ConfigError("lambda_nc must be >= 0");
  CombinedLoss c;
  c.ce = ce.value;
  c.nc = nc.value;
  c.value = ce.value + lambda_nc * nc.value;
  c.d_logits = ce.grad;
  c.d_embeddings = nc.grad;
  c.d_embeddings *= lambda_nc;
  return c;
}

GraceLossResult grace_loss(const Matrix& z1, const Matrix& z2, std::span<const std::size_t> batch,
                           const Matrix* pos_weights, const Matrix* neg_weights, bool intra_view,
                           double tau) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) {
    throw InputError("grace_loss: views differ in shape");
  }
  const std::size_t n = z1.rows();
  const std::size_t b = batch.size();
  for (const Matrix* w : {pos_weights, neg_weights}) {
    if (w && (w->rows() != b || w->cols() != b)) {
      throw InputError("grace_loss: weight table does not match the batch");
    }
  }

  // Rows [0, n) hold view 1, rows [n, 2n) view 2.
  Matrix stacked(2 * n, z1.cols());
  std::copy(z1.flat().begin(), z1.flat().end(), stacked.flat().begin());
  std::copy(z2.flat().begin(), z2.flat().end(), stacked.flat().begin() + z1.size());

  GraceLossResult r;
  Matrix grad(2 * n, z1.cols());
  const double scale = 1.0 / static_cast<double>(2 * b);
  std::vector<RatioTerm> terms;
  terms.reserve(2 * b);

  for (int view = 0; view < 2; ++view) {
    const std::size_t own = view == 0 ? 0 : n;
    const std::size_t other = view == 0 ? n : 0;
    for (std::size_t a = 0; a < b; ++a) {
      terms.clear();
      for (std::size_t c = 0; c < b; ++c) {
        const double wp = pos_weights ? (*pos_weights)(a, c) : (c == a ? 1.0 : 0.0);
        const double wn = c == a ? 1.0 : (neg_weights ? (*neg_weights)(a, c) : 1.0);
        terms.push_back({other + batch[c], wp, wn});
      }
      if (intra_view) {
        for (std::size_t c = 0; c < b; ++c) {
          if (c == a) continue;
          terms.push_back({own + batch[c], 0.0, neg_weights ? (*neg_weights)(a, c) : 1.0});
        }
      }
      if (!accumulate_ratio(stacked, own + batch[a], terms, tau, scale, r.value, grad)) {
        ++r.skipped;
      }
    }
  }

  const std::size_t kept = 2 * b - r.skipped;
  if (r.skipped > 0 && kept > 0) {
    const double fix = static_cast<double>(2 * b) / static_cast<double>(kept);
    r.value *= fix;
    grad *= fix;
  }
  r.d_z1 = Matrix(n, z1.cols());
  r.d_z2 = Matrix(n, z1.cols());
  std::copy(grad.flat().begin(), grad.flat().begin() + z1.size(), r.d_z1.flat().begin());
  std::copy(grad.flat().begin() + z1.size(), grad.flat().end(), r.d_z2.flat().begin());
  return r;
}

GapStats theorem1_gap(const PlantedPopulation& pop, std::size_t m, std::size_t n,
                      std::size_t trials, Rng& rng) {
  if (m == 0 || n == 0 || trials == 0) throw ConfigError("theorem1_gap: m, n, trials must be > 0");
  const auto a = pop.embeddings.row(pop.anchor);
  std::vector<double> pos_vals;
  std::vector<double> neg_vals;
  for (std::size_t j = 0; j < pop.embeddings.rows(); ++j) {
    const double e = std::exp(dot(a, pop.embeddings.row(j)) / pop.tau);
    (pop.labels[j] == pop.labels[pop.anchor] ? pos_vals : neg_vals).push_back(e);
  }
  if (pos_vals.empty() || neg_vals.empty()) {
    throw InputError("theorem1_gap: population needs both classes");
  }
  const double counterpart = std::exp(dot(a, pop.counterpart) / pop.tau);

  double e_pos = 0.0;
  for (double v : pos_vals) e_pos += v;
  e_pos /= static_cast<double>(pos_vals.size());
  double e_neg = 0.0;
  for (double v : neg_vals) e_neg += v;
  e_neg /= static_cast<double>(neg_vals.size());

  GapStats st;
  st.closed_form = -std::log(pop.l * e_pos / (counterpart + pop.q * e_neg));

  std::uniform_int_distribution<std::size_t> pick_pos(0, pos_vals.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, neg_vals.size() - 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    double sp = 0.0;
    for (std::size_t k = 0; k < m; ++k) sp += pos_vals[pick_pos(rng)];
    double sn = 0.0;
    for (std::size_t k = 0; k < n; ++k) sn += neg_vals[pick_neg(rng)];
    const double v = -std::log((pop.l / static_cast<double>(m)) * sp /
                               (counterpart + (pop.q / static_cast<double>(n)) * sn));
    sum += v;
    sum_sq += v * v;
  }
  const double tn = static_cast<double>(trials);
  st.monte_carlo = sum / tn;
  const double var = trials > 1 ? std::max(0.0, (sum_sq - tn * st.monte_carlo * st.monte_carlo) /
                                                    (tn - 1.0))
                                : 0.0;
  st.standard_error = std::sqrt(var / tn);
  st.gap = st.monte_carlo - st.closed_form;
  return st;
}

}  // namespace wgcl
