#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "wgcl/errors.hpp"
#include "wgcl/objectives.hpp"

using namespace wgcl;

namespace {

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

Matrix unit_rows(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  return oracle::normalize_rows(oracle::random_matrix(n, d, rng));
}

/// Central-difference check of an analytic gradient with respect to `x`.
template <typename F>
double fd_rel_error(Matrix x, const Matrix& grad, F loss) {
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x.flat()[k];
    x.flat()[k] = saved + h;
    const double up = loss(x);
    x.flat()[k] = saved - h;
    const double down = loss(x);
    x.flat()[k] = saved;
    const double num = (up - down) / (2 * h);
    const double g = grad.flat()[k];
    worst = std::max(worst, std::abs(num - g) / std::max(1.0, std::abs(num) + std::abs(g)));
  }
  return worst;
}

double straight_enhanced(const Matrix& e, std::size_t a, std::size_t c,
                         const std::vector<std::size_t>& vm, const std::vector<double>& wp,
                         const std::vector<std::size_t>& vn, const std::vector<double>& wn,
                         double tau) {
  double num = 0.0;
  for (std::size_t k = 0; k < vm.size(); ++k) num += wp[k] * std::exp(oracle::dot_rows(e, a, vm[k]) / tau);
  double den = std::exp(oracle::dot_rows(e, a, c) / tau);
  for (std::size_t k = 0; k < vn.size(); ++k) den += wn[k] * std::exp(oracle::dot_rows(e, a, vn[k]) / tau);
  return -std::log(num / den);
}

}  // namespace

TEST(InfoNce, IdenticalVectorsGiveLog2) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}});
  const std::vector<std::size_t> neg{2};
  EXPECT_NEAR(infonce(e, 0, 1, neg, 0.5).value, std::log(2.0), 1e-15);
}

TEST(InfoNce, NoNegativesIsZero) {
  const Matrix e = Matrix::from_rows({{1, 0}, {0, 1}});
  const auto r = infonce(e, 0, 1, {}, 0.5);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.grad, Matrix(2, 2));
}

TEST(InfoNce, TwoTermSoftmax) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {-1, 0}});
  const std::vector<std::size_t> neg{2};
  const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)));
  EXPECT_NEAR(expected, 0.126928, 1e-6);
  EXPECT_NEAR(infonce(e, 0, 1, neg, 1.0).value, expected, 1e-15);
}

TEST(InfoNce, StableAtTinyTemperature) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<std::size_t> neg{2};
  const auto r = infonce(e, 0, 1, neg, 1e-4);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_GE(r.value, 0.0);
  EXPECT_TRUE(all_finite(r.grad));
}

TEST(IdealLoss, SingletonPairHasZeroLoss) {
  // Row 1 is both the same-class partner and the counterpart.
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}});
  const LabelVector labels{0, 0};
  const auto pop = range(0, 2);
  EXPECT_NEAR(ideal_loss(e, pop, labels, 0, 1, 1.0).value, 0.0, 1e-15);
}

TEST(IdealLoss, LoneClassMemberIsSkipped) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}});
  const LabelVector labels{0, 1};
  const auto r = ideal_loss(e, range(0, 2), labels, 0, 1, 1.0);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.value, 0.0);
}

TEST(IdealLoss, ThreeNodes) {
  // Counterpart lives in an extra row so the population is exactly {A, A, B}.
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {1, 0}, {1, 0}});
  const LabelVector labels{0, 0, 1, 0};
  const std::vector<std::size_t> pop{0, 1, 2};
  // Numerator e; denominator counterpart e + different-label e.
  EXPECT_NEAR(ideal_loss(e, pop, labels, 0, 3, 1.0).value, std::log(2.0), 1e-15);
}

TEST(SampledIdeal, TwoTermEvaluation) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<std::size_t> pos{1};
  const std::vector<std::size_t> neg{2};
  EXPECT_NEAR(sampled_ideal_loss(e, 0, 1, pos, neg, 1.0, 1.0, 1.0).value,
              -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-15);
}

TEST(SampledIdeal, MatchesStraightLineOracle) {
  std::mt19937_64 rng(2);
  const Matrix e = unit_rows(12, 4, rng);
  const std::vector<std::size_t> pos{2, 3, 4, 5};
  const std::vector<std::size_t> neg{2, 3, 4, 5};
  const double l = 2.0, q = 2.0, tau = 0.7;
  double sp = 0.0;
  for (auto j : pos) sp += std::exp(oracle::dot_rows(e, 0, j) / tau);
  const double expected =
      -std::log((l / 4) * sp / (std::exp(oracle::dot_rows(e, 0, 1) / tau) + (q / 4) * sp));
  EXPECT_NEAR(sampled_ideal_loss(e, 0, 1, pos, neg, l, q, tau).value, expected, 1e-13);
}

TEST(SampledIdeal, DegenerateScalarsRejected) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<std::size_t> pos{1};
  const std::vector<std::size_t> neg{2};
  EXPECT_THROW(sampled_ideal_loss(e, 0, 1, pos, neg, 0.0, 0.0, 1.0), ConfigError);
  EXPECT_THROW(sampled_ideal_loss(e, 0, 1, {}, neg, 1.0, 1.0, 1.0), InputError);
}

TEST(ConvergenceGap, PointMassesHaveNoGap) {
  PlantedPopulation pop;
  pop.embeddings = Matrix(10, 2);
  pop.labels.assign(10, 0);
  for (std::size_t i = 0; i < 10; ++i) {
    const bool same = i < 5;
    pop.labels[i] = same ? 0 : 1;
    pop.embeddings(i, 0) = same ? 1.0 : 0.0;
    pop.embeddings(i, 1) = same ? 0.0 : 1.0;
  }
  pop.counterpart = {0.6, 0.8};
  pop.l = 5.0;
  pop.q = 5.0;
  Rng rng(1);
  for (std::size_t m : {1u, 7u, 50u}) {
    const GapStats g = theorem1_gap(pop, m, m + 3, 20, rng);
    EXPECT_LE(std::abs(g.gap), 1e-12);
  }
}

namespace {

PlantedPopulation planted(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.6);
  PlantedPopulation pop;
  pop.embeddings = Matrix(50, 4);
  pop.labels.resize(50);
  for (std::size_t i = 0; i < 50; ++i) {
    const int c = i < 25 ? 0 : 1;
    pop.labels[i] = c;
    for (std::size_t d = 0; d < 4; ++d) {
      pop.embeddings(i, d) = (static_cast<int>(d) == c ? 1.0 : 0.0) + noise(rng);
    }
  }
  pop.embeddings = oracle::normalize_rows(pop.embeddings);
  pop.anchor = 0;
  pop.counterpart = {pop.embeddings(1, 0), pop.embeddings(1, 1), pop.embeddings(1, 2),
                     pop.embeddings(1, 3)};
  pop.l = 25.0;
  pop.q = 25.0;
  return pop;
}

}  // namespace

TEST(ConvergenceGap, LargeSampleGapWithinThreeStandardErrors) {
  const PlantedPopulation pop = planted(3);
  Rng rng(derive_seed(0, "theorem1"));
  const GapStats g = theorem1_gap(pop, 1000, 1000, 200, rng);
  EXPECT_GT(g.standard_error, 0.0);
  EXPECT_LE(std::abs(g.gap), 3.0 * g.standard_error);
}

TEST(ConvergenceGap, GapShrinksWithSampleSize) {
  const PlantedPopulation pop = planted(4);
  std::vector<double> small, large;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(derive_seed(static_cast<std::uint64_t>(rep), "theorem1-rep"));
    small.push_back(std::abs(theorem1_gap(pop, 10, 10, 200, rng).gap));
    large.push_back(std::abs(theorem1_gap(pop, 1000, 1000, 200, rng).gap));
  }
  std::nth_element(small.begin(), small.begin() + 10, small.end());
  std::nth_element(large.begin(), large.begin() + 10, large.end());
  EXPECT_GE(small[10], large[10]);
}

TEST(EnhancedLoss, ReducesToInfoNce) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Matrix e = unit_rows(10, 5, rng);
    const std::vector<std::size_t> vm{1};
    const std::vector<double> wp{1.0};
    const auto vn = range(2, 10);
    const std::vector<double> wn(vn.size(), 1.0);
    const double tau = 0.2 + 0.1 * t;
    const auto a = enhanced_loss(e, 0, 1, vm, wp, vn, wn, tau);
    const auto b = infonce(e, 0, 1, vn, tau);
    EXPECT_NEAR(a.value, b.value, 1e-12);
    EXPECT_LE(max_abs_diff(a.grad, b.grad), 1e-12);
  }
}

TEST(EnhancedLoss, UnitWeightsMatchStraightLineOracle) {
  std::mt19937_64 rng(6);
  const Matrix e = unit_rows(15, 3, rng);
  const auto all = range(1, 15);
  const std::vector<double> ones(all.size(), 1.0);
  EXPECT_NEAR(enhanced_loss(e, 0, 14, all, ones, all, ones, 0.5).value,
              straight_enhanced(e, 0, 14, all, ones, all, ones, 0.5), 1e-13);
}

TEST(EnhancedLoss, DoublingPositiveWeightsShiftsByLog2) {
  std::mt19937_64 rng(7);
  const Matrix e = unit_rows(8, 3, rng);
  const auto vm = range(1, 5);
  const auto vn = range(4, 8);
  std::vector<double> wp{0.5, 1.5, 0.7, 1.3};
  const std::vector<double> wn{1.2, 0.8, 1.1, 0.9};
  const double base = enhanced_loss(e, 0, 1, vm, wp, vn, wn, 0.4).value;
  for (double& w : wp) w *= 2.0;
  EXPECT_NEAR(enhanced_loss(e, 0, 1, vm, wp, vn, wn, 0.4).value, base - std::log(2.0), 1e-13);
}

TEST(EnhancedLoss, HugeNegativeTemperatureMatchesUnitWeights) {
  std::mt19937_64 rng(8);
  const Matrix e = unit_rows(20, 4, rng);
  SimilarityMatrix s{Matrix(20, 20), SimilarityKind::kFused};
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) s.values(i, j) = std::max(0.0, oracle::cosine(e, i, j));
  }
  const auto vm = range(1, 10);
  const auto vn = range(2, 20);
  const auto wp = positive_weights(0, s, vm, 0.5);
  const auto wn = negative_weights(0, s, vn, 1e9);
  const std::vector<double> ones(vn.size(), 1.0);
  EXPECT_NEAR(enhanced_loss(e, 0, 1, vm, wp, vn, wn, 0.5).value,
              enhanced_loss(e, 0, 1, vm, wp, vn, ones, 0.5).value, 1e-6);
}

TEST(EnhancedLoss, ZeroPositiveMassIsSkipped) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<std::size_t> vm{2};
  const std::vector<double> wp{0.0};
  const std::vector<std::size_t> vn{2};
  const std::vector<double> wn{1.0};
  const auto r = enhanced_loss(e, 0, 1, vm, wp, vn, wn, 0.5);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.value, 0.0);
}

TEST(EnhancedLoss, RejectsBadWeights) {
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}});
  const std::vector<std::size_t> vm{2};
  const std::vector<double> bad{-1.0};
  const std::vector<double> ok{1.0};
  EXPECT_THROW(enhanced_loss(e, 0, 1, vm, bad, vm, ok, 0.5), InputError);
  EXPECT_THROW(enhanced_loss(e, 0, 1, vm, ok, vm, std::vector<double>{}, 0.5), InputError);
}

TEST(EnhancedLoss, CandidateOrderDoesNotMatter) {
  std::mt19937_64 rng(9);
  const Matrix e = unit_rows(9, 3, rng);
  std::vector<std::size_t> vm{2, 3, 4, 5};
  std::vector<double> wp{0.2, 1.4, 0.9, 1.5};
  std::vector<std::size_t> vn{5, 6, 7, 8};
  std::vector<double> wn{1.1, 0.3, 1.6, 1.0};
  const double base = enhanced_loss(e, 0, 1, vm, wp, vn, wn, 0.5).value;
  std::reverse(vm.begin(), vm.end());
  std::reverse(wp.begin(), wp.end());
  std::rotate(vn.begin(), vn.begin() + 1, vn.end());
  std::rotate(wn.begin(), wn.begin() + 1, wn.end());
  EXPECT_NEAR(enhanced_loss(e, 0, 1, vm, wp, vn, wn, 0.5).value, base, 1e-14);
}

TEST(EnhancedLoss, IdealIsNoWorseOnPlantedData) {
  // Same-class pairs sit closer together, so cosine weights agree with the
  // labels. The label oracle uses the same mean-1 weight mass as the soft
  // weights so both losses live on one scale.
  std::mt19937_64 rng(10);
  std::normal_distribution<double> noise(0.0, 0.5);
  double ideal_sum = 0.0, enhanced_sum = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t n = 24;
    Matrix e(n + 1, 4);
    LabelVector labels(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const int c = i == n ? 0 : static_cast<int>(i % 3);
      labels[i] = c;
      for (std::size_t d = 0; d < 4; ++d) e(i, d) = (static_cast<int>(d) == c ? 2.0 : 0.0) + noise(rng);
    }
    e = oracle::normalize_rows(e);
    // Row n is the anchor's counterpart.
    SimilarityMatrix s{Matrix(n + 1, n + 1), SimilarityKind::kFused};
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j <= n; ++j) s.values(i, j) = std::max(0.0, oracle::cosine(e, i, j));
    }
    const auto others = range(1, n);
    const auto wp = positive_weights(0, s, others, 0.5);
    const auto wn = negative_weights(0, s, others, 0.5);
    double same = 0.0;
    for (std::size_t j : others) same += labels[j] == 0;
    std::vector<double> lp, ln;
    for (std::size_t j : others) {
      const double k = static_cast<double>(others.size());
      lp.push_back(labels[j] == 0 ? k / same : 0.0);
      ln.push_back(labels[j] == 0 ? 0.0 : k / (k - same));
    }
    ideal_sum += enhanced_loss(e, 0, n, others, lp, others, ln, 0.5).value;
    enhanced_sum += enhanced_loss(e, 0, n, others, wp, others, wn, 0.5).value;
  }
  EXPECT_LE(ideal_sum / 100.0, enhanced_sum / 100.0);
}

TEST(NcLoss, ConnectedPairGivesLogOfAdjacency) {
  const std::vector<Edge> edges{{0, 1}};
  const NormalizedAdjacency a = normalized_adjacency(build_graph(edges, 2), true);
  const Matrix ar = dense_power(a, 2);
  const Matrix e = Matrix::from_rows({{1, 0}, {1, 0}});
  const std::vector<std::size_t> nodes{0, 1};
  EXPECT_NEAR(nc_loss(e, nodes, ar, 0.5).value, -std::log(ar(0, 1)), 1e-15);
}

TEST(NcLoss, FarApartBatchIsAllSkipped) {
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  const NormalizedAdjacency a = normalized_adjacency(build_graph(edges, 5), true);
  const Matrix ar = dense_power(a, 2);
  const Matrix e = Matrix::from_rows({{1, 0}, {0, 1}});
  const std::vector<std::size_t> nodes{0, 4};
  const auto r = nc_loss(e, nodes, ar, 0.5);
  EXPECT_EQ(r.skipped, 2u);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.grad, Matrix(2, 2));
}

TEST(NcLoss, CompleteGraphIdenticalEmbeddings) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i < 5; ++i) {
    for (NodeId j = i + 1; j < 5; ++j) edges.emplace_back(i, j);
  }
  const NormalizedAdjacency a = normalized_adjacency(build_graph(edges, 5), true);
  const Matrix ar = dense_power(a, 1);
  const Matrix e(5, 3, 1.0 / std::sqrt(3.0));
  const auto nodes = range(0, 5);
  EXPECT_NEAR(nc_loss(e, nodes, ar, 0.5).value, -std::log(ar(0, 1)), 1e-14);
}

TEST(EnhancedNc, UniformWeightsGiveZero) {
  std::mt19937_64 rng(11);
  const Matrix e = unit_rows(6, 3, rng);
  WeightTable w{Matrix(6, 6, 1.0), Matrix(6, 6, 1.0)};
  EXPECT_NEAR(enhanced_nc_loss(e, w, 0.5).value, 0.0, 1e-14);
}

TEST(EnhancedNc, InjectedPairWeights) {
  const Matrix e = Matrix::from_rows({{1, 0}, {0.6, 0.8}});
  WeightTable w{Matrix::from_rows({{0, 2}, {2, 0}}), Matrix::from_rows({{0, 1}, {1, 0}})};
  EXPECT_NEAR(enhanced_nc_loss(e, w, 0.5).value, -std::log(2.0), 1e-15);
}

TEST(EnhancedNc, MatchesNcUpToNormalizationShift) {
  std::mt19937_64 rng(12);
  const std::size_t n = 10;
  const auto edges = oracle::random_connected_edges(n, 0.2, rng);
  const NormalizedAdjacency a = normalized_adjacency(build_graph(edges, n), true);
  const Matrix ar = dense_power(a, 2);
  const Matrix e = unit_rows(n, 4, rng);
  const auto nodes = range(0, n);
  WeightTable w{Matrix(n, n), Matrix(n, n, 1.0)};
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += j == i ? 0.0 : ar(i, j);
    mean /= static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) w.positive(i, j) = j == i ? 0.0 : ar(i, j) / mean;
    w.negative(i, i) = 0.0;
    shift += std::log(mean);
  }
  shift /= static_cast<double>(n);
  const auto nc = nc_loss(e, nodes, ar, 0.5);
  const auto enc = enhanced_nc_loss(e, w, 0.5);
  EXPECT_EQ(nc.skipped, 0u);
  EXPECT_NEAR(enc.value, nc.value + shift, 1e-12);
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  const Matrix logits(4, 5, 0.3);
  const LabelVector labels{0, 1, 2, 3};
  const auto rows = range(0, 4);
  EXPECT_NEAR(cross_entropy(logits, labels, rows).value, std::log(5.0), 1e-15);
}

TEST(CrossEntropy, HugeMarginIsNearZero) {
  const Matrix logits = Matrix::from_rows({{1000, 0, 0}});
  const LabelVector labels{0};
  const std::vector<std::size_t> rows{0};
  const auto r = cross_entropy(logits, labels, rows);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_TRUE(all_finite(r.grad));
}

TEST(CrossEntropy, TwoClassClosedForm) {
  const Matrix logits = Matrix::from_rows({{1, 0}});
  const LabelVector labels{0};
  const std::vector<std::size_t> rows{0};
  EXPECT_NEAR(cross_entropy(logits, labels, rows).value, 0.313262, 1e-6);
  EXPECT_NEAR(cross_entropy(logits, labels, rows).value, std::log1p(std::exp(-1.0)), 1e-15);
}

TEST(CrossEntropy, Errors) {
  const Matrix logits(2, 2);
  const LabelVector labels{0, 5};
  EXPECT_THROW(cross_entropy(logits, labels, {}), InputError);
  const std::vector<std::size_t> rows{1};
  EXPECT_THROW(cross_entropy(logits, labels, rows), InputError);
}

TEST(CombinedLoss, Composition) {
  std::mt19937_64 rng(13);
  const Matrix logits = oracle::random_matrix(4, 3, rng);
  const LabelVector labels{0, 2, 1, 1};
  const auto rows = range(0, 4);
  const auto ce = cross_entropy(logits, labels, rows);
  const Matrix e = unit_rows(4, 3, rng);
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}};
  const Matrix ar = dense_power(normalized_adjacency(build_graph(edges, 4), true), 2);
  const auto nc = nc_loss(e, rows, ar, 0.5);

  const auto pure = combined_loss(ce, nc, 0.0);
  EXPECT_EQ(pure.value, ce.value);
  EXPECT_EQ(pure.d_embeddings, Matrix(4, 3));

  const LossResult zero{0.0, Matrix(4, 3), 0};
  EXPECT_EQ(combined_loss(ce, zero, 1.0).value, ce.value);

  const auto c = combined_loss(ce, nc, 0.7);
  EXPECT_NEAR(c.value, ce.value + 0.7 * nc.value, 1e-15);
  EXPECT_EQ(c.d_logits, ce.grad);
  EXPECT_LE(fd_rel_error(e, c.d_embeddings,
                         [&](const Matrix& x) { return 0.7 * nc_loss(x, rows, ar, 0.5).value; }),
            1e-4);
  EXPECT_THROW(combined_loss(ce, nc, -1.0), ConfigError);
}

TEST(Gradients, AllLossesPassFiniteDifferences) {
  std::mt19937_64 rng(14);
  const Matrix e = unit_rows(9, 4, rng);
  const double tau = 0.5;
  const auto neg = range(2, 9);
  {
    const auto r = infonce(e, 0, 1, neg, tau);
    EXPECT_LE(fd_rel_error(e, r.grad, [&](const Matrix& x) { return infonce(x, 0, 1, neg, tau).value; }),
              1e-4);
  }
  {
    const LabelVector labels{0, 1, 0, 1, 0, 1, 0, 2, 2};
    const auto pop = range(0, 8);
    const auto r = ideal_loss(e, pop, labels, 0, 8, tau);
    EXPECT_LE(fd_rel_error(e, r.grad,
                           [&](const Matrix& x) { return ideal_loss(x, pop, labels, 0, 8, tau).value; }),
              1e-4);
  }
  {
    const std::vector<std::size_t> pos{2, 3, 4};
    const std::vector<std::size_t> ng{5, 6, 7, 8};
    const auto r = sampled_ideal_loss(e, 0, 1, pos, ng, 3.0, 2.0, tau);
    EXPECT_LE(fd_rel_error(e, r.grad,
                           [&](const Matrix& x) {
                             return sampled_ideal_loss(x, 0, 1, pos, ng, 3.0, 2.0, tau).value;
                           }),
              1e-4);
  }
  {
    const std::vector<std::size_t> vm{1, 2, 3};
    const std::vector<double> wp{0.4, 1.1, 1.5};
    const std::vector<double> wn(neg.size(), 1.0);
    const auto r = enhanced_loss(e, 0, 1, vm, wp, neg, wn, tau);
    EXPECT_LE(fd_rel_error(e, r.grad,
                           [&](const Matrix& x) {
                             return enhanced_loss(x, 0, 1, vm, wp, neg, wn, tau).value;
                           }),
              1e-4);
  }
  {
    const auto edges = oracle::random_connected_edges(9, 0.2, rng);
    const Matrix ar = dense_power(normalized_adjacency(build_graph(edges, 9), true), 2);
    const auto nodes = range(0, 9);
    const auto r = nc_loss(e, nodes, ar, tau);
    EXPECT_LE(fd_rel_error(e, r.grad, [&](const Matrix& x) { return nc_loss(x, nodes, ar, tau).value; }),
              1e-4);
  }
  {
    WeightTable w{oracle::random_matrix(9, 9, rng), oracle::random_matrix(9, 9, rng)};
    for (double& v : w.positive.flat()) v = std::abs(v);
    for (double& v : w.negative.flat()) v = std::abs(v) + 0.1;
    const auto r = enhanced_nc_loss(e, w, tau);
    EXPECT_LE(fd_rel_error(e, r.grad, [&](const Matrix& x) { return enhanced_nc_loss(x, w, tau).value; }),
              1e-4);
  }
  {
    const Matrix logits = oracle::random_matrix(5, 3, rng);
    const LabelVector labels{0, 1, 2, 0, 1};
    const std::vector<std::size_t> rows{0, 2, 4};
    const auto r = cross_entropy(logits, labels, rows);
    EXPECT_LE(fd_rel_error(logits, r.grad,
                           [&](const Matrix& x) { return cross_entropy(x, labels, rows).value; }),
              1e-4);
  }
}

TEST(GraceLoss, UnweightedEqualsMeanInfoNce) {
  std::mt19937_64 rng(15);
  const std::size_t n = 6;
  const Matrix z1 = unit_rows(n, 3, rng);
  const Matrix z2 = unit_rows(n, 3, rng);
  Matrix stacked(2 * n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < 3; ++d) {
      stacked(i, d) = z1(i, d);
      stacked(n + i, d) = z2(i, d);
    }
  }
  const std::vector<std::size_t> batch{0, 2, 3, 5};
  for (bool intra : {false, true}) {
    double expected = 0.0;
    for (std::size_t view = 0; view < 2; ++view) {
      const std::size_t own = view * n, other = (1 - view) * n;
      for (std::size_t a : batch) {
        std::vector<std::size_t> negs;
        for (std::size_t c : batch) {
          if (c == a) continue;
          negs.push_back(other + c);
          if (intra) negs.push_back(own + c);
        }
        expected += infonce(stacked, own + a, other + a, negs, 0.5).value;
      }
    }
    expected /= 8.0;
    EXPECT_NEAR(grace_loss(z1, z2, batch, nullptr, nullptr, intra, 0.5).value, expected, 1e-13);
  }
}

TEST(GraceLoss, WeightedGradientsPassFiniteDifferences) {
  std::mt19937_64 rng(16);
  const std::size_t n = 5;
  const Matrix z1 = unit_rows(n, 3, rng);
  const Matrix z2 = unit_rows(n, 3, rng);
  Matrix wp = oracle::random_matrix(n, n, rng);
  Matrix wn = oracle::random_matrix(n, n, rng);
  for (double& v : wp.flat()) v = std::abs(v);
  for (double& v : wn.flat()) v = std::abs(v);
  const auto batch = range(0, n);
  const auto r = grace_loss(z1, z2, batch, &wp, &wn, true, 0.5);
  EXPECT_LE(fd_rel_error(z1, r.d_z1,
                         [&](const Matrix& x) {
                           return grace_loss(x, z2, batch, &wp, &wn, true, 0.5).value;
                         }),
            1e-4);
  EXPECT_LE(fd_rel_error(z2, r.d_z2,
                         [&](const Matrix& x) {
                           return grace_loss(z1, x, batch, &wp, &wn, true, 0.5).value;
                         }),
            1e-4);
}

TEST(AccumulateRatio, EmptyNumeratorAddsNothing) {
  const Matrix e = Matrix::from_rows({{1, 0}, {0, 1}});
  const std::vector<RatioTerm> terms{{1, 0.0, 1.0}};
  double value = 3.0;
  Matrix grad(2, 2);
  EXPECT_FALSE(accumulate_ratio(e, 0, terms, 0.5, 1.0, value, grad));
  EXPECT_EQ(value, 3.0);
  EXPECT_EQ(grad, Matrix(2, 2));
}

TEST(ObjectiveConfig, Validation) {
  ObjectiveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.nc_hops = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lambda_nc = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}
