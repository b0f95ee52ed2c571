#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "wgcl/errors.hpp"
#include "wgcl/weighting.hpp"

using namespace wgcl;

namespace {

/// Anchor 0 with the given similarities to candidates 1..k.
SimilarityMatrix anchor_row(const std::vector<double>& sims) {
  const std::size_t n = sims.size() + 1;
  SimilarityMatrix s{Matrix(n, n), SimilarityKind::kFused};
  s.values(0, 0) = 1.0;
  for (std::size_t k = 0; k < sims.size(); ++k) {
    s.values(0, k + 1) = sims[k];
    s.values(k + 1, 0) = sims[k];
  }
  return s;
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(Transform, PositiveValues) {
  EXPECT_EQ(transform_pos(0.0, 0.5), 0.0);
  EXPECT_NEAR(transform_pos(0.3, 0.3), std::exp(1.0) - 1.0, 1e-15);
  EXPECT_NEAR(transform_pos(0.8, 0.4), 6.38905609893065, 1e-12);
}

TEST(Transform, PositiveExponentClampIsCounted) {
  WeightDiagnostics d;
  const double v = transform_pos(1.0, 1e-4, &d);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(d.exponent_clamps, 1u);
}

TEST(Transform, NegativeValues) {
  EXPECT_EQ(transform_neg(0.0, 0.5), 1.0);
  EXPECT_NEAR(transform_neg(0.7, 0.7), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(transform_neg(0.5, 0.25), 0.1353352832366127, 1e-15);
}

TEST(PositiveWeights, EqualSimilaritiesGiveOnes) {
  const auto s = anchor_row({0.3, 0.3, 0.3, 0.3});
  for (double w : positive_weights(0, s, range(1, 5), 0.5)) EXPECT_NEAR(w, 1.0, 1e-15);
}

TEST(PositiveWeights, ZeroAndPositive) {
  const auto s = anchor_row({0.0, 0.4});
  const auto w = positive_weights(0, s, range(1, 3), 0.5);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_NEAR(w[1], 2.0, 1e-15);
}

TEST(PositiveWeights, ThreeCandidateExample) {
  const auto s = anchor_row({0.2, 0.4, 0.6});
  const auto w = positive_weights(0, s, range(1, 4), 0.5);
  std::vector<double> t{std::exp(0.4) - 1, std::exp(0.8) - 1, std::exp(1.2) - 1};
  const double m = mean(t);
  EXPECT_NEAR(m, 1.3458, 1e-4);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(w[k], t[k] / m, 1e-14);
  EXPECT_NEAR(w[0], 0.3654, 1e-4);
  EXPECT_NEAR(w[1], 0.9106, 1e-4);
  EXPECT_NEAR(w[2], 1.7240, 1e-4);
  EXPECT_NEAR(mean(w), 1.0, 1e-15);
}

TEST(PositiveWeights, AllZeroFallsBackToUniform) {
  const auto s = anchor_row({0.0, 0.0, 0.0});
  WeightDiagnostics d;
  for (double w : positive_weights(0, s, range(1, 4), 0.5, &d)) EXPECT_EQ(w, 1.0);
  EXPECT_EQ(d.uniform_fallbacks, 1u);
}

TEST(PositiveWeights, HugeExponentsStayFinite) {
  const auto s = anchor_row({0.9, 0.95, 1.0});
  const auto w = positive_weights(0, s, range(1, 4), 1e-4);
  for (double v : w) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(mean(w), 1.0, 1e-12);
  EXPECT_NEAR(w[2], 3.0, 1e-9);
}

TEST(NegativeWeights, EqualSimilaritiesGiveOnes) {
  const auto s = anchor_row({0.7, 0.7, 0.7});
  for (double w : negative_weights(0, s, range(1, 4), 0.5)) EXPECT_NEAR(w, 1.0, 1e-15);
}

TEST(NegativeWeights, HugeTemperatureIsUniform) {
  const auto s = anchor_row({0.0, 0.3, 0.9, 1.0});
  for (double w : negative_weights(0, s, range(1, 5), 1e9)) EXPECT_NEAR(w, 1.0, 1e-6);
}

TEST(NegativeWeights, TwoCandidateExample) {
  const auto s = anchor_row({0.0, 1.0});
  const auto w = negative_weights(0, s, range(1, 3), 0.5);
  const double m = (1.0 + std::exp(-2.0)) / 2.0;
  EXPECT_NEAR(m, 0.56767, 1e-5);
  EXPECT_NEAR(w[0], 1.0 / m, 1e-14);
  EXPECT_NEAR(w[1], std::exp(-2.0) / m, 1e-14);
  EXPECT_NEAR(w[0], 1.7616, 1e-4);
  EXPECT_NEAR(w[1], 0.2384, 1e-4);
}

TEST(NegativeWeights, TinyTemperatureStaysFinite) {
  const auto s = anchor_row({0.5, 0.9, 1.0});
  const auto w = negative_weights(0, s, range(1, 4), 1e-5);
  for (double v : w) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(mean(w), 1.0, 1e-12);
  EXPECT_NEAR(w[0], 3.0, 1e-9);
}

TEST(Weights, MeanOneAndOrderOverRandomAnchors) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 2 + rng() % 30;
    std::vector<double> sims(k);
    for (double& v : sims) v = u(rng);
    const auto s = anchor_row(sims);
    const double tp = std::pow(10.0, -2.0 + 3.0 * u(rng));
    const double tn = std::pow(10.0, -2.0 + 3.0 * u(rng));
    const auto wp = positive_weights(0, s, range(1, k + 1), tp);
    const auto wn = negative_weights(0, s, range(1, k + 1), tn);
    EXPECT_NEAR(mean(wp), 1.0, 1e-12);
    EXPECT_NEAR(mean(wn), 1.0, 1e-12);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (sims[a] < sims[b]) {
          EXPECT_LE(wp[a], wp[b]);
          EXPECT_GE(wn[a], wn[b]);
        }
      }
    }
  }
}

TEST(Weights, StrictOrderAtModerateTemperature) {
  const auto s = anchor_row({0.1, 0.2, 0.35, 0.5});
  const auto wp = positive_weights(0, s, range(1, 5), 0.5);
  const auto wn = negative_weights(0, s, range(1, 5), 0.5);
  for (std::size_t k = 0; k + 1 < 4; ++k) {
    EXPECT_LT(wp[k], wp[k + 1]);
    EXPECT_GT(wn[k], wn[k + 1]);
  }
}

TEST(Weights, ConcentrationAndProportionalLimits) {
  const auto s = anchor_row({0.1, 0.3, 0.35, 0.42});
  const auto sharp = positive_weights(0, s, range(1, 5), 1e-3);
  const double total = std::accumulate(sharp.begin(), sharp.end(), 0.0);
  EXPECT_GE(sharp[3] / total, 0.999);

  const auto flat = positive_weights(0, s, range(1, 5), 1e6);
  const double m = (0.1 + 0.3 + 0.35 + 0.42) / 4.0;
  const std::vector<double> sims{0.1, 0.3, 0.35, 0.42};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(flat[k] / (sims[k] / m), 1.0, 1e-4);
  }
}

TEST(Weights, OrderOfCandidatesDoesNotMatter) {
  const auto s = anchor_row({0.1, 0.5, 0.2, 0.9});
  const std::vector<std::size_t> a{1, 2, 3, 4};
  const std::vector<std::size_t> b{4, 2, 1, 3};
  const auto wa = positive_weights(0, s, a, 0.3);
  const auto wb = positive_weights(0, s, b, 0.3);
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t pos = std::find(b.begin(), b.end(), a[k]) - b.begin();
    EXPECT_NEAR(wa[k], wb[pos], 1e-15);
  }
}

TEST(Weights, ErrorsOnBadInput) {
  const auto s = anchor_row({0.1, 0.2});
  EXPECT_THROW(positive_weights(0, s, range(1, 3), 0.0), ConfigError);
  EXPECT_THROW(negative_weights(0, s, range(1, 3), -1.0), ConfigError);
  EXPECT_THROW(positive_weights(0, s, {}, 0.5), InputError);
  EXPECT_THROW(positive_weights(0, s, std::vector<std::size_t>{7}, 0.5), InputError);
}

TEST(WeightSet, CombinesBothSides) {
  const auto s = anchor_row({0.1, 0.2, 0.3});
  CandidateSets sets{range(1, 4), range(1, 4)};
  const auto ws = compute_weight_set(0, s, sets, {0.5, 0.5});
  EXPECT_EQ(ws.positive, positive_weights(0, s, sets.positives, 0.5));
  EXPECT_EQ(ws.negative, negative_weights(0, s, sets.negatives, 0.5));
}

TEST(WeightTable, ExcludesSelfFromNegatives) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(6, 3, rng);
  SimilarityMatrix s{Matrix(6, 6), SimilarityKind::kFused};
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) s.values(i, j) = std::max(0.0, oracle::cosine(x, i, j));
  }
  const std::vector<std::size_t> nodes{0, 2, 3, 5};
  for (bool self : {true, false}) {
    const WeightTable t = weight_table(s, nodes, {0.5, 0.5}, self);
    for (std::size_t a = 0; a < 4; ++a) {
      EXPECT_EQ(t.negative(a, a), 0.0);
      if (!self) EXPECT_EQ(t.positive(a, a), 0.0);
      double sp = 0.0, sn = 0.0;
      for (std::size_t c = 0; c < 4; ++c) {
        sp += t.positive(a, c);
        sn += t.negative(a, c);
      }
      EXPECT_NEAR(sp, self ? 4.0 : 3.0, 1e-12);
      EXPECT_NEAR(sn, 3.0, 1e-12);
    }
  }
}

TEST(LabelWeightTable, SameClassSharesPositiveMass) {
  const LabelVector labels{0, 0, 1, 1, 1};
  const std::vector<std::size_t> nodes{0, 1, 2, 3, 4};
  const WeightTable t = label_weight_table(labels, nodes, false);
  EXPECT_EQ(t.positive(0, 2), 0.0);
  EXPECT_NEAR(t.positive(0, 1), 4.0, 1e-15);
  EXPECT_NEAR(t.negative(0, 2), 4.0 / 3.0, 1e-15);
  EXPECT_EQ(t.negative(0, 1), 0.0);
  EXPECT_NEAR(t.positive(2, 3), 2.0, 1e-15);
}
