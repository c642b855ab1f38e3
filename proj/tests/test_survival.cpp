#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradtree/survival.hpp"
#include "oracles.hpp"

using namespace gradtree;

namespace {

std::vector<SurvivalLabel> observed(std::initializer_list<double> times) {
  std::vector<SurvivalLabel> out;
  for (double t : times) out.push_back({t, true});
  return out;
}

std::vector<std::uint8_t> bits(std::initializer_list<int> b) {
  std::vector<std::uint8_t> out;
  for (int v : b) out.push_back(static_cast<std::uint8_t>(v));
  return out;
}

}  // namespace

TEST(TimeGrid, BuildExamples) {
  const auto g = build_time_grid(observed({1, 2, 2, 3}));
  EXPECT_EQ(g.boundaries(), (Vector{1, 2, 3}));
  EXPECT_EQ(g.num_intervals(), 3u);
  EXPECT_EQ(build_time_grid(observed({4.5})).num_intervals(), 1u);
}

TEST(TimeGrid, CensoredTimesAreNotBoundaries) {
  const std::vector<SurvivalLabel> labels{{5, false}, {2, true}, {3, false}, {7, true}, {2, true}, {1, false}};
  EXPECT_EQ(build_time_grid(labels).boundaries(), (Vector{2, 7}));
}

TEST(TimeGrid, Errors) {
  EXPECT_THROW(build_time_grid(std::vector<SurvivalLabel>{{1, false}, {2, false}}), InvalidArgument);
  EXPECT_THROW(build_time_grid(std::vector<SurvivalLabel>{{-1, true}}), InvalidArgument);
  EXPECT_THROW(build_time_grid(std::vector<SurvivalLabel>{{0, true}}), InvalidArgument);
  EXPECT_THROW(TimeGrid(Vector{1, 1}), InvalidArgument);
  EXPECT_THROW(TimeGrid(Vector{}), InvalidArgument);
}

TEST(TimeGrid, IntervalOf) {
  const TimeGrid g(Vector{1, 2, 3});
  EXPECT_EQ(g.interval_of(0.5), 0u);
  EXPECT_EQ(g.interval_of(1.0), 0u);
  EXPECT_EQ(g.interval_of(1.999), 0u);
  EXPECT_EQ(g.interval_of(2.0), 1u);
  EXPECT_EQ(g.interval_of(2.5), 1u);
  EXPECT_EQ(g.interval_of(3.0), 2u);
  EXPECT_EQ(g.interval_of(1e9), 2u);
}

TEST(EncodeLabel, Examples) {
  const TimeGrid g(Vector{1, 2, 3});
  EXPECT_EQ(encode_survival_label({2.5, true}, g).members, bits({0, 1, 0}));
  EXPECT_EQ(encode_survival_label({1.5, false}, g).members, bits({0, 1, 1}));
  EXPECT_EQ(encode_survival_label({3.0, true}, g).members, bits({0, 0, 1}));
  EXPECT_EQ(encode_survival_label({9.0, true}, g).members, bits({0, 0, 1}));
  EXPECT_EQ(encode_survival_label({0.5, false}, g).members, bits({1, 1, 1}));
  EXPECT_EQ(encode_survival_label({2.0, false}, g).members, bits({0, 0, 1}));
  EXPECT_TRUE(encode_survival_label({3.0, false}, g).empty_set());
  EXPECT_TRUE(encode_survival_label({4.0, false}, g).empty_set());
}

TEST(EncodeLabel, ObservedIsOneHotCensoredIsSuffix) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 10);
  const TimeGrid g(Vector{1, 2.5, 4, 6, 8.5});
  for (int t = 0; t < 300; ++t) {
    const SurvivalLabel l{u(rng), t % 3 != 0};
    const auto y = encode_survival_label(l, g);
    std::size_t ones = 0;
    for (auto m : y.members) ones += m;
    if (l.event) {
      EXPECT_EQ(ones, 1u);
    } else {
      for (std::size_t j = 1; j < y.members.size(); ++j) EXPECT_LE(y.members[j - 1], y.members[j]);
      for (std::size_t j = 0; j < y.members.size(); ++j) EXPECT_EQ(y.members[j], l.time < g.boundaries()[j] ? 1 : 0);
    }
  }
}

TEST(KaplanMeier, NoCensoring) {
  const auto labels = observed({1, 2, 3, 4});
  const auto km = km_estimate(labels, build_time_grid(labels));
  EXPECT_EQ(km.survival, (Vector{0.75, 0.5, 0.25, 0.0}));
}

TEST(KaplanMeier, SingleEventAmongCensored) {
  // At t = 3 the risk set holds the samples with times 3, 4 and 5.
  const std::vector<SurvivalLabel> labels{{1, false}, {2, false}, {3, true}, {4, false}, {5, false}};
  const auto km = km_estimate(labels, build_time_grid(labels));
  ASSERT_EQ(km.survival.size(), 1u);
  EXPECT_DOUBLE_EQ(km.survival[0], 2.0 / 3.0);
  const TimeGrid wide(Vector{2, 3, 4});
  const auto s = km_estimate(labels, wide).survival;
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 2.0 / 3.0);
  EXPECT_EQ(s[2], s[1]);
}

TEST(KaplanMeier, SingleSample) {
  const auto labels = observed({5});
  const TimeGrid g(Vector{4, 5, 6});
  EXPECT_EQ(km_estimate(labels, g).survival, (Vector{1.0, 0.0, 0.0}));
}

TEST(KaplanMeier, HandProductLimit) {
  // Times 1(e) 2(c) 3(e) 3(e) 4(c) 5(e):
  // S(1) = 5/6, S(3) = 5/6 * (1 - 2/4) = 5/12, S(5) = 5/12 * (1 - 1/1) = 0.
  const std::vector<SurvivalLabel> labels{{3, true}, {1, true}, {4, false}, {2, false}, {5, true}, {3, true}};
  const auto km = km_estimate(labels, build_time_grid(labels));
  ASSERT_EQ(km.survival.size(), 3u);
  EXPECT_DOUBLE_EQ(km.survival[0], 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(km.survival[1], 5.0 / 12.0);
  EXPECT_DOUBLE_EQ(km.survival[2], 0.0);
}

TEST(KaplanMeier, EqualsEmpiricalWithoutCensoring) {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> t(1, 30);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<SurvivalLabel> labels;
    for (int i = 0; i < 40; ++i) labels.push_back({static_cast<double>(t(rng)), true});
    const TimeGrid g = build_time_grid(labels);
    const auto km = km_estimate(labels, g);
    for (std::size_t k = 0; k < g.num_intervals(); ++k)
      EXPECT_NEAR(km.survival[k], oracle::empirical_survival(labels, g.boundaries()[k]), 1e-12);
  }
}

TEST(KaplanMeier, MonotoneInUnitInterval) {
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> t(0.1, 10);
  std::bernoulli_distribution e(0.6);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<SurvivalLabel> labels;
    for (int i = 0; i < 30; ++i) labels.push_back({t(rng), e(rng)});
    labels.push_back({t(rng), true});
    const auto km = km_estimate(labels, build_time_grid(labels));
    double prev = 1.0;
    for (double s : km.survival) {
      EXPECT_LE(s, prev);
      EXPECT_GE(s, 0.0);
      prev = s;
    }
  }
}

TEST(IntervalProbabilities, Examples) {
  EXPECT_EQ(interval_probabilities(Vector{1.0, 0.5, 0.25}), (Vector{0.5, 0.25, 0.25}));
  EXPECT_EQ(interval_probabilities(Vector{1.0, 1.0, 1.0}), (Vector{0.0, 0.0, 1.0}));
  EXPECT_THROW(interval_probabilities(Vector{}), InvalidArgument);
}

TEST(IntervalProbabilities, FromCurve) {
  const TimeGrid g(Vector{1, 2, 3, 4});
  const KMCurve c{g, Vector{0.75, 0.5, 0.25, 0.0}};
  EXPECT_EQ(interval_probabilities(c), (Vector{0.25, 0.25, 0.25, 0.25}));
}

TEST(IntervalProbabilities, SumToOne) {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 100; ++rep) {
    Vector s(1 + rep % 12);
    s[0] = 1.0;
    for (std::size_t k = 1; k < s.size(); ++k) s[k] = s[k - 1] * u(rng);
    const Vector p = interval_probabilities(s);
    double total = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(PriorLogits, UniformGivesConstantLogits) {
  const Vector z = prior_logits(Vector{0.25, 0.25, 0.25, 0.25}, 1e-3);
  for (double v : z) EXPECT_EQ(v, z[0]);
  for (double s : softmax(z)) EXPECT_NEAR(s, 0.25, 1e-15);
}

TEST(PriorLogits, ClipsZeros) {
  const Vector s = softmax(prior_logits(Vector{0.5, 0.5, 0.0}, 1e-6));
  EXPECT_NEAR(s[0], 0.5, 1e-6);
  EXPECT_NEAR(s[1], 0.5, 1e-6);
  EXPECT_NEAR(s[2], 1e-6, 1e-6);
  EXPECT_LT(s[0], 0.5);
  EXPECT_GT(s[2], 0.0);
}

TEST(PriorLogits, RoundTripAndShift) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.01, 1), shift(-50, 50);
  for (int rep = 0; rep < 200; ++rep) {
    Vector p(2 + rep % 8);
    double total = 0.0;
    for (double& v : p) total += (v = u(rng));
    for (double& v : p) v /= total;
    Vector z = prior_logits(p, 1e-6);
    Vector s = softmax(z);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(s[k], p[k], 1e-9);
    const double c = shift(rng);
    for (double& v : z) v += c;
    s = softmax(z);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(s[k], p[k], 1e-9);
  }
}

TEST(PriorLogits, Errors) {
  EXPECT_THROW(prior_logits(Vector{0.5, 0.5}, 0.0), InvalidArgument);
  EXPECT_THROW(prior_logits(Vector{0.5, 0.5}, -1.0), InvalidArgument);
  EXPECT_THROW(prior_logits(Vector{0.5, 0.5}, 0.5), InvalidArgument);
  EXPECT_THROW(prior_logits(Vector{}, 1e-6), InvalidArgument);
  EXPECT_THROW(prior_logits(Vector{-0.1, 1.1}, 1e-6), InvalidArgument);
}

TEST(SurvivalCurve, AllMassFirst) {
  const TimeGrid g(Vector{1, 2, 3});
  const Vector z{50.0, -50.0, -50.0};
  EXPECT_NEAR(survival_at(z, g, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(survival_at(z, g, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(survival_at(z, g, 1.0001), 0.0, 1e-12);
  const auto c = survival_curve_from_logits(z, g);
  EXPECT_NEAR(c.survival[0], 0.0, 1e-12);
}

TEST(SurvivalCurve, UniformSteps) {
  const TimeGrid g(Vector{1, 2, 3, 4});
  const Vector z(4, 0.3);
  const auto c = survival_curve_from_logits(z, g);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(c.survival[k], 1.0 - 0.25 * static_cast<double>(k + 1), 1e-15);
  EXPECT_NEAR(survival_at(z, g, 2.5), 0.5, 1e-15);
  EXPECT_NEAR(survival_at(z, g, 100), 0.0, 1e-15);
  EXPECT_THROW(survival_at(Vector{0, 0}, g, 1.0), InvalidArgument);
  EXPECT_THROW(survival_curve_from_logits(Vector{0, 0}, g), InvalidArgument);
}

TEST(SurvivalCurve, ComplementsCumulativeMass) {
  std::mt19937_64 rng(48);
  std::normal_distribution<double> n(0, 2);
  const TimeGrid g(Vector{0.5, 1, 2, 3.5, 7, 9});
  for (int rep = 0; rep < 100; ++rep) {
    Vector z(6);
    for (double& v : z) v = n(rng);
    const Vector s = softmax(z);
    const auto c = survival_curve_from_logits(z, g);
    double mass = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      mass += s[k];
      EXPECT_NEAR(c.survival[k] + mass, 1.0, 1e-12);
    }
  }
}

TEST(Risk, EarlierMassIsRiskier) {
  const TimeGrid g(Vector{1, 2, 3, 4});
  EXPECT_GT(risk_from_probabilities(Vector{0.97, 0.01, 0.01, 0.01}, g),
            risk_from_probabilities(Vector{0.01, 0.01, 0.01, 0.97}, g));
  EXPECT_GT(risk_score(Vector{5, 0, 0, 0}, g), risk_score(Vector{0, 0, 0, 5}, g));
}

TEST(Risk, UniformOnSymmetricGrid) {
  const TimeGrid g(Vector{1, 2, 3, 4});
  const Vector rep = interval_representatives(g);
  EXPECT_EQ(rep, (Vector{1.5, 2.5, 3.5, 4.0}));
  const double mean = (1.5 + 2.5 + 3.5 + 4.0) / 4.0;
  EXPECT_DOUBLE_EQ(risk_from_probabilities(Vector(4, 0.25), g), -mean);
}

TEST(Risk, StochasticOrderGivesRiskOrder) {
  std::mt19937_64 rng(49);
  std::uniform_real_distribution<double> u(0, 1);
  const TimeGrid g(Vector{1, 2, 4, 5, 8});
  for (int rep = 0; rep < 100; ++rep) {
    // Move mass from an early interval to a later one: the result is stochastically later.
    Vector p(5);
    double total = 0.0;
    for (double& v : p) total += (v = u(rng) + 0.01);
    for (double& v : p) v /= total;
    Vector later = p;
    const double moved = 0.5 * later[1];
    later[1] -= moved;
    later[3] += moved;
    const Vector rep_t = interval_representatives(g);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      e1 += p[k] * rep_t[k];
      e2 += later[k] * rep_t[k];
    }
    EXPECT_DOUBLE_EQ(risk_from_probabilities(p, g), -e1);
    EXPECT_GT(risk_from_probabilities(p, g), risk_from_probabilities(later, g));
  }
}
