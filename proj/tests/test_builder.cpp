#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "gradtree/builder.hpp"
#include "oracles.hpp"

using namespace gradtree;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(v.size(), 1);
  std::size_t i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

struct RegressionProblem {
  Matrix X;
  Matrix y;
};

RegressionProblem random_regression(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RegressionProblem p{oracle::random_matrix(n, d, rng), Matrix(n, 1)};
  std::normal_distribution<double> noise(0.0, 0.3);
  for (std::size_t i = 0; i < n; ++i)
    p.y(i, 0) = 3.0 * p.X(i, 0) - 2.0 * (p.X(i, d - 1) > 0.4 ? 1.0 : 0.0) + noise(rng);
  return p;
}

IndexList iota_ids(std::size_t n) {
  IndexList ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

double training_mse(const Tree& tree, const RegressionProblem& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.X.rows(); ++i) {
    const double r = tree.predict(p.X.row(i))[0] - p.y(i, 0);
    s += r * r;
  }
  return s / static_cast<double>(p.X.rows());
}

TreeConfig plain_config(std::size_t depth) {
  TreeConfig c;
  c.max_depth = depth;
  c.min_samples_split = 2;
  c.min_samples_leaf = 1;
  return c;
}

}  // namespace

TEST(LeafAdjustment, Examples) {
  EXPECT_EQ(leaf_adjustment(Vector{0.0}, Vector{2.0}, 10, 0.1)[0], 0.0);

  auto objective = [](double G, double H, double M, double lambda) {
    return [=](double u) { return u * G + 0.5 * u * u * (H + M * lambda); };
  };
  const double u1 = oracle::golden_section(objective(4, 2, 10, 0.1), -100.0, 100.0);
  const double u2 = oracle::golden_section(objective(4, 2, 10, 0.0), -100.0, 100.0);
  EXPECT_NEAR(u1, -4.0 / 3.0, 1e-6);
  EXPECT_NEAR(u2, -2.0, 1e-6);
  EXPECT_NEAR(leaf_adjustment(Vector{4.0}, Vector{2.0}, 10, 0.1)[0], -4.0 / 3.0, 1e-15);
  EXPECT_EQ(leaf_adjustment(Vector{4.0}, Vector{2.0}, 10, 0.0)[0], -2.0);
}

TEST(LeafAdjustment, Componentwise) {
  const Vector u = leaf_adjustment(Vector{1.0, -2.0, 0.0}, Vector{1.0, 2.0, 3.0}, 4, 0.25);
  EXPECT_DOUBLE_EQ(u[0], -0.5);
  EXPECT_DOUBLE_EQ(u[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(u[2], 0.0);
}

TEST(LeafAdjustment, ZeroDenominator) {
  EXPECT_EQ(leaf_adjustment(Vector{0.0}, Vector{0.0}, 3, 0.0)[0], 0.0);
  EXPECT_THROW(leaf_adjustment(Vector{1.0}, Vector{0.0}, 3, 0.0), std::logic_error);
  EXPECT_THROW(leaf_adjustment(Vector{1.0}, Vector{1.0, 2.0}, 3, 0.0), InvalidArgument);
}

TEST(LeafAdjustment, MinimizesQuadraticModel) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> G(-10, 10), H(0.01, 5), L(0, 2);
  for (int t = 0; t < 200; ++t) {
    const double g = G(rng), h = H(rng), lambda = L(rng);
    const std::size_t m = 1 + static_cast<std::size_t>(t % 20);
    const double u = leaf_adjustment(Vector{g}, Vector{h}, m, lambda)[0];
    auto f = [&](double x) { return x * g + 0.5 * x * x * (h + static_cast<double>(m) * lambda); };
    EXPECT_LE(f(u), f(u + 1e-3));
    EXPECT_LE(f(u), f(u - 1e-3));
    EXPECT_NEAR(side_approx_loss(Vector{g}, Vector{h}, m, lambda), f(u), 1e-12 * std::max(1.0, std::abs(f(u))));
  }
}

TEST(AccumulateNodeStats, EmptyAndSingle) {
  Matrix g(3, 2, 1.0), h(3, 2, 2.0);
  g(1, 0) = 5.0;
  h(1, 1) = 7.0;
  const auto empty = accumulate_node_stats(g, h, IndexList{});
  EXPECT_EQ(empty.count, 0u);
  EXPECT_EQ(empty.grad_sum, (Vector{0.0, 0.0}));
  EXPECT_EQ(empty.hess_sum, (Vector{0.0, 0.0}));
  const auto one = accumulate_node_stats(g, h, IndexList{1});
  EXPECT_EQ(one.count, 1u);
  EXPECT_EQ(one.grad_sum, (Vector{5.0, 1.0}));
  EXPECT_EQ(one.hess_sum, (Vector{2.0, 7.0}));
}

TEST(AccumulateNodeStats, MatchesNaiveLoopExactly) {
  std::mt19937_64 rng(9);
  const Matrix g = oracle::random_matrix(100, 3, rng, -5, 5);
  const Matrix h = oracle::random_matrix(100, 3, rng, 0, 5);
  IndexList ids = iota_ids(100);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto s = accumulate_node_stats(g, h, ids);
  for (std::size_t j = 0; j < 3; ++j) {
    double gs = 0.0, hs = 0.0;
    for (auto i : ids) {
      gs += g(i, j);
      hs += h(i, j);
    }
    EXPECT_EQ(s.grad_sum[j], gs);
    EXPECT_EQ(s.hess_sum[j], hs);
  }
  EXPECT_EQ(s.count, 100u);
}

TEST(ScanFeature, ConstantFeatureHasNoSplit) {
  const Matrix X = column({0.3, 0.3, 0.3, 0.3});
  const Matrix g(4, 1, 1.0), h(4, 1, 2.0);
  const IndexList ids = iota_ids(4);
  const auto node = accumulate_node_stats(g, h, ids);
  EXPECT_FALSE(scan_feature(X, 0, ids, g, h, node, plain_config(3)).has_value());
}

TEST(ScanFeature, TwoSampleExample) {
  const Matrix X = column({0.0, 1.0});
  const Matrix y = column({0.0, 10.0});
  const auto loss = BuiltinLoss::squared_error(y);
  Matrix g(2, 1), h(2, 1);
  const IndexList ids{0, 1};
  loss.grad_hess(ids, Vector{5.0}, g, h);
  const auto node = accumulate_node_stats(g, h, ids);
  const auto r = scan_feature(X, 0, ids, g, h, node, plain_config(1));
  ASSERT_TRUE(r.has_value());
  const auto brute = oracle::brute_force_split(X, ids, g, h, 0.0, 1);
  ASSERT_TRUE(brute.has_value());
  EXPECT_EQ(r->threshold, 0.5);
  EXPECT_EQ(r->u, (Vector{-5.0}));
  EXPECT_EQ(r->v, (Vector{5.0}));
  // Each side: -G^2 / (2H) = -100 / 4.
  EXPECT_EQ(brute->loss, -50.0);
  EXPECT_EQ(r->approx_loss, brute->loss);
  EXPECT_EQ(r->left_count, 1u);
  EXPECT_EQ(r->right_count, 1u);
}

TEST(ScanFeature, RespectsMinSamplesLeaf) {
  const Matrix X = column({1, 2, 3, 4, 5, 6});
  const Matrix y = column({0, 0, 100, 100, 100, 100});
  const auto loss = BuiltinLoss::squared_error(y);
  Matrix g(6, 1), h(6, 1);
  const IndexList ids = iota_ids(6);
  loss.grad_hess(ids, Vector{0.0}, g, h);
  const auto node = accumulate_node_stats(g, h, ids);
  TreeConfig c = plain_config(1);
  c.min_samples_leaf = 3;
  const auto r = scan_feature(X, 0, ids, g, h, node, c);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->threshold, 3.5);
  c.min_samples_leaf = 4;
  EXPECT_FALSE(scan_feature(X, 0, ids, g, h, node, c).has_value());
}

TEST(ScanFeature, MatchesBruteForceOnRandomNodes) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 20 + static_cast<std::size_t>(t) * 6;
    Matrix X = oracle::random_matrix(n, 1, rng);
    // Coarsen half of the problems so duplicate values appear.
    if (t % 2) for (double& v : X.data()) v = std::round(v * 10.0) / 10.0;
    const Matrix g = oracle::random_matrix(n, 2, rng, -1, 1);
    const Matrix h = oracle::random_matrix(n, 2, rng, 0.1, 1);
    const double lambda = (t % 3) * 0.25;
    const IndexList ids = iota_ids(n);
    const auto node = accumulate_node_stats(g, h, ids);
    TreeConfig c = plain_config(1);
    c.lambda = lambda;
    c.min_samples_leaf = 1 + t % 4;
    const IndexList sorted = detail::sorted_by_feature(X, 0, ids);
    const auto r = scan_feature(X, 0, sorted, g, h, node, c);
    const auto b = oracle::brute_force_split(X, ids, g, h, lambda, c.min_samples_leaf);
    ASSERT_EQ(r.has_value(), b.has_value());
    if (!r) continue;
    EXPECT_EQ(r->threshold, b->threshold);
    EXPECT_NEAR(r->approx_loss, b->loss, 1e-9);
  }
}

TEST(FindBestSplit, SingleFeatureEqualsScan) {
  std::mt19937_64 rng(4);
  const Matrix X = oracle::random_matrix(40, 1, rng);
  const Matrix g = oracle::random_matrix(40, 1, rng, -1, 1);
  const Matrix h(40, 1, 1.0);
  const IndexList ids = iota_ids(40);
  const auto node = accumulate_node_stats(g, h, ids);
  const TreeConfig c = plain_config(1);
  std::mt19937_64 r2(0);
  const auto a = find_best_split(X, ids, g, h, node, c, r2);
  const auto b = scan_feature(X, 0, detail::sorted_by_feature(X, 0, ids), g, h, node, c);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->threshold, b->threshold);
  EXPECT_EQ(a->approx_loss, b->approx_loss);
  EXPECT_EQ(a->u, b->u);
}

TEST(FindBestSplit, DuplicateColumnsPickLowerIndex) {
  std::mt19937_64 rng(6);
  const Matrix base = oracle::random_matrix(30, 1, rng);
  Matrix X(30, 3);
  for (std::size_t i = 0; i < 30; ++i) {
    X(i, 0) = 0.0;
    X(i, 1) = base(i, 0);
    X(i, 2) = base(i, 0);
  }
  const Matrix g = oracle::random_matrix(30, 1, rng, -1, 1);
  const Matrix h(30, 1, 1.0);
  const IndexList ids = iota_ids(30);
  const auto node = accumulate_node_stats(g, h, ids);
  std::mt19937_64 r(0);
  const auto s = find_best_split(X, ids, g, h, node, plain_config(1), r);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->feature, 1u);
}

TEST(FindBestSplit, RandomModeApproachesExhaustive) {
  std::mt19937_64 rng(8);
  const Matrix X = oracle::random_matrix(20, 3, rng);
  const Matrix g = oracle::random_matrix(20, 1, rng, -1, 1);
  const Matrix h(20, 1, 1.0);
  const IndexList ids = iota_ids(20);
  const auto node = accumulate_node_stats(g, h, ids);
  TreeConfig ex = plain_config(1);
  TreeConfig rnd = ex;
  rnd.threshold_mode = ThresholdMode::random;
  rnd.n_guess = 10000;
  std::mt19937_64 r1(0), r2(12345);
  const auto a = find_best_split(X, ids, g, h, node, ex, r1);
  const auto b = find_best_split(X, ids, g, h, node, rnd, r2);
  ASSERT_TRUE(a && b);
  EXPECT_NEAR(a->approx_loss, b->approx_loss, 1e-6);
  EXPECT_EQ(a->feature, b->feature);
}

TEST(Fit, DepthZeroIsRootAdjustment) {
  const auto p = random_regression(30, 2, 1);
  const auto loss = BuiltinLoss::squared_error(p.y);
  const Tree t = fit(p.X, loss, plain_config(0));
  ASSERT_EQ(t.nodes().size(), 1u);
  double mean = 0.0;
  for (std::size_t i = 0; i < 30; ++i) mean += p.y(i, 0) / 30.0;
  EXPECT_NEAR(t.root().value[0], mean, 1e-12);
  EXPECT_EQ(t.predict(Vector{0.9, 0.1})[0], t.root().value[0]);
  EXPECT_EQ(t.init_value(), (Vector{0.0}));
}

TEST(Fit, SquaredErrorLeavesAreMeans) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_regression(80, 3, seed);
    const auto loss = BuiltinLoss::squared_error(p.y);
    TreeConfig c;
    c.max_depth = 4;
    const Tree t = fit(p.X, loss, c);
    std::map<std::size_t, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < 80; ++i) {
      auto& e = sums[t.leaf_index(p.X.row(i))];
      e.first += p.y(i, 0);
      e.second += 1;
    }
    for (const auto& [leaf, e] : sums) {
      EXPECT_NEAR(t.node(leaf).value[0], e.first / static_cast<double>(e.second), 1e-9);
      EXPECT_EQ(t.node(leaf).sample_count, e.second);
    }
  }
}

TEST(Fit, StructuralInvariants) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> lam(0.0, 2.0), gam(0.1, 1.0);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_regression(60 + t * 5, 1 + t % 4, 100 + t);
    const auto loss = BuiltinLoss::squared_error(p.y);
    TreeConfig c;
    c.max_depth = 1 + t % 6;
    c.lambda = lam(rng);
    c.learning_rate = gam(rng);
    c.min_samples_leaf = 1 + t % 5;
    c.min_samples_split = 2 * c.min_samples_leaf;
    const Tree tree = fit(p.X, loss, c);
    const auto& nodes = tree.nodes();
    std::size_t leaf_total = 0;
    for (const auto& n : nodes) {
      EXPECT_LE(n.depth, c.max_depth);
      if (n.is_leaf()) {
        EXPECT_EQ(n.left, kNoChild);
        leaf_total += n.sample_count;
        continue;
      }
      const auto& l = nodes[n.left];
      const auto& r = nodes[n.right];
      EXPECT_EQ(l.sample_count + r.sample_count, n.sample_count);
      EXPECT_GE(l.sample_count, c.min_samples_leaf);
      EXPECT_GE(r.sample_count, c.min_samples_leaf);
      EXPECT_GE(n.sample_count, c.min_samples_split);
      ASSERT_TRUE(l.stats && r.stats);
      const Vector u = leaf_adjustment(*l.stats, c.lambda);
      const Vector v = leaf_adjustment(*r.stats, c.lambda);
      EXPECT_EQ(l.value[0], n.value[0] + c.learning_rate * u[0]);
      EXPECT_EQ(r.value[0], n.value[0] + c.learning_rate * v[0]);
      EXPECT_EQ(l.stats->count, n.sample_count);
    }
    EXPECT_EQ(leaf_total, p.X.rows());
  }
}

TEST(Fit, TrainingErrorDoesNotIncreaseWithDepth) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = random_regression(120, 3, seed + 40);
    const auto loss = BuiltinLoss::squared_error(p.y);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d <= 6; ++d) {
      const double mse = training_mse(fit(p.X, loss, plain_config(d)), p);
      EXPECT_LE(mse, prev + 1e-12);
      prev = mse;
    }
  }
}

TEST(Fit, SplitLossEqualsSseReduction) {
  const auto p = random_regression(50, 2, 3);
  const auto loss = BuiltinLoss::squared_error(p.y);
  const Tree t = fit(p.X, loss, plain_config(1));
  ASSERT_FALSE(t.root().is_leaf());
  const IndexList ids = iota_ids(50);
  const auto b = oracle::brute_force_sse_split(p.X, ids, Vector(p.y.data().begin(), p.y.data().end()), 1);
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(t.root().split->feature, b->feature);
  EXPECT_EQ(t.root().split->threshold, b->threshold);
}

TEST(Fit, Deterministic) {
  const auto p = random_regression(90, 3, 5);
  const auto loss = BuiltinLoss::squared_error(p.y);
  TreeConfig c;
  c.threshold_mode = ThresholdMode::random;
  c.rng_seed = 42;
  const Tree a = fit(p.X, loss, c);
  const Tree b = fit(p.X, loss, c);
  EXPECT_EQ(a.nodes(), b.nodes());
  c.rng_seed = 43;
  const Tree other = fit(p.X, loss, c);
  EXPECT_NE(a.nodes(), other.nodes());
}

TEST(Fit, ThresholdValueRoutesLeft) {
  const Matrix X = column({0.0, 1.0, 2.0, 3.0});
  const Matrix y = column({0.0, 0.0, 10.0, 10.0});
  const auto loss = BuiltinLoss::squared_error(y);
  const Tree t = fit(X, loss, plain_config(1));
  ASSERT_EQ(t.root().split->threshold, 1.5);
  EXPECT_EQ(t.predict(Vector{1.5})[0], 0.0);
  EXPECT_EQ(t.predict(Vector{std::nextafter(1.5, 2.0)})[0], 10.0);
  EXPECT_THROW(t.predict(Vector{1.0, 2.0}), InvalidArgument);
}

TEST(Fit, ClassificationLowersTrainingLoss) {
  std::mt19937_64 rng(12);
  const Matrix X = oracle::random_matrix(150, 2, rng);
  std::vector<std::size_t> classes(150);
  for (std::size_t i = 0; i < 150; ++i) classes[i] = X(i, 0) < 0.3 ? 0 : (X(i, 1) < 0.5 ? 1 : 2);
  const auto loss = BuiltinLoss::cross_entropy(classes, 3);
  auto total = [&](const Tree& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < 150; ++i) s += loss.value(i, t.predict(X.row(i)));
    return s;
  };
  TreeConfig c;
  c.lambda = 0.1;
  c.max_depth = 0;
  const double l0 = total(fit(X, loss, c));
  c.max_depth = 3;
  const double l3 = total(fit(X, loss, c));
  EXPECT_LT(l3, 0.5 * l0);
}

TEST(Fit, InputErrors) {
  const Matrix y = column({1, 2, 3});
  const auto loss = BuiltinLoss::squared_error(y);
  EXPECT_THROW(fit(Matrix(0, 2), loss, plain_config(2)), InvalidArgument);
  EXPECT_THROW(fit(Matrix(4, 2), loss, plain_config(2)), InvalidArgument);
  TreeConfig c = plain_config(2);
  c.init = Vector{0.0, 1.0};
  EXPECT_THROW(fit(Matrix(3, 1), loss, c), InvalidArgument);
  c = plain_config(2);
  c.learning_rate = 0.0;
  EXPECT_THROW(fit(Matrix(3, 1), loss, c), InvalidArgument);
  c = plain_config(2);
  c.lambda = -1.0;
  EXPECT_THROW(fit(Matrix(3, 1), loss, c), InvalidArgument);
  c = plain_config(2);
  c.threshold_mode = ThresholdMode::random;
  c.n_guess = 0;
  EXPECT_THROW(fit(Matrix(3, 1), loss, c), InvalidArgument);
}

TEST(Fit, ConfigWarnings) {
  TreeConfig c;
  EXPECT_EQ(c.warnings().size(), 1u);
  c.lambda = 0.1;
  EXPECT_TRUE(c.warnings().empty());
}

TEST(Fit, InitIsHonored) {
  const auto p = random_regression(40, 2, 9);
  const auto loss = BuiltinLoss::squared_error(p.y);
  TreeConfig c = plain_config(0);
  c.init = Vector{100.0};
  c.lambda = 1.0;
  const Tree t = fit(p.X, loss, c);
  double g = 0.0;
  for (std::size_t i = 0; i < 40; ++i) g += 2.0 * (100.0 - p.y(i, 0));
  EXPECT_NEAR(t.root().value[0], 100.0 - g / (80.0 + 40.0), 1e-9);
  EXPECT_EQ(t.init_value(), (Vector{100.0}));
}

// The callback surface used by external bindings.

TEST(ExternalLoss, QuadraticCallbackMatchesBuiltin) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_regression(70, 3, 500 + seed);
    const auto builtin = BuiltinLoss::squared_error(p.y);
    const Matrix& ys = p.y;
    CallbackLoss cb(
        [&ys](std::span<const std::size_t> ids, std::span<const double> cur, Matrix& g, Matrix& h) {
          for (auto i : ids) {
            g(i, 0) = 2.0 * (cur[0] - ys(i, 0));
            h(i, 0) = 2.0;
          }
        },
        70, 1);
    TreeConfig c;
    c.lambda = 0.3;
    c.learning_rate = 0.7;
    c.max_depth = 4;
    const Tree a = fit(p.X, builtin, c);
    TreeBuilder builder(p.X, cb, c);
    const Tree b = builder.fit();
    for (std::size_t i = 0; i < 70; ++i) EXPECT_NEAR(a.predict(p.X.row(i))[0], b.predict(p.X.row(i))[0], 1e-9);
    // One evaluation at the initial approximation plus one per node that tried to split.
    std::size_t attempted = 0;
    for (const auto& n : b.nodes()) attempted += n.depth < c.max_depth && n.sample_count >= c.min_samples_split ? 1 : 0;
    EXPECT_EQ(cb.call_count(), 1 + attempted);
    EXPECT_EQ(builder.derivative_evaluations(), cb.call_count());
  }
}

TEST(ExternalLoss, RowsOutsideNodeAreNeverRead) {
  const auto p = random_regression(60, 2, 2);
  const auto builtin = BuiltinLoss::squared_error(p.y);
  const Matrix& ys = p.y;
  CallbackLoss cb(
      [&ys](std::span<const std::size_t> ids, std::span<const double> cur, Matrix& g, Matrix& h) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        std::fill(g.data().begin(), g.data().end(), nan);
        std::fill(h.data().begin(), h.data().end(), nan);
        for (auto i : ids) {
          g(i, 0) = 2.0 * (cur[0] - ys(i, 0));
          h(i, 0) = 2.0;
        }
      },
      60, 1);
  TreeConfig c;
  c.lambda = 0.1;
  const Tree a = fit(p.X, builtin, c);
  const Tree b = fit(p.X, cb, c);
  for (const auto& n : b.nodes()) EXPECT_TRUE(all_finite(n.value));
  EXPECT_EQ(a.nodes().size(), b.nodes().size());
  for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(a.predict(p.X.row(i))[0], b.predict(p.X.row(i))[0], 1e-9);
}

TEST(ExternalLoss, SmallConstantHessianStillLearns) {
  const auto p = random_regression(100, 2, 21);
  const Matrix& ys = p.y;
  CallbackLoss cb(
      [&ys](std::span<const std::size_t> ids, std::span<const double> cur, Matrix& g, Matrix& h) {
        for (auto i : ids) {
          g(i, 0) = 2.0 * (cur[0] - ys(i, 0));
          h(i, 0) = 1e-3;
        }
      },
      100, 1);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t d = 1; d <= 4; ++d) {
    TreeConfig c;
    c.max_depth = d;
    c.lambda = 1.0;
    const double mse = training_mse(fit(p.X, cb, c), p);
    EXPECT_LT(mse, prev);
    prev = mse;
  }
}

TEST(ExternalLoss, CallbackErrorAbortsFit) {
  const auto p = random_regression(20, 1, 1);
  CallbackLoss cb([](auto, auto, Matrix&, Matrix&) { throw std::runtime_error("user loss failed"); }, 20, 1);
  try {
    fit(p.X, cb, TreeConfig{});
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "user loss failed");
  }
}

TEST(ExternalLoss, NonFiniteDerivativeNamesNodeAndSample) {
  const auto p = random_regression(20, 1, 1);
  CallbackLoss cb(
      [](std::span<const std::size_t> ids, std::span<const double>, Matrix& g, Matrix& h) {
        for (auto i : ids) {
          g(i, 0) = i == 7 ? std::numeric_limits<double>::infinity() : 1.0;
          h(i, 0) = 1.0;
        }
      },
      20, 1);
  try {
    fit(p.X, cb, TreeConfig{});
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("node 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sample 7"), std::string::npos) << msg;
  }
}
