#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gradtree/common.hpp"
#include "gradtree/loss.hpp"
#include "gradtree/tree.hpp"

namespace gradtree {

enum class ThresholdMode { exhaustive, random };
enum class LeafMode { adjusted_value, kaplan_meier };

inline std::string_view to_string(ThresholdMode m) { return m == ThresholdMode::exhaustive ? "exhaustive" : "random"; }
inline std::string_view to_string(LeafMode m) { return m == LeafMode::adjusted_value ? "adjusted_value" : "kaplan_meier"; }

inline ThresholdMode parse_threshold_mode(std::string_view s) {
  if (s == "exhaustive") return ThresholdMode::exhaustive;
  if (s == "random") return ThresholdMode::random;
  throw InvalidArgument("unknown threshold mode '" + std::string(s) + "'");
}

inline LeafMode parse_leaf_mode(std::string_view s) {
  if (s == "adjusted_value") return LeafMode::adjusted_value;
  if (s == "kaplan_meier") return LeafMode::kaplan_meier;
  throw InvalidArgument("unknown leaf mode '" + std::string(s) + "'");
}

struct TreeConfig {
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 6;
  std::size_t min_samples_leaf = 3;
  double lambda = 0.0;
  double learning_rate = 1.0;
  ThresholdMode threshold_mode = ThresholdMode::exhaustive;
  std::size_t n_guess = 10;
  /// Initial approximation at which the root derivatives are taken; zeros when empty.
  std::optional<Vector> init;
  LeafMode leaf_mode = LeafMode::adjusted_value;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (min_samples_split == 0) throw InvalidArgument("min_samples_split must be positive");
    if (min_samples_leaf == 0) throw InvalidArgument("min_samples_leaf must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be a finite value >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InvalidArgument("learning_rate must lie in (0, 1]");
    if (threshold_mode == ThresholdMode::random && n_guess == 0)
      throw InvalidArgument("n_guess must be positive in random threshold mode");
    if (init && !all_finite(*init)) throw InvalidArgument("init vector contains non-finite values");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (lambda == 0.0 && learning_rate == 1.0)
      w.emplace_back("lambda = 0 and learning_rate = 1: adjustments are undamped full Newton steps");
    return w;
  }
};

struct SplitResult {
  std::size_t feature = 0;
  double threshold = 0.0;
  Vector u;
  Vector v;
  double approx_loss = 0.0;
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  NodeStats left_stats;
  NodeStats right_stats;
};

/// Closed-form minimizer of u*G + u^2 (H + M*lambda) / 2, componentwise.
inline Vector leaf_adjustment(std::span<const double> grad_sum, std::span<const double> hess_sum, std::size_t count,
                              double lambda) {
  if (grad_sum.size() != hess_sum.size()) throw InvalidArgument("gradient and hessian sums differ in length");
  Vector out(grad_sum.size());
  const double damping = static_cast<double>(count) * lambda;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double denom = damping + hess_sum[j];
    if (denom > 0.0) {
      out[j] = -grad_sum[j] / denom;
    } else if (grad_sum[j] == 0.0) {
      // Only samples with dropped derivatives: nothing to adjust.
      out[j] = 0.0;
    } else {
      throw std::logic_error("non-positive denominator in leaf adjustment");
    }
  }
  return out;
}

inline Vector leaf_adjustment(const NodeStats& s, double lambda) {
  return leaf_adjustment(s.grad_sum, s.hess_sum, s.count, lambda);
}

/// Value of the quadratic model at its minimizer for one side of a split.
inline double side_approx_loss(std::span<const double> grad_sum, std::span<const double> hess_sum,
                               std::size_t count, double lambda) {
  const Vector u = leaf_adjustment(grad_sum, hess_sum, count, lambda);
  const double damping = static_cast<double>(count) * lambda;
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) acc += u[j] * grad_sum[j] + 0.5 * u[j] * u[j] * (hess_sum[j] + damping);
  return acc;
}

/// Sums of the g and h rows listed in `ids`, taken in the given order.
inline NodeStats accumulate_node_stats(const Matrix& g, const Matrix& h, std::span<const std::size_t> ids) {
  NodeStats s{Vector(g.cols(), 0.0), Vector(h.cols(), 0.0), ids.size()};
  for (auto i : ids) {
    auto gi = g.row(i);
    auto hi = h.row(i);
    for (std::size_t j = 0; j < s.grad_sum.size(); ++j) {
      s.grad_sum[j] += gi[j];
      s.hess_sum[j] += hi[j];
    }
  }
  return s;
}

namespace detail {

inline bool better_split(const SplitResult& a, const SplitResult& b) {
  if (a.approx_loss != b.approx_loss) return a.approx_loss < b.approx_loss;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

inline double midpoint_threshold(double lo, double hi) {
  const double m = std::midpoint(lo, hi);
  return m < hi ? m : lo;
}

inline IndexList sorted_by_feature(const Matrix& X, std::size_t feature, std::span<const std::size_t> ids) {
  IndexList order(ids.begin(), ids.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return X(a, feature) < X(b, feature); });
  return order;
}

}  // namespace detail

/// Walks the samples of one feature in ascending order, maintaining running
/// left sums, and evaluates each candidate threshold in O(q). `thresholds`
/// must be ascending; when empty, midpoints between consecutive distinct
/// values are used.
inline std::optional<SplitResult> scan_feature(const Matrix& X, std::size_t feature,
                                               std::span<const std::size_t> sorted_ids, const Matrix& g,
                                               const Matrix& h, const NodeStats& node, const TreeConfig& config,
                                               std::span<const double> thresholds = {}) {
  const std::size_t m = sorted_ids.size();
  const std::size_t q = node.grad_sum.size();
  const std::size_t min_leaf = config.min_samples_leaf;
  if (m < 2) return std::nullopt;

  Vector gl(q, 0.0), hl(q, 0.0), gr(q), hr(q);
  std::optional<SplitResult> best;

  auto evaluate = [&](std::size_t left_count, double threshold) {
    const std::size_t right_count = m - left_count;
    if (left_count < min_leaf || right_count < min_leaf) return;
    for (std::size_t j = 0; j < q; ++j) {
      gr[j] = node.grad_sum[j] - gl[j];
      hr[j] = node.hess_sum[j] - hl[j];
    }
    const double loss = side_approx_loss(gl, hl, m, config.lambda) + side_approx_loss(gr, hr, m, config.lambda);
    if (best && !(loss < best->approx_loss)) return;
    SplitResult r;
    r.feature = feature;
    r.threshold = threshold;
    r.approx_loss = loss;
    r.left_count = left_count;
    r.right_count = right_count;
    r.left_stats = {gl, hl, m};
    r.right_stats = {gr, hr, m};
    best = std::move(r);
  };

  auto add_left = [&](std::size_t i) {
    auto gi = g.row(i);
    auto hi = h.row(i);
    for (std::size_t j = 0; j < q; ++j) {
      gl[j] += gi[j];
      hl[j] += hi[j];
    }
  };

  if (thresholds.empty()) {
    for (std::size_t k = 0; k + 1 < m; ++k) {
      add_left(sorted_ids[k]);
      const double lo = X(sorted_ids[k], feature);
      const double hi = X(sorted_ids[k + 1], feature);
      if (!(lo < hi)) continue;
      evaluate(k + 1, detail::midpoint_threshold(lo, hi));
    }
  } else {
    std::size_t k = 0;
    for (double t : thresholds) {
      while (k < m && X(sorted_ids[k], feature) <= t) add_left(sorted_ids[k++]);
      evaluate(k, t);
    }
  }

  if (best) {
    best->u = leaf_adjustment(best->left_stats, config.lambda);
    best->v = leaf_adjustment(best->right_stats, config.lambda);
  }
  return best;
}

/// Best split of a node over all features. In random mode each feature gets
/// `n_guess` thresholds drawn uniformly on [min, max] of its node values.
template <class Rng>
std::optional<SplitResult> find_best_split(const Matrix& X, std::span<const std::size_t> ids, const Matrix& g,
                                           const Matrix& h, const NodeStats& node, const TreeConfig& config,
                                           Rng& rng) {
  std::optional<SplitResult> best;
  Vector thresholds;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    const IndexList order = detail::sorted_by_feature(X, f, ids);
    if (order.empty()) break;
    const double lo = X(order.front(), f);
    const double hi = X(order.back(), f);
    if (!(lo < hi)) continue;
    thresholds.clear();
    if (config.threshold_mode == ThresholdMode::random) {
      std::uniform_real_distribution<double> draw(lo, hi);
      thresholds.resize(config.n_guess);
      for (double& t : thresholds) t = draw(rng);
      std::sort(thresholds.begin(), thresholds.end());
    }
    auto r = scan_feature(X, f, order, g, h, node, config, thresholds);
    if (r && (!best || detail::better_split(*r, *best))) best = std::move(r);
  }
  return best;
}

/// Grows a tree depth-first. Every node re-evaluates the loss derivatives at
/// its own current value, finds the split minimizing the second-order model,
/// and gives its children the value plus learning_rate times the closed-form
/// adjustment.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const Loss& loss, const TreeConfig& config)
      : X_(X), loss_(loss), config_(config), rng_(config.rng_seed) {
    config_.validate();
    if (X_.rows() == 0) throw InvalidArgument("cannot fit a tree on an empty dataset");
    if (loss_.num_samples() != X_.rows())
      throw InvalidArgument("loss is bound to " + std::to_string(loss_.num_samples()) + " labels but the dataset has " +
                            std::to_string(X_.rows()) + " rows");
    const std::size_t q = loss_.output_dim();
    if (config_.init && config_.init->size() != q)
      throw InvalidArgument("init vector has length " + std::to_string(config_.init->size()) + ", expected " +
                            std::to_string(q));
    g_ = Matrix(X_.rows(), q, 0.0);
    h_ = Matrix(X_.rows(), q, 0.0);
  }

  Tree fit() {
    const std::size_t n = X_.rows();
    const Vector init = config_.init.value_or(Vector(loss_.output_dim(), 0.0));
    IndexList all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});

    evaluate_derivatives(0, all, init);
    NodeStats root_stats = accumulate_node_stats(g_, h_, all);
    Node root;
    root.value = step(init, leaf_adjustment(root_stats, config_.lambda));
    root.sample_count = n;
    root.stats = std::move(root_stats);
    nodes_.clear();
    nodes_.push_back(std::move(root));
    grow(0, all);

    Tree tree(std::move(nodes_), X_.cols(), OutputKind::raw);
    tree.set_init_value(init);
    return tree;
  }

  std::size_t derivative_evaluations() const noexcept { return evaluations_; }

 private:
  Vector step(const Vector& base, const Vector& adjustment) const {
    Vector out(base);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += config_.learning_rate * adjustment[j];
    return out;
  }

  void evaluate_derivatives(std::size_t node, std::span<const std::size_t> ids, const Vector& at) {
    ++evaluations_;
    loss_.grad_hess(ids, at, g_, h_);
    for (auto i : ids) {
      if (!all_finite(g_.row(i)) || !all_finite(h_.row(i)))
        throw DataError("non-finite loss derivative at node " + std::to_string(node) + ", sample " + std::to_string(i));
    }
  }

  void grow(std::size_t index, const IndexList& ids) {
    const std::size_t depth = nodes_[index].depth;
    if (depth >= config_.max_depth || ids.size() < config_.min_samples_split) return;

    const Vector value = nodes_[index].value;
    evaluate_derivatives(index, ids, value);
    const NodeStats stats = accumulate_node_stats(g_, h_, ids);
    auto best = find_best_split(X_, ids, g_, h_, stats, config_, rng_);
    if (!best) return;

    IndexList left_ids, right_ids;
    left_ids.reserve(best->left_count);
    right_ids.reserve(best->right_count);
    for (auto i : ids) (X_(i, best->feature) <= best->threshold ? left_ids : right_ids).push_back(i);

    Node left;
    left.value = step(value, best->u);
    left.depth = depth + 1;
    left.sample_count = left_ids.size();
    left.stats = std::move(best->left_stats);
    Node right;
    right.value = step(value, best->v);
    right.depth = depth + 1;
    right.sample_count = right_ids.size();
    right.stats = std::move(best->right_stats);

    const std::size_t li = nodes_.size();
    nodes_.push_back(std::move(left));
    nodes_.push_back(std::move(right));
    nodes_[index].split = Split{best->feature, best->threshold};
    nodes_[index].left = li;
    nodes_[index].right = li + 1;

    grow(li, left_ids);
    grow(li + 1, right_ids);
  }

  const Matrix& X_;
  const Loss& loss_;
  TreeConfig config_;
  std::mt19937_64 rng_;
  Matrix g_;
  Matrix h_;
  std::vector<Node> nodes_;
  std::size_t evaluations_ = 0;
};

inline Tree fit(const Matrix& X, const Loss& loss, const TreeConfig& config) {
  return TreeBuilder(X, loss, config).fit();
}

}  // namespace gradtree
