#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradtree/builder.hpp"
#include "gradtree/common.hpp"
#include "gradtree/survival.hpp"
#include "gradtree/tree.hpp"

namespace gradtree {

enum class BaselineAlgorithm { cart_regression, cart_classification, ert_regression, ert_classification, surv_tree };

inline std::string_view to_string(BaselineAlgorithm a) {
  switch (a) {
    case BaselineAlgorithm::cart_regression: return "cart_regression";
    case BaselineAlgorithm::cart_classification: return "cart_classification";
    case BaselineAlgorithm::ert_regression: return "ert_regression";
    case BaselineAlgorithm::ert_classification: return "ert_classification";
    case BaselineAlgorithm::surv_tree: return "surv_tree";
  }
  return "?";
}

struct BaselineConfig {
  BaselineAlgorithm algorithm = BaselineAlgorithm::cart_regression;
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 6;
  std::size_t min_samples_leaf = 3;
  std::uint64_t rng_seed = 0;
  std::size_t ert_candidates_per_feature = 1;

  void validate() const {
    if (min_samples_split == 0) throw InvalidArgument("min_samples_split must be positive");
    if (min_samples_leaf == 0) throw InvalidArgument("min_samples_leaf must be positive");
    if (ert_candidates_per_feature == 0) throw InvalidArgument("ert_candidates_per_feature must be positive");
  }

  bool randomized() const {
    return algorithm == BaselineAlgorithm::ert_regression || algorithm == BaselineAlgorithm::ert_classification;
  }
};

namespace detail {

// Impurity trees over an encoded label matrix (targets, or one-hot classes).
// Minimizing child SSE (regression) or weighted Gini (classification) is the
// same as maximizing sum_j (S_Lj^2 / n_L + S_Rj^2 / n_R) over column sums S.
class ImpurityTreeBuilder {
 public:
  ImpurityTreeBuilder(const Matrix& X, const Matrix& encoded, const BaselineConfig& config, OutputKind output)
      : X_(X), Y_(encoded), config_(config), output_(output), rng_(config.rng_seed) {
    config_.validate();
    if (X_.rows() == 0) throw InvalidArgument("cannot fit a tree on an empty dataset");
    if (Y_.rows() != X_.rows()) throw InvalidArgument("labels do not match the feature rows");
  }

  Tree fit() {
    IndexList all(X_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    nodes_.clear();
    nodes_.push_back(make_node(all, 0));
    grow(0, all);
    return Tree(std::move(nodes_), X_.cols(), output_);
  }

 private:
  struct Candidate {
    std::size_t feature;
    double threshold;
    double score;  // larger is better
  };

  Node make_node(const IndexList& ids, std::size_t depth) const {
    Node n;
    n.value.assign(Y_.cols(), 0.0);
    for (auto i : ids)
      for (std::size_t j = 0; j < Y_.cols(); ++j) n.value[j] += Y_(i, j);
    for (double& v : n.value) v /= static_cast<double>(ids.size());
    n.depth = depth;
    n.sample_count = ids.size();
    return n;
  }

  bool pure(const IndexList& ids) const {
    for (auto i : ids)
      if (!std::equal(Y_.row(i).begin(), Y_.row(i).end(), Y_.row(ids.front()).begin())) return false;
    return true;
  }

  std::optional<Candidate> scan(std::size_t f, const IndexList& order, std::span<const double> thresholds) const {
    const std::size_t m = order.size();
    const std::size_t q = Y_.cols();
    Vector total(q, 0.0), left(q, 0.0);
    for (auto i : order)
      for (std::size_t j = 0; j < q; ++j) total[j] += Y_(i, j);

    std::optional<Candidate> best;
    auto evaluate = [&](std::size_t nl, double threshold) {
      const std::size_t nr = m - nl;
      if (nl < config_.min_samples_leaf || nr < config_.min_samples_leaf) return;
      double score = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        const double r = total[j] - left[j];
        score += left[j] * left[j] / static_cast<double>(nl) + r * r / static_cast<double>(nr);
      }
      if (!best || score > best->score) best = Candidate{f, threshold, score};
    };
    auto add = [&](std::size_t i) {
      for (std::size_t j = 0; j < q; ++j) left[j] += Y_(i, j);
    };

    if (thresholds.empty()) {
      for (std::size_t k = 0; k + 1 < m; ++k) {
        add(order[k]);
        const double lo = X_(order[k], f), hi = X_(order[k + 1], f);
        if (lo < hi) evaluate(k + 1, midpoint_threshold(lo, hi));
      }
    } else {
      std::size_t k = 0;
      for (double t : thresholds) {
        while (k < m && X_(order[k], f) <= t) add(order[k++]);
        evaluate(k, t);
      }
    }
    return best;
  }

  void grow(std::size_t index, const IndexList& ids) {
    const std::size_t depth = nodes_[index].depth;
    if (depth >= config_.max_depth || ids.size() < config_.min_samples_split || pure(ids)) return;

    std::optional<Candidate> best;
    Vector thresholds;
    for (std::size_t f = 0; f < X_.cols(); ++f) {
      const IndexList order = sorted_by_feature(X_, f, ids);
      const double lo = X_(order.front(), f), hi = X_(order.back(), f);
      if (!(lo < hi)) continue;
      thresholds.clear();
      if (config_.randomized()) {
        std::uniform_real_distribution<double> draw(lo, hi);
        thresholds.resize(config_.ert_candidates_per_feature);
        for (double& t : thresholds) t = draw(rng_);
        std::sort(thresholds.begin(), thresholds.end());
      }
      auto c = scan(f, order, thresholds);
      if (c && (!best || c->score > best->score)) best = c;
    }
    if (!best) return;

    IndexList left_ids, right_ids;
    for (auto i : ids) (X_(i, best->feature) <= best->threshold ? left_ids : right_ids).push_back(i);
    const std::size_t li = nodes_.size();
    nodes_.push_back(make_node(left_ids, depth + 1));
    nodes_.push_back(make_node(right_ids, depth + 1));
    nodes_[index].split = Split{best->feature, best->threshold};
    nodes_[index].left = li;
    nodes_[index].right = li + 1;
    grow(li, left_ids);
    grow(li + 1, right_ids);
  }

  const Matrix& X_;
  const Matrix& Y_;
  BaselineConfig config_;
  OutputKind output_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
};

inline Matrix one_hot(std::span<const std::size_t> classes, std::size_t num_classes) {
  Matrix out(classes.size(), num_classes, 0.0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= num_classes) throw InvalidArgument("class index out of range");
    out(i, classes[i]) = 1.0;
  }
  return out;
}

}  // namespace detail

/// CART or ERT regression tree (SSE criterion, leaves hold target means).
inline Tree fit_regression_tree(const Matrix& X, const Matrix& targets, BaselineConfig config) {
  return detail::ImpurityTreeBuilder(X, targets, config, OutputKind::raw).fit();
}

/// CART or ERT classification tree (Gini criterion, leaves hold class frequencies).
inline Tree fit_classification_tree(const Matrix& X, std::span<const std::size_t> classes, std::size_t num_classes,
                                    BaselineConfig config) {
  const Matrix encoded = detail::one_hot(classes, num_classes);
  return detail::ImpurityTreeBuilder(X, encoded, config, OutputKind::probabilities).fit();
}

/// Two-sample log-rank chi-square statistic between the samples flagged in
/// `in_left` and the rest. Returns nothing when either group has no events or
/// the variance vanishes.
inline std::optional<double> log_rank_statistic(std::span<const SurvivalLabel> labels,
                                                std::span<const std::uint8_t> in_left) {
  IndexList order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return labels[a].time < labels[b].time; });
  std::size_t at_risk = labels.size(), left_at_risk = 0, left_events = 0, right_events = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    left_at_risk += in_left[i] ? 1 : 0;
    if (labels[i].event) (in_left[i] ? left_events : right_events) += 1;
  }
  if (left_events == 0 || right_events == 0) return std::nullopt;

  double observed_minus_expected = 0.0, variance = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double t = labels[order[k]].time;
    std::size_t d = 0, d_left = 0, removed = 0, removed_left = 0;
    while (k < order.size() && labels[order[k]].time == t) {
      const auto i = order[k++];
      ++removed;
      removed_left += in_left[i] ? 1 : 0;
      if (labels[i].event) {
        ++d;
        d_left += in_left[i] ? 1 : 0;
      }
    }
    if (d > 0) {
      const double n = static_cast<double>(at_risk), nl = static_cast<double>(left_at_risk);
      const double dd = static_cast<double>(d);
      observed_minus_expected += static_cast<double>(d_left) - dd * nl / n;
      if (at_risk > 1) variance += dd * (nl / n) * (1.0 - nl / n) * (n - dd) / (n - 1.0);
    }
    at_risk -= removed;
    left_at_risk -= removed_left;
  }
  if (!(variance > 0.0)) return std::nullopt;
  return observed_minus_expected * observed_minus_expected / variance;
}

/// Survival tree: splits maximize the log-rank statistic, every node stores
/// the Kaplan-Meier curve of its samples on `grid`.
inline Tree fit_surv_tree(const Matrix& X, std::span<const SurvivalLabel> labels, const TimeGrid& grid,
                          BaselineConfig config) {
  config.validate();
  if (X.rows() == 0) throw InvalidArgument("cannot fit a tree on an empty dataset");
  if (labels.size() != X.rows()) throw InvalidArgument("labels do not match the feature rows");
  validate_labels(labels);

  std::vector<Node> nodes;
  auto make_node = [&](const IndexList& ids, std::size_t depth) {
    std::vector<SurvivalLabel> sub;
    sub.reserve(ids.size());
    for (auto i : ids) sub.push_back(labels[i]);
    Node n;
    n.value = km_estimate(sub, grid).survival;
    n.depth = depth;
    n.sample_count = ids.size();
    return n;
  };

  struct Candidate {
    std::size_t feature;
    double threshold;
    double statistic;
  };

  auto grow = [&](auto&& self, std::size_t index, const IndexList& ids) -> void {
    const std::size_t depth = nodes[index].depth;
    if (depth >= config.max_depth || ids.size() < config.min_samples_split) return;

    std::vector<SurvivalLabel> sub;
    for (auto i : ids) sub.push_back(labels[i]);
    std::vector<std::size_t> local(X.rows(), 0);
    for (std::size_t k = 0; k < ids.size(); ++k) local[ids[k]] = k;

    std::optional<Candidate> best;
    std::vector<std::uint8_t> in_left(ids.size());
    for (std::size_t f = 0; f < X.cols(); ++f) {
      const IndexList order = detail::sorted_by_feature(X, f, ids);
      std::fill(in_left.begin(), in_left.end(), 0);
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        in_left[local[order[k]]] = 1;
        const double lo = X(order[k], f), hi = X(order[k + 1], f);
        if (!(lo < hi)) continue;
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < config.min_samples_leaf || nr < config.min_samples_leaf) continue;
        const auto stat = log_rank_statistic(sub, in_left);
        if (stat && (!best || *stat > best->statistic))
          best = Candidate{f, detail::midpoint_threshold(lo, hi), *stat};
      }
    }
    if (!best) return;

    IndexList left_ids, right_ids;
    for (auto i : ids) (X(i, best->feature) <= best->threshold ? left_ids : right_ids).push_back(i);
    const std::size_t li = nodes.size();
    nodes.push_back(make_node(left_ids, depth + 1));
    nodes.push_back(make_node(right_ids, depth + 1));
    nodes[index].split = Split{best->feature, best->threshold};
    nodes[index].left = li;
    nodes[index].right = li + 1;
    self(self, li, left_ids);
    self(self, li + 1, right_ids);
  };

  IndexList all(X.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  nodes.push_back(make_node(all, 0));
  grow(grow, 0, all);
  return Tree(std::move(nodes), X.cols(), OutputKind::survival);
}

}  // namespace gradtree
