#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gradtree/common.hpp"
#include "gradtree/survival.hpp"

namespace gradtree {

struct MetricReport {
  std::string metric;
  double value = 0.0;
  std::size_t sample_count = 0;
  std::map<std::string, double> auxiliary;
};

inline double r2(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw InvalidArgument("r2: length mismatch");
  if (y_true.empty()) throw InvalidArgument("r2: empty input");
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) throw UndefinedMetric("r2 is undefined for a constant target");
  return 1.0 - ss_res / ss_tot;
}

/// Uniform average of per-column R^2.
inline double r2(const Matrix& y_true, const Matrix& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) throw InvalidArgument("r2: shape mismatch");
  if (y_true.cols() == 0) throw InvalidArgument("r2: no target columns");
  double total = 0.0;
  Vector a(y_true.rows()), b(y_true.rows());
  for (std::size_t c = 0; c < y_true.cols(); ++c) {
    for (std::size_t r = 0; r < y_true.rows(); ++r) {
      a[r] = y_true(r, c);
      b[r] = y_pred(r, c);
    }
    total += r2(a, b);
  }
  return total / static_cast<double>(y_true.cols());
}

/// Mann-Whitney form of the binary AUC; tied scores contribute one half.
inline double binary_auc(std::span<const std::uint8_t> positive, std::span<const double> scores) {
  if (positive.size() != scores.size()) throw InvalidArgument("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto p : positive) n_pos += p ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("roc_auc needs both positive and negative samples");

  IndexList order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

/// Binary tasks score class 1 against class 0; more classes use the
/// unweighted one-vs-rest average over classes present with both outcomes.
inline double roc_auc(std::span<const std::size_t> y_true, const Matrix& scores) {
  if (y_true.size() != scores.rows()) throw InvalidArgument("roc_auc: label count does not match score rows");
  const std::size_t c = scores.cols();
  if (c < 2) throw InvalidArgument("roc_auc needs at least two score columns");
  for (auto y : y_true)
    if (y >= c) throw InvalidArgument("roc_auc: class index out of range");
  std::vector<std::uint8_t> pos(y_true.size());
  Vector col(y_true.size());
  auto one_vs_rest = [&](std::size_t k) {
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      pos[i] = y_true[i] == k ? 1 : 0;
      col[i] = scores(i, k);
    }
    return binary_auc(pos, col);
  };
  if (c == 2) return one_vs_rest(1);

  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const auto count = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), k));
    if (count == 0 || count == y_true.size()) continue;
    total += one_vs_rest(k);
    ++used;
  }
  if (used == 0) throw UndefinedMetric("roc_auc is undefined when only one class is present");
  return total / static_cast<double>(used);
}

struct ConcordanceResult {
  double value = 0.0;
  std::size_t comparable_pairs = 0;
};

/// Harrell's C. Pair (i, j) is comparable when t_i < t_j and i had an event;
/// it is concordant when risk_i > risk_j, and tied risks count one half.
inline ConcordanceResult concordance(std::span<const SurvivalLabel> labels, std::span<const double> risks) {
  if (labels.size() != risks.size()) throw InvalidArgument("c_index: length mismatch");
  double score = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].event) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (!(labels[i].time < labels[j].time)) continue;
      ++pairs;
      if (risks[i] > risks[j]) score += 1.0;
      else if (risks[i] == risks[j]) score += 0.5;
    }
  }
  if (pairs == 0) throw UndefinedMetric("c_index is undefined without comparable pairs");
  return {score / static_cast<double>(pairs), pairs};
}

inline double c_index(std::span<const SurvivalLabel> labels, std::span<const double> risks) {
  return concordance(labels, risks).value;
}

}  // namespace gradtree
