#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gradtree/common.hpp"

namespace gradtree {

/// Second derivatives are clamped from below to this value before they enter
/// the adjustment formula, so that the denominator M*lambda + H stays positive.
inline constexpr double kHessianFloor = 1e-6;

enum class LossKind { squared_error, cross_entropy, generalized_cross_entropy };

inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared_error: return "se";
    case LossKind::cross_entropy: return "ce";
    case LossKind::generalized_cross_entropy: return "gce";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "se") return LossKind::squared_error;
  if (name == "ce") return LossKind::cross_entropy;
  if (name == "gce") return LossKind::generalized_cross_entropy;
  throw InvalidArgument("unknown loss '" + std::string(name) + "' (expected se, ce or gce)");
}

struct RealTarget {
  Vector values;
};

/// Zero-based class index; the number of classes is the prediction length.
struct ClassIndex {
  std::size_t index = 0;
};

/// 0/1 membership vector over the outcome set. An observation known to lie in
/// a subset of outcomes has ones at exactly those positions.
struct IntervalSet {
  std::vector<std::uint8_t> members;

  bool empty_set() const {
    return std::none_of(members.begin(), members.end(), [](auto m) { return m != 0; });
  }
};

using LabelRecord = std::variant<RealTarget, ClassIndex, IntervalSet>;

struct GradHess {
  Vector g;
  Vector h;
};

inline double log_sum_exp(std::span<const double> z) {
  if (z.empty()) throw InvalidArgument("log_sum_exp of an empty vector");
  const double m = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - m);
  return m + std::log(acc);
}

inline Vector softmax(std::span<const double> z) {
  if (z.empty()) throw InvalidArgument("softmax of an empty vector");
  if (!all_finite(z)) throw InvalidArgument("softmax input contains non-finite values");
  const double m = *std::max_element(z.begin(), z.end());
  Vector s(z.size());
  double total = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    s[j] = std::exp(z[j] - m);
    total += s[j];
  }
  for (double& v : s) v /= total;
  return s;
}

namespace detail {

template <class T>
const T& expect_label(const LabelRecord& y, LossKind kind) {
  const T* p = std::get_if<T>(&y);
  if (!p)
    throw InvalidArgument("label record kind does not match loss '" + std::string(to_string(kind)) + "'");
  return *p;
}

inline void check_prediction(std::span<const double> pred) {
  if (pred.empty()) throw InvalidArgument("empty prediction vector");
  if (!all_finite(pred)) throw InvalidArgument("prediction contains non-finite values");
}

// log(y^T softmax(z)) computed as lse(selected z) - lse(all z).
struct SubsetLogits {
  double lse_all;
  double lse_selected;
};

inline SubsetLogits subset_logits(const IntervalSet& y, std::span<const double> z) {
  if (y.members.size() != z.size())
    throw InvalidArgument("interval label length " + std::to_string(y.members.size()) +
                          " does not match prediction length " + std::to_string(z.size()));
  if (y.empty_set()) throw InvalidArgument("generalized cross-entropy needs a non-empty label set");
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j)
    if (y.members[j]) m = std::max(m, z[j]);
  double acc = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (y.members[j]) acc += std::exp(z[j] - m);
  return {log_sum_exp(z), m + std::log(acc)};
}

}  // namespace detail

inline double loss_value(LossKind kind, const LabelRecord& y, std::span<const double> pred) {
  detail::check_prediction(pred);
  switch (kind) {
    case LossKind::squared_error: {
      const auto& t = detail::expect_label<RealTarget>(y, kind);
      if (t.values.size() != pred.size())
        throw InvalidArgument("target length does not match prediction length");
      double acc = 0.0;
      for (std::size_t j = 0; j < pred.size(); ++j) acc += (t.values[j] - pred[j]) * (t.values[j] - pred[j]);
      return acc;
    }
    case LossKind::cross_entropy: {
      const auto& c = detail::expect_label<ClassIndex>(y, kind);
      if (c.index >= pred.size()) throw InvalidArgument("class index out of range");
      return log_sum_exp(pred) - pred[c.index];
    }
    case LossKind::generalized_cross_entropy: {
      const auto& set = detail::expect_label<IntervalSet>(y, kind);
      const auto sl = detail::subset_logits(set, pred);
      return std::max(0.0, sl.lse_all - sl.lse_selected);
    }
  }
  throw InvalidArgument("unknown loss kind");
}

/// Analytic per-component gradient and diagonal Hessian, without flooring.
inline GradHess grad_hess_unfloored(LossKind kind, const LabelRecord& y, std::span<const double> pred) {
  detail::check_prediction(pred);
  const std::size_t q = pred.size();
  GradHess out{Vector(q), Vector(q)};
  switch (kind) {
    case LossKind::squared_error: {
      const auto& t = detail::expect_label<RealTarget>(y, kind);
      if (t.values.size() != q) throw InvalidArgument("target length does not match prediction length");
      for (std::size_t j = 0; j < q; ++j) {
        out.g[j] = 2.0 * (pred[j] - t.values[j]);
        out.h[j] = 2.0;
      }
      return out;
    }
    case LossKind::cross_entropy: {
      const auto& c = detail::expect_label<ClassIndex>(y, kind);
      if (c.index >= q) throw InvalidArgument("class index out of range");
      const Vector s = softmax(pred);
      for (std::size_t j = 0; j < q; ++j) {
        out.g[j] = s[j] - (j == c.index ? 1.0 : 0.0);
        out.h[j] = s[j] * (1.0 - s[j]);
      }
      return out;
    }
    case LossKind::generalized_cross_entropy: {
      const auto& set = detail::expect_label<IntervalSet>(y, kind);
      const auto sl = detail::subset_logits(set, pred);
      // s_j / (y^T s) is the softmax restricted to the selected positions.
      for (std::size_t j = 0; j < q; ++j) {
        const double s = std::exp(pred[j] - sl.lse_all);
        const double r = set.members[j] ? std::exp(pred[j] - sl.lse_selected) : 0.0;
        out.g[j] = s - r;
        out.h[j] = s * (1.0 - s) - r * (1.0 - r);
      }
      return out;
    }
  }
  throw InvalidArgument("unknown loss kind");
}

inline void floor_hessian(std::span<double> h) {
  for (double& v : h) v = std::max(v, kHessianFloor);
}

inline GradHess grad_hess(LossKind kind, const LabelRecord& y, std::span<const double> pred) {
  GradHess out = grad_hess_unfloored(kind, y, pred);
  floor_hessian(out.h);
  return out;
}

/// Batch derivative contract used by the tree builder. All samples of a node
/// share one current value, so an evaluation takes the node's sample ids and
/// that value and fills the matching rows of the N x q buffers. Rows outside
/// `sample_ids` must be left untouched.
class Loss {
 public:
  virtual ~Loss() = default;
  virtual std::size_t num_samples() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual void grad_hess(std::span<const std::size_t> sample_ids, std::span<const double> cur_value,
                         Matrix& g_out, Matrix& h_out) const = 0;
};

/// One of the built-in losses bound to a training label array.
class BuiltinLoss final : public Loss {
 public:
  BuiltinLoss(LossKind kind, std::vector<LabelRecord> labels, std::size_t output_dim)
      : kind_(kind), labels_(std::move(labels)), output_dim_(output_dim) {
    if (output_dim_ == 0) throw InvalidArgument("loss output dimension must be positive");
    for (const auto& y : labels_) validate(y);
  }

  static BuiltinLoss squared_error(const Matrix& targets) {
    std::vector<LabelRecord> labels;
    labels.reserve(targets.rows());
    for (std::size_t i = 0; i < targets.rows(); ++i) {
      auto r = targets.row(i);
      labels.emplace_back(RealTarget{Vector(r.begin(), r.end())});
    }
    return BuiltinLoss(LossKind::squared_error, std::move(labels), targets.cols());
  }

  static BuiltinLoss cross_entropy(std::span<const std::size_t> classes, std::size_t num_classes) {
    std::vector<LabelRecord> labels;
    labels.reserve(classes.size());
    for (auto c : classes) labels.emplace_back(ClassIndex{c});
    return BuiltinLoss(LossKind::cross_entropy, std::move(labels), num_classes);
  }

  /// Empty label sets (censored past the last grid boundary) are accepted and
  /// contribute zero gradient and zero Hessian.
  static BuiltinLoss generalized_cross_entropy(std::vector<IntervalSet> sets, std::size_t num_intervals) {
    std::vector<LabelRecord> labels;
    labels.reserve(sets.size());
    for (auto& s : sets) labels.emplace_back(std::move(s));
    return BuiltinLoss(LossKind::generalized_cross_entropy, std::move(labels), num_intervals);
  }

  LossKind kind() const noexcept { return kind_; }
  std::size_t num_samples() const override { return labels_.size(); }
  std::size_t output_dim() const override { return output_dim_; }
  const std::vector<LabelRecord>& labels() const noexcept { return labels_; }

  std::size_t dropped_samples() const {
    if (kind_ != LossKind::generalized_cross_entropy) return 0;
    return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](const LabelRecord& y) {
      return std::get<IntervalSet>(y).empty_set();
    }));
  }

  void grad_hess(std::span<const std::size_t> sample_ids, std::span<const double> cur_value, Matrix& g_out,
                 Matrix& h_out) const override {
    if (cur_value.size() != output_dim_) throw InvalidArgument("current value has wrong dimension");
    for (auto i : sample_ids) {
      const auto& y = labels_[i];
      auto g = g_out.row(i);
      auto h = h_out.row(i);
      if (kind_ == LossKind::generalized_cross_entropy && std::get<IntervalSet>(y).empty_set()) {
        std::fill(g.begin(), g.end(), 0.0);
        std::fill(h.begin(), h.end(), 0.0);
        continue;
      }
      const GradHess gh = gradtree::grad_hess(kind_, y, cur_value);
      std::copy(gh.g.begin(), gh.g.end(), g.begin());
      std::copy(gh.h.begin(), gh.h.end(), h.begin());
    }
  }

  double value(std::size_t i, std::span<const double> pred) const {
    const auto& y = labels_.at(i);
    if (kind_ == LossKind::generalized_cross_entropy && std::get<IntervalSet>(y).empty_set()) return 0.0;
    return loss_value(kind_, y, pred);
  }

 private:
  void validate(const LabelRecord& y) const {
    switch (kind_) {
      case LossKind::squared_error:
        if (detail::expect_label<RealTarget>(y, kind_).values.size() != output_dim_)
          throw InvalidArgument("regression target has wrong dimension");
        break;
      case LossKind::cross_entropy:
        if (detail::expect_label<ClassIndex>(y, kind_).index >= output_dim_)
          throw InvalidArgument("class index out of range");
        break;
      case LossKind::generalized_cross_entropy:
        if (detail::expect_label<IntervalSet>(y, kind_).members.size() != output_dim_)
          throw InvalidArgument("interval label has wrong length");
        break;
    }
  }

  LossKind kind_;
  std::vector<LabelRecord> labels_;
  std::size_t output_dim_;
};

/// Signature of a user-supplied derivative routine: (sample_ids, cur_value,
/// g_out, h_out). It must write rows `sample_ids` of both buffers only.
using LossCallback = std::function<void(std::span<const std::size_t> sample_ids,
                                        std::span<const double> cur_value, Matrix& g_out, Matrix& h_out)>;

/// Adapts an external derivative routine to the Loss contract. Hessian rows
/// it writes are floored like the built-in losses.
class CallbackLoss final : public Loss {
 public:
  CallbackLoss(LossCallback fn, std::size_t num_samples, std::size_t output_dim)
      : fn_(std::move(fn)), num_samples_(num_samples), output_dim_(output_dim) {
    if (!fn_) throw InvalidArgument("empty loss callback");
    if (output_dim_ == 0) throw InvalidArgument("loss output dimension must be positive");
  }

  std::size_t num_samples() const override { return num_samples_; }
  std::size_t output_dim() const override { return output_dim_; }

  void grad_hess(std::span<const std::size_t> sample_ids, std::span<const double> cur_value, Matrix& g_out,
                 Matrix& h_out) const override {
    ++calls_;
    fn_(sample_ids, cur_value, g_out, h_out);
    for (auto i : sample_ids) floor_hessian(h_out.row(i));
  }

  std::size_t call_count() const noexcept { return calls_; }

 private:
  LossCallback fn_;
  std::size_t num_samples_;
  std::size_t output_dim_;
  mutable std::size_t calls_ = 0;
};

}  // namespace gradtree
