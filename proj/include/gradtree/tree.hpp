#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradtree/common.hpp"
#include "gradtree/loss.hpp"

namespace gradtree {

/// What a leaf value means to the caller.
enum class OutputKind : std::uint8_t {
  raw,            // regression values
  logits,         // apply softmax to get class / interval probabilities
  probabilities,  // class-frequency vector
  survival,       // right-continuous survival values at the time-grid boundaries
};

inline std::string_view to_string(OutputKind k) {
  switch (k) {
    case OutputKind::raw: return "raw";
    case OutputKind::logits: return "logits";
    case OutputKind::probabilities: return "probabilities";
    case OutputKind::survival: return "survival";
  }
  return "?";
}

inline OutputKind parse_output_kind(std::string_view s) {
  if (s == "raw") return OutputKind::raw;
  if (s == "logits") return OutputKind::logits;
  if (s == "probabilities") return OutputKind::probabilities;
  if (s == "survival") return OutputKind::survival;
  throw InvalidArgument("unknown output kind '" + std::string(s) + "'");
}

/// Derivative sums over the samples of one side of a split. `count` is the
/// number of samples that enter the lambda damping term, which is the size of
/// the node being split (not the side).
struct NodeStats {
  Vector grad_sum;
  Vector hess_sum;
  std::size_t count = 0;

  friend bool operator==(const NodeStats&, const NodeStats&) = default;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;

  friend bool operator==(const Split&, const Split&) = default;
};

inline constexpr std::size_t kNoChild = static_cast<std::size_t>(-1);

struct Node {
  Vector value;
  std::optional<Split> split;
  std::size_t left = kNoChild;
  std::size_t right = kNoChild;
  std::size_t depth = 0;
  std::size_t sample_count = 0;
  // Sums that produced this node's adjustment from its parent (gradient trees only).
  std::optional<NodeStats> stats;

  bool is_leaf() const noexcept { return !split.has_value(); }

  friend bool operator==(const Node&, const Node&) = default;
};

/// Binary tree stored as a flat node array; the root is node 0 and a sample
/// goes left when x[feature] <= threshold.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<Node> nodes, std::size_t num_features, OutputKind output)
      : nodes_(std::move(nodes)), num_features_(num_features), output_(output) {
    validate();
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::vector<Node>& mutable_nodes() noexcept { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const Node& root() const { return nodes_.at(0); }
  std::size_t num_features() const noexcept { return num_features_; }
  std::size_t output_dim() const { return nodes_.empty() ? 0 : nodes_.front().value.size(); }
  OutputKind output() const noexcept { return output_; }
  void set_output(OutputKind k) noexcept { output_ = k; }

  /// Initial approximation the root adjustment was computed from (gradient trees).
  const Vector& init_value() const noexcept { return init_; }
  void set_init_value(Vector v) { init_ = std::move(v); }

  std::size_t leaf_index(std::span<const double> x) const {
    if (nodes_.empty()) throw InvalidArgument("predict on an empty tree");
    if (x.size() != num_features_)
      throw InvalidArgument("feature vector has " + std::to_string(x.size()) + " components, tree expects " +
                            std::to_string(num_features_));
    std::size_t i = 0;
    while (const auto& s = nodes_[i].split) i = x[s->feature] <= s->threshold ? nodes_[i].left : nodes_[i].right;
    return i;
  }

  const Vector& predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }

  Matrix predict(const Matrix& X) const {
    Matrix out(X.rows(), output_dim());
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const Vector& v = predict(X.row(r));
      std::copy(v.begin(), v.end(), out.row(r).begin());
    }
    return out;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
  }

  std::size_t num_leaves() const {
    std::size_t c = 0;
    for (const auto& n : nodes_) c += n.is_leaf() ? 1 : 0;
    return c;
  }

  /// Throws SchemaError on dangling children, cycles or inconsistent widths.
  void validate() const {
    if (nodes_.empty()) throw SchemaError("tree has no nodes");
    const std::size_t q = nodes_.front().value.size();
    std::vector<std::uint8_t> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const Node& n = nodes_[i];
      if (n.value.size() != q) throw SchemaError("node " + std::to_string(i) + " has a value of different width");
      if (n.split.has_value() != (n.left != kNoChild) || n.split.has_value() != (n.right != kNoChild))
        throw SchemaError("node " + std::to_string(i) + " has inconsistent split/children");
      if (!n.split) continue;
      if (n.split->feature >= num_features_)
        throw SchemaError("node " + std::to_string(i) + " splits on an unknown feature");
      for (std::size_t c : {n.left, n.right}) {
        if (c >= nodes_.size() || seen[c]) throw SchemaError("node " + std::to_string(i) + " has an invalid child");
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<Node> nodes_;
  std::size_t num_features_ = 0;
  OutputKind output_ = OutputKind::raw;
  Vector init_;
};

/// Turns a leaf value into a probability vector over classes or intervals.
/// Survival values are handled in survival.hpp.
inline Vector class_probabilities(const Tree& tree, std::span<const double> leaf_value) {
  switch (tree.output()) {
    case OutputKind::logits: return softmax(leaf_value);
    case OutputKind::probabilities: return Vector(leaf_value.begin(), leaf_value.end());
    default: throw InvalidArgument("tree output is not a class distribution");
  }
}

}  // namespace gradtree
