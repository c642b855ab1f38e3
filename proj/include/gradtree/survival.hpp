#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gradtree/common.hpp"
#include "gradtree/loss.hpp"
#include "gradtree/tree.hpp"

namespace gradtree {

struct SurvivalLabel {
  double time = 0.0;
  bool event = false;  // true: observed event, false: censored

  friend bool operator==(const SurvivalLabel&, const SurvivalLabel&) = default;
};

/// Sorted boundaries tau_0 < ... < tau_n splitting [tau_0, inf) into
/// [tau_0, tau_1), ..., [tau_n, inf). The interval count equals the number
/// of boundaries.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(Vector boundaries) : boundaries_(std::move(boundaries)) {
    if (boundaries_.empty()) throw InvalidArgument("time grid needs at least one boundary");
    if (!all_finite(boundaries_)) throw InvalidArgument("time grid boundaries must be finite");
    for (std::size_t i = 1; i < boundaries_.size(); ++i)
      if (!(boundaries_[i - 1] < boundaries_[i])) throw InvalidArgument("time grid boundaries must be strictly increasing");
  }

  const Vector& boundaries() const noexcept { return boundaries_; }
  std::size_t num_intervals() const noexcept { return boundaries_.size(); }

  /// Interval containing t; times before the first boundary map to interval 0.
  std::size_t interval_of(double t) const {
    const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), t);
    return it == boundaries_.begin() ? 0 : static_cast<std::size_t>(it - boundaries_.begin()) - 1;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  Vector boundaries_;
};

/// Survival values S(tau_k) = P(T > tau_k) at each grid boundary.
struct KMCurve {
  TimeGrid grid;
  Vector survival;
};

inline void validate_labels(std::span<const SurvivalLabel> labels) {
  for (const auto& l : labels)
    if (!std::isfinite(l.time) || !(l.time > 0.0)) throw InvalidArgument("survival times must be finite and positive");
}

/// Boundaries are the sorted unique times of observed events.
inline TimeGrid build_time_grid(std::span<const SurvivalLabel> labels) {
  validate_labels(labels);
  Vector times;
  for (const auto& l : labels)
    if (l.event) times.push_back(l.time);
  if (times.empty()) throw InvalidArgument("cannot build a time grid without observed events");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return TimeGrid(std::move(times));
}

/// Observed: one-hot at the interval containing t. Censored: ones at every
/// interval whose left boundary lies strictly after t. A censored time at or
/// past the last boundary yields the empty set.
inline IntervalSet encode_survival_label(const SurvivalLabel& label, const TimeGrid& grid) {
  IntervalSet y{std::vector<std::uint8_t>(grid.num_intervals(), 0)};
  if (label.event) {
    y.members[grid.interval_of(label.time)] = 1;
  } else {
    const auto& b = grid.boundaries();
    for (std::size_t j = 0; j < b.size(); ++j) y.members[j] = label.time < b[j] ? 1 : 0;
  }
  return y;
}

inline std::vector<IntervalSet> encode_survival_labels(std::span<const SurvivalLabel> labels, const TimeGrid& grid) {
  std::vector<IntervalSet> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(encode_survival_label(l, grid));
  return out;
}

/// Product-limit estimator evaluated at the grid boundaries.
inline KMCurve km_estimate(std::span<const SurvivalLabel> labels, const TimeGrid& grid) {
  if (labels.empty()) throw InvalidArgument("Kaplan-Meier estimate of an empty sample");
  std::vector<SurvivalLabel> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

  // (event time, survival just after it)
  std::vector<std::pair<double, double>> steps;
  double s = 1.0;
  const std::size_t n = sorted.size();
  std::size_t at_risk = n;
  bool censored_before = false;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].time;
    std::size_t events = 0, total = 0;
    while (i < sorted.size() && sorted[i].time == t) {
      events += sorted[i].event ? 1 : 0;
      ++total;
      ++i;
    }
    if (events > 0) {
      // Until the first censoring the product telescopes to a plain ratio.
      if (censored_before)
        s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
      else
        s = static_cast<double>(at_risk - events) / static_cast<double>(n);
      steps.emplace_back(t, s);
    }
    censored_before = censored_before || events < total;
    at_risk -= total;
  }

  KMCurve curve{grid, Vector(grid.num_intervals(), 1.0)};
  std::size_t k = 0;
  double current = 1.0;
  for (std::size_t j = 0; j < grid.num_intervals(); ++j) {
    while (k < steps.size() && steps[k].first <= grid.boundaries()[j]) current = steps[k++].second;
    curve.survival[j] = current;
  }
  return curve;
}

/// p_k = S_k - S_{k+1} where S_k is the survival probability at the start of
/// interval k (S_0 = 1 for a proper distribution); the last interval takes the
/// remaining mass S_n.
inline Vector interval_probabilities(std::span<const double> start_survival) {
  if (start_survival.empty()) throw InvalidArgument("empty survival sequence");
  const std::size_t c = start_survival.size();
  Vector p(c);
  for (std::size_t k = 0; k + 1 < c; ++k) p[k] = std::max(0.0, start_survival[k] - start_survival[k + 1]);
  p[c - 1] = std::max(0.0, start_survival[c - 1]);
  return p;
}

/// Interval distribution of a curve. An event in [tau_k, tau_{k+1}) has
/// probability S(tau_{k-1}) - S(tau_k), with S(tau_{-1}) = 1.
inline Vector interval_probabilities(const KMCurve& curve) {
  const std::size_t c = curve.survival.size();
  if (c == 0 || c != curve.grid.num_intervals()) throw InvalidArgument("survival curve does not match its grid");
  Vector start(c);
  start[0] = 1.0;
  for (std::size_t k = 1; k < c; ++k) start[k] = curve.survival[k - 1];
  return interval_probabilities(start);
}

/// Logits whose softmax is p with components below epsilon raised to epsilon
/// (and renormalized). The free additive constant is fixed at zero.
inline Vector prior_logits(std::span<const double> p, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (p.empty()) throw InvalidArgument("empty probability vector");
  if (epsilon >= 1.0 / static_cast<double>(p.size()))
    throw InvalidArgument("epsilon must be smaller than 1 / number of components");
  Vector z(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!std::isfinite(p[k]) || p[k] < 0.0) throw InvalidArgument("probabilities must be finite and non-negative");
    z[k] = std::log(std::max(p[k], epsilon));
  }
  return z;
}

/// S(t) = 1 - sum of softmax(z)_j over boundaries tau_j < t.
inline double survival_at(std::span<const double> z, const TimeGrid& grid, double t) {
  if (z.size() != grid.num_intervals()) throw InvalidArgument("logit vector length does not match the time grid");
  const Vector s = softmax(z);
  double mass = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (grid.boundaries()[j] < t) mass += s[j];
  return std::clamp(1.0 - mass, 0.0, 1.0);
}

/// Step survival function of the logits in curve form: S(tau_k) = 1 - sum_{j<=k} softmax(z)_j.
inline KMCurve survival_curve_from_logits(std::span<const double> z, const TimeGrid& grid) {
  if (z.size() != grid.num_intervals()) throw InvalidArgument("logit vector length does not match the time grid");
  const Vector s = softmax(z);
  KMCurve curve{grid, Vector(s.size())};
  double cumulative = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cumulative += s[k];
    curve.survival[k] = std::clamp(1.0 - cumulative, 0.0, 1.0);
  }
  return curve;
}

/// Representative time of each interval: its midpoint, and tau_n for the open last one.
inline Vector interval_representatives(const TimeGrid& grid) {
  const auto& b = grid.boundaries();
  Vector rep(b.size());
  for (std::size_t k = 0; k + 1 < b.size(); ++k) rep[k] = 0.5 * (b[k] + b[k + 1]);
  rep.back() = b.back();
  return rep;
}

/// Negative expected event time under an interval distribution.
inline double risk_from_probabilities(std::span<const double> p, const TimeGrid& grid) {
  if (p.size() != grid.num_intervals()) throw InvalidArgument("distribution length does not match the time grid");
  const Vector rep = interval_representatives(grid);
  double expected = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) expected += p[k] * rep[k];
  return -expected;
}

inline double risk_score(std::span<const double> z, const TimeGrid& grid) {
  if (z.size() != grid.num_intervals()) throw InvalidArgument("logit vector length does not match the time grid");
  return risk_from_probabilities(softmax(z), grid);
}

/// Interval distribution predicted by a survival tree's leaf value.
inline Vector leaf_interval_distribution(const Tree& tree, std::span<const double> leaf_value, const TimeGrid& grid) {
  switch (tree.output()) {
    case OutputKind::logits: return softmax(leaf_value);
    case OutputKind::probabilities: return Vector(leaf_value.begin(), leaf_value.end());
    case OutputKind::survival: return interval_probabilities(KMCurve{grid, Vector(leaf_value.begin(), leaf_value.end())});
    case OutputKind::raw: break;
  }
  throw InvalidArgument("tree output is not a survival distribution");
}

}  // namespace gradtree
