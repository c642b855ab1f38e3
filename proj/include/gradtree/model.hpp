#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gradtree/baselines.hpp"
#include "gradtree/builder.hpp"
#include "gradtree/data.hpp"
#include "gradtree/loss.hpp"
#include "gradtree/metrics.hpp"
#include "gradtree/survival.hpp"
#include "gradtree/tree.hpp"

namespace gradtree {

enum class LearnerKind { dtlf, cart, ert, surv_tree };

inline std::string_view to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::dtlf: return "dtlf";
    case LearnerKind::cart: return "cart";
    case LearnerKind::ert: return "ert";
    case LearnerKind::surv_tree: return "surv_tree";
  }
  return "?";
}

inline LearnerKind parse_learner_kind(std::string_view s) {
  if (s == "dtlf") return LearnerKind::dtlf;
  if (s == "cart") return LearnerKind::cart;
  if (s == "ert") return LearnerKind::ert;
  if (s == "surv_tree") return LearnerKind::surv_tree;
  throw InvalidArgument("unknown learner '" + std::string(s) + "'");
}

/// How the gradient tree's initial approximation is chosen.
enum class InitMode {
  zeros,
  prior,     // target mean, class frequencies or Kaplan-Meier interval probabilities
  provided,  // TreeConfig::init
};

inline std::string_view to_string(InitMode m) {
  switch (m) {
    case InitMode::zeros: return "zeros";
    case InitMode::prior: return "prior";
    case InitMode::provided: return "provided";
  }
  return "?";
}

inline InitMode parse_init_mode(std::string_view s) {
  if (s == "zeros") return InitMode::zeros;
  if (s == "prior") return InitMode::prior;
  if (s == "provided") return InitMode::provided;
  throw InvalidArgument("unknown init mode '" + std::string(s) + "'");
}

/// Everything needed to reproduce a fit on a dataset.
struct LearnerSpec {
  LearnerKind learner = LearnerKind::dtlf;
  TreeConfig tree;                        // structural fields are shared with the baselines
  std::optional<LossKind> loss;           // gradient trees; defaults from the task
  InitMode init_mode = InitMode::zeros;
  double prior_epsilon = 1e-6;            // clipping for prior logits
  std::size_t ert_candidates_per_feature = 1;
};

struct ModelMetadata {
  Task task = Task::regression;
  LearnerSpec spec;
  std::string learner_name;  // e.g. "dtlf", "cart_regression"
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::vector<std::string> class_names;
  std::optional<TimeGrid> time_grid;
  std::size_t dropped_samples = 0;  // censored past the last boundary (gradient survival trees)
};

struct Model {
  Tree tree;
  ModelMetadata meta;
};

inline LossKind default_loss(Task task) {
  switch (task) {
    case Task::regression: return LossKind::squared_error;
    case Task::classification: return LossKind::cross_entropy;
    case Task::survival: return LossKind::generalized_cross_entropy;
  }
  return LossKind::squared_error;
}

inline std::string learner_name(LearnerKind learner, Task task) {
  if (learner == LearnerKind::dtlf || learner == LearnerKind::surv_tree) return std::string(to_string(learner));
  return std::string(to_string(learner)) + (task == Task::classification ? "_classification" : "_regression");
}

namespace detail {

inline BaselineConfig baseline_config(const LearnerSpec& spec, BaselineAlgorithm algorithm) {
  BaselineConfig c;
  c.algorithm = algorithm;
  c.max_depth = spec.tree.max_depth;
  c.min_samples_split = spec.tree.min_samples_split;
  c.min_samples_leaf = spec.tree.min_samples_leaf;
  c.rng_seed = spec.tree.rng_seed;
  c.ert_candidates_per_feature = spec.ert_candidates_per_feature;
  return c;
}

inline void replace_leaves_with_km(Tree& tree, const Matrix& X, std::span<const SurvivalLabel> labels,
                                   const TimeGrid& grid) {
  std::vector<std::vector<SurvivalLabel>> per_leaf(tree.nodes().size());
  for (std::size_t i = 0; i < X.rows(); ++i) per_leaf[tree.leaf_index(X.row(i))].push_back(labels[i]);
  auto& nodes = tree.mutable_nodes();
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!nodes[n].is_leaf()) continue;
    // A leaf always holds at least min_samples_leaf training samples.
    nodes[n].value = km_estimate(per_leaf[n], grid).survival;
  }
  tree.set_output(OutputKind::survival);
}

}  // namespace detail

inline Model train(const Dataset& data, const LearnerSpec& spec) {
  data.validate();
  if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
  Model model;
  model.meta.task = data.task;
  model.meta.spec = spec;
  model.meta.learner_name = learner_name(spec.learner, data.task);
  model.meta.feature_names = data.feature_names;
  model.meta.target_names = data.target_names;
  model.meta.class_names = data.class_names;

  if (spec.learner == LearnerKind::surv_tree) {
    if (data.task != Task::survival) throw InvalidArgument("surv_tree needs a survival dataset");
    const TimeGrid grid = build_time_grid(data.survival);
    model.tree = fit_surv_tree(data.X, data.survival, grid,
                               detail::baseline_config(spec, BaselineAlgorithm::surv_tree));
    model.meta.time_grid = grid;
    return model;
  }

  if (spec.learner == LearnerKind::cart || spec.learner == LearnerKind::ert) {
    const bool ert = spec.learner == LearnerKind::ert;
    if (data.task == Task::regression) {
      model.tree = fit_regression_tree(
          data.X, data.targets,
          detail::baseline_config(spec, ert ? BaselineAlgorithm::ert_regression : BaselineAlgorithm::cart_regression));
    } else if (data.task == Task::classification) {
      model.tree = fit_classification_tree(data.X, data.classes, data.class_names.size(),
                                           detail::baseline_config(spec, ert ? BaselineAlgorithm::ert_classification
                                                                             : BaselineAlgorithm::cart_classification));
    } else {
      throw InvalidArgument(std::string(to_string(spec.learner)) + " does not support survival data; use surv_tree");
    }
    return model;
  }

  // Gradient tree.
  const LossKind loss_kind = spec.loss.value_or(default_loss(data.task));
  if (loss_kind != default_loss(data.task))
    throw InvalidArgument("loss '" + std::string(to_string(loss_kind)) + "' does not match task '" +
                          std::string(to_string(data.task)) + "'");
  TreeConfig config = spec.tree;
  std::optional<BuiltinLoss> loss;
  OutputKind output = OutputKind::raw;
  Vector prior;

  switch (data.task) {
    case Task::regression: {
      loss = BuiltinLoss::squared_error(data.targets);
      prior.assign(data.targets.cols(), 0.0);
      for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < prior.size(); ++j) prior[j] += data.targets(i, j) / static_cast<double>(data.size());
      break;
    }
    case Task::classification: {
      const std::size_t c = data.class_names.size();
      loss = BuiltinLoss::cross_entropy(data.classes, c);
      output = OutputKind::logits;
      if (spec.init_mode == InitMode::prior) {
        Vector freq(c, 0.0);
        for (auto k : data.classes) freq[k] += 1.0 / static_cast<double>(data.size());
        prior = prior_logits(freq, spec.prior_epsilon);
      }
      break;
    }
    case Task::survival: {
      const TimeGrid grid = build_time_grid(data.survival);
      loss = BuiltinLoss::generalized_cross_entropy(encode_survival_labels(data.survival, grid), grid.num_intervals());
      output = OutputKind::logits;
      if (spec.init_mode == InitMode::prior)
        prior = prior_logits(interval_probabilities(km_estimate(data.survival, grid)), spec.prior_epsilon);
      model.meta.time_grid = grid;
      model.meta.dropped_samples = loss->dropped_samples();
      break;
    }
  }

  if (spec.init_mode == InitMode::zeros) config.init.reset();
  else if (spec.init_mode == InitMode::prior) config.init = prior;
  else if (!config.init) throw InvalidArgument("init mode 'provided' needs an init vector");

  model.tree = fit(data.X, *loss, config);
  model.tree.set_output(output);
  if (data.task == Task::survival && config.leaf_mode == LeafMode::kaplan_meier)
    detail::replace_leaves_with_km(model.tree, data.X, data.survival, *model.meta.time_grid);
  return model;
}

inline void check_features(const Model& model, const Dataset& data) {
  if (data.num_features() != model.tree.num_features())
    throw DataError("dataset has " + std::to_string(data.num_features()) + " features, model expects " +
                    std::to_string(model.tree.num_features()));
}

/// Re-indexes a classification dataset loaded on its own onto the model's
/// class list.
inline void align_classes(Dataset& data, const ModelMetadata& meta) {
  if (data.task != Task::classification) return;
  for (auto& c : data.classes) {
    const auto& name = data.class_names.at(c);
    const auto it = std::find(meta.class_names.begin(), meta.class_names.end(), name);
    if (it == meta.class_names.end()) throw DataError("class '" + name + "' was not seen during training");
    c = static_cast<std::size_t>(it - meta.class_names.begin());
  }
  data.class_names = meta.class_names;
}

/// Regression predictions (N x q).
inline Matrix predict_values(const Model& model, const Matrix& X) { return model.tree.predict(X); }

/// Class probabilities (N x C).
inline Matrix predict_proba(const Model& model, const Matrix& X) {
  Matrix out(X.rows(), model.tree.output_dim());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const Vector p = class_probabilities(model.tree, model.tree.predict(X.row(r)));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

/// Interval probabilities (N x C) for survival models.
inline Matrix predict_interval_distribution(const Model& model, const Matrix& X) {
  if (!model.meta.time_grid) throw InvalidArgument("model has no time grid");
  Matrix out(X.rows(), model.tree.output_dim());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const Vector p = leaf_interval_distribution(model.tree, model.tree.predict(X.row(r)), *model.meta.time_grid);
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

inline Vector predict_risk(const Model& model, const Matrix& X) {
  const Matrix dist = predict_interval_distribution(model, X);
  Vector risk(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) risk[r] = risk_from_probabilities(dist.row(r), *model.meta.time_grid);
  return risk;
}

inline MetricReport evaluate(const Model& model, const Dataset& data) {
  check_features(model, data);
  if (data.task != model.meta.task) throw DataError("dataset task does not match the model");
  MetricReport report;
  report.sample_count = data.size();
  switch (data.task) {
    case Task::regression:
      report.metric = "r2";
      report.value = r2(data.targets, predict_values(model, data.X));
      break;
    case Task::classification: {
      report.metric = "roc_auc";
      if (data.class_names.size() != model.meta.class_names.size())
        throw DataError("dataset classes do not match the model classes");
      report.value = roc_auc(data.classes, predict_proba(model, data.X));
      break;
    }
    case Task::survival: {
      report.metric = "c_index";
      const auto c = concordance(data.survival, predict_risk(model, data.X));
      report.value = c.value;
      report.auxiliary["comparable_pairs"] = static_cast<double>(c.comparable_pairs);
      break;
    }
  }
  return report;
}

}  // namespace gradtree
