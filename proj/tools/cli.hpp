#pragma once

// Command-line front end: synth, train, predict, evaluate, sweep, bench.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gradtree/gradtree.hpp"

namespace gradtree::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct DataOptions {
  std::string task = "regression";
  std::vector<std::string> targets;
  std::string time_col = "time";
  std::string event_col = "event";
  std::vector<std::string> features;
  std::vector<std::string> exclude;
  bool exclude_set = false;
};

struct TreeOptions {
  std::string learner = "dtlf";
  std::string loss;
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 6;
  std::size_t min_samples_leaf = 3;
  double lambda = 0.0;
  double learning_rate = 1.0;
  std::string threshold_mode = "exhaustive";
  std::size_t n_guess = 10;
  std::string init_mode = "zeros";
  std::vector<double> init;
  std::string leaf_mode = "adjusted_value";
  std::uint64_t rng_seed = 0;
  std::size_t ert_candidates = 1;
  double prior_epsilon = 1e-6;
};

struct SynthOptions {
  std::string kind = "friedman1";
  std::size_t n = 400;
  std::uint64_t seed = 0;
  double weibull_k = 5.0;
  double event_prob = 0.8;
  double sparsity = 0.7;
};

inline void add_data_options(CLI::App* cmd, DataOptions& o, bool with_task) {
  if (with_task)
    cmd->add_option("--task", o.task, "regression, classification or survival")
        ->check(CLI::IsMember({"regression", "classification", "survival"}));
  cmd->add_option("--target", o.targets, "target column(s); default y (regression) or class (classification)");
  cmd->add_option("--time-col", o.time_col, "survival time column");
  cmd->add_option("--event-col", o.event_col, "survival event indicator column (0/1)");
  cmd->add_option("--features", o.features, "feature columns; default: every other column");
  cmd->add_option_function<std::vector<std::string>>(
      "--exclude",
      [&o](const std::vector<std::string>& v) {
        o.exclude = v;
        o.exclude_set = true;
      },
      "columns that are neither features nor targets; default y,time,event");
}

inline void add_tree_options(CLI::App* cmd, TreeOptions& o, bool with_learner) {
  if (with_learner)
    cmd->add_option("--learner", o.learner, "dtlf, cart, ert or surv_tree")
        ->check(CLI::IsMember({"dtlf", "cart", "ert", "surv_tree"}));
  cmd->add_option("--loss", o.loss, "se, ce or gce (default follows the task)")->check(CLI::IsMember({"se", "ce", "gce"}));
  cmd->add_option("--max-depth", o.max_depth, "maximum tree depth");
  cmd->add_option("--min-samples-split", o.min_samples_split, "minimum samples to split a node")->check(CLI::PositiveNumber);
  cmd->add_option("--min-samples-leaf", o.min_samples_leaf, "minimum samples per leaf")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", o.lambda, "l2 regularization strength")->check(CLI::NonNegativeNumber);
  cmd->add_option("--learning-rate", o.learning_rate, "step size in (0, 1]");
  cmd->add_option("--threshold-mode", o.threshold_mode, "exhaustive or random")
      ->check(CLI::IsMember({"exhaustive", "random"}));
  cmd->add_option("--n-guess", o.n_guess, "thresholds drawn per feature in random mode")->check(CLI::PositiveNumber);
  cmd->add_option("--init-mode", o.init_mode, "zeros, prior or provided")
      ->check(CLI::IsMember({"zeros", "prior", "provided"}));
  cmd->add_option("--init", o.init, "initial approximation (implies --init-mode provided)");
  cmd->add_option("--leaf-mode", o.leaf_mode, "adjusted_value or kaplan_meier")
      ->check(CLI::IsMember({"adjusted_value", "kaplan_meier"}));
  cmd->add_option("--rng-seed,--seed", o.rng_seed, "random seed");
  cmd->add_option("--ert-candidates-per-feature", o.ert_candidates, "random thresholds per feature for ert")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--prior-epsilon", o.prior_epsilon, "probability floor for prior logits");
}

inline void add_synth_options(CLI::App* cmd, SynthOptions& o, bool prefixed) {
  const std::string p = prefixed ? "--synth-" : "--";
  cmd->add_option(prefixed ? "--synth" : "--kind", o.kind,
                  "friedman1, friedman2, friedman3, strong_interactions, sparse_features or nonlinear");
  cmd->add_option("--n", o.n, "number of samples")->check(CLI::PositiveNumber);
  cmd->add_option(p + "seed", o.seed, "generator seed");
  cmd->add_option("--weibull-k", o.weibull_k, "Weibull shape")->check(CLI::PositiveNumber);
  cmd->add_option("--event-prob", o.event_prob, "probability that an event is observed");
  cmd->add_option("--sparsity", o.sparsity, "fraction of zeros for sparse_features");
}

inline SynthSpec make_synth_spec(const SynthOptions& o) {
  SynthSpec s;
  s.kind = parse_synth_kind(o.kind);
  s.n_samples = o.n;
  s.rng_seed = o.seed;
  s.weibull_k = o.weibull_k;
  s.censor_event_prob = o.event_prob;
  s.sparsity = o.sparsity;
  return s;
}

inline LearnerSpec make_learner_spec(const TreeOptions& o) {
  LearnerSpec s;
  s.learner = parse_learner_kind(o.learner);
  s.tree.max_depth = o.max_depth;
  s.tree.min_samples_split = o.min_samples_split;
  s.tree.min_samples_leaf = o.min_samples_leaf;
  s.tree.lambda = o.lambda;
  s.tree.learning_rate = o.learning_rate;
  s.tree.threshold_mode = parse_threshold_mode(o.threshold_mode);
  s.tree.n_guess = o.n_guess;
  s.tree.leaf_mode = parse_leaf_mode(o.leaf_mode);
  s.tree.rng_seed = o.rng_seed;
  s.init_mode = parse_init_mode(o.init_mode);
  if (!o.init.empty()) {
    s.tree.init = Vector(o.init.begin(), o.init.end());
    s.init_mode = InitMode::provided;
  }
  if (!o.loss.empty()) s.loss = parse_loss_kind(o.loss);
  s.ert_candidates_per_feature = o.ert_candidates;
  s.prior_epsilon = o.prior_epsilon;
  s.tree.validate();
  return s;
}

inline CsvSchema make_schema(const DataOptions& o, Task task) {
  CsvSchema s;
  s.task = task;
  if (task == Task::survival) {
    s.target_columns = {o.time_col, o.event_col};
  } else if (!o.targets.empty()) {
    s.target_columns = o.targets;
  } else {
    s.target_columns = {task == Task::classification ? "class" : "y"};
  }
  s.feature_columns = o.features;
  if (o.exclude_set) {
    s.exclude_columns = o.exclude;
  } else {
    for (const char* c : {"y", "time", "event"})
      if (std::find(s.target_columns.begin(), s.target_columns.end(), c) == s.target_columns.end())
        s.exclude_columns.emplace_back(c);
  }
  return s;
}

/// Schema for scoring a saved model: targets and features come from the model.
inline CsvSchema model_schema(const ModelMetadata& meta) {
  CsvSchema s;
  s.task = meta.task;
  s.target_columns = meta.target_names;
  s.feature_columns = meta.feature_names;
  return s;
}

inline void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw DataError("input file '" + path + "' does not exist");
}

inline std::size_t thread_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRADTREE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw InvalidArgument("GRADTREE_THREADS must be a positive integer");
    }
  }
  return n;
}

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers; the first
/// exception is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// One learner column of a sweep, e.g. "cart" or "dtlf:0.5".
struct LearnerEntry {
  LearnerKind kind;
  std::optional<double> lambda;
  std::string name;
};

inline std::vector<LearnerEntry> parse_learner_list(const std::vector<std::string>& items) {
  std::vector<LearnerEntry> out;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    LearnerEntry e;
    e.name = item.substr(0, colon);
    e.kind = parse_learner_kind(e.name);
    if (colon != std::string::npos) {
      if (e.kind != LearnerKind::dtlf) throw InvalidArgument("only dtlf takes a lambda suffix: '" + item + "'");
      const auto v = csv::parse_double(item.substr(colon + 1));
      if (!v || *v < 0.0) throw InvalidArgument("invalid lambda in '" + item + "'");
      e.lambda = *v;
    }
    out.push_back(e);
  }
  if (out.empty()) throw InvalidArgument("no learners given");
  return out;
}

inline std::pair<std::size_t, std::size_t> parse_depth_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto d = std::stoul(s);
      return {d, d};
    }
    const auto lo = std::stoul(s.substr(0, dots)), hi = std::stoul(s.substr(dots + 2));
    if (lo > hi) throw InvalidArgument("empty depth range '" + s + "'");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw InvalidArgument("invalid depth range '" + s + "' (expected e.g. 2..8)");
  }
}

struct SweepCell {
  std::size_t learner;
  std::size_t depth;
  std::size_t fold;
  std::string metric;
  double value = 0.0;
};

struct ExperimentOptions {
  DataOptions data;
  TreeOptions tree;
  SynthOptions synth;
  bool use_synth = false;
  std::string synth_target = "time";
  std::string input;
  std::vector<std::string> learners{"cart", "ert", "dtlf:0.1", "dtlf:0.5"};
  std::size_t folds = 5;
};

inline Dataset experiment_dataset(const ExperimentOptions& o) {
  const Task task = parse_task(o.data.task);
  if (o.use_synth) {
    const SynthData s = generate_synthetic(make_synth_spec(o.synth));
    if (task == Task::survival) return s.survival();
    if (task == Task::regression) {
      if (o.synth_target != "time" && o.synth_target != "y")
        throw InvalidArgument("--synth-target must be time or y");
      return s.regression(o.synth_target == "time");
    }
    throw InvalidArgument("synthetic data supports regression and survival tasks");
  }
  if (o.input.empty()) throw InvalidArgument("give a CSV file or --synth");
  require_file(o.input);
  return load_csv(o.input, make_schema(o.data, task));
}

/// Cross-validated test metric for every (learner, depth, fold), ordered by
/// learner list position, then depth, then fold.
inline std::vector<SweepCell> run_sweep(const Dataset& data, const ExperimentOptions& o,
                                        const std::vector<LearnerEntry>& learners, std::size_t min_depth,
                                        std::size_t max_depth) {
  const auto folds = kfold_split(data.size(), o.folds, o.tree.rng_seed);
  std::vector<SweepCell> cells;
  for (std::size_t l = 0; l < learners.size(); ++l)
    for (std::size_t d = min_depth; d <= max_depth; ++d)
      for (std::size_t f = 0; f < folds.size(); ++f) cells.push_back({l, d, f, "", 0.0});

  std::vector<Dataset> train_sets, test_sets;
  for (const auto& fold : folds) {
    train_sets.push_back(data.subset(fold.train));
    test_sets.push_back(data.subset(fold.test));
  }
  const LearnerSpec base = make_learner_spec(o.tree);

  parallel_for(cells.size(), thread_count(), [&](std::size_t i) {
    SweepCell& cell = cells[i];
    const LearnerEntry& entry = learners[cell.learner];
    LearnerSpec spec = base;
    spec.learner = entry.kind;
    spec.tree.max_depth = cell.depth;
    if (entry.lambda) spec.tree.lambda = *entry.lambda;
    const Model model = train(train_sets[cell.fold], spec);
    const MetricReport r = evaluate(model, test_sets[cell.fold]);
    cell.metric = r.metric;
    cell.value = r.value;
  });
  return cells;
}

inline std::string lambda_cell(const LearnerEntry& e, const TreeOptions& t) {
  if (e.kind != LearnerKind::dtlf) return "";
  return csv::format_double(e.lambda.value_or(t.lambda));
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Decision trees grown by second-order loss optimization"};
    app.name("gradtree");
    app.require_subcommand(1);

    // synth
    SynthOptions synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic benchmark dataset as CSV");
    add_synth_options(synth_cmd, synth, false);
    synth_cmd->add_option("-o,--output", synth_out, "output CSV")->required();

    // train
    DataOptions train_data;
    TreeOptions train_tree;
    std::string train_in, train_out;
    auto* train_cmd = app.add_subcommand("train", "fit a tree on a CSV file and save the model");
    add_data_options(train_cmd, train_data, true);
    add_tree_options(train_cmd, train_tree, true);
    train_cmd->add_option("data", train_in, "training CSV")->required();
    train_cmd->add_option("-o,--output", train_out, "model JSON")->required();

    // predict
    std::string pred_model, pred_in, pred_out;
    auto* predict_cmd = app.add_subcommand("predict", "write predictions of a saved model");
    predict_cmd->add_option("model", pred_model, "model JSON")->required();
    predict_cmd->add_option("data", pred_in, "feature CSV")->required();
    predict_cmd->add_option("-o,--output", pred_out, "predictions CSV (default: standard output)");

    // evaluate
    std::string eval_model, eval_in, eval_out;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a saved model on labelled CSV data");
    eval_cmd->add_option("model", eval_model, "model JSON")->required();
    eval_cmd->add_option("data", eval_in, "labelled CSV")->required();
    eval_cmd->add_option("-o,--output", eval_out, "report JSON (default: standard output)");

    // sweep / bench
    ExperimentOptions sweep_opts, bench_opts;
    std::string sweep_depths = "2..8", sweep_out, bench_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "cross-validated metric over a depth range for several learners");
    auto* bench_cmd = app.add_subcommand("bench", "cross-validated comparison table at one depth");
    for (auto [cmd, opts] : {std::pair{sweep_cmd, &sweep_opts}, std::pair{bench_cmd, &bench_opts}}) {
      add_data_options(cmd, opts->data, true);
      add_tree_options(cmd, opts->tree, false);
      add_synth_options(cmd, opts->synth, true);
      cmd->add_option("--synth-target", opts->synth_target, "regression target of synthetic data: time or y");
      cmd->add_option("data", opts->input, "CSV file (instead of --synth)");
      cmd->add_option("--learners", opts->learners, "e.g. cart,ert,dtlf:0.1,dtlf:0.5")->delimiter(',');
      cmd->add_option("--folds", opts->folds, "cross-validation folds")->check(CLI::Range(2, 1000000));
    }
    sweep_cmd->add_option("--depths", sweep_depths, "depth range, e.g. 2..8");
    sweep_cmd->add_option("-o,--output", sweep_out, "long-format CSV (default: standard output)");
    bench_cmd->add_option("-o,--output", bench_out, "table CSV (default: standard output)");

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::ParseError& e) {
      return fail(kUsage, "usage", e.what());
    }

    sweep_opts.use_synth = sweep_cmd->count("--synth") > 0;
    bench_opts.use_synth = bench_cmd->count("--synth") > 0;

    try {
      if (synth_cmd->parsed()) return do_synth(synth, synth_out);
      if (train_cmd->parsed()) return do_train(train_data, train_tree, train_in, train_out);
      if (predict_cmd->parsed()) return do_predict(pred_model, pred_in, pred_out);
      if (eval_cmd->parsed()) return do_evaluate(eval_model, eval_in, eval_out);
      if (sweep_cmd->parsed()) return do_sweep(sweep_opts, sweep_depths, sweep_out);
      if (bench_cmd->parsed()) return do_bench(bench_opts, bench_out);
    } catch (const InvalidArgument& e) {
      return fail(kUsage, "usage", e.what());
    } catch (const DataError& e) {
      return fail(kData, "data", e.what());
    } catch (const SchemaError& e) {
      return fail(kData, "data", e.what());
    } catch (const VersionError& e) {
      return fail(kData, "data", e.what());
    } catch (const UndefinedMetric& e) {
      return fail(kData, "data", e.what());
    } catch (const std::exception& e) {
      return fail(kInternal, "internal", e.what());
    }
    return fail(kUsage, "usage", "no subcommand given");
  }

 private:
  int fail(int code, const char* kind, const std::string& message) {
    std::string one_line = message;
    std::replace(one_line.begin(), one_line.end(), '\n', ' ');
    err_ << "gradtree:error:" << kind << ": " << one_line << '\n';
    return code;
  }

  void warn(const std::string& message) { err_ << "gradtree:warning: " << message << '\n'; }

  template <class Write>
  void emit(const std::string& path, Write&& write) {
    if (path.empty()) {
      write(out_);
      return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write '" + path + "'");
    write(f);
    if (!f) throw DataError("failed writing '" + path + "'");
  }

  int do_synth(const SynthOptions& o, const std::string& path) {
    const SynthData s = generate_synthetic(make_synth_spec(o));
    std::vector<std::string> header = s.feature_names;
    header.insert(header.end(), {"y", "time", "event"});
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < s.X.rows(); ++i) {
      std::vector<std::string> r;
      for (double v : s.X.row(i)) r.push_back(csv::format_double(v));
      r.push_back(csv::format_double(s.expected[i]));
      r.push_back(csv::format_double(s.times[i]));
      r.push_back(s.labels[i].event ? "1" : "0");
      rows.push_back(std::move(r));
    }
    write_csv(path, header, rows);
    return kOk;
  }

  int do_train(const DataOptions& d, const TreeOptions& t, const std::string& in, const std::string& out) {
    const LearnerSpec spec = make_learner_spec(t);
    const Task task = parse_task(d.task);
    require_file(in);
    const Dataset data = load_csv(in, make_schema(d, task));
    if (spec.learner == LearnerKind::dtlf)
      for (const auto& w : spec.tree.warnings()) warn(w);
    const Model model = train(data, spec);
    if (model.meta.dropped_samples > 0)
      warn(std::to_string(model.meta.dropped_samples) +
           " censored samples lie past the last event time and carry no gradient");
    save_model(model, out);
    return kOk;
  }

  static Dataset load_for_model(const Model& model, const std::string& path, bool need_labels) {
    require_file(path);
    CsvSchema schema = model_schema(model.meta);
    if (!need_labels) {
      // Features only: read every column by name and build a feature-only dataset.
      const csv::Table table = csv::read(path);
      Dataset ds;
      ds.task = model.meta.task;
      ds.feature_names = schema.feature_columns;
      ds.X = Matrix(table.rows.size(), schema.feature_columns.size());
      for (std::size_t j = 0; j < schema.feature_columns.size(); ++j) {
        const auto it = std::find(table.header.begin(), table.header.end(), schema.feature_columns[j]);
        if (it == table.header.end())
          throw DataError("'" + path + "' has no column \"" + schema.feature_columns[j] + "\"");
        const auto c = static_cast<std::size_t>(it - table.header.begin());
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
          const auto v = csv::parse_double(table.rows[r][c]);
          if (!v)
            throw DataError("'" + path + "' row " + std::to_string(r + 2) + ", column \"" + table.header[c] +
                            "\": non-numeric value '" + table.rows[r][c] + "'");
          ds.X(r, j) = *v;
        }
      }
      return ds;
    }
    Dataset ds = load_csv(path, schema);
    align_classes(ds, model.meta);
    return ds;
  }

  int do_predict(const std::string& model_path, const std::string& in, const std::string& out) {
    require_file(model_path);
    const Model model = load_model(model_path);
    const Dataset data = load_for_model(model, in, false);
    std::vector<std::string> header;
    Matrix values;
    switch (model.meta.task) {
      case Task::regression:
        for (const auto& t : model.meta.target_names) header.push_back("pred_" + t);
        values = predict_values(model, data.X);
        break;
      case Task::classification:
        for (const auto& c : model.meta.class_names) header.push_back("p_" + c);
        values = predict_proba(model, data.X);
        break;
      case Task::survival: {
        header.push_back("risk");
        const Matrix dist = predict_interval_distribution(model, data.X);
        for (double b : model.meta.time_grid->boundaries()) header.push_back("p_" + csv::format_double(b));
        values = Matrix(dist.rows(), dist.cols() + 1);
        for (std::size_t r = 0; r < dist.rows(); ++r) {
          values(r, 0) = risk_from_probabilities(dist.row(r), *model.meta.time_grid);
          for (std::size_t c = 0; c < dist.cols(); ++c) values(r, c + 1) = dist(r, c);
        }
        break;
      }
    }
    emit(out, [&](std::ostream& os) {
      for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << csv::quote(header[i]);
      os << '\n';
      for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0; c < values.cols(); ++c) os << (c ? "," : "") << csv::format_double(values(r, c));
        os << '\n';
      }
    });
    return kOk;
  }

  int do_evaluate(const std::string& model_path, const std::string& in, const std::string& out) {
    require_file(model_path);
    const Model model = load_model(model_path);
    const Dataset data = load_for_model(model, in, true);
    const MetricReport r = evaluate(model, data);
    nlohmann::json j;
    j["metric"] = r.metric;
    j["value"] = r.value;
    j["sample_count"] = r.sample_count;
    j["auxiliary"] = r.auxiliary;
    j["learner"] = model.meta.learner_name;
    emit(out, [&](std::ostream& os) { os << j.dump() << '\n'; });
    return kOk;
  }

  int do_sweep(const ExperimentOptions& o, const std::string& depths, const std::string& out) {
    const auto learners = parse_learner_list(o.learners);
    const auto [lo, hi] = parse_depth_range(depths);
    const Dataset data = experiment_dataset(o);
    const auto cells = run_sweep(data, o, learners, lo, hi);
    emit(out, [&](std::ostream& os) {
      os << "learner,lambda,depth,fold,metric,value\n";
      for (const auto& c : cells)
        os << learners[c.learner].name << ',' << lambda_cell(learners[c.learner], o.tree) << ',' << c.depth << ','
           << c.fold << ',' << c.metric << ',' << csv::format_double(c.value) << '\n';
    });
    return kOk;
  }

  int do_bench(const ExperimentOptions& o, const std::string& out) {
    const auto learners = parse_learner_list(o.learners);
    const Dataset data = experiment_dataset(o);
    const auto cells = run_sweep(data, o, learners, o.tree.max_depth, o.tree.max_depth);
    emit(out, [&](std::ostream& os) {
      os << "learner,lambda,depth,metric,mean,std,folds\n";
      for (std::size_t l = 0; l < learners.size(); ++l) {
        Vector v;
        std::string metric;
        for (const auto& c : cells)
          if (c.learner == l) {
            v.push_back(c.value);
            metric = c.metric;
          }
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        os << learners[l].name << ',' << lambda_cell(learners[l], o.tree) << ',' << o.tree.max_depth << ','
           << metric << ',' << csv::format_double(mean) << ',' << csv::format_double(sd) << ',' << v.size() << '\n';
      }
    });
    return kOk;
  }

  std::ostream& out_;
  std::ostream& err_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Runner(out, err).run(argc, argv);
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"gradtree"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gradtree::cli
