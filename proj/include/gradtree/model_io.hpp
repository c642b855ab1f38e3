#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gradtree/data.hpp"
#include "gradtree/model.hpp"

namespace gradtree {

inline constexpr int kModelFormatVersion = 1;

namespace io_detail {

using nlohmann::json;

inline json encode(double v) { return csv::format_double(v); }

inline json encode(const Vector& v) {
  json a = json::array();
  for (double x : v) a.push_back(encode(x));
  return a;
}

inline json encode_strings(const std::vector<std::string>& v) {
  json a = json::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

[[noreturn]] inline void schema_fail(const std::string& where, const std::string& what) {
  throw SchemaError("model file: " + where + ": " + what);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema_fail(where, std::string("missing key '") + key + "'");
  return *it;
}

inline double decode_double(const json& j, const std::string& where) {
  if (!j.is_string()) schema_fail(where, "expected a decimal string");
  const auto v = csv::parse_double(j.get<std::string>());
  if (!v) schema_fail(where, "invalid number '" + j.get<std::string>() + "'");
  return *v;
}

inline Vector decode_vector(const json& j, const std::string& where) {
  if (!j.is_array()) schema_fail(where, "expected an array");
  Vector out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(decode_double(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::uint64_t decode_uint(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) schema_fail(where, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline std::string decode_string(const json& j, const std::string& where) {
  if (!j.is_string()) schema_fail(where, "expected a string");
  return j.get<std::string>();
}

inline std::vector<std::string> decode_strings(const json& j, const std::string& where) {
  if (!j.is_array()) schema_fail(where, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(decode_string(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

template <class F>
auto checked(const std::string& where, F&& parse) {
  try {
    return parse();
  } catch (const InvalidArgument& e) {
    schema_fail(where, e.what());
  }
}

inline json encode_config(const LearnerSpec& s) {
  json c;
  c["learner"] = std::string(to_string(s.learner));
  c["max_depth"] = s.tree.max_depth;
  c["min_samples_split"] = s.tree.min_samples_split;
  c["min_samples_leaf"] = s.tree.min_samples_leaf;
  c["lambda"] = encode(s.tree.lambda);
  c["learning_rate"] = encode(s.tree.learning_rate);
  c["threshold_mode"] = std::string(to_string(s.tree.threshold_mode));
  c["n_guess"] = s.tree.n_guess;
  c["init"] = s.tree.init ? encode(*s.tree.init) : json(nullptr);
  c["init_mode"] = std::string(to_string(s.init_mode));
  c["leaf_mode"] = std::string(to_string(s.tree.leaf_mode));
  c["rng_seed"] = s.tree.rng_seed;
  c["loss"] = s.loss ? json(std::string(to_string(*s.loss))) : json(nullptr);
  c["prior_epsilon"] = encode(s.prior_epsilon);
  c["ert_candidates_per_feature"] = s.ert_candidates_per_feature;
  return c;
}

inline LearnerSpec decode_config(const json& c) {
  const std::string w = "config";
  LearnerSpec s;
  s.learner = checked(w + ".learner", [&] { return parse_learner_kind(decode_string(field(c, "learner", w), w)); });
  s.tree.max_depth = decode_uint(field(c, "max_depth", w), w + ".max_depth");
  s.tree.min_samples_split = decode_uint(field(c, "min_samples_split", w), w + ".min_samples_split");
  s.tree.min_samples_leaf = decode_uint(field(c, "min_samples_leaf", w), w + ".min_samples_leaf");
  s.tree.lambda = decode_double(field(c, "lambda", w), w + ".lambda");
  s.tree.learning_rate = decode_double(field(c, "learning_rate", w), w + ".learning_rate");
  s.tree.threshold_mode = checked(w + ".threshold_mode", [&] {
    return parse_threshold_mode(decode_string(field(c, "threshold_mode", w), w));
  });
  s.tree.n_guess = decode_uint(field(c, "n_guess", w), w + ".n_guess");
  if (const auto& init = field(c, "init", w); !init.is_null()) s.tree.init = decode_vector(init, w + ".init");
  s.init_mode = checked(w + ".init_mode", [&] { return parse_init_mode(decode_string(field(c, "init_mode", w), w)); });
  s.tree.leaf_mode = checked(w + ".leaf_mode", [&] { return parse_leaf_mode(decode_string(field(c, "leaf_mode", w), w)); });
  s.tree.rng_seed = decode_uint(field(c, "rng_seed", w), w + ".rng_seed");
  if (const auto& loss = field(c, "loss", w); !loss.is_null())
    s.loss = checked(w + ".loss", [&] { return parse_loss_kind(decode_string(loss, w)); });
  s.prior_epsilon = decode_double(field(c, "prior_epsilon", w), w + ".prior_epsilon");
  s.ert_candidates_per_feature = decode_uint(field(c, "ert_candidates_per_feature", w), w + ".ert_candidates_per_feature");
  return s;
}

}  // namespace io_detail

/// Canonical JSON text of a model. Keys are sorted and every real number is a
/// shortest round-trip decimal string, so equal models give equal bytes.
inline std::string model_to_json(const Model& model) {
  using io_detail::encode;
  using nlohmann::json;
  const Tree& tree = model.tree;
  const ModelMetadata& m = model.meta;

  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["learner"] = m.learner_name;

  json task;
  task["kind"] = std::string(to_string(m.task));
  task["output"] = std::string(to_string(tree.output()));
  task["output_dim"] = tree.output_dim();
  task["num_features"] = tree.num_features();
  task["feature_names"] = io_detail::encode_strings(m.feature_names);
  task["target_names"] = io_detail::encode_strings(m.target_names);
  task["class_names"] = io_detail::encode_strings(m.class_names);
  task["time_grid"] = m.time_grid ? encode(m.time_grid->boundaries()) : json(nullptr);
  task["dropped_samples"] = m.dropped_samples;
  doc["task"] = std::move(task);

  doc["config"] = io_detail::encode_config(m.spec);
  doc["init_value"] = encode(tree.init_value());

  json nodes = json::array();
  for (const Node& n : tree.nodes()) {
    json j;
    j["value"] = encode(n.value);
    j["depth"] = n.depth;
    j["count"] = n.sample_count;
    if (n.split) {
      j["feature"] = n.split->feature;
      j["threshold"] = encode(n.split->threshold);
      j["left"] = n.left;
      j["right"] = n.right;
    }
    if (n.stats) {
      j["grad_sum"] = encode(n.stats->grad_sum);
      j["hess_sum"] = encode(n.stats->hess_sum);
      j["stats_count"] = n.stats->count;
    }
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(1) + "\n";
}

inline Model model_from_json(const std::string& text) {
  using namespace io_detail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model file is not valid JSON (truncated or corrupted): ") + e.what());
  }
  if (!doc.is_object()) schema_fail("document", "expected an object");
  const auto& version = field(doc, "format_version", "document");
  if (!version.is_number_integer()) schema_fail("format_version", "expected an integer");
  const auto v = version.get<long long>();
  if (v != kModelFormatVersion)
    throw VersionError("model format version " + std::to_string(v) + " is not supported (this build reads version " +
                       std::to_string(kModelFormatVersion) + ")");

  Model model;
  ModelMetadata& m = model.meta;
  m.learner_name = decode_string(field(doc, "learner", "document"), "learner");
  const json& task = field(doc, "task", "document");
  m.task = checked("task.kind", [&] { return parse_task(decode_string(field(task, "kind", "task"), "task.kind")); });
  const OutputKind output =
      checked("task.output", [&] { return parse_output_kind(decode_string(field(task, "output", "task"), "task.output")); });
  const std::size_t output_dim = decode_uint(field(task, "output_dim", "task"), "task.output_dim");
  const std::size_t num_features = decode_uint(field(task, "num_features", "task"), "task.num_features");
  m.feature_names = decode_strings(field(task, "feature_names", "task"), "task.feature_names");
  m.target_names = decode_strings(field(task, "target_names", "task"), "task.target_names");
  m.class_names = decode_strings(field(task, "class_names", "task"), "task.class_names");
  if (const auto& grid = field(task, "time_grid", "task"); !grid.is_null())
    m.time_grid = checked("task.time_grid", [&] { return TimeGrid(decode_vector(grid, "task.time_grid")); });
  m.dropped_samples = decode_uint(field(task, "dropped_samples", "task"), "task.dropped_samples");
  m.spec = decode_config(field(doc, "config", "document"));

  const json& nodes_json = field(doc, "nodes", "document");
  if (!nodes_json.is_array() || nodes_json.empty()) schema_fail("nodes", "expected a non-empty array");
  std::vector<Node> nodes;
  nodes.reserve(nodes_json.size());
  for (std::size_t i = 0; i < nodes_json.size(); ++i) {
    const std::string w = "nodes[" + std::to_string(i) + "]";
    const json& j = nodes_json[i];
    Node n;
    n.value = decode_vector(field(j, "value", w), w + ".value");
    if (n.value.size() != output_dim) schema_fail(w, "value width differs from task.output_dim");
    n.depth = decode_uint(field(j, "depth", w), w + ".depth");
    n.sample_count = decode_uint(field(j, "count", w), w + ".count");
    if (j.contains("feature")) {
      n.split = Split{decode_uint(field(j, "feature", w), w + ".feature"),
                      decode_double(field(j, "threshold", w), w + ".threshold")};
      n.left = decode_uint(field(j, "left", w), w + ".left");
      n.right = decode_uint(field(j, "right", w), w + ".right");
    }
    if (j.contains("grad_sum")) {
      n.stats = NodeStats{decode_vector(field(j, "grad_sum", w), w + ".grad_sum"),
                          decode_vector(field(j, "hess_sum", w), w + ".hess_sum"),
                          decode_uint(field(j, "stats_count", w), w + ".stats_count")};
    }
    nodes.push_back(std::move(n));
  }
  model.tree = Tree(std::move(nodes), num_features, output);
  model.tree.set_init_value(decode_vector(field(doc, "init_value", "document"), "init_value"));
  if (m.time_grid && m.time_grid->num_intervals() != output_dim)
    schema_fail("task.time_grid", "grid size differs from task.output_dim");
  return model;
}

inline void save_model(const Model& model, const std::string& path) {
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw DataError("failed writing model file '" + path + "'");
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_json(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError("'" + path + "': " + e.what());
  } catch (const VersionError& e) {
    throw VersionError("'" + path + "': " + e.what());
  }
}

}  // namespace gradtree
