#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gradtree/common.hpp"
#include "gradtree/survival.hpp"

namespace gradtree {

enum class Task { regression, classification, survival };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::regression: return "regression";
    case Task::classification: return "classification";
    case Task::survival: return "survival";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  if (s == "regression") return Task::regression;
  if (s == "classification") return Task::classification;
  if (s == "survival") return Task::survival;
  throw InvalidArgument("unknown task '" + std::string(s) + "'");
}

/// Feature matrix plus the labels of one task. Only the label fields of the
/// dataset's task are populated.
struct Dataset {
  Task task = Task::regression;
  Matrix X;
  std::vector<std::string> feature_names;

  Matrix targets;  // regression, N x q
  std::vector<std::string> target_names;

  std::vector<std::size_t> classes;  // classification, zero-based
  std::vector<std::string> class_names;

  std::vector<SurvivalLabel> survival;

  std::size_t size() const noexcept { return X.rows(); }
  std::size_t num_features() const noexcept { return X.cols(); }

  void validate() const {
    const std::size_t n = X.rows();
    if (!all_finite(X.data())) throw DataError("feature matrix contains non-finite values");
    if (!feature_names.empty() && feature_names.size() != X.cols()) throw DataError("feature name count mismatch");
    switch (task) {
      case Task::regression:
        if (targets.rows() != n || targets.cols() == 0) throw DataError("regression targets do not match the features");
        if (!all_finite(targets.data())) throw DataError("regression targets contain non-finite values");
        break;
      case Task::classification:
        if (classes.size() != n) throw DataError("class labels do not match the features");
        if (class_names.empty()) throw DataError("classification dataset has no classes");
        for (auto c : classes)
          if (c >= class_names.size()) throw DataError("class index out of range");
        break;
      case Task::survival:
        if (survival.size() != n) throw DataError("survival labels do not match the features");
        for (const auto& l : survival)
          if (!std::isfinite(l.time) || !(l.time > 0.0)) throw DataError("survival times must be finite and positive");
        break;
    }
  }

  Dataset subset(std::span<const std::size_t> ids) const {
    Dataset out;
    out.task = task;
    out.X = X.select_rows(ids);
    out.feature_names = feature_names;
    out.target_names = target_names;
    out.class_names = class_names;
    if (task == Task::regression) out.targets = targets.select_rows(ids);
    if (task == Task::classification)
      for (auto i : ids) out.classes.push_back(classes[i]);
    if (task == Task::survival)
      for (auto i : ids) out.survival.push_back(survival[i]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(std::move(cur));
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t\r");
    const auto e = c.find_last_not_of(" \t\r");
    c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
  }
  return cells;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string quote(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format double");
  return std::string(buf, ptr);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // rows[r] is file line r + 2
};

inline Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split_line(line);
  if (t.header.empty() || (t.header.size() == 1 && t.header[0].empty()))
    throw DataError("'" + path + "' has an empty header row");
  std::set<std::string> seen;
  for (const auto& h : t.header)
    if (!seen.insert(h).second) throw DataError("'" + path + "' has duplicate column \"" + h + "\"");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw DataError("'" + path + "' row " + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " cells, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.rows.empty()) throw DataError("'" + path + "' has no data rows");
  return t;
}

}  // namespace csv

/// Which columns carry the label. Feature columns default to every column
/// that is neither a target nor listed in `exclude_columns`.
struct CsvSchema {
  Task task = Task::regression;
  std::vector<std::string> target_columns;  // survival: {time, event}
  std::vector<std::string> feature_columns;
  std::vector<std::string> exclude_columns;
};

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  const csv::Table table = csv::read(path);
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw DataError("'" + path + "' has no column \"" + name + "\"");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  auto cell_error = [&](std::size_t r, std::size_t c, const std::string& what) {
    return DataError("'" + path + "' row " + std::to_string(r + 2) + ", column \"" + table.header[c] + "\": " + what);
  };
  auto number = [&](std::size_t r, std::size_t c) {
    const auto v = csv::parse_double(table.rows[r][c]);
    if (!v) throw cell_error(r, c, "non-numeric value '" + table.rows[r][c] + "'");
    return *v;
  };

  if (schema.target_columns.empty()) throw InvalidArgument("no target columns given");
  if (schema.task == Task::survival && schema.target_columns.size() != 2)
    throw InvalidArgument("survival data needs exactly a time and an event column");
  if (schema.task == Task::classification && schema.target_columns.size() != 1)
    throw InvalidArgument("classification data needs exactly one target column");

  std::vector<std::size_t> target_idx;
  for (const auto& name : schema.target_columns) target_idx.push_back(column(name));

  std::vector<std::size_t> feature_idx;
  if (!schema.feature_columns.empty()) {
    for (const auto& name : schema.feature_columns) feature_idx.push_back(column(name));
  } else {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const auto& name = table.header[c];
      const bool is_target = std::find(target_idx.begin(), target_idx.end(), c) != target_idx.end();
      const bool excluded =
          std::find(schema.exclude_columns.begin(), schema.exclude_columns.end(), name) != schema.exclude_columns.end();
      if (!is_target && !excluded) feature_idx.push_back(c);
    }
  }
  if (feature_idx.empty()) throw DataError("'" + path + "' has no feature columns");

  Dataset ds;
  ds.task = schema.task;
  for (auto c : feature_idx) ds.feature_names.push_back(table.header[c]);
  ds.X = Matrix(table.rows.size(), feature_idx.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t j = 0; j < feature_idx.size(); ++j) ds.X(r, j) = number(r, feature_idx[j]);

  switch (schema.task) {
    case Task::regression: {
      ds.target_names = schema.target_columns;
      ds.targets = Matrix(table.rows.size(), target_idx.size());
      for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t j = 0; j < target_idx.size(); ++j) ds.targets(r, j) = number(r, target_idx[j]);
      break;
    }
    case Task::classification: {
      ds.target_names = schema.target_columns;
      const std::size_t c = target_idx[0];
      std::vector<std::string> names;
      bool numeric = true;
      for (const auto& row : table.rows) {
        if (row[c].empty()) throw DataError("'" + path + "' has an empty class label");
        names.push_back(row[c]);
        numeric = numeric && csv::parse_double(row[c]).has_value();
      }
      std::sort(names.begin(), names.end(), [&](const std::string& a, const std::string& b) {
        return numeric ? *csv::parse_double(a) < *csv::parse_double(b) : a < b;
      });
      names.erase(std::unique(names.begin(), names.end()), names.end());
      ds.class_names = names;
      for (const auto& row : table.rows)
        ds.classes.push_back(static_cast<std::size_t>(std::find(names.begin(), names.end(), row[c]) - names.begin()));
      break;
    }
    case Task::survival: {
      ds.target_names = schema.target_columns;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double t = number(r, target_idx[0]);
        const double e = number(r, target_idx[1]);
        if (!(t > 0.0)) throw cell_error(r, target_idx[0], "survival time must be positive");
        if (e != 0.0 && e != 1.0) throw cell_error(r, target_idx[1], "event indicator must be 0 or 1");
        ds.survival.push_back({t, e == 1.0});
      }
      break;
    }
  }
  ds.validate();
  return ds;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv::quote(cells[i]);
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!out) throw DataError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Cross-validation

struct Fold {
  IndexList train;
  IndexList test;
};

/// Shuffled k-fold partition; test fold sizes differ by at most one and both
/// index lists of each fold are ascending.
inline std::vector<Fold> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k-fold needs k >= 2");
  if (k > n) throw InvalidArgument("k-fold needs k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  IndexList perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Fold> folds(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = n / k + (f < n % k ? 1 : 0);
    folds[f].test.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::sort(folds[f].test.begin(), folds[f].test.end());
    start += len;
  }
  for (auto& fold : folds) {
    std::vector<std::uint8_t> in_test(n, 0);
    for (auto i : fold.test) in_test[i] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_test[i]) fold.train.push_back(i);
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Synthetic benchmarks

enum class SynthKind { friedman1, friedman2, friedman3, strong_interactions, sparse_features, nonlinear };

inline std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::friedman1: return "friedman1";
    case SynthKind::friedman2: return "friedman2";
    case SynthKind::friedman3: return "friedman3";
    case SynthKind::strong_interactions: return "strong_interactions";
    case SynthKind::sparse_features: return "sparse_features";
    case SynthKind::nonlinear: return "nonlinear";
  }
  return "?";
}

inline SynthKind parse_synth_kind(std::string_view s) {
  for (auto k : {SynthKind::friedman1, SynthKind::friedman2, SynthKind::friedman3, SynthKind::strong_interactions,
                 SynthKind::sparse_features, SynthKind::nonlinear})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown synthetic dataset kind '" + std::string(s) + "'");
}

struct SynthSpec {
  SynthKind kind = SynthKind::friedman1;
  std::size_t n_samples = 400;
  double weibull_k = 5.0;
  double censor_event_prob = 0.8;
  std::uint64_t rng_seed = 0;
  double sparsity = 0.7;  // sparse_features: probability of an exact zero
};

inline constexpr double kMinExpectedTime = 0.1;

inline std::size_t synth_num_features(SynthKind kind) {
  return kind == SynthKind::friedman2 || kind == SynthKind::friedman3 ? 4 : 5;
}

/// Closed-form expected event time. `weights` holds the upper-triangular
/// w_ij row by row for strong_interactions and w for sparse_features.
inline double expected_time(SynthKind kind, std::span<const double> x, std::span<const double> weights = {}) {
  using std::numbers::pi;
  switch (kind) {
    case SynthKind::friedman1:
      return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4];
    case SynthKind::friedman2: {
      const double r = x[1] * x[2] - 1.0 / (x[1] * x[3]);
      return std::sqrt(x[0] * x[0] + r * r);
    }
    case SynthKind::friedman3:
      return std::atan((x[1] * x[2] - 1.0 / (x[1] * x[3])) / x[0]);
    case SynthKind::strong_interactions: {
      double y = 0.0;
      std::size_t w = 0;
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) y += weights[w++] * x[i] * x[j];
      return y;
    }
    case SynthKind::sparse_features: {
      double y = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) y += weights[i] * x[i];
      return y;
    }
    case SynthKind::nonlinear:
      return 4.0 * std::sin(x[0]) + std::log(std::abs(x[1]) + 1.0) + x[2] * x[2] + std::exp(0.5 * x[3]) +
             std::tanh(x[4]);
  }
  throw InvalidArgument("unknown synthetic dataset kind");
}

/// T = y / Gamma(1 + 1/k) * (-log u)^(1/k); E[T] = y.
inline double weibull_time(double expected, double k, double u) {
  return expected / std::tgamma(1.0 + 1.0 / k) * std::pow(-std::log(u), 1.0 / k);
}

template <class Rng>
Vector weibull_event_times(std::span<const double> expected, double k, Rng& rng) {
  if (!(k > 0.0)) throw InvalidArgument("Weibull shape must be positive");
  for (double y : expected)
    if (!(y > 0.0)) throw InvalidArgument("expected event times must be positive");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector t(expected.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    double u;
    do u = unif(rng);
    while (!(u > 0.0 && u < 1.0));
    t[i] = weibull_time(expected[i], k, u);
  }
  return t;
}

template <class Rng>
std::vector<SurvivalLabel> apply_censoring(std::span<const double> times, double event_prob, Rng& rng) {
  if (!(event_prob > 0.0 && event_prob <= 1.0)) throw InvalidArgument("event probability must lie in (0, 1]");
  std::bernoulli_distribution observed(event_prob);
  std::vector<SurvivalLabel> out;
  out.reserve(times.size());
  for (double t : times) out.push_back({t, observed(rng)});
  return out;
}

struct SynthData {
  Matrix X;
  std::vector<std::string> feature_names;
  Vector weights;
  Vector formula;   // closed-form value per sample
  double offset = 0.0;
  Vector expected;  // formula + offset, min >= kMinExpectedTime
  Vector times;     // Weibull draws with mean `expected`
  std::vector<SurvivalLabel> labels;

  Dataset regression(bool use_times = true) const {
    Dataset ds;
    ds.task = Task::regression;
    ds.X = X;
    ds.feature_names = feature_names;
    ds.target_names = {use_times ? "time" : "y"};
    ds.targets = Matrix(X.rows(), 1);
    for (std::size_t i = 0; i < X.rows(); ++i) ds.targets(i, 0) = use_times ? times[i] : expected[i];
    return ds;
  }

  Dataset survival() const {
    Dataset ds;
    ds.task = Task::survival;
    ds.X = X;
    ds.feature_names = feature_names;
    ds.target_names = {"time", "event"};
    ds.survival = labels;
    return ds;
  }
};

/// Draws features, closed-form expected times, Weibull event times and
/// Bernoulli event indicators, in that order, from one seeded generator.
inline SynthData generate_synthetic(const SynthSpec& spec) {
  if (spec.n_samples == 0) throw InvalidArgument("n_samples must be positive");
  if (!(spec.weibull_k > 0.0)) throw InvalidArgument("weibull_k must be positive");
  if (!(spec.censor_event_prob > 0.0 && spec.censor_event_prob <= 1.0))
    throw InvalidArgument("censor_event_prob must lie in (0, 1]");
  if (!(spec.sparsity >= 0.0 && spec.sparsity < 1.0)) throw InvalidArgument("sparsity must lie in [0, 1)");

  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t d = synth_num_features(spec.kind);

  SynthData out;
  for (std::size_t j = 0; j < d; ++j) out.feature_names.push_back("x" + std::to_string(j + 1));
  if (spec.kind == SynthKind::strong_interactions) {
    out.weights.resize(d * (d - 1) / 2);
    for (double& w : out.weights) w = unit(rng);
  } else if (spec.kind == SynthKind::sparse_features) {
    out.weights.resize(d);
    for (double& w : out.weights) w = unit(rng);
  }

  using std::numbers::pi;
  out.X = Matrix(spec.n_samples, d);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    auto x = out.X.row(i);
    switch (spec.kind) {
      case SynthKind::friedman2:
      case SynthKind::friedman3:
        x[0] = 100.0 * unit(rng);
        x[1] = 40.0 * pi + 520.0 * pi * unit(rng);
        x[2] = unit(rng);
        x[3] = 1.0 + 10.0 * unit(rng);
        break;
      case SynthKind::sparse_features:
        for (double& v : x) {
          const bool zero = unit(rng) < spec.sparsity;
          const double value = unit(rng);
          v = zero ? 0.0 : value;
        }
        break;
      default:
        for (double& v : x) v = unit(rng);
        break;
    }
  }

  out.formula.resize(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) out.formula[i] = expected_time(spec.kind, out.X.row(i), out.weights);
  const double lowest = *std::min_element(out.formula.begin(), out.formula.end());
  out.offset = lowest < kMinExpectedTime ? kMinExpectedTime - lowest : 0.0;
  out.expected = out.formula;
  for (double& y : out.expected) y += out.offset;

  out.times = weibull_event_times(out.expected, spec.weibull_k, rng);
  out.labels = apply_censoring(out.times, spec.censor_event_prob, rng);
  return out;
}

}  // namespace gradtree
