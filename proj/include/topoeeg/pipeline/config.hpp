#pragma once

// Experiment configuration: an INI file with sections, every key optional.
// The resolved configuration (defaults filled in) is echoed into every run
// report and can be written back out as INI to replay the run.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "topoeeg/baselines.hpp"
#include "topoeeg/embedding.hpp"
#include "topoeeg/errors.hpp"
#include "topoeeg/homology.hpp"
#include "topoeeg/landscapes.hpp"
#include "topoeeg/learn/evaluate.hpp"
#include "topoeeg/signals.hpp"
#include "topoeeg/text.hpp"

namespace topoeeg {

enum class ExperimentKind { single, exp1, exp2, exp3, exp4, exp5, baselines };

inline std::string_view experiment_name(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::single: return "single";
    case ExperimentKind::exp1: return "exp1";
    case ExperimentKind::exp2: return "exp2";
    case ExperimentKind::exp3: return "exp3";
    case ExperimentKind::exp4: return "exp4";
    case ExperimentKind::exp5: return "exp5";
    case ExperimentKind::baselines: return "baselines";
  }
  return "?";
}

inline ExperimentKind parse_experiment(std::string_view s) {
  for (auto k : {ExperimentKind::single, ExperimentKind::exp1, ExperimentKind::exp2, ExperimentKind::exp3,
                 ExperimentKind::exp4, ExperimentKind::exp5, ExperimentKind::baselines})
    if (experiment_name(k) == s) return k;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "' (expected single, exp1..exp5 or baselines)");
}

struct WindowSpec {
  double window_s = 1.0;
  double overlap = 0.25;
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

struct DatasetConfig {
  std::string source = "synth";               // synth | dir
  std::string path;                           // directory of recordings when source = dir
  std::string synth_task = "sine_vs_surrogate";  // sine_vs_surrogate | affect
  std::size_t subjects = 1;
  std::size_t trials = 200;  // per class for sine_vs_surrogate, per subject for affect
  std::size_t channels = 1;
  double rate_hz = 128.0;
  double trial_seconds = 1.0;
  double noise_sd = 0.1;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::single;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;  // 0 = hardware concurrency
  std::string output = "run_out";
  std::string cache_dir;  // empty = no feature cache

  DatasetConfig dataset;

  std::vector<std::string> tasks{"label"};
  double label_threshold = 5.0;

  BandTable band_table;
  std::vector<Band> bands{kRhythmBands.begin(), kRhythmBands.end()};
  std::vector<std::string> channels;  // empty = every channel of the recordings
  WindowSpec window;
  bool zscore = false;
  std::vector<WindowSpec> window_sweep{{0.5, 0.0}, {1.0, 0.25}, {2.0, 0.25}, {3.0, 0.0}, {4.0, 0.25}};

  EmbeddingParams embedding{8, 10};
  EmbeddingParams short_embedding{3, 5};
  double short_window_s = 0.5;  // windows up to this length use short_embedding

  std::optional<double> ph_threshold;  // empty = enclosing radius
  std::size_t simplex_cap = kDefaultSimplexCap;

  std::size_t grid = kDefaultGridPoints;
  bool global_tmax = true;
  double tmax_quantile = 0.95;

  ClassifierSpec classifier;
  std::vector<ClassifierKind> classifier_sweep{ClassifierKind::gnb, ClassifierKind::knn, ClassifierKind::rf};
  ProtocolOptions protocol;

  std::vector<Descriptor> descriptors{std::begin(kAllDescriptors), std::end(kAllDescriptors)};
  BaselineParams baseline;

  /// Embedding used for a given window length.
  EmbeddingParams embedding_for(double window_s) const {
    return window_s <= short_window_s + 1e-12 ? short_embedding : embedding;
  }

  std::size_t worker_count() const {
    if (workers) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

// ---------------------------------------------------------------------------
// Parsing helpers

namespace detail {

inline std::vector<std::string> list_of(const std::string& v) {
  std::vector<std::string> out;
  for (auto& s : split(v, ',')) {
    auto t = std::string(trim(s));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

template <typename F>
auto config_value(const std::string& key, const std::string& raw, F&& f) {
  try {
    return f(raw);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline std::string band_list_str(const std::vector<Band>& bands) {
  std::vector<std::string> s;
  for (Band b : bands) s.emplace_back(band_name(b));
  return join(s, ",");
}

inline std::string window_list_str(const std::vector<WindowSpec>& w) {
  std::vector<std::string> s;
  for (const auto& x : w) s.push_back(format_double(x.window_s) + ":" + format_double(x.overlap));
  return join(s, ",");
}

}  // namespace detail

/// Flat "section.key" -> value view of the resolved configuration in a fixed
/// key order. This is the echo embedded in reports.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline ConfigEntries config_entries(const ExperimentConfig& c) {
  using detail::bool_str;
  ConfigEntries e;
  auto put = [&](std::string k, std::string v) { e.emplace_back(std::move(k), std::move(v)); };
  put("experiment.kind", std::string(experiment_name(c.kind)));
  put("experiment.seed", c.seed ? std::to_string(*c.seed) : "");
  put("experiment.workers", std::to_string(c.workers));
  put("experiment.output", c.output);
  put("experiment.cache_dir", c.cache_dir);

  put("dataset.source", c.dataset.source);
  put("dataset.path", c.dataset.path);
  put("dataset.synth_task", c.dataset.synth_task);
  put("dataset.subjects", std::to_string(c.dataset.subjects));
  put("dataset.trials", std::to_string(c.dataset.trials));
  put("dataset.channels", std::to_string(c.dataset.channels));
  put("dataset.rate_hz", format_double(c.dataset.rate_hz));
  put("dataset.trial_seconds", format_double(c.dataset.trial_seconds));
  put("dataset.noise_sd", format_double(c.dataset.noise_sd));

  put("labels.tasks", join(c.tasks, ","));
  put("labels.threshold", format_double(c.label_threshold));

  for (Band b : kRhythmBands)
    put("signals." + std::string(band_name(b)),
        format_double(c.band_table[b].lo_hz) + "," + format_double(c.band_table[b].hi_hz));
  put("signals.bands", detail::band_list_str(c.bands));
  put("signals.channels", join(c.channels, ","));
  put("signals.window_s", format_double(c.window.window_s));
  put("signals.overlap", format_double(c.window.overlap));
  put("signals.zscore", bool_str(c.zscore));
  put("signals.window_sweep", detail::window_list_str(c.window_sweep));

  put("embedding.dim", std::to_string(c.embedding.dim));
  put("embedding.lag", std::to_string(c.embedding.lag));
  put("embedding.short_dim", std::to_string(c.short_embedding.dim));
  put("embedding.short_lag", std::to_string(c.short_embedding.lag));
  put("embedding.short_window_s", format_double(c.short_window_s));

  put("homology.threshold", c.ph_threshold ? format_double(*c.ph_threshold) : "enclosing");
  put("homology.simplex_cap", std::to_string(c.simplex_cap));

  put("landscape.grid", std::to_string(c.grid));
  put("landscape.t_max", c.global_tmax ? "global" : "segment");
  put("landscape.t_max_quantile", format_double(c.tmax_quantile));

  put("classifier.kind", std::string(classifier_name(c.classifier.kind)));
  put("classifier.trees", std::to_string(c.classifier.forest.trees));
  put("classifier.max_depth", std::to_string(c.classifier.forest.max_depth));
  put("classifier.min_leaf", std::to_string(c.classifier.forest.min_leaf));
  put("classifier.max_features", std::to_string(c.classifier.forest.max_features));
  put("classifier.bootstrap", bool_str(c.classifier.forest.bootstrap));
  put("classifier.knn_k", std::to_string(c.classifier.knn_k));
  {
    std::vector<std::string> s;
    for (auto k : c.classifier_sweep) s.emplace_back(classifier_name(k));
    put("classifier.sweep", join(s, ","));
  }

  put("evaluation.protocol", std::string(protocol_name(c.protocol.protocol)));
  put("evaluation.folds", std::to_string(c.protocol.folds));
  put("evaluation.test_fraction", format_double(c.protocol.test_fraction));

  {
    std::vector<std::string> s;
    for (auto d : c.descriptors) s.emplace_back(descriptor_name(d));
    put("baselines.descriptors", join(s, ","));
  }
  put("baselines.m", std::to_string(c.baseline.m));
  put("baselines.r_fraction", format_double(c.baseline.r_fraction));
  put("baselines.fuzzy_gradient", format_double(c.baseline.fuzzy_gradient));
  put("baselines.lyapunov_horizon", std::to_string(c.baseline.lyapunov.horizon));
  return e;
}

/// Applies one "section.key = value" setting. Unknown keys are rejected.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  using detail::config_value;
  const auto v = std::string(trim(raw));
  auto num = [&](const std::string& s) { return config_value(key, s, [&](const std::string& x) { return parse_double(x, key.c_str()); }); };
  auto count = [&](const std::string& s) { return config_value(key, s, [&](const std::string& x) { return parse_size(x, key.c_str()); }); };
  auto flag = [&](const std::string& s) { return detail::parse_bool(s, key); };

  if (key == "experiment.kind") c.kind = parse_experiment(v);
  else if (key == "experiment.seed") {
    if (v.empty()) c.seed.reset();
    else c.seed = count(v);
  } else if (key == "experiment.workers") c.workers = count(v);
  else if (key == "experiment.output") c.output = v;
  else if (key == "experiment.cache_dir") c.cache_dir = v;
  else if (key == "dataset.source") {
    if (v != "synth" && v != "dir") throw ConfigError("dataset.source: expected synth or dir");
    c.dataset.source = v;
  } else if (key == "dataset.path") c.dataset.path = v;
  else if (key == "dataset.synth_task") {
    if (v != "sine_vs_surrogate" && v != "affect")
      throw ConfigError("dataset.synth_task: expected sine_vs_surrogate or affect");
    c.dataset.synth_task = v;
  } else if (key == "dataset.subjects") c.dataset.subjects = count(v);
  else if (key == "dataset.trials") c.dataset.trials = count(v);
  else if (key == "dataset.channels") c.dataset.channels = count(v);
  else if (key == "dataset.rate_hz") c.dataset.rate_hz = num(v);
  else if (key == "dataset.trial_seconds") c.dataset.trial_seconds = num(v);
  else if (key == "dataset.noise_sd") c.dataset.noise_sd = num(v);
  else if (key == "labels.tasks") c.tasks = detail::list_of(v);
  else if (key == "labels.threshold") c.label_threshold = num(v);
  else if (key == "signals.theta" || key == "signals.alpha" || key == "signals.beta" || key == "signals.gamma") {
    const auto parts = detail::list_of(v);
    if (parts.size() != 2) throw ConfigError(key + ": expected 'lo,hi'");
    const Band b = parse_band(key.substr(8));
    c.band_table.edges[std::size_t(b)] = {num(parts[0]), num(parts[1])};
  } else if (key == "signals.bands") {
    c.bands.clear();
    for (const auto& s : detail::list_of(v)) c.bands.push_back(config_value(key, s, [](const std::string& x) { return parse_band(x); }));
  } else if (key == "signals.channels") c.channels = detail::list_of(v);
  else if (key == "signals.window_s") c.window.window_s = num(v);
  else if (key == "signals.overlap") c.window.overlap = num(v);
  else if (key == "signals.zscore") c.zscore = flag(v);
  else if (key == "signals.window_sweep") {
    c.window_sweep.clear();
    for (const auto& s : detail::list_of(v)) {
      const auto colon = s.find(':');
      if (colon == std::string::npos) throw ConfigError(key + ": expected entries 'window_s:overlap'");
      c.window_sweep.push_back({num(s.substr(0, colon)), num(s.substr(colon + 1))});
    }
  } else if (key == "embedding.dim") c.embedding.dim = count(v);
  else if (key == "embedding.lag") c.embedding.lag = count(v);
  else if (key == "embedding.short_dim") c.short_embedding.dim = count(v);
  else if (key == "embedding.short_lag") c.short_embedding.lag = count(v);
  else if (key == "embedding.short_window_s") c.short_window_s = num(v);
  else if (key == "homology.threshold") {
    if (v == "enclosing" || v.empty()) c.ph_threshold.reset();
    else c.ph_threshold = num(v);
  } else if (key == "homology.simplex_cap") c.simplex_cap = count(v);
  else if (key == "landscape.grid") c.grid = count(v);
  else if (key == "landscape.t_max") {
    if (v != "global" && v != "segment") throw ConfigError("landscape.t_max: expected global or segment");
    c.global_tmax = v == "global";
  } else if (key == "landscape.t_max_quantile") c.tmax_quantile = num(v);
  else if (key == "classifier.kind") c.classifier.kind = config_value(key, v, [](const std::string& x) { return parse_classifier(x); });
  else if (key == "classifier.trees") c.classifier.forest.trees = count(v);
  else if (key == "classifier.max_depth") c.classifier.forest.max_depth = count(v);
  else if (key == "classifier.min_leaf") c.classifier.forest.min_leaf = count(v);
  else if (key == "classifier.max_features") c.classifier.forest.max_features = count(v);
  else if (key == "classifier.bootstrap") c.classifier.forest.bootstrap = flag(v);
  else if (key == "classifier.knn_k") c.classifier.knn_k = count(v);
  else if (key == "classifier.sweep") {
    c.classifier_sweep.clear();
    for (const auto& s : detail::list_of(v))
      c.classifier_sweep.push_back(config_value(key, s, [](const std::string& x) { return parse_classifier(x); }));
  } else if (key == "evaluation.protocol") c.protocol.protocol = config_value(key, v, [](const std::string& x) { return parse_protocol(x); });
  else if (key == "evaluation.folds") c.protocol.folds = count(v);
  else if (key == "evaluation.test_fraction") c.protocol.test_fraction = num(v);
  else if (key == "baselines.descriptors") {
    const auto items = detail::list_of(v);
    c.descriptors.clear();
    if (items == std::vector<std::string>{"all"}) c.descriptors.assign(std::begin(kAllDescriptors), std::end(kAllDescriptors));
    else
      for (const auto& s : items)
        c.descriptors.push_back(config_value(key, s, [](const std::string& x) { return parse_descriptor(x); }));
  } else if (key == "baselines.m") c.baseline.m = count(v);
  else if (key == "baselines.r_fraction") c.baseline.r_fraction = num(v);
  else if (key == "baselines.fuzzy_gradient") c.baseline.fuzzy_gradient = num(v);
  else if (key == "baselines.lyapunov_horizon") c.baseline.lyapunov.horizon = count(v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

/// Range checks that do not depend on the data.
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.dataset.source == "dir" && c.dataset.path.empty()) fail("dataset.path is required when dataset.source = dir");
  if (c.dataset.source == "dir" && !std::filesystem::is_directory(c.dataset.path))
    fail("dataset.path '" + c.dataset.path + "' is not a directory");
  if (c.dataset.source == "synth") {
    if (c.dataset.subjects == 0 || c.dataset.trials == 0 || c.dataset.channels == 0)
      fail("dataset: subjects, trials and channels must be >= 1");
    if (!(c.dataset.rate_hz > 0.0) || !(c.dataset.trial_seconds > 0.0)) fail("dataset: rate_hz and trial_seconds must be > 0");
    if (!(c.dataset.noise_sd >= 0.0)) fail("dataset.noise_sd must be >= 0");
  }
  if (c.tasks.empty()) fail("labels.tasks must name at least one task");
  for (const auto& t : c.tasks)
    if (t != "label" && t != "arousal" && t != "valence" && t != "dominance" && t != "4class" && t != "8class")
      fail("labels.tasks: unknown task '" + t + "' (expected label, arousal, valence, dominance, 4class, 8class)");
  for (Band b : kRhythmBands) {
    const auto e = c.band_table[b];
    if (!(e.lo_hz > 0.0 && e.lo_hz < e.hi_hz)) fail("signals." + std::string(band_name(b)) + ": need 0 < lo < hi");
  }
  if (c.bands.empty()) fail("signals.bands must list at least one band");
  for (Band b : c.bands)
    if (b == Band::broadband) fail("signals.bands: only theta, alpha, beta, gamma are allowed");
  auto check_window = [&](const WindowSpec& w, const std::string& where) {
    if (!(w.window_s > 0.0)) fail(where + ": window must be > 0");
    if (!(w.overlap >= 0.0 && w.overlap < 1.0)) fail(where + ": overlap must be in [0, 1)");
  };
  check_window(c.window, "signals.window_s/overlap");
  for (const auto& w : c.window_sweep) check_window(w, "signals.window_sweep");
  if (c.embedding.dim == 0 || c.embedding.lag == 0 || c.short_embedding.dim == 0 || c.short_embedding.lag == 0)
    fail("embedding: dim and lag must be >= 1");
  if (c.ph_threshold && !(*c.ph_threshold > 0.0)) fail("homology.threshold must be > 0 or 'enclosing'");
  if (c.simplex_cap == 0) fail("homology.simplex_cap must be >= 1");
  if (c.grid < 2) fail("landscape.grid must be >= 2");
  if (!(c.tmax_quantile > 0.0 && c.tmax_quantile <= 1.0)) fail("landscape.t_max_quantile must be in (0, 1]");
  if (c.classifier.forest.trees == 0 || c.classifier.forest.min_leaf == 0) fail("classifier: trees and min_leaf must be >= 1");
  if (c.classifier.knn_k == 0) fail("classifier.knn_k must be >= 1");
  if (c.classifier_sweep.empty()) fail("classifier.sweep must list at least one classifier");
  if (c.protocol.folds < 2) fail("evaluation.folds must be >= 2");
  if (!(c.protocol.test_fraction > 0.0 && c.protocol.test_fraction < 1.0)) fail("evaluation.test_fraction must be in (0, 1)");
  if (c.descriptors.empty()) fail("baselines.descriptors must list at least one descriptor");
  if (c.baseline.m == 0 || !(c.baseline.r_fraction > 0.0)) fail("baselines: m >= 1 and r_fraction > 0 required");
}

inline ExperimentConfig config_from_ptree(const boost::property_tree::ptree& pt, ExperimentConfig c = {}) {
  for (const auto& [section, body] : pt) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' must live inside a [section]");
    for (const auto& [key, node] : body) apply_setting(c, section + "." + key, node.data());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_ptree(pt);
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return config_from_ptree(pt);
}

/// INI rendering of the resolved configuration; round-trips through
/// parse_config_text.
inline std::string config_to_ini(const ExperimentConfig& c) {
  std::ostringstream out;
  std::string current;
  for (const auto& [k, v] : config_entries(c)) {
    const auto dot = k.find('.');
    const auto section = k.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << "\n";
      out << "[" << section << "]\n";
      current = section;
    }
    out << k.substr(dot + 1) << " = " << v << "\n";
  }
  return out.str();
}

}  // namespace topoeeg
