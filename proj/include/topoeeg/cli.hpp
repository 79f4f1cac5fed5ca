#pragma once

// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive it in-process and inspect exit codes.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data error, 4 resource cap.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topoeeg/embedding.hpp"
#include "topoeeg/errors.hpp"
#include "topoeeg/homology.hpp"
#include "topoeeg/landscapes.hpp"
#include "topoeeg/learn/model_io.hpp"
#include "topoeeg/matrix_io.hpp"
#include "topoeeg/pipeline/experiment.hpp"
#include "topoeeg/pipeline/plotdata.hpp"
#include "topoeeg/pipeline/report.hpp"
#include "topoeeg/signals.hpp"

namespace topoeeg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitResource = 4;

namespace cli_detail {

struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string from_report;
  std::string kind;
  std::string output;
  std::optional<std::size_t> workers;
  std::string cache_dir;
};

inline void add_config_flags(CLI::App* app, ConfigFlags& f, bool with_run_flags) {
  app->add_option("--config", f.config, "INI configuration file");
  app->add_option("--set", f.sets, "override a key: section.key=value (repeatable)");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--cache-dir", f.cache_dir, "feature cache directory");
  app->add_option("--workers", f.workers, "worker threads (0 = all cores)");
  if (with_run_flags) {
    app->add_option("--from-report", f.from_report, "replay the configuration embedded in a report.json");
    app->add_option("--kind", f.kind, "experiment kind (single, exp1..exp5, baselines)");
    app->add_option("--output", f.output, "output directory");
  }
}

/// Base config (file, replayed report, or defaults) with flag overrides
/// applied on top. Overrides are applied in command-line order.
inline ExperimentConfig resolve_config(const ConfigFlags& f) {
  if (!f.config.empty() && !f.from_report.empty()) throw ConfigError("--config and --from-report are exclusive");
  ExperimentConfig c;
  if (!f.config.empty()) {
    if (!std::filesystem::exists(f.config)) throw ConfigError("config file not found: " + f.config);
    c = load_config(f.config);
  } else if (!f.from_report.empty()) {
    Json j;
    try {
      j = read_json(f.from_report);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    if (!j.contains("config")) throw ConfigError(f.from_report + ": report has no embedded config");
    c = config_from_json(j["config"]);
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    apply_setting(c, std::string(trim(s.substr(0, eq))), std::string(trim(s.substr(eq + 1))));
  }
  if (!f.kind.empty()) apply_setting(c, "experiment.kind", f.kind);
  if (!f.output.empty()) c.output = f.output;
  if (f.workers) c.workers = *f.workers;
  if (!f.cache_dir.empty()) c.cache_dir = f.cache_dir;
  if (f.seed) c.seed = *f.seed;
  return c;
}

/// Key=value pairs for recording sidecars.
inline std::map<std::string, std::string> parse_meta(const std::vector<std::string>& kv) {
  std::map<std::string, std::string> out;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--meta expects key=value, got '" + s + "'");
    out[std::string(trim(s.substr(0, eq)))] = std::string(trim(s.substr(eq + 1)));
  }
  return out;
}

inline bool is_matrix_path(const std::filesystem::path& p) {
  const auto ext = p.extension();
  return ext == ".meta" || ext == ".bin" || (ext.empty() && std::filesystem::exists(meta_path(p)));
}

/// A single series: the named (or first) channel of a recording, or the
/// first column of a text file.
inline std::vector<double> read_series(const std::filesystem::path& p, const std::string& channel) {
  if (is_matrix_path(p)) {
    const auto rec = read_recording(matrix_stem(p));
    const std::size_t ch = channel.empty() ? 0 : channel_index(rec, channel);
    const auto& row = rec.data[ch];
    return {row.begin(), row.end()};
  }
  const auto pc = read_points_csv(p);
  std::vector<double> x;
  for (std::size_t i = 0; i < pc.size(); ++i) x.push_back(pc.point(i)[0]);
  return x;
}

/// Diagram from a `ph`-format TSV or from a point cloud file.
inline PersistenceDiagram read_diagram_input(const std::filesystem::path& p, int max_dim,
                                             std::optional<double> threshold, std::size_t cap) {
  if (p.extension() == ".tsv") return read_diagram_tsv(p);
  HomologyDims dims;
  for (int d = 0; d <= max_dim; ++d) dims.enabled[std::size_t(d)] = true;
  auto dg = rips_persistence(read_points_csv(p), dims, threshold, cap);
  dg.normalize();
  return dg;
}

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DegenerateInputError*>(&e)) return kExitData;
  if (dynamic_cast<const ResourceError*>(&e)) return kExitResource;
  return kExitFailure;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Topological feature extraction and classification for multichannel time series", "topoeeg"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic recording, or a whole synthetic dataset");
  std::string synth_kind = "noisy_sine", synth_out, synth_dir, synth_subject = "s01", synth_trial = "t0000";
  SynthParams sp;
  std::uint64_t synth_seed = 0;
  ConfigFlags synth_flags;
  std::vector<std::string> synth_meta;
  synth_cmd->add_option("--kind", synth_kind, "sine, noisy_sine, white_noise, lorenz_x");
  synth_cmd->add_option("--freq", sp.frequency_hz, "frequency in Hz");
  synth_cmd->add_option("--rate", sp.rate_hz, "sampling rate in Hz");
  synth_cmd->add_option("--length", sp.length, "samples");
  synth_cmd->add_option("--amplitude", sp.amplitude);
  synth_cmd->add_option("--phase", sp.phase, "radians");
  synth_cmd->add_option("--noise-sd", sp.noise_sd);
  synth_cmd->add_option("--subject", synth_subject);
  synth_cmd->add_option("--trial", synth_trial);
  synth_cmd->add_option("--meta", synth_meta, "extra sidecar entry key=value (repeatable)");
  synth_cmd->add_option("--out", synth_out, "output stem for a single recording");
  synth_cmd->add_option("--dataset-dir", synth_dir, "write the configured synthetic dataset here instead");
  synth_cmd->add_option("--config", synth_flags.config, "INI configuration (dataset section) for --dataset-dir");
  synth_cmd->add_option("--set", synth_flags.sets, "override a config key");
  synth_cmd->add_option("--seed", synth_seed, "seed")->required();

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "convert a CSV recording to the binary matrix format");
  std::string ingest_csv, ingest_out, ingest_subject, ingest_trial;
  double ingest_rate = 0.0;
  std::vector<std::string> ingest_meta;
  ingest_cmd->add_option("--csv", ingest_csv, "input CSV (index column, then one column per channel)")->required();
  ingest_cmd->add_option("--rate", ingest_rate, "sampling rate in Hz")->required();
  ingest_cmd->add_option("--out", ingest_out, "output stem")->required();
  ingest_cmd->add_option("--subject", ingest_subject);
  ingest_cmd->add_option("--trial", ingest_trial);
  ingest_cmd->add_option("--meta", ingest_meta, "sidecar entry key=value, e.g. valence=6.5 (repeatable)");

  // embed-diag
  auto* ed_cmd = app.add_subcommand("embed-diag", "AMI and FNN curves for choosing lag and dimension");
  std::string ed_input, ed_channel, ed_ami_out, ed_fnn_out;
  std::size_t ed_max_lag = 20, ed_max_dim = 10, ed_bins = kDefaultAmiBins;
  std::optional<std::size_t> ed_lag;
  ed_cmd->add_option("--input", ed_input, "recording stem or one-column text series")->required();
  ed_cmd->add_option("--channel", ed_channel, "channel name (default: first)");
  ed_cmd->add_option("--max-lag", ed_max_lag);
  ed_cmd->add_option("--max-dim", ed_max_dim);
  ed_cmd->add_option("--bins", ed_bins, "AMI histogram bins");
  ed_cmd->add_option("--lag", ed_lag, "lag for FNN (default: AMI choice)");
  ed_cmd->add_option("--ami-out", ed_ami_out, "TSV path for lag/ami")->required();
  ed_cmd->add_option("--fnn-out", ed_fnn_out, "TSV path for dim/fnn_fraction")->required();

  // ph
  auto* ph_cmd = app.add_subcommand("ph", "persistence diagram of a point cloud");
  std::string ph_points, ph_out;
  int ph_max_dim = 2;
  std::optional<double> ph_threshold;
  std::size_t ph_cap = kDefaultSimplexCap;
  ph_cmd->add_option("--points", ph_points, "CSV, one point per row")->required();
  ph_cmd->add_option("--out", ph_out, "output TSV")->required();
  ph_cmd->add_option("--max-dim", ph_max_dim, "highest homology dimension (0-2)")->check(CLI::Range(0, 2));
  ph_cmd->add_option("--threshold", ph_threshold, "filtration threshold (default: enclosing radius)");
  ph_cmd->add_option("--simplex-cap", ph_cap);

  // landscape
  auto* ls_cmd = app.add_subcommand("landscape", "sampled persistence landscape of a diagram");
  std::string ls_diagram, ls_out;
  int ls_dim = 1;
  std::size_t ls_k = 1, ls_grid = kDefaultGridPoints;
  std::optional<double> ls_tmax;
  ls_cmd->add_option("--diagram", ls_diagram, "diagram TSV as written by ph")->required();
  ls_cmd->add_option("--out", ls_out, "output TSV")->required();
  ls_cmd->add_option("--dim", ls_dim)->check(CLI::Range(0, 2));
  ls_cmd->add_option("--k", ls_k, "landscape level (1 = top)");
  ls_cmd->add_option("--grid", ls_grid, "grid points");
  ls_cmd->add_option("--t-max", ls_tmax, "grid end (default: diagram threshold)");

  // extract
  auto* ex_cmd = app.add_subcommand("extract", "feature matrix of the configured dataset");
  ConfigFlags ex_flags;
  std::string ex_out;
  add_config_flags(ex_cmd, ex_flags, false);
  ex_cmd->add_option("--out", ex_out, "output stem")->required();

  // train
  auto* tr_cmd = app.add_subcommand("train", "fit a classifier on a feature matrix");
  std::string tr_features, tr_out, tr_classifier = "rf";
  ClassifierSpec tr_spec;
  std::uint64_t tr_seed = 0;
  tr_cmd->add_option("--features", tr_features, "feature matrix stem")->required();
  tr_cmd->add_option("--out", tr_out, "model file")->required();
  tr_cmd->add_option("--classifier", tr_classifier, "rf, knn or gnb");
  tr_cmd->add_option("--trees", tr_spec.forest.trees);
  tr_cmd->add_option("--max-depth", tr_spec.forest.max_depth);
  tr_cmd->add_option("--min-leaf", tr_spec.forest.min_leaf);
  tr_cmd->add_option("--max-features", tr_spec.forest.max_features);
  tr_cmd->add_option("--knn-k", tr_spec.knn_k);
  tr_cmd->add_option("--seed", tr_seed)->required();

  // eval
  auto* ev_cmd = app.add_subcommand("eval", "score a saved model, or run the evaluation protocol");
  std::string ev_features, ev_model, ev_report, ev_classifier = "rf", ev_protocol = "split_80_20_then_10fold_cv";
  ClassifierSpec ev_spec;
  ProtocolOptions ev_opt;
  std::optional<std::uint64_t> ev_seed;
  ev_cmd->add_option("--features", ev_features, "feature matrix stem")->required();
  ev_cmd->add_option("--model", ev_model, "saved model; without it the protocol is run");
  ev_cmd->add_option("--report", ev_report, "JSON report path (default: stdout)");
  ev_cmd->add_option("--classifier", ev_classifier);
  ev_cmd->add_option("--trees", ev_spec.forest.trees);
  ev_cmd->add_option("--knn-k", ev_spec.knn_k);
  ev_cmd->add_option("--protocol", ev_protocol, "split_80_20_then_10fold_cv or 10fold_cv_all");
  ev_cmd->add_option("--folds", ev_opt.folds);
  ev_cmd->add_option("--test-fraction", ev_opt.test_fraction);
  ev_cmd->add_option("--seed", ev_seed);

  // run
  auto* run_cmd = app.add_subcommand("run", "run an experiment and write report.json, tables.txt, timings.json");
  ConfigFlags run_flags;
  add_config_flags(run_cmd, run_flags, true);

  // emit-plotdata
  auto* pd_cmd = app.add_subcommand("emit-plotdata", "TSV dumps for plotting");
  std::string pd_kind, pd_input, pd_out, pd_channel;
  std::size_t pd_grid = kDefaultGridPoints, pd_k = 1, pd_max_lag = 20, pd_max_dim = 10;
  int pd_dim = 1;
  pd_cmd->add_option("--kind", pd_kind, "barcode, diagram, landscape, ami, fnn")->required();
  pd_cmd->add_option("--input", pd_input, "point CSV or diagram TSV (barcode/diagram/landscape); series (ami/fnn)")
      ->required();
  pd_cmd->add_option("--out", pd_out, "output TSV")->required();
  pd_cmd->add_option("--grid", pd_grid);
  pd_cmd->add_option("--dim", pd_dim)->check(CLI::Range(0, 2));
  pd_cmd->add_option("--k", pd_k);
  pd_cmd->add_option("--channel", pd_channel);
  pd_cmd->add_option("--max-lag", pd_max_lag);
  pd_cmd->add_option("--max-dim", pd_max_dim);

  std::vector<std::string> argv_store{"topoeeg"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth_cmd->parsed()) {
      if (!synth_dir.empty()) {
        auto c = resolve_config(synth_flags);
        c.dataset.source = "synth";
        const auto recs = load_dataset(c, synth_seed);
        for (const auto& r : recs) write_recording(std::filesystem::path(synth_dir) / (r.subject + "__" + r.trial), r);
        out << "wrote " << recs.size() << " recordings to " << synth_dir << "\n";
        return kExitOk;
      }
      if (synth_out.empty()) throw ConfigError("synth: give --out or --dataset-dir");
      const auto ts = synth(parse_synth_kind(synth_kind), sp, synth_seed);
      Recording r;
      r.rate_hz = ts.rate_hz();
      r.subject = synth_subject;
      r.trial = synth_trial;
      r.channels = {"ch1"};
      r.data.emplace_back(ts.samples().begin(), ts.samples().end());
      r.extra = parse_meta(synth_meta);
      write_recording(synth_out, r);
      out << "wrote " << ts.size() << " samples to " << data_path(synth_out).string() << "\n";
      return kExitOk;
    }

    if (ingest_cmd->parsed()) {
      auto r = read_csv_recording(ingest_csv, ingest_rate);
      if (!ingest_subject.empty()) r.subject = ingest_subject;
      if (!ingest_trial.empty()) r.trial = ingest_trial;
      for (auto& [k, v] : parse_meta(ingest_meta)) r.extra[k] = v;
      write_recording(ingest_out, r);
      out << "wrote " << r.channels.size() << " channels x " << r.samples() << " samples to "
          << data_path(ingest_out).string() << "\n";
      return kExitOk;
    }

    if (ed_cmd->parsed()) {
      const auto x = read_series(ed_input, ed_channel);
      const auto ami = ami_lag(x, ed_max_lag, ed_bins);
      const auto fnn = fnn_dim(x, ed_lag.value_or(ami.lag), ed_max_dim);
      write_text(ed_ami_out, ami_tsv(ami));
      write_text(ed_fnn_out, fnn_tsv(fnn));
      out << "lag " << ami.lag << "\ndim " << fnn.dim << "\n";
      return kExitOk;
    }

    if (ph_cmd->parsed()) {
      HomologyDims dims;
      for (int d = 0; d <= ph_max_dim; ++d) dims.enabled[std::size_t(d)] = true;
      const auto dg = rips_persistence(read_points_csv(ph_points), dims, ph_threshold, ph_cap);
      write_text(ph_out, diagram_tsv(dg));
      return kExitOk;
    }

    if (ls_cmd->parsed()) {
      const auto dg = read_diagram_tsv(ls_diagram);
      const auto L = landscape(dg, ls_dim, ls_k, ls_grid, ls_tmax.value_or(dg.threshold));
      write_text(ls_out, landscape_tsv(L));
      return kExitOk;
    }

    if (ex_cmd->parsed()) {
      const auto c = resolve_config(ex_flags);
      const auto m = extract_feature_matrix(c);
      write_matrix(ex_out, m);
      out << "wrote " << m.rows << " x " << m.cols << " features to " << data_path(ex_out).string() << "\n";
      return kExitOk;
    }

    if (tr_cmd->parsed()) {
      tr_spec.kind = parse_classifier(tr_classifier);
      const auto data = examples_from_matrix(read_matrix(tr_features));
      const auto model = fit(tr_spec, data, tr_seed, class_count(data));
      save_model(tr_out, model);
      out << "trained " << classifier_name(tr_spec.kind) << " on " << data.size() << " examples\n";
      return kExitOk;
    }

    if (ev_cmd->parsed()) {
      const auto data = examples_from_matrix(read_matrix(ev_features));
      Json j;
      if (!ev_model.empty()) {
        const auto model = load_model(ev_model);
        int classes = class_count(data);
        std::vector<int> pred;
        for (const auto& e : data) {
          pred.push_back(predict(model, e.features));
          classes = std::max(classes, pred.back() + 1);
        }
        ConfusionMatrix cm(std::size_t(classes), std::vector<std::size_t>(std::size_t(classes), 0));
        for (std::size_t i = 0; i < data.size(); ++i) ++cm[std::size_t(data[i].label)][std::size_t(pred[i])];
        j["model"] = ev_model;
        j["classifier"] = classifier_name(model_kind(model));
        j["examples"] = data.size();
        j["summary"] = summary_to_json(summarize(cm));
      } else {
        if (!ev_seed) throw ConfigError("eval: --seed is required when no --model is given");
        ev_spec.kind = parse_classifier(ev_classifier);
        ev_opt.protocol = parse_protocol(ev_protocol);
        j = eval_to_json(evaluate(data, ev_opt, ev_spec, *ev_seed));
      }
      const auto text = j.dump(2) + "\n";
      if (ev_report.empty()) out << text;
      else write_text(ev_report, text);
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      if (!run_flags.seed && run_flags.from_report.empty()) throw ConfigError("run: --seed is required");
      const auto c = resolve_config(run_flags);
      if (!c.seed) throw ConfigError("run: --seed is required");
      const auto result = run_experiment(c);
      write_run(c.output, result);
      out << result.tables_text;
      out << "report written to " << (std::filesystem::path(c.output) / "report.json").string() << "\n";
      return kExitOk;
    }

    if (pd_cmd->parsed()) {
      const auto kind = parse_plot_kind(pd_kind);
      std::string text;
      if (kind == PlotKind::ami || kind == PlotKind::fnn) {
        const auto x = read_series(pd_input, pd_channel);
        const auto ami = ami_lag(x, pd_max_lag);
        text = kind == PlotKind::ami ? ami_tsv(ami) : fnn_tsv(fnn_dim(x, ami.lag, pd_max_dim));
      } else {
        const auto dg = read_diagram_input(pd_input, kMaxHomologyDim, std::nullopt, kDefaultSimplexCap);
        if (kind == PlotKind::diagram) text = diagram_tsv(dg);
        else if (kind == PlotKind::barcode) text = barcode_tsv(dg);
        else text = landscape_tsv(landscape(dg, pd_dim, pd_k, pd_grid, dg.threshold));
      }
      write_text(pd_out, text);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace topoeeg
