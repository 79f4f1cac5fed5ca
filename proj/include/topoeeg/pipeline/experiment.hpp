#pragma once

// Experiment orchestration: ingest -> band-pass -> segment -> embed ->
// persistence -> landscapes -> per-subject evaluation, arranged into the
// result tables of the supported experiment designs.
//
// report.json and tables.txt depend only on the resolved configuration and
// the data; wall-clock timings go to a separate timings.json.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/evaluate.hpp"
#include "topoeeg/pipeline/config.hpp"
#include "topoeeg/pipeline/dataset.hpp"
#include "topoeeg/pipeline/features.hpp"
#include "topoeeg/pipeline/report.hpp"
#include "topoeeg/random.hpp"

namespace topoeeg {

struct SubjectBlock {
  std::string subject;
  std::uint64_t seed = 0;
  std::vector<std::size_t> recordings;  // indices into the recording set
  std::size_t rows = 0;
  std::vector<bool> training;  // per row: inside the training portion
};

/// Feature rows of every recording for one window setting.
struct FeatureBank {
  FeatureSettings settings;
  std::vector<std::size_t> rows;                              // per recording
  std::vector<std::vector<std::vector<double>>> landscapes;   // [recording][row][channel, band, grid]
  std::vector<std::vector<std::vector<std::vector<double>>>> descriptors;  // [descriptor][recording][row][...]
  std::vector<std::vector<std::vector<double>>> tmax;         // [recording][channel][band]; empty = per segment
  std::size_t cache_hits = 0;
};

struct RunTimings {
  std::vector<std::pair<std::string, double>> stages;  // wall seconds, in order
  StageClock cpu;
  double total = 0.0;
};

struct PipelineContext {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  RecordingSet recordings;
  std::vector<std::string> channels;
  std::vector<SubjectBlock> subjects;
};

/// Loads the data, resolves channels and groups recordings by subject.
inline PipelineContext prepare_context(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("experiment.seed is required (pass --seed)");
  validate(cfg);
  PipelineContext ctx;
  ctx.config = cfg;
  ctx.seed = *cfg.seed;
  ctx.recordings = load_dataset(cfg, ctx.seed);
  if (ctx.recordings.empty()) throw DataError("dataset holds no recordings");
  ctx.channels = cfg.channels.empty() ? ctx.recordings.front().channels : cfg.channels;
  for (const auto& r : ctx.recordings) {
    for (const auto& ch : ctx.channels) channel_index(r, ch);
    if (r.rate_hz != ctx.recordings.front().rate_hz)
      throw DataError("subject " + r.subject + ", trial " + r.trial + ": sampling rate differs from the first recording");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ctx.recordings.size(); ++i) {
    const auto& s = ctx.recordings[i].subject;
    auto [it, fresh] = index.try_emplace(s, ctx.subjects.size());
    if (fresh) {
      SubjectBlock b;
      b.subject = s;
      b.seed = derive_seed(ctx.seed, 0x5b1u, ctx.subjects.size());
      ctx.subjects.push_back(std::move(b));
    }
    ctx.subjects[it->second].recordings.push_back(i);
  }
  return ctx;
}

inline FeatureSettings feature_settings(const ExperimentConfig& cfg, const std::vector<std::string>& channels,
                                        const WindowSpec& w) {
  FeatureSettings s;
  s.table = cfg.band_table;
  s.bands = cfg.bands;
  s.channels = channels;
  s.window_s = w.window_s;
  s.overlap = w.overlap;
  s.zscore = cfg.zscore;
  s.embedding = cfg.embedding_for(w.window_s);
  s.threshold = cfg.ph_threshold;
  s.simplex_cap = cfg.simplex_cap;
  s.grid = cfg.grid;
  return s;
}

namespace detail {

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Computes the landscape (and optionally descriptor) rows of every
/// recording for one window setting. Stage wall times are appended to
/// `timings` when given.
inline FeatureBank compute_features(PipelineContext& ctx, const WindowSpec& window, bool landscapes,
                                    const std::vector<Descriptor>& descriptors, RunTimings* timings = nullptr) {
  const auto& cfg = ctx.config;
  const auto& recs = ctx.recordings;
  const std::size_t C = ctx.channels.size();
  const std::size_t workers = cfg.worker_count();
  FeatureBank bank;
  bank.settings = feature_settings(cfg, ctx.channels, window);
  const auto& s = bank.settings;
  const std::size_t B = s.bands.size();
  const std::string label = "window " + format_double(window.window_s) + "s";

  bank.rows.resize(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i)
    bank.rows[i] = with_context("subject " + recs[i].subject + ", trial " + recs[i].trial,
                                [&] { return segment_count(recs[i], s); });

  for (auto& subj : ctx.subjects) {
    subj.rows = 0;
    for (auto r : subj.recordings) subj.rows += bank.rows[r];
    subj.training.assign(subj.rows, true);
    if (cfg.protocol.protocol == Protocol::split_then_cv) {
      subj.training.assign(subj.rows, false);
      for (auto i : holdout_split(subj.rows, cfg.protocol.test_fraction, subj.seed).first) subj.training[i] = true;
    }
  }

  // (recording, channel) work units
  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (std::size_t r = 0; r < recs.size(); ++r)
    for (std::size_t c = 0; c < C; ++c) units.emplace_back(r, channel_index(recs[r], ctx.channels[c]));
  std::vector<StageClock> clocks(units.size());
  auto location = [&](std::size_t u) { return unit_location(recs[units[u].first], ctx.channels[u % C]); };

  if (landscapes && cfg.global_tmax) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<std::vector<double>>> thr(units.size());
    parallel_for(units.size(), workers, [&](std::size_t u) {
      thr[u] = with_context(location(u), [&] { return channel_thresholds(recs[units[u].first], units[u].second, s, &clocks[u]); });
    });
    bank.tmax.assign(recs.size(), std::vector<std::vector<double>>(C, std::vector<double>(B, 0.0)));
    for (const auto& subj : ctx.subjects) {
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t b = 0; b < B; ++b) {
          std::vector<double> pool;
          std::size_t row = 0;
          for (auto r : subj.recordings)
            for (std::size_t k = 0; k < bank.rows[r]; ++k, ++row)
              if (subj.training[row]) pool.push_back(thr[r * C + c][b][k]);
          const double t = pool.empty() ? 0.0 : quantile(pool, cfg.tmax_quantile);
          for (auto r : subj.recordings) bank.tmax[r][c][b] = t;
        }
    }
    if (timings) timings->stages.emplace_back(label + ": thresholds", detail::elapsed(t0));
  }

  if (landscapes) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t width = C * B * s.grid;
    bank.landscapes.assign(recs.size(), {});
    std::vector<std::string> keys(recs.size());
    std::vector<bool> cached(recs.size(), false);
    if (!cfg.cache_dir.empty()) {
      for (std::size_t r = 0; r < recs.size(); ++r) {
        keys[r] = cache_key(s, recs[r], bank.tmax.empty() ? std::vector<std::vector<double>>{} : bank.tmax[r]);
        if (auto hit = cache_load(cache_stem(cfg.cache_dir, recs[r], keys[r]), keys[r], bank.rows[r], width)) {
          bank.landscapes[r] = std::move(*hit);
          cached[r] = true;
          ++bank.cache_hits;
        }
      }
    }
    std::vector<std::vector<std::vector<double>>> per_unit(units.size());
    parallel_for(units.size(), workers, [&](std::size_t u) {
      const auto r = units[u].first;
      if (cached[r]) return;
      const auto& tm = bank.tmax.empty() ? std::vector<double>{} : bank.tmax[r][u % C];
      per_unit[u] = with_context(location(u), [&] { return channel_landscapes(recs[r], units[u].second, s, tm, &clocks[u]); });
    });
    for (std::size_t r = 0; r < recs.size(); ++r) {
      if (cached[r]) continue;
      auto& rows = bank.landscapes[r];
      rows.assign(bank.rows[r], {});
      for (std::size_t k = 0; k < bank.rows[r]; ++k) {
        rows[k].reserve(width);
        for (std::size_t c = 0; c < C; ++c) {
          const auto& src = per_unit[r * C + c][k];
          rows[k].insert(rows[k].end(), src.begin(), src.end());
        }
        quantize(rows[k]);
      }
      if (!cfg.cache_dir.empty()) cache_store(cache_stem(cfg.cache_dir, recs[r], keys[r]), keys[r], rows, recs[r]);
    }
    if (timings) timings->stages.emplace_back(label + ": landscapes", detail::elapsed(t0));
  }

  if (!descriptors.empty()) {
    const auto t0 = std::chrono::steady_clock::now();
    bank.descriptors.resize(descriptors.size());
    for (std::size_t di = 0; di < descriptors.size(); ++di) {
      std::vector<std::vector<std::vector<double>>> per_unit(units.size());
      parallel_for(units.size(), workers, [&](std::size_t u) {
        per_unit[u] = with_context(location(u), [&] {
          return channel_descriptors(recs[units[u].first], units[u].second, s, descriptors[di], cfg.baseline, &clocks[u]);
        });
      });
      auto& out = bank.descriptors[di];
      out.assign(recs.size(), {});
      for (std::size_t r = 0; r < recs.size(); ++r) {
        out[r].assign(bank.rows[r], {});
        for (std::size_t k = 0; k < bank.rows[r]; ++k) {
          for (std::size_t c = 0; c < C; ++c) {
            const auto& src = per_unit[r * C + c][k];
            out[r][k].insert(out[r][k].end(), src.begin(), src.end());
          }
          quantize(out[r][k]);
        }
      }
    }
    if (timings) timings->stages.emplace_back(label + ": descriptors", detail::elapsed(t0));
  }

  if (timings)
    for (const auto& c : clocks) timings->cpu += c;
  return bank;
}

// ---------------------------------------------------------------------------
// Evaluation jobs and tables

struct FeatureSelection {
  std::vector<std::size_t> channels;  // positions into the context's channels; empty = all
  std::vector<std::size_t> bands;     // positions into the settings' bands; empty = all
};

/// Column indices of a (channel, band) selection for blocks of `width`
/// values laid out channel-major, then band.
inline std::vector<std::size_t> selected_columns(const FeatureSelection& sel, std::size_t channels, std::size_t bands,
                                                 std::size_t width) {
  std::vector<std::size_t> chs = sel.channels, bs = sel.bands;
  if (chs.empty())
    for (std::size_t c = 0; c < channels; ++c) chs.push_back(c);
  if (bs.empty())
    for (std::size_t b = 0; b < bands; ++b) bs.push_back(b);
  std::vector<std::size_t> cols;
  for (auto c : chs)
    for (auto b : bs)
      for (std::size_t g = 0; g < width; ++g) cols.push_back((c * bands + b) * width + g);
  return cols;
}

struct EvalJob {
  std::size_t row = 0;
  std::size_t column = 0;  // table column; exp5 fills every metric column
  std::size_t subject = 0;
  std::size_t bank = 0;    // window index
  int source = -1;         // -1 = landscapes, else descriptor index
  std::size_t task = 0;
  FeatureSelection selection;
  ClassifierSpec classifier;
};

struct RunResult {
  Json report;
  std::string tables_text;
  Json timings;
};

inline std::string classifier_display(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::rf: return "RF";
    case ClassifierKind::knn: return "kNN";
    case ClassifierKind::gnb: return "GNB";
  }
  return "?";
}

inline std::string descriptor_display(Descriptor d) {
  switch (d) {
    case Descriptor::fuzzy_entropy: return "Fuzzy Entropy";
    case Descriptor::approx_entropy: return "Approximate Entropy";
    case Descriptor::sample_entropy: return "Sample Entropy";
    case Descriptor::recurrence: return "Recurrence Plot";
    case Descriptor::poincare: return "Poincare Plot";
    case Descriptor::lyapunov: return "Lyapunov Exponent";
  }
  return "?";
}

inline RunResult run_experiment(const ExperimentConfig& cfg_in) {
  const auto t_start = std::chrono::steady_clock::now();
  RunTimings timings;
  auto t0 = std::chrono::steady_clock::now();
  PipelineContext ctx = prepare_context(cfg_in);
  const auto& cfg = ctx.config;
  const auto& recs = ctx.recordings;
  timings.stages.emplace_back("ingest", detail::elapsed(t0));

  // Tasks and labels
  std::vector<TaskInfo> tasks;
  std::vector<std::vector<int>> labels;  // [task][recording]
  for (const auto& name : cfg.tasks) {
    auto info = task_info(name);
    std::vector<int> l(recs.size());
    for (std::size_t r = 0; r < recs.size(); ++r) l[r] = recording_label(recs[r], name, cfg.label_threshold);
    if (info.classes == 0) {
      info.classes = *std::max_element(l.begin(), l.end()) + 1;
      for (int c = 0; c < info.classes; ++c) info.class_names.push_back("class" + std::to_string(c));
    }
    for (int v : l)
      if (v >= info.classes) throw DataError("task " + name + ": label out of range");
    tasks.push_back(std::move(info));
    labels.push_back(std::move(l));
  }

  // Features
  const auto kind = cfg.kind;
  std::vector<WindowSpec> windows =
      kind == ExperimentKind::exp3 ? cfg.window_sweep : std::vector<WindowSpec>{cfg.window};
  const std::vector<Descriptor> descs = kind == ExperimentKind::baselines ? cfg.descriptors : std::vector<Descriptor>{};
  std::vector<FeatureBank> banks;
  for (const auto& w : windows) banks.push_back(compute_features(ctx, w, true, descs, &timings));

  // Table layout and jobs
  t0 = std::chrono::steady_clock::now();
  ResultTable table;
  std::vector<EvalJob> jobs;
  const std::size_t S = ctx.subjects.size();
  auto add_jobs = [&](EvalJob j) {
    for (std::size_t s = 0; s < S; ++s) {
      j.subject = s;
      jobs.push_back(j);
    }
  };
  std::vector<std::string> task_names;
  for (const auto& t : tasks) task_names.push_back(t.display);
  const std::size_t B = cfg.bands.size();

  switch (kind) {
    case ExperimentKind::single:
      table.title = "Classification with " + classifier_display(cfg.classifier.kind) + " (" +
                    format_double(cfg.window.window_s) + "s window, all selected bands and channels)";
      table.row_header = "Task";
      table.rows = task_names;
      table.columns = {classifier_display(cfg.classifier.kind) + "(%)"};
      for (std::size_t t = 0; t < tasks.size(); ++t) add_jobs({t, 0, 0, 0, -1, t, {}, cfg.classifier});
      break;
    case ExperimentKind::exp1:
      table.title = "Exp #1: Model Evaluation with Different Classifiers";
      table.row_header = "Task";
      table.rows = task_names;
      for (std::size_t k = 0; k < cfg.classifier_sweep.size(); ++k) {
        table.columns.push_back(classifier_display(cfg.classifier_sweep[k]) + "(%)");
        auto spec = cfg.classifier;
        spec.kind = cfg.classifier_sweep[k];
        for (std::size_t t = 0; t < tasks.size(); ++t) add_jobs({t, k, 0, 0, -1, t, {}, spec});
      }
      break;
    case ExperimentKind::exp2:
      table.title = "Exp #2: Performance Comparison Using Different Rhythm Band Settings";
      table.row_header = "Task";
      table.rows = task_names;
      for (std::size_t b = 0; b <= B; ++b) {
        FeatureSelection sel;
        if (b < B) {
          sel.bands = {b};
          table.columns.push_back(std::string(band_name(cfg.bands[b])) + "-band(%)");
        } else {
          table.columns.push_back("all bands(%)");
        }
        for (std::size_t t = 0; t < tasks.size(); ++t) add_jobs({t, b, 0, 0, -1, t, sel, cfg.classifier});
      }
      break;
    case ExperimentKind::exp3:
      table.title = "Exp #3: Evaluation with Different Window Sizes";
      table.row_header = "Task";
      table.rows = task_names;
      for (std::size_t w = 0; w < windows.size(); ++w) {
        table.columns.push_back(format_double(windows[w].window_s) + "s(%)");
        for (std::size_t t = 0; t < tasks.size(); ++t) add_jobs({t, w, 0, w, -1, t, {}, cfg.classifier});
      }
      break;
    case ExperimentKind::exp4:
      table.title = "Exp #4: Recognition Results with Single Channel EEG";
      table.row_header = "Channel";
      table.rows = ctx.channels;
      for (std::size_t t = 0; t < tasks.size(); ++t) table.columns.push_back(tasks[t].display + "(%)");
      for (std::size_t c = 0; c < ctx.channels.size(); ++c)
        for (std::size_t t = 0; t < tasks.size(); ++t) add_jobs({c, t, 0, 0, -1, t, {{c}, {}}, cfg.classifier});
      break;
    case ExperimentKind::exp5:
      table.title = "Exp #5: Multi-class Evaluation with " + classifier_display(cfg.classifier.kind);
      table.row_header = "Task";
      table.rows = task_names;
      table.columns = {"Accuracy(%)", "Precision(%)", "Recall(%)", "F1-Score(%)"};
      for (std::size_t t = 0; t < tasks.size(); ++t) add_jobs({t, 0, 0, 0, -1, t, {}, cfg.classifier});
      break;
    case ExperimentKind::baselines:
      table.title = "Comparison with Nonlinear Dynamics Descriptors";
      table.row_header = "Descriptor";
      for (auto d : descs) table.rows.push_back(descriptor_display(d));
      table.rows.push_back("Topological landscapes");
      for (const auto& t : tasks) table.columns.push_back(t.display + "(%)");
      for (std::size_t d = 0; d <= descs.size(); ++d)
        for (std::size_t t = 0; t < tasks.size(); ++t)
          add_jobs({d, t, 0, 0, d < descs.size() ? int(d) : -1, t, {}, cfg.classifier});
      break;
  }
  table.resize();

  // Evaluate
  std::vector<EvalReport> results(jobs.size());
  std::vector<std::size_t> widths(jobs.size());
  parallel_for(jobs.size(), cfg.worker_count(), [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto& bank = banks[j.bank];
    const auto& subj = ctx.subjects[j.subject];
    const std::size_t width = j.source < 0 ? cfg.grid : descriptor_arity(descs[std::size_t(j.source)]);
    const auto cols = selected_columns(j.selection, ctx.channels.size(), B, width);
    widths[i] = cols.size();
    Examples data;
    data.reserve(subj.rows);
    for (auto r : subj.recordings) {
      const auto& rows = j.source < 0 ? bank.landscapes[r] : bank.descriptors[std::size_t(j.source)][r];
      for (std::size_t k = 0; k < rows.size(); ++k) {
        LabeledExample e;
        e.features.reserve(cols.size());
        for (auto c : cols) e.features.push_back(rows[k][c]);
        e.label = labels[j.task][r];
        e.meta = {recs[r].subject, recs[r].trial, k};
        data.push_back(std::move(e));
      }
    }
    results[i] = evaluate(data, cfg.protocol, j.classifier, subj.seed, tasks[j.task].classes);
  });
  timings.stages.emplace_back("evaluate", detail::elapsed(t0));

  // Aggregate
  t0 = std::chrono::steady_clock::now();
  auto metric_columns = [&](const EvalJob& j) {
    return kind == ExperimentKind::exp5 ? std::vector<std::size_t>{0, 1, 2, 3} : std::vector<std::size_t>{j.column};
  };
  auto metric = [&](const EvalReport& r, std::size_t col) {
    if (kind != ExperimentKind::exp5) return r.mean_accuracy;
    switch (col) {
      case 0: return r.mean_accuracy;
      case 1: return r.cv.macro_precision;
      case 2: return r.cv.macro_recall;
      default: return r.cv.macro_f1;
    }
  };
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> per_cell;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    for (auto c : metric_columns(jobs[i])) per_cell[{jobs[i].row, c}].push_back(metric(results[i], c));
  for (const auto& [rc, values] : per_cell) table.cells[rc.first][rc.second] = aggregate(values);

  Json report;
  report["format"] = "topoeeg run report v1";
  report["experiment"] = std::string(experiment_name(kind));
  report["seed"] = ctx.seed;
  report["config"] = config_to_json(cfg);
  {
    Json d;
    d["source"] = cfg.dataset.source;
    d["recordings"] = recs.size();
    d["rate_hz"] = recs.front().rate_hz;
    d["channels"] = ctx.channels;
    d["bands"] = Json::array();
    for (Band b : cfg.bands) d["bands"].push_back(std::string(band_name(b)));
    Json subjects = Json::array();
    for (const auto& s : ctx.subjects) {
      Json sj;
      sj["subject"] = s.subject;
      sj["recordings"] = s.recordings.size();
      subjects.push_back(std::move(sj));
    }
    d["subjects"] = std::move(subjects);
    Json wins = Json::array();
    for (std::size_t w = 0; w < windows.size(); ++w) {
      Json wj;
      wj["window_s"] = windows[w].window_s;
      wj["overlap"] = windows[w].overlap;
      wj["window_len"] = round_half_up(windows[w].window_s * recs.front().rate_hz);
      wj["embedding_dim"] = banks[w].settings.embedding.dim;
      wj["embedding_lag"] = banks[w].settings.embedding.lag;
      std::size_t segs = 0;
      for (auto n : banks[w].rows) segs += n;
      wj["segments"] = segs;
      wj["feature_length"] = ctx.channels.size() * B * cfg.grid;
      wins.push_back(std::move(wj));
    }
    d["windows"] = std::move(wins);
    Json tj = Json::array();
    for (const auto& t : tasks) {
      Json x;
      x["task"] = t.name;
      x["display"] = t.display;
      x["classes"] = t.class_names;
      tj.push_back(std::move(x));
    }
    d["tasks"] = std::move(tj);
    report["dataset"] = std::move(d);
  }
  report["table"] = table_to_json(table);
  Json evals = Json::array();
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    Json e;
    e["row"] = table.rows[j.row];
    e["column"] = kind == ExperimentKind::exp5 ? std::string("all metrics") : table.columns[j.column];
    e["subject"] = ctx.subjects[j.subject].subject;
    e["task"] = tasks[j.task].name;
    e["feature_length"] = widths[i];
    e["evaluation"] = eval_to_json(results[i], tasks[j.task].class_names);
    for (const auto& w : results[i].warnings)
      warnings.push_back(table.rows[j.row] + " / " + std::string(e["column"]) + " / " +
                         ctx.subjects[j.subject].subject + ": " + w);
    evals.push_back(std::move(e));
  }
  report["evaluations"] = std::move(evals);
  report["warnings"] = warnings;

  RunResult out;
  out.tables_text = render_table(table);
  out.report = std::move(report);
  timings.stages.emplace_back("report", detail::elapsed(t0));
  timings.total = detail::elapsed(t_start);

  Json tj;
  Json stages = Json::array();
  double sum = 0.0;
  for (const auto& [name, secs] : timings.stages) {
    Json s;
    s["stage"] = name;
    s["wall_s"] = secs;
    stages.push_back(std::move(s));
    sum += secs;
  }
  tj["stages"] = std::move(stages);
  tj["stage_sum_s"] = sum;
  tj["total_wall_s"] = timings.total;
  tj["cpu_s"] = {{"filter", timings.cpu.filter},
                 {"embed", timings.cpu.embed},
                 {"persistence", timings.cpu.persistence},
                 {"landscape", timings.cpu.landscape},
                 {"descriptors", timings.cpu.descriptors}};
  std::size_t hits = 0;
  for (const auto& b : banks) hits += b.cache_hits;
  tj["feature_cache_hits"] = hits;
  out.timings = std::move(tj);
  return out;
}

/// Writes report.json, tables.txt and timings.json into `dir`.
inline void write_run(const std::filesystem::path& dir, const RunResult& r) {
  write_text(dir / "report.json", r.report.dump(2) + "\n");
  write_text(dir / "tables.txt", r.tables_text);
  write_text(dir / "timings.json", r.timings.dump(2) + "\n");
}

/// Landscape features of every segment for the configured window as one
/// matrix (rows = segments in recording order). Labels come from the first
/// configured task; row provenance and the column layout go to the sidecar.
inline MatrixFile extract_feature_matrix(const ExperimentConfig& cfg) {
  PipelineContext ctx = prepare_context(cfg);
  const auto bank = compute_features(ctx, cfg.window, true, {});
  const auto& recs = ctx.recordings;
  MatrixFile m;
  m.cols = ctx.channels.size() * cfg.bands.size() * cfg.grid;
  std::vector<std::string> labels, subjects, trials, segs;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const int label = recording_label(recs[r], cfg.tasks.front(), cfg.label_threshold);
    for (std::size_t k = 0; k < bank.landscapes[r].size(); ++k) {
      const auto& row = bank.landscapes[r][k];
      m.data.insert(m.data.end(), row.begin(), row.end());
      labels.push_back(std::to_string(label));
      subjects.push_back(recs[r].subject);
      trials.push_back(recs[r].trial);
      segs.push_back(std::to_string(k));
      ++m.rows;
    }
  }
  m.meta["kind"] = "features";
  m.meta["task"] = cfg.tasks.front();
  m.meta["labels"] = join(labels, ",");
  m.meta["subjects"] = join(subjects, ",");
  m.meta["trials"] = join(trials, ",");
  m.meta["segments"] = join(segs, ",");
  m.meta["channels"] = join(ctx.channels, ",");
  m.meta["bands"] = detail::band_list_str(cfg.bands);
  m.meta["grid"] = std::to_string(cfg.grid);
  m.meta["layout"] = "channel,band,grid";
  m.meta["settings"] = bank.settings.fingerprint();
  m.meta["seed"] = std::to_string(ctx.seed);
  return m;
}

/// Examples from a feature matrix written by extract_feature_matrix.
inline Examples examples_from_matrix(const MatrixFile& m) {
  const auto it = m.meta.find("labels");
  if (it == m.meta.end()) throw DataError("feature matrix has no 'labels' entry");
  const auto labels = split(it->second, ',');
  if (labels.size() != m.rows) throw DataError("feature matrix: label count does not match rows");
  auto column = [&](const char* key) {
    const auto f = m.meta.find(key);
    auto v = f == m.meta.end() ? std::vector<std::string>{} : split(f->second, ',');
    if (!v.empty() && v.size() != m.rows) throw DataError(std::string("feature matrix: '") + key + "' count does not match rows");
    return v;
  };
  const auto subjects = column("subjects"), trials = column("trials"), segs = column("segments");
  Examples out(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto& e = out[r];
    e.features.assign(m.data.begin() + std::ptrdiff_t(r * m.cols), m.data.begin() + std::ptrdiff_t((r + 1) * m.cols));
    e.label = int(parse_size(labels[r], "label"));
    if (!subjects.empty()) e.meta.subject = subjects[r];
    if (!trials.empty()) e.meta.trial = trials[r];
    if (!segs.empty()) e.meta.segment_index = parse_size(segs[r], "segment");
  }
  return out;
}

}  // namespace topoeeg
