#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "topoeeg/pipeline/config.hpp"
#include "topoeeg/pipeline/dataset.hpp"
#include "topoeeg/pipeline/experiment.hpp"
#include "topoeeg/pipeline/features.hpp"
#include "topoeeg/pipeline/plotdata.hpp"
#include "topoeeg/pipeline/report.hpp"

using namespace topoeeg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("topoeeg_pipe_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small and fast: half-second windows (54-point clouds in 3-D).
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.seed = 17;
  c.workers = 2;
  c.dataset.trials = 8;
  c.window = {0.5, 0.0};
  c.classifier.forest.trees = 15;
  c.protocol.folds = 4;
  return c;
}

std::set<std::string> column_names(const Json& report) {
  std::set<std::string> out;
  for (const auto& c : report["table"]["columns"]) out.insert(c.get<std::string>());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, IniRoundTrip) {
  ExperimentConfig c;
  c.seed = 99;
  c.bands = {Band::alpha, Band::gamma};
  c.tasks = {"valence", "8class"};
  c.ph_threshold = 1.5;
  c.window_sweep = {{0.5, 0.0}, {2.0, 0.5}};
  const auto text = config_to_ini(c);
  const auto back = parse_config_text(text);
  EXPECT_EQ(config_entries(back), config_entries(c));
  EXPECT_EQ(config_to_ini(back), text);
}

TEST(Config, JsonRoundTrip) {
  auto c = small_config();
  c.kind = ExperimentKind::exp3;
  c.descriptors = {Descriptor::sample_entropy};
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_entries(back), config_entries(c));
}

TEST(Config, ParsesCommentsAndSections) {
  const auto c = parse_config_text(
      "; comment\n[experiment]\nkind = exp2\nseed = 5\n\n[signals]\nbands = alpha, beta\nwindow_s = 2\n");
  EXPECT_EQ(c.kind, ExperimentKind::exp2);
  EXPECT_EQ(*c.seed, 5u);
  EXPECT_EQ(c.bands, (std::vector<Band>{Band::alpha, Band::beta}));
  EXPECT_EQ(c.window.window_s, 2.0);
}

TEST(Config, UnknownKeysAndBadValuesAreConfigErrors) {
  EXPECT_THROW(parse_config_text("[signals]\nwindoww = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[nosuch]\nkey = 1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[signals]\nwindow_s = abc\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[signals]\nbands = delta\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[classifier]\nkind = svm\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[experiment]\nkind = exp9\n"), ConfigError);
  EXPECT_THROW(parse_config_text("loose = 1\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, ValidateRanges) {
  auto bad = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    return c;
  };
  EXPECT_NO_THROW(validate(ExperimentConfig{}));
  EXPECT_THROW(validate(bad([](auto& c) { c.window.overlap = 1.0; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.window.window_s = 0; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.grid = 1; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.tasks = {"mood"}; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.protocol.folds = 1; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.dataset.source = "dir"; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) {
                 c.dataset.source = "dir";
                 c.dataset.path = "/nonexistent/dir";
               })),
               ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.band_table[Band::alpha] = {13, 8}; })), ConfigError);
}

TEST(Config, MissingSeedIsRejected) {
  ExperimentConfig c;
  EXPECT_THROW(prepare_context(c), ConfigError);
}

TEST(Config, EmbeddingForWindow) {
  ExperimentConfig c;
  EXPECT_EQ(c.embedding_for(0.5).dim, 3u);
  EXPECT_EQ(c.embedding_for(0.5).lag, 5u);
  EXPECT_EQ(c.embedding_for(1.0).dim, 8u);
  EXPECT_EQ(c.embedding_for(4.0).lag, 10u);
}

// ---------------------------------------------------------------------------
// Datasets

TEST(Datasets, SineVsSurrogateShape) {
  DatasetConfig d;
  d.trials = 5;
  d.subjects = 2;
  d.channels = 3;
  const auto recs = synth_sine_vs_surrogate(d, 1);
  ASSERT_EQ(recs.size(), 20u);
  std::map<std::string, int> per_label;
  for (const auto& r : recs) {
    EXPECT_EQ(r.channels.size(), 3u);
    EXPECT_EQ(r.samples(), 128u);
    ++per_label[r.extra.at("label")];
  }
  EXPECT_EQ(per_label["0"], 10);
  EXPECT_EQ(per_label["1"], 10);
  EXPECT_EQ(recs.front().subject, "s01");
  EXPECT_EQ(recs.back().subject, "s02");
  const auto again = synth_sine_vs_surrogate(d, 1);
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].data, again[i].data);
}

TEST(Datasets, SurrogateMatchesClassMeanSpectrum) {
  DatasetConfig d;
  d.trials = 30;
  const auto recs = synth_sine_vs_surrogate(d, 2);
  Eigen::FFT<double> fft;
  std::vector<double> mean(65, 0.0);
  for (const auto& r : recs) {
    if (r.extra.at("label") != "0") continue;
    std::vector<double> x(r.data[0].begin(), r.data[0].end());
    std::vector<std::complex<double>> s;
    fft.fwd(s, x);
    for (std::size_t k = 0; k <= 64; ++k) mean[k] += std::abs(s[k]) / 30.0;
  }
  for (const auto& r : recs) {
    if (r.extra.at("label") != "1") continue;
    std::vector<double> x(r.data[0].begin(), r.data[0].end());
    std::vector<std::complex<double>> s;
    fft.fwd(s, x);
    for (std::size_t k = 1; k <= 64; ++k) EXPECT_NEAR(std::abs(s[k]), mean[k], 1e-3 * (1 + mean[k]));
  }
}

TEST(Datasets, AffectScoresAndLabels) {
  DatasetConfig d;
  d.trials = 40;
  d.channels = 2;
  const auto recs = synth_affect(d, 3, 5.0);
  ASSERT_EQ(recs.size(), 40u);
  std::set<int> eight;
  for (const auto& r : recs) {
    for (const char* k : {"valence", "arousal", "dominance"}) {
      const double v = std::stod(r.extra.at(k));
      EXPECT_GE(v, 1.0);
      EXPECT_LE(v, 9.0);
    }
    const int v = recording_label(r, "valence", 5.0), a = recording_label(r, "arousal", 5.0),
              dm = recording_label(r, "dominance", 5.0);
    EXPECT_EQ(recording_label(r, "4class", 5.0), a * 2 + v);
    EXPECT_EQ(recording_label(r, "8class", 5.0), v * 4 + a * 2 + dm);
    eight.insert(recording_label(r, "8class", 5.0));
  }
  EXPECT_GT(eight.size(), 4u);
  EXPECT_THROW(recording_label(recs[0], "label", 5.0), DataError);
}

TEST(Datasets, TaskInfo) {
  EXPECT_EQ(task_info("arousal").display, "LA/HA");
  EXPECT_EQ(task_info("4class").class_names, (std::vector<std::string>{"LALV", "LAHV", "HALV", "HAHV"}));
  EXPECT_EQ(task_info("8class").class_names.size(), 8u);
  EXPECT_EQ(task_info("8class").class_names[5], "HVLAHD");
  EXPECT_THROW(task_info("mood"), ConfigError);
}

TEST(Datasets, RecordingDirectoryIsSortedAndValidated) {
  const auto dir = scratch("dir");
  DatasetConfig d;
  d.trials = 2;
  d.subjects = 2;
  auto recs = synth_sine_vs_surrogate(d, 4);
  for (auto it = recs.rbegin(); it != recs.rend(); ++it) write_recording(dir / (it->subject + "__" + it->trial), *it);
  const auto back = load_recording_dir(dir);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].subject, recs[i].subject);
    EXPECT_EQ(back[i].trial, recs[i].trial);
  }
  EXPECT_THROW(load_recording_dir(dir / "missing"), DataError);
  const auto empty = scratch("empty");
  EXPECT_THROW(load_recording_dir(empty), DataError);
}

// ---------------------------------------------------------------------------
// Feature helpers

TEST(FeatureHelpers, QuantileInterpolates) {
  EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_EQ(quantile({5, 1, 4, 2, 3}, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.95), 9.5);
  EXPECT_EQ(quantile({7}, 0.3), 7.0);
}

TEST(FeatureHelpers, ParallelForRethrowsLowestIndexFailure) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7) throw DataError("seven");
      if (i == 31) throw ResourceError("thirty-one");
    });
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "seven");
  }
}

TEST(FeatureHelpers, WithContextKeepsCategory) {
  EXPECT_THROW(with_context("unit", [] { throw ResourceError("cap"); }), ResourceError);
  try {
    with_context("subject s01, trial t1, channel c3", []() -> int { throw DegenerateInputError("flat"); });
  } catch (const DegenerateInputError& e) {
    EXPECT_NE(std::string(e.what()).find("channel c3"), std::string::npos);
  }
}

TEST(FeatureHelpers, MissingChannelNamesTheUnit) {
  Recording r;
  r.subject = "s03";
  r.trial = "t0009";
  r.channels = {"Fz"};
  try {
    channel_index(r, "Pz");
    FAIL();
  } catch (const DataError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("s03"), std::string::npos);
    EXPECT_NE(m.find("t0009"), std::string::npos);
    EXPECT_NE(m.find("Pz"), std::string::npos);
  }
}

TEST(FeatureHelpers, SegmentLandscapeWithZeroScaleIsZero) {
  PersistenceDiagram dg;
  dg.pairs(0).push_back({0, 0.0, 1.0, false});
  EXPECT_EQ(segment_landscape(dg, 50, 0.0), std::vector<double>(50, 0.0));
  EXPECT_EQ(segment_landscape(dg, 50, 2.0).size(), 50u);
}

TEST(FeatureHelpers, CacheKeyDependsOnSettingsDataAndScale) {
  DatasetConfig d;
  d.trials = 1;
  const auto recs = synth_sine_vs_surrogate(d, 5);
  FeatureSettings s;
  s.channels = {"ch1"};
  const auto k0 = cache_key(s, recs[0], {{1.0, 1.0, 1.0, 1.0}});
  EXPECT_EQ(k0, cache_key(s, recs[0], {{1.0, 1.0, 1.0, 1.0}}));
  EXPECT_NE(k0, cache_key(s, recs[1], {{1.0, 1.0, 1.0, 1.0}}));
  EXPECT_NE(k0, cache_key(s, recs[0], {{1.0, 1.0, 1.0, 2.0}}));
  auto s2 = s;
  s2.grid = 40;
  EXPECT_NE(k0, cache_key(s2, recs[0], {{1.0, 1.0, 1.0, 1.0}}));
}

// ---------------------------------------------------------------------------
// Runs

TEST(Run, FeatureLengthsFollowBandsAndChannels) {
  auto c = small_config();
  c.dataset.channels = 3;
  c.dataset.trials = 3;
  c.bands = {Band::alpha};
  const auto m = extract_feature_matrix(c);
  EXPECT_EQ(m.cols, 50u * 3u);
  EXPECT_EQ(m.rows, 6u * 2u);  // 6 recordings x 2 half-second segments
  EXPECT_EQ(m.meta.at("layout"), "channel,band,grid");
  const auto ex = examples_from_matrix(m);
  EXPECT_EQ(ex.size(), m.rows);
  EXPECT_EQ(ex.front().features.size(), 150u);
}

TEST(Run, SingleChannelExperimentUses200Features) {
  auto c = small_config();
  c.kind = ExperimentKind::exp4;
  c.dataset.channels = 3;
  c.dataset.trials = 6;
  const auto r = run_experiment(c);
  const auto& rep = r.report;
  EXPECT_EQ(rep["table"]["rows"].size(), 3u);
  EXPECT_EQ(rep["table"]["rows"][0]["name"], "ch1");
  for (const auto& e : rep["evaluations"]) EXPECT_EQ(e["feature_length"], 200);
}

TEST(Run, BandSubsetColumnsAndLengths) {
  auto c = small_config();
  c.kind = ExperimentKind::exp2;
  c.dataset.channels = 2;
  c.dataset.trials = 6;
  const auto r = run_experiment(c);
  const auto cols = column_names(r.report);
  EXPECT_EQ(cols.size(), 5u);
  for (const auto& e : r.report["evaluations"]) {
    const auto col = e["column"].get<std::string>();
    EXPECT_EQ(e["feature_length"], col.find("all") != std::string::npos ? 400 : 100) << col;
  }
}

TEST(Run, DeterministicAcrossRepeatsAndWorkerCounts) {
  auto c = small_config();
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  c.workers = 1;
  const auto d = run_experiment(c);
  EXPECT_EQ(a.report.dump(2), b.report.dump(2));
  EXPECT_EQ(a.tables_text, b.tables_text);
  auto ja = a.report, jd = d.report;
  ja["config"]["experiment"].erase("workers");
  jd["config"]["experiment"].erase("workers");
  EXPECT_EQ(ja.dump(), jd.dump());
}

TEST(Run, FeatureCacheResumesIdentically) {
  const auto dir = scratch("cache");
  auto c = small_config();
  const auto fresh = run_experiment(c);
  c.cache_dir = (dir / "features").string();
  const auto first = run_experiment(c);
  const auto second = run_experiment(c);
  EXPECT_EQ(first.timings["feature_cache_hits"], 0);
  EXPECT_EQ(second.timings["feature_cache_hits"], 16);
  auto strip = [](Json j) {
    j["config"]["experiment"].erase("cache_dir");
    return j.dump();
  };
  EXPECT_EQ(strip(first.report), strip(second.report));
  EXPECT_EQ(strip(first.report), strip(fresh.report));
  // a partial file left behind by an interrupted writer is ignored
  for (const auto& e : fs::directory_iterator(dir / "features"))
    if (e.path().extension() == ".f32") {
      fs::resize_file(e.path(), 4);
      break;
    }
  EXPECT_EQ(strip(run_experiment(c).report), strip(first.report));
}

TEST(Run, ReportEmbedsConfigThatReplays) {
  auto c = small_config();
  const auto a = run_experiment(c);
  const auto replay = config_from_json(a.report["config"]);
  EXPECT_EQ(config_entries(replay), config_entries(c));
  EXPECT_EQ(run_experiment(replay).report.dump(), a.report.dump());
}

TEST(Run, StageTimingsCoverTotal) {
  const auto r = run_experiment(small_config());
  const double sum = r.timings["stage_sum_s"], total = r.timings["total_wall_s"];
  EXPECT_GT(total, 0.0);
  EXPECT_LE(std::abs(total - sum), 0.05 * total);
}

TEST(Run, WriteRunProducesThreeFiles) {
  const auto dir = scratch("write");
  const auto r = run_experiment(small_config());
  write_run(dir, r);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "tables.txt"));
  EXPECT_TRUE(fs::exists(dir / "timings.json"));
  EXPECT_EQ(read_json(dir / "report.json").dump(), r.report.dump());
}

TEST(Run, MissingChannelIsADataError) {
  auto c = small_config();
  c.channels = {"ch9"};
  try {
    run_experiment(c);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ch9"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("s01"), std::string::npos);
  }
}

TEST(Run, SimplexCapIsAResourceError) {
  auto c = small_config();
  c.simplex_cap = 100;
  EXPECT_THROW(run_experiment(c), ResourceError);
}

TEST(Run, ClassifierSweepAndMetricsTables) {
  auto c = small_config();
  c.kind = ExperimentKind::exp1;
  const auto r1 = run_experiment(c);
  EXPECT_EQ(column_names(r1.report), (std::set<std::string>{"GNB(%)", "kNN(%)", "RF(%)"}));
  c.kind = ExperimentKind::exp5;
  const auto r5 = run_experiment(c);
  EXPECT_EQ(column_names(r5.report), (std::set<std::string>{"Accuracy(%)", "Precision(%)", "Recall(%)", "F1-Score(%)"}));
  c.kind = ExperimentKind::exp3;
  c.window_sweep = {{0.5, 0.0}, {1.0, 0.25}};
  const auto r3 = run_experiment(c);
  EXPECT_EQ(r3.report["table"]["columns"].size(), 2u);
}

TEST(Run, BaselinesTableHasDescriptorRows) {
  auto c = small_config();
  c.kind = ExperimentKind::baselines;
  c.descriptors = {Descriptor::sample_entropy, Descriptor::poincare};
  const auto r = run_experiment(c);
  const auto& rows = r.report["table"]["rows"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2]["name"], "Topological landscapes");
}

// ---------------------------------------------------------------------------
// Plot data

TEST(PlotData, BarcodeOfTwoPoints) {
  const auto dg = rips_persistence(PointCloud(1, {0, 1}), HomologyDims{0, 1, 2});
  const auto text = barcode_tsv(dg);
  EXPECT_EQ(text.substr(0, text.find('\n')), "bar\tdim\tbirth\tdeath\tessential");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("\n0\t0\t"), std::string::npos);
  EXPECT_NE(text.find("\n1\t0\t"), std::string::npos);
}

TEST(PlotData, EmptyDiagramIsHeaderOnly) {
  EXPECT_EQ(diagram_tsv(PersistenceDiagram{}), "dim\tbirth\tdeath\tessential\n");
  EXPECT_EQ(barcode_tsv(PersistenceDiagram{}), "bar\tdim\tbirth\tdeath\tessential\n");
}

TEST(PlotData, LandscapeRowsEqualGrid) {
  PersistenceDiagram dg;
  dg.pairs(1).push_back({1, 0.5, 1.5, false});
  for (std::size_t g : {2u, 50u, 17u}) {
    const auto text = landscape_tsv(landscape(dg, 1, 1, g, 2.0));
    EXPECT_EQ(std::size_t(std::count(text.begin(), text.end(), '\n')), g + 1);
    EXPECT_EQ(text.substr(0, 8), "t\tvalue\n");
  }
}

TEST(PlotData, CurveHeadersAndOrdering) {
  LagSelection a{2, {0.5, 0.2, 0.3}};
  EXPECT_EQ(ami_tsv(a), "lag\tami\n1\t0.5\n2\t0.2\n3\t0.3\n");
  DimensionSelection f{2, {0.9, 0.01}};
  EXPECT_EQ(fnn_tsv(f), "dim\tfnn_fraction\n1\t0.9\n2\t0.01\n");
  PersistenceDiagram dg;
  dg.pairs(1).push_back({1, 2.0, 3.0, false});
  dg.pairs(0).push_back({0, 0.0, 2.0, false});
  dg.pairs(0).push_back({0, 0.0, 1.0, false});
  EXPECT_EQ(diagram_tsv(dg), "dim\tbirth\tdeath\tessential\n0\t0\t1\t0\n0\t0\t2\t0\n1\t2\t3\t0\n");
  EXPECT_EQ(parse_plot_kind("fnn"), PlotKind::fnn);
  EXPECT_THROW(parse_plot_kind("heatmap"), ParameterError);
}

TEST(Report, TableRendering) {
  ResultTable t;
  t.title = "T";
  t.row_header = "Task";
  t.columns = {"RF(%)", "kNN(%)"};
  t.rows = {"LV/HV"};
  t.resize();
  t.cells[0][0] = aggregate({0.9, 1.0});
  const auto text = render_table(t);
  EXPECT_NE(text.find("95.00/5.00"), std::string::npos);
  EXPECT_NE(text.find(" -"), std::string::npos);
  const auto j = table_to_json(t);
  EXPECT_TRUE(j["rows"][0]["cells"][1].is_null());
  EXPECT_EQ(j["rows"][0]["cells"][0]["subjects"], 2);
}
