#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "topoeeg/cli.hpp"

using namespace topoeeg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("topoeeg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::size_t lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

// Tiny run: 8 recordings of two half-second segments each.
const std::vector<std::string> kTiny{"--set", "dataset.trials=4",       "--set", "signals.window_s=0.5",
                                     "--set", "signals.overlap=0",      "--set", "classifier.trees=10",
                                     "--set", "evaluation.folds=2",     "--workers", "1"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

// Restores the working directory on scope exit.
struct CwdGuard {
  fs::path saved = fs::current_path();
  ~CwdGuard() { fs::current_path(saved); }
};

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  EXPECT_EQ(cli({"run", "--help"}).code, kExitOk);
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(cli({"ph", "--points", "x.csv"}).code, kExitConfig);  // --out missing
  EXPECT_EQ(cli({"ph", "--points", "x.csv", "--out", "y", "--max-dim", "3"}).code, kExitConfig);
}

TEST(Cli, RunRequiresSeed) {
  const auto r = cli(with_tiny({"run", "--output", (scratch("noseed") / "o").string()}));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = scratch("cfg");
  EXPECT_EQ(cli({"run", "--seed", "1", "--set", "signals.nope=1"}).code, kExitConfig);
  EXPECT_EQ(cli({"run", "--seed", "1", "--config", (dir / "missing.ini").string()}).code, kExitConfig);
  spit(dir / "bad.ini", "[signals]\noverlap = 1.5\n");
  EXPECT_EQ(cli({"run", "--seed", "1", "--config", (dir / "bad.ini").string()}).code, kExitConfig);
  EXPECT_EQ(cli({"run", "--seed", "1", "--config", (dir / "bad.ini").string(), "--from-report", "r.json"}).code,
            kExitConfig);
}

TEST(Cli, MissingInputExitsThree) {
  const auto dir = scratch("missing");
  const auto r = cli({"ph", "--points", (dir / "none.csv").string(), "--out", (dir / "o.tsv").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(cli({"landscape", "--diagram", (dir / "none.tsv").string(), "--out", (dir / "l.tsv").string()}).code,
            kExitData);
}

TEST(Cli, SimplexCapExitsFour) {
  const auto dir = scratch("cap");
  std::string pts;
  for (int i = 0; i < 12; ++i) pts += std::to_string(std::cos(i * 0.5)) + "," + std::to_string(std::sin(i * 0.5)) + "\n";
  spit(dir / "p.csv", pts);
  const auto r = cli({"ph", "--points", (dir / "p.csv").string(), "--out", (dir / "o.tsv").string(), "--simplex-cap",
                      "20"});
  EXPECT_EQ(r.code, kExitResource);
}

TEST(Cli, PhThenLandscape) {
  const auto dir = scratch("ph");
  spit(dir / "square.csv", "0,0\n1,0\n1,1\n0,1\n");
  ASSERT_EQ(cli({"ph", "--points", (dir / "square.csv").string(), "--out", (dir / "dg.tsv").string(), "--threshold",
                 "2"})
                .code,
            kExitOk);
  const auto dg = slurp(dir / "dg.tsv");
  EXPECT_EQ(dg.substr(0, dg.find('\n')), "dim\tbirth\tdeath\tessential");
  EXPECT_NE(dg.find("1\t1\t1.4142135623730951\t0\n"), std::string::npos);
  ASSERT_EQ(cli({"landscape", "--diagram", (dir / "dg.tsv").string(), "--out", (dir / "l.tsv").string(), "--grid", "9",
                 "--t-max", "2"})
                .code,
            kExitOk);
  const auto L = slurp(dir / "l.tsv");
  EXPECT_EQ(lines(L), 10u);
  EXPECT_EQ(L.substr(0, 8), "t\tvalue\n");
}

TEST(Cli, EmitPlotData) {
  const auto dir = scratch("plot");
  spit(dir / "two.csv", "0\n1\n");
  ASSERT_EQ(cli({"emit-plotdata", "--kind", "barcode", "--input", (dir / "two.csv").string(), "--out",
                 (dir / "bar.tsv").string()})
                .code,
            kExitOk);
  EXPECT_EQ(lines(slurp(dir / "bar.tsv")), 3u);
  spit(dir / "empty.tsv", "dim\tbirth\tdeath\tessential\n");
  ASSERT_EQ(cli({"emit-plotdata", "--kind", "diagram", "--input", (dir / "empty.tsv").string(), "--out",
                 (dir / "d.tsv").string()})
                .code,
            kExitOk);
  EXPECT_EQ(slurp(dir / "d.tsv"), "dim\tbirth\tdeath\tessential\n");
  ASSERT_EQ(cli({"emit-plotdata", "--kind", "landscape", "--input", (dir / "two.csv").string(), "--out",
                 (dir / "l.tsv").string(), "--dim", "0", "--grid", "25"})
                .code,
            kExitOk);
  EXPECT_EQ(lines(slurp(dir / "l.tsv")), 26u);
  EXPECT_EQ(cli({"emit-plotdata", "--kind", "heatmap", "--input", (dir / "two.csv").string(), "--out",
                 (dir / "h.tsv").string()})
                .code,
            kExitConfig);
}

TEST(Cli, SynthIngestAndEmbedDiag) {
  const auto dir = scratch("synth");
  const auto stem = (dir / "sine").string();
  auto r = cli({"synth", "--kind", "sine", "--freq", "4", "--rate", "256", "--length", "2048", "--seed", "3", "--out",
                stem, "--meta", "label=1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rec = read_recording(stem);
  EXPECT_EQ(rec.samples(), 2048u);
  EXPECT_EQ(rec.extra.at("label"), "1");

  r = cli({"embed-diag", "--input", stem, "--max-lag", "40", "--max-dim", "6", "--ami-out",
           (dir / "ami.tsv").string(), "--fnn-out", (dir / "fnn.tsv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("lag ", 0), 0u);
  EXPECT_EQ(lines(slurp(dir / "ami.tsv")), 41u);
  EXPECT_EQ(lines(slurp(dir / "fnn.tsv")), 7u);
  const auto series = cli_detail::read_series(stem, "");
  const auto sel = ami_lag(series, 40);
  EXPECT_EQ(slurp(dir / "ami.tsv"), ami_tsv(sel));
  EXPECT_EQ(slurp(dir / "fnn.tsv"), fnn_tsv(fnn_dim(series, sel.lag, 6)));
  EXPECT_EQ(r.out, "lag " + std::to_string(sel.lag) + "\ndim " + std::to_string(fnn_dim(series, sel.lag, 6).dim) + "\n");

  spit(dir / "rec.csv", "idx,Fz,Cz\n0,1.5,2\n1,2.5,3\n2,3.5,4\n");
  r = cli({"ingest", "--csv", (dir / "rec.csv").string(), "--rate", "128", "--out", (dir / "rec").string(), "--subject",
           "s07", "--meta", "valence=6.5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ing = read_recording(dir / "rec");
  EXPECT_EQ(ing.channels, (std::vector<std::string>{"Fz", "Cz"}));
  EXPECT_EQ(ing.subject, "s07");
  EXPECT_EQ(ing.extra.at("valence"), "6.5");
  EXPECT_EQ(ing.data[1], (std::vector<float>{2, 3, 4}));
  spit(dir / "ragged.csv", "idx,Fz\n0,1\n1\n");
  EXPECT_EQ(cli({"ingest", "--csv", (dir / "ragged.csv").string(), "--rate", "128", "--out", (dir / "x").string()}).code,
            kExitData);
}

TEST(Cli, SynthDatasetDirFeedsRun) {
  const auto dir = scratch("dataset");
  auto r = cli({"synth", "--dataset-dir", (dir / "recs").string(), "--seed", "2", "--set", "dataset.trials=4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::distance(fs::directory_iterator(dir / "recs"), fs::directory_iterator{}), 16);
  r = cli(with_tiny({"run", "--seed", "2", "--output", (dir / "out").string(), "--set", "dataset.source=dir", "--set",
                     "dataset.path=" + (dir / "recs").string()}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
  r = cli(with_tiny({"run", "--seed", "2", "--output", (dir / "out2").string(), "--set", "dataset.source=dir", "--set",
                     "dataset.path=" + (dir / "recs").string(), "--set", "signals.channels=Oz"}));
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("Oz"), std::string::npos);
}

TEST(Cli, ExtractTrainEval) {
  const auto dir = scratch("learn");
  const auto feats = (dir / "feats").string();
  auto r = cli(with_tiny({"extract", "--seed", "4", "--out", feats}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto m = read_matrix(feats);
  EXPECT_EQ(m.rows, 16u);
  EXPECT_EQ(m.cols, 200u);

  r = cli({"train", "--features", feats, "--out", (dir / "model.json").string(), "--seed", "4", "--trees", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = cli({"eval", "--features", feats, "--model", (dir / "model.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto scored = nlohmann::json::parse(r.out);
  EXPECT_EQ(scored["examples"], 16);
  EXPECT_EQ(scored["classifier"], "rf");

  r = cli({"eval", "--features", feats, "--classifier", "knn", "--protocol", "10fold_cv_all", "--folds", "4", "--seed",
           "4", "--report", (dir / "eval.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = read_json(dir / "eval.json");
  EXPECT_EQ(j["fold_accuracies"].size(), 4u);
  EXPECT_EQ(cli({"eval", "--features", feats}).code, kExitConfig);  // protocol needs a seed
  EXPECT_EQ(cli({"train", "--features", feats, "--out", (dir / "m2").string(), "--seed", "1", "--classifier", "svm"}).code,
            kExitConfig);
}

TEST(Cli, RunWritesOutputsAndReplaysByteIdentically) {
  CwdGuard guard;
  const auto a = scratch("replay_a"), b = scratch("replay_b");
  fs::current_path(a);
  auto r = cli(with_tiny({"run", "--seed", "9", "--output", "res"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("report written to res/report.json"), std::string::npos);
  for (const char* f : {"report.json", "tables.txt", "timings.json"}) EXPECT_TRUE(fs::exists(a / "res" / f)) << f;
  const auto timings = read_json(a / "res" / "timings.json");
  EXPECT_TRUE(timings.contains("stages"));
  EXPECT_TRUE(timings.contains("total_wall_s"));

  fs::current_path(b);
  r = cli({"run", "--from-report", (a / "res" / "report.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(slurp(b / "res" / "report.json"), slurp(a / "res" / "report.json"));
  EXPECT_EQ(slurp(b / "res" / "tables.txt"), slurp(a / "res" / "tables.txt"));
}

TEST(Cli, ConfigFileWithOverrides) {
  const auto dir = scratch("ini");
  spit(dir / "c.ini",
       "[experiment]\nkind = exp2\nseed = 99\n\n[dataset]\ntrials = 4\n\n[signals]\nwindow_s = 0.5\noverlap = 0\n"
       "bands = alpha,beta\n\n[classifier]\ntrees = 10\n\n[evaluation]\nfolds = 2\n");
  const auto r = cli({"run", "--config", (dir / "c.ini").string(), "--seed", "6", "--output", (dir / "o").string(),
                      "--set", "signals.bands=theta"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(cli({"run", "--config", (dir / "c.ini").string()}).code, kExitConfig);  // --seed is mandatory
  const auto rep = read_json(dir / "o" / "report.json");
  EXPECT_EQ(rep["experiment"], "exp2");
  EXPECT_EQ(rep["seed"], 6);
  EXPECT_EQ(rep["table"]["columns"].size(), 2u);  // theta-band and all bands
}
