#pragma once

// Recording sets: loaded from a directory of matrix files or generated.
//
// Label sources live in each recording's sidecar: `label` (integer class
// id) and/or `valence`, `arousal`, `dominance` (rating scores).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/labels.hpp"
#include "topoeeg/matrix_io.hpp"
#include "topoeeg/pipeline/config.hpp"
#include "topoeeg/random.hpp"
#include "topoeeg/signals.hpp"
#include "topoeeg/text.hpp"

namespace topoeeg {

using RecordingSet = std::vector<Recording>;

/// Every `<stem>.meta` in `dir` whose sidecar declares kind = recording,
/// ordered by (subject, trial, file name).
inline RecordingSet load_recording_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> stems;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".meta") continue;
    const auto kv = read_sidecar(entry.path());
    const auto it = kv.find("kind");
    if (it != kv.end() && it->second == "recording") stems.push_back(matrix_stem(entry.path()));
  }
  std::sort(stems.begin(), stems.end());
  RecordingSet out;
  for (const auto& s : stems) {
    try {
      out.push_back(read_recording(s));
    } catch (const DataError& e) {
      throw DataError(s.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError("no recordings found in " + dir.string());
  std::stable_sort(out.begin(), out.end(), [](const Recording& a, const Recording& b) {
    return std::tie(a.subject, a.trial) < std::tie(b.subject, b.trial);
  });
  return out;
}

inline std::string subject_id(std::size_t s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02zu", s + 1);
  return buf;
}

// ---------------------------------------------------------------------------
// Synthetic sets

namespace detail {

/// Real series of length n with the given one-sided magnitude spectrum
/// (bins 0..n/2) and uniformly random phases; DC is dropped.
inline std::vector<double> random_phase_series(const std::vector<double>& magnitude, std::size_t n, std::uint64_t seed) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec(n, {0.0, 0.0});
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) {
    spec[k] = std::polar(magnitude[k], phase(rng));
    spec[n - k] = std::conj(spec[k]);
  }
  if (n % 2 == 0) spec[n / 2] = {magnitude[n / 2], 0.0};
  std::vector<double> out;
  fft.inv(out, spec);
  out.resize(n);
  return out;
}

}  // namespace detail

/// Two classes per subject. Class 0 is a noisy sine with a random frequency
/// in [8, 12] Hz and random phase. Class 1 is spectrally matched
/// phase-randomized noise: random phases on the mean magnitude spectrum of
/// the subject's class-0 trials (per channel). One recording per trial and
/// class.
inline RecordingSet synth_sine_vs_surrogate(const DatasetConfig& d, std::uint64_t seed) {
  const auto n = round_half_up(d.trial_seconds * d.rate_hz);
  if (n < 2) throw ParameterError("synth: trial shorter than two samples");
  RecordingSet out;
  Eigen::FFT<double> fft;
  for (std::size_t s = 0; s < d.subjects; ++s) {
    // sines[t][ch]
    std::vector<std::vector<std::vector<double>>> sines(d.trials);
    std::vector<std::vector<double>> mean_mag(d.channels, std::vector<double>(n / 2 + 1, 0.0));
    for (std::size_t t = 0; t < d.trials; ++t) {
      for (std::size_t ch = 0; ch < d.channels; ++ch) {
        const auto base = derive_seed(seed, 0x5157u, s, t, ch);
        Rng rng(base);
        std::uniform_real_distribution<double> freq(8.0, 12.0), phase(0.0, 2.0 * std::numbers::pi);
        SynthParams p;
        p.rate_hz = d.rate_hz;
        p.length = n;
        p.noise_sd = d.noise_sd;
        p.frequency_hz = freq(rng);
        p.phase = phase(rng);
        const auto ts = synth(SynthKind::noisy_sine, p, derive_seed(base, 1u));
        std::vector<double> x(ts.samples().begin(), ts.samples().end());
        std::vector<std::complex<double>> spec;
        fft.fwd(spec, x);
        for (std::size_t k = 0; k <= n / 2; ++k) mean_mag[ch][k] += std::abs(spec[k]) / double(d.trials);
        sines[t].push_back(std::move(x));
      }
    }
    for (std::size_t t = 0; t < d.trials; ++t) {
      for (int cls = 0; cls < 2; ++cls) {
        Recording r;
        r.rate_hz = d.rate_hz;
        r.subject = subject_id(s);
        char trial[32];
        std::snprintf(trial, sizeof trial, "t%04zu_c%d", t, cls);
        r.trial = trial;
        r.extra["label"] = std::to_string(cls);
        for (std::size_t ch = 0; ch < d.channels; ++ch) {
          const auto v = cls == 0 ? sines[t][ch]
                                  : detail::random_phase_series(mean_mag[ch], n, derive_seed(seed, 0x5158u, s, t, ch));
          r.channels.push_back("ch" + std::to_string(ch + 1));
          r.data.emplace_back(v.begin(), v.end());
        }
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

/// Stand-in for a rated affect dataset: each trial draws valence, arousal
/// and dominance scores uniformly in [1, 9]; a high score raises the
/// amplitude of one rhythm (valence: alpha, arousal: beta, dominance: theta)
/// in every channel on top of Gaussian background noise.
inline RecordingSet synth_affect(const DatasetConfig& d, std::uint64_t seed, double threshold) {
  const auto n = round_half_up(d.trial_seconds * d.rate_hz);
  if (n < 2) throw ParameterError("synth: trial shorter than two samples");
  RecordingSet out;
  for (std::size_t s = 0; s < d.subjects; ++s) {
    for (std::size_t t = 0; t < d.trials; ++t) {
      Rng rng(derive_seed(seed, 0xaffu, s, t));
      std::uniform_real_distribution<double> score(1.0, 9.0);
      const double valence = score(rng), arousal = score(rng), dominance = score(rng);
      Recording r;
      r.rate_hz = d.rate_hz;
      r.subject = subject_id(s);
      char trial[32];
      std::snprintf(trial, sizeof trial, "t%04zu", t);
      r.trial = trial;
      r.extra["valence"] = format_double(valence);
      r.extra["arousal"] = format_double(arousal);
      r.extra["dominance"] = format_double(dominance);
      const double amp_theta = dominance > threshold ? 2.0 : 0.5;
      const double amp_alpha = valence > threshold ? 2.0 : 0.5;
      const double amp_beta = arousal > threshold ? 2.0 : 0.5;
      for (std::size_t ch = 0; ch < d.channels; ++ch) {
        Rng crng(derive_seed(seed, 0xaffu, s, t, ch + 1));
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        std::normal_distribution<double> noise(0.0, d.noise_sd);
        const double p1 = phase(crng), p2 = phase(crng), p3 = phase(crng), p4 = phase(crng);
        std::vector<float> row(n);
        for (std::size_t k = 0; k < n; ++k) {
          const double tt = double(k) / d.rate_hz;
          const double v = amp_theta * std::sin(2 * std::numbers::pi * 6.0 * tt + p1) +
                           amp_alpha * std::sin(2 * std::numbers::pi * 10.5 * tt + p2) +
                           amp_beta * std::sin(2 * std::numbers::pi * 21.0 * tt + p3) +
                           0.3 * std::sin(2 * std::numbers::pi * 38.0 * tt + p4) + noise(crng);
          row[k] = float(v);
        }
        r.channels.push_back("ch" + std::to_string(ch + 1));
        r.data.push_back(std::move(row));
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline RecordingSet load_dataset(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.dataset.source == "dir") return load_recording_dir(c.dataset.path);
  if (c.dataset.synth_task == "affect") return synth_affect(c.dataset, derive_seed(seed, 0xda7au), c.label_threshold);
  return synth_sine_vs_surrogate(c.dataset, derive_seed(seed, 0xda7au));
}

// ---------------------------------------------------------------------------
// Tasks and labels

struct TaskInfo {
  std::string name;     // config spelling
  std::string display;  // table row / column label
  int classes = 2;
  std::vector<std::string> class_names;
};

inline TaskInfo task_info(const std::string& task) {
  if (task == "label") return {task, "label", 0, {}};
  if (task == "arousal") return {task, "LA/HA", 2, {"LA", "HA"}};
  if (task == "valence") return {task, "LV/HV", 2, {"LV", "HV"}};
  if (task == "dominance") return {task, "LD/HD", 2, {"LD", "HD"}};
  if (task == "4class") {
    TaskInfo t{task, "4-Class", 4, {}};
    for (int i = 0; i < 4; ++i) t.class_names.push_back(composite_name(i, "AV"));
    return t;
  }
  if (task == "8class") {
    TaskInfo t{task, "8-Class", 8, {}};
    for (int i = 0; i < 8; ++i) t.class_names.push_back(composite_name(i, "VAD"));
    return t;
  }
  throw ConfigError("unknown task '" + task + "'");
}

/// Class id of one recording under a task.
inline int recording_label(const Recording& r, const std::string& task, double threshold) {
  auto score = [&](const char* key) {
    const auto it = r.extra.find(key);
    if (it == r.extra.end())
      throw DataError("recording " + r.subject + "/" + r.trial + " has no '" + key + "' score for task " + task);
    return parse_double(it->second, key);
  };
  if (task == "label") {
    const auto it = r.extra.find("label");
    if (it == r.extra.end()) throw DataError("recording " + r.subject + "/" + r.trial + " has no 'label' entry");
    return int(parse_size(it->second, "label"));
  }
  if (task == "arousal") return composite_label(std::vector<double>{score("arousal")}, threshold);
  if (task == "valence") return composite_label(std::vector<double>{score("valence")}, threshold);
  if (task == "dominance") return composite_label(std::vector<double>{score("dominance")}, threshold);
  if (task == "4class") return composite_label(std::vector<double>{score("arousal"), score("valence")}, threshold);
  if (task == "8class")
    return composite_label(std::vector<double>{score("valence"), score("arousal"), score("dominance")}, threshold);
  throw ConfigError("unknown task '" + task + "'");
}

}  // namespace topoeeg
