#pragma once

// Per-recording feature extraction: band-pass -> segment -> delay embedding
// -> Rips persistence -> landscapes, plus the descriptor baselines on the
// same segments. Work is split into (recording, channel) units and fanned
// out to a worker pool; results are stored by unit index so output order
// never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "topoeeg/baselines.hpp"
#include "topoeeg/embedding.hpp"
#include "topoeeg/errors.hpp"
#include "topoeeg/homology.hpp"
#include "topoeeg/landscapes.hpp"
#include "topoeeg/matrix_io.hpp"
#include "topoeeg/random.hpp"
#include "topoeeg/signals.hpp"
#include "topoeeg/text.hpp"

namespace topoeeg {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. If any call
/// throws, the exception of the lowest failing index is rethrown.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Rethrows a library error with a location prefix, keeping its category.
template <typename F>
auto with_context(const std::string& where, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ResourceError& e) {
    throw ResourceError(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(where + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ParameterError(where + ": " + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

struct FeatureSettings {
  BandTable table;
  std::vector<Band> bands{kRhythmBands.begin(), kRhythmBands.end()};
  std::vector<std::string> channels;
  double window_s = 1.0;
  double overlap = 0.25;
  bool zscore = false;
  EmbeddingParams embedding{};
  std::optional<double> threshold;  // empty = enclosing radius per segment
  std::size_t simplex_cap = kDefaultSimplexCap;
  std::size_t grid = kDefaultGridPoints;

  /// Canonical text of every setting that changes feature values.
  std::string fingerprint() const {
    std::string s = "v1|bands=";
    for (Band b : bands)
      s += std::string(band_name(b)) + ":" + format_double(table[b].lo_hz) + "-" + format_double(table[b].hi_hz) + ";";
    s += "|channels=" + join(channels, ",");
    s += "|window=" + format_double(window_s) + "|overlap=" + format_double(overlap);
    s += "|zscore=" + std::to_string(int(zscore));
    s += "|embed=" + std::to_string(embedding.dim) + "x" + std::to_string(embedding.lag);
    s += "|threshold=" + (threshold ? format_double(*threshold) : std::string("enclosing"));
    s += "|cap=" + std::to_string(simplex_cap) + "|grid=" + std::to_string(grid);
    return s;
  }
};

inline std::size_t channel_index(const Recording& r, const std::string& name) {
  const auto it = std::find(r.channels.begin(), r.channels.end(), name);
  if (it == r.channels.end())
    throw DataError("subject " + r.subject + ", trial " + r.trial + ": missing channel " + name);
  return std::size_t(it - r.channels.begin());
}

inline std::string unit_location(const Recording& r, const std::string& channel) {
  return "subject " + r.subject + ", trial " + r.trial + ", channel " + channel;
}

/// Band-filtered, segmented signal of one channel.
inline std::vector<Segment> band_segments(const Recording& rec, std::size_t ch, Band band, const FeatureSettings& s) {
  if (rec.rate_hz < kMinDecomposeRate) throw ParameterError("band decomposition needs a sampling rate >= 100 Hz");
  const auto filtered = bandpass(rec.channel_series(ch), s.table[band].lo_hz, s.table[band].hi_hz);
  auto segs = segment(filtered, s.window_s, s.overlap, band);
  if (s.zscore)
    for (auto& sg : segs) zscore_inplace(sg.samples);
  return segs;
}

inline std::size_t segment_count(const Recording& rec, const FeatureSettings& s) {
  return segment_layout(rec.samples(), rec.rate_hz, s.window_s, s.overlap).count;
}

/// CPU seconds per stage, summed over work units.
struct StageClock {
  double filter = 0, embed = 0, persistence = 0, landscape = 0, descriptors = 0;

  StageClock& operator+=(const StageClock& o) {
    filter += o.filter;
    embed += o.embed;
    persistence += o.persistence;
    landscape += o.landscape;
    descriptors += o.descriptors;
    return *this;
  }
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto t = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t - t0_).count();
    t0_ = t;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

/// Filtration thresholds of every segment of one channel, per band:
/// result[band position][segment].
inline std::vector<std::vector<double>> channel_thresholds(const Recording& rec, std::size_t ch,
                                                           const FeatureSettings& s, StageClock* clock = nullptr) {
  std::vector<std::vector<double>> out;
  StageClock local;
  detail::Stopwatch sw;
  for (Band b : s.bands) {
    const auto segs = band_segments(rec, ch, b, s);
    local.filter += sw.lap();
    std::vector<double> thr;
    for (const auto& sg : segs) {
      if (s.threshold) {
        thr.push_back(*s.threshold);
        continue;
      }
      thr.push_back(enclosing_radius(distance_matrix(delay_embed(sg, s.embedding))));
    }
    local.embed += sw.lap();
    out.push_back(std::move(thr));
  }
  if (clock) *clock += local;
  return out;
}

/// Landscape features of one band segment; t_max <= 0 yields zeros.
inline std::vector<double> segment_landscape(const PersistenceDiagram& dg, std::size_t grid, double t_max) {
  if (!(t_max > 0.0)) return std::vector<double>(grid, 0.0);
  return band_features(dg, grid, t_max);
}

/// Landscape features of one channel: rows = segments, each row holds the
/// bands in order, `grid` values per band. `tmax[b]` is the landscape range
/// for band position b (empty = each segment's own threshold).
inline std::vector<std::vector<double>> channel_landscapes(const Recording& rec, std::size_t ch,
                                                           const FeatureSettings& s,
                                                           const std::vector<double>& tmax,
                                                           StageClock* clock = nullptr) {
  const auto rows = segment_count(rec, s);
  std::vector<std::vector<double>> out(rows, std::vector<double>(s.bands.size() * s.grid, 0.0));
  StageClock local;
  detail::Stopwatch sw;
  const HomologyDims dims{0, 1, 2};
  for (std::size_t bi = 0; bi < s.bands.size(); ++bi) {
    const auto segs = band_segments(rec, ch, s.bands[bi], s);
    local.filter += sw.lap();
    for (std::size_t r = 0; r < segs.size(); ++r) {
      const auto pc = delay_embed(segs[r], s.embedding);
      const auto dm = distance_matrix(pc);
      const double thr = s.threshold ? *s.threshold : enclosing_radius(dm);
      local.embed += sw.lap();
      const auto dg = persistence(build_rips(dm, kMaxSimplexDim, thr, s.simplex_cap), dims);
      local.persistence += sw.lap();
      const double t_max = tmax.empty() ? thr : tmax[bi];
      const auto f = segment_landscape(dg, s.grid, t_max);
      std::copy(f.begin(), f.end(), out[r].begin() + std::ptrdiff_t(bi * s.grid));
      local.landscape += sw.lap();
    }
  }
  if (clock) *clock += local;
  return out;
}

/// Descriptor baseline features of one channel: rows = segments, each row
/// holds the bands in order, `arity(d)` values per band.
inline std::vector<std::vector<double>> channel_descriptors(const Recording& rec, std::size_t ch,
                                                            const FeatureSettings& s, Descriptor d,
                                                            const BaselineParams& bp, StageClock* clock = nullptr) {
  const auto rows = segment_count(rec, s);
  const auto arity = descriptor_arity(d);
  std::vector<std::vector<double>> out(rows, std::vector<double>(s.bands.size() * arity, 0.0));
  StageClock local;
  detail::Stopwatch sw;
  for (std::size_t bi = 0; bi < s.bands.size(); ++bi) {
    const auto segs = band_segments(rec, ch, s.bands[bi], s);
    local.filter += sw.lap();
    for (std::size_t r = 0; r < segs.size(); ++r) {
      const auto v = describe(d, segs[r].samples, bp);
      std::copy(v.begin(), v.end(), out[r].begin() + std::ptrdiff_t(bi * arity));
    }
    local.descriptors += sw.lap();
  }
  if (clock) *clock += local;
  return out;
}

/// Linear-interpolation quantile (q in [0, 1]) of unsorted values.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ParameterError("quantile of an empty set");
  std::sort(v.begin(), v.end());
  const double h = q * double(v.size() - 1);
  const auto lo = std::size_t(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

/// Values are stored as binary32 in feature matrices; every pipeline path
/// rounds through float so cached and fresh features are identical.
inline void quantize(std::vector<double>& row) {
  for (auto& v : row) v = double(float(v));
}

// ---------------------------------------------------------------------------
// Feature cache: one matrix per recording and settings fingerprint.

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t recording_hash(const Recording& rec) {
  std::uint64_t h = fnv1a(rec.subject + "|" + rec.trial + "|" + join(rec.channels, ",") + "|" + format_double(rec.rate_hz));
  for (const auto& row : rec.data)
    for (float v : row) h = mix64(h ^ std::bit_cast<std::uint32_t>(v));
  return h;
}

inline std::string cache_key(const FeatureSettings& s, const Recording& rec,
                             const std::vector<std::vector<double>>& tmax) {
  std::string k = s.fingerprint() + "|data=" + hex64(recording_hash(rec)) + "|tmax=";
  for (const auto& per_channel : tmax) {
    for (double t : per_channel) k += format_double(double(t)) + ",";
    k += ";";
  }
  return k;
}

inline std::filesystem::path cache_stem(const std::filesystem::path& dir, const Recording& rec, const std::string& key) {
  return dir / (rec.subject + "__" + rec.trial + "__" + hex64(fnv1a(key)));
}

/// Loads rows from the cache when a matrix with exactly this key exists.
inline std::optional<std::vector<std::vector<double>>> cache_load(const std::filesystem::path& stem,
                                                                   const std::string& key, std::size_t rows,
                                                                   std::size_t cols) {
  if (!std::filesystem::exists(meta_path(stem)) || !std::filesystem::exists(data_path(stem))) return std::nullopt;
  MatrixFile m;
  try {
    m = read_matrix(stem);
  } catch (const DataError&) {
    return std::nullopt;
  }
  const auto it = m.meta.find("cache_key");
  if (it == m.meta.end() || it->second != key || m.rows != rows || m.cols != cols) return std::nullopt;
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r][c] = double(m.at(r, c));
  return out;
}

inline void cache_store(const std::filesystem::path& stem, const std::string& key,
                        const std::vector<std::vector<double>>& rows, const Recording& rec) {
  MatrixFile m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows.front().size();
  for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
  m.meta["kind"] = "features";
  m.meta["cache_key"] = key;
  m.meta["subject"] = rec.subject;
  m.meta["trial"] = rec.trial;
  // Write to a temporary stem first so an interrupted run never leaves a
  // truncated matrix under the final name.
  auto tmp = stem;
  tmp += ".partial";
  write_matrix(tmp, m);
  std::filesystem::rename(data_path(tmp), data_path(stem));
  std::filesystem::rename(meta_path(tmp), meta_path(stem));
}

}  // namespace topoeeg
