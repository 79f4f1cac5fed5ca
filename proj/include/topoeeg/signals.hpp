#pragma once

// Time series ingestion helpers: zero-phase Butterworth band-pass filtering,
// rhythm-band decomposition, sliding-window segmentation and synthetic
// signal generators.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "topoeeg/errors.hpp"
#include "topoeeg/random.hpp"

namespace topoeeg {

struct SourceTag {
  std::string subject;
  std::string trial;
  std::string channel;

  friend bool operator==(const SourceTag&, const SourceTag&) = default;
};

class TimeSeries {
 public:
  TimeSeries() = default;

  TimeSeries(std::vector<double> samples, double rate_hz, SourceTag meta = {})
      : samples_(std::move(samples)), rate_hz_(rate_hz), meta_(std::move(meta)) {
    if (!(rate_hz_ > 0.0) || !std::isfinite(rate_hz_)) throw ParameterError("time series rate must be positive");
    if (samples_.size() < 2) throw ParameterError("time series must hold at least 2 samples");
    for (double s : samples_)
      if (!std::isfinite(s)) throw ParameterError("time series samples must be finite");
  }

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double rate_hz() const noexcept { return rate_hz_; }
  const SourceTag& meta() const noexcept { return meta_; }
  double operator[](std::size_t i) const noexcept { return samples_[i]; }

 private:
  std::vector<double> samples_;
  double rate_hz_ = 1.0;
  SourceTag meta_;
};

enum class Band : std::uint8_t { theta = 0, alpha = 1, beta = 2, gamma = 3, broadband = 4 };

inline constexpr std::array<Band, 4> kRhythmBands{Band::theta, Band::alpha, Band::beta, Band::gamma};

inline std::string_view band_name(Band b) noexcept {
  switch (b) {
    case Band::theta: return "theta";
    case Band::alpha: return "alpha";
    case Band::beta: return "beta";
    case Band::gamma: return "gamma";
    case Band::broadband: return "broadband";
  }
  return "?";
}

inline Band parse_band(std::string_view s) {
  for (Band b : {Band::theta, Band::alpha, Band::beta, Band::gamma, Band::broadband})
    if (band_name(b) == s) return b;
  throw ParameterError("unknown band '" + std::string(s) + "'");
}

struct BandEdges {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

/// Cutoffs for theta, alpha, beta and gamma (in that order).
struct BandTable {
  std::array<BandEdges, 4> edges{{{4.0, 8.0}, {8.0, 13.0}, {13.0, 30.0}, {30.0, 45.0}}};

  const BandEdges& operator[](Band b) const { return edges.at(static_cast<std::size_t>(b)); }
  BandEdges& operator[](Band b) { return edges.at(static_cast<std::size_t>(b)); }
};

struct BandSet {
  std::array<TimeSeries, 4> bands;

  const TimeSeries& operator[](Band b) const { return bands.at(static_cast<std::size_t>(b)); }
};

struct Segment {
  Band band = Band::broadband;
  std::vector<double> samples;
  std::size_t start_index = 0;
  std::size_t window_len = 0;
  SourceTag meta;
};

// ---------------------------------------------------------------------------
// Filter design

/// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

using SosFilter = std::vector<Biquad>;

inline std::complex<double> frequency_response(const SosFilter& sos, double freq_hz, double rate_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h{1.0, 0.0};
  for (const auto& s : sos) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

/// Digital Butterworth band-pass by bilinear transform of an order-`order`
/// analog low-pass prototype (2*order poles, `order` sections). Unity gain at
/// the geometric centre frequency.
inline SosFilter design_butter_bandpass(double lo_hz, double hi_hz, double rate_hz, int order = 4) {
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < rate_hz / 2.0))
    throw ParameterError("bandpass: cutoffs must satisfy 0 < lo < hi < rate/2");
  if (order < 1 || order % 2 != 0) throw ParameterError("bandpass: prototype order must be even and positive");
  const double fs2 = 2.0 * rate_hz;
  const double w1 = fs2 * std::tan(std::numbers::pi * lo_hz / rate_hz);
  const double w2 = fs2 * std::tan(std::numbers::pi * hi_hz / rate_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  SosFilter sos;
  for (int k = 0; k < order / 2; ++k) {
    // Upper-half-plane prototype pole; its conjugate yields the conjugate pair.
    const auto p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    const auto a = p * (bw / 2.0);
    const auto disc = std::sqrt(a * a - w0sq);
    for (const auto s : {a + disc, a - disc}) {
      const auto z = (fs2 + s) / (fs2 - s);
      sos.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    }
  }
  const double centre = 2.0 * std::atan(std::sqrt(w0sq) / fs2) * rate_hz / (2.0 * std::numbers::pi);
  const double g = std::abs(frequency_response(sos, centre, rate_hz));
  sos.front().b0 /= g;
  sos.front().b2 /= g;
  return sos;
}

/// Butterworth low-pass (order `order`, even), unity DC gain.
inline SosFilter design_butter_lowpass(double cutoff_hz, double rate_hz, int order = 4) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0)) throw ParameterError("lowpass: cutoff must be in (0, rate/2)");
  if (order < 2 || order % 2 != 0) throw ParameterError("lowpass: order must be even and >= 2");
  const double fs2 = 2.0 * rate_hz;
  const double wc = fs2 * std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  SosFilter sos;
  for (int k = 0; k < order / 2; ++k) {
    const auto s = wc * std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
    const auto z = (fs2 + s) / (fs2 - s);
    sos.push_back({1.0, 2.0, 1.0, -2.0 * z.real(), std::norm(z)});
  }
  const double g = std::abs(frequency_response(sos, 0.0, rate_hz));
  for (auto& s : sos) {
    const double per = std::pow(g, 1.0 / double(sos.size()));
    s.b0 /= per;
    s.b1 /= per;
    s.b2 /= per;
  }
  return sos;
}

/// Direct-form II transposed cascade, zero initial state, in place.
inline void sos_filter_inplace(const SosFilter& sos, std::vector<double>& x) {
  for (const auto& s : sos) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

/// Forward-backward application with odd reflection of `padlen` samples on
/// each side. Zero phase; squared magnitude response.
inline std::vector<double> filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n < 2) throw ParameterError("filtfilt: need at least 2 samples");
  padlen = std::min(padlen, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  sos_filter_inplace(sos, ext);
  std::reverse(ext.begin(), ext.end());
  sos_filter_inplace(sos, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + std::ptrdiff_t(padlen), ext.begin() + std::ptrdiff_t(padlen + n)};
}

inline constexpr int kBandpassOrder = 4;

/// Padding used by `bandpass`: three periods of the lower cutoff.
inline std::size_t bandpass_padlen(double lo_hz, double rate_hz) {
  return static_cast<std::size_t>(std::ceil(3.0 * rate_hz / lo_hz));
}

inline TimeSeries bandpass(const TimeSeries& ts, double lo_hz, double hi_hz) {
  const auto sos = design_butter_bandpass(lo_hz, hi_hz, ts.rate_hz(), kBandpassOrder);
  return TimeSeries(filtfilt(sos, ts.samples(), bandpass_padlen(lo_hz, ts.rate_hz())), ts.rate_hz(), ts.meta());
}

inline constexpr double kMinDecomposeRate = 100.0;

inline BandSet band_decompose(const TimeSeries& ts, const BandTable& table = {}) {
  if (ts.rate_hz() < kMinDecomposeRate) throw ParameterError("band_decompose: sampling rate must be >= 100 Hz");
  BandSet out;
  for (Band b : kRhythmBands) out.bands[static_cast<std::size_t>(b)] = bandpass(ts, table[b].lo_hz, table[b].hi_hz);
  return out;
}

/// Integer-factor decimation after a zero-phase anti-alias low-pass at 80% of
/// the new Nyquist frequency.
inline TimeSeries decimate(const TimeSeries& ts, std::size_t factor) {
  if (factor == 0) throw ParameterError("decimate: factor must be >= 1");
  if (factor == 1) return ts;
  const double new_rate = ts.rate_hz() / double(factor);
  const auto sos = design_butter_lowpass(0.8 * new_rate / 2.0, ts.rate_hz(), 8);
  const auto y = filtfilt(sos, ts.samples(), 3 * factor * 9);
  std::vector<double> out;
  for (std::size_t i = 0; i < y.size(); i += factor) out.push_back(y[i]);
  return TimeSeries(std::move(out), new_rate, ts.meta());
}

// ---------------------------------------------------------------------------
// Segmentation

inline std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

struct SegmentLayout {
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::size_t count = 0;
};

inline SegmentLayout segment_layout(std::size_t length, double rate_hz, double window_s, double overlap_frac) {
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) throw ParameterError("segment: overlap must be in [0, 1)");
  if (!(window_s > 0.0)) throw ParameterError("segment: window must be positive");
  SegmentLayout l;
  l.window_len = round_half_up(window_s * rate_hz);
  if (l.window_len == 0) throw ParameterError("segment: window shorter than one sample");
  l.stride = std::max<std::size_t>(1, round_half_up(double(l.window_len) * (1.0 - overlap_frac)));
  if (l.window_len > length) throw DataError("segment: window longer than series, no segments");
  l.count = (length - l.window_len) / l.stride + 1;
  return l;
}

inline std::vector<Segment> segment(const TimeSeries& ts, double window_s, double overlap_frac,
                                    Band band = Band::broadband) {
  const auto l = segment_layout(ts.size(), ts.rate_hz(), window_s, overlap_frac);
  std::vector<Segment> out;
  out.reserve(l.count);
  const auto s = ts.samples();
  for (std::size_t i = 0; i < l.count; ++i) {
    const std::size_t start = i * l.stride;
    out.push_back({band, {s.begin() + std::ptrdiff_t(start), s.begin() + std::ptrdiff_t(start + l.window_len)}, start,
                   l.window_len, ts.meta()});
  }
  return out;
}

/// Per-segment z-score; constant segments are only centred.
inline void zscore_inplace(std::vector<double>& x) {
  if (x.empty()) return;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / double(x.size()));
  for (double& v : x) v = sd > 0.0 ? (v - mean) / sd : v - mean;
}

// ---------------------------------------------------------------------------
// Synthetic signals

enum class SynthKind { sine, noisy_sine, white_noise, lorenz_x };

inline SynthKind parse_synth_kind(std::string_view s) {
  if (s == "sine") return SynthKind::sine;
  if (s == "noisy_sine") return SynthKind::noisy_sine;
  if (s == "white_noise") return SynthKind::white_noise;
  if (s == "lorenz_x") return SynthKind::lorenz_x;
  throw ParameterError("unknown synth kind '" + std::string(s) + "'");
}

struct SynthParams {
  double frequency_hz = 10.0;
  double rate_hz = 128.0;
  std::size_t length = 128;
  double amplitude = 1.0;
  double phase = 0.0;
  double noise_sd = 0.5;
  // Lorenz system; rate_hz is ignored and set to 1/dt.
  double dt = 0.01;
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  std::size_t transient_steps = 1000;
};

namespace detail {

inline std::vector<double> lorenz_x(const SynthParams& p, std::uint64_t seed) {
  using State = std::array<double, 3>;
  auto f = [&](const State& s) -> State {
    return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
  };
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-1e-3, 1e-3);
  State s{1.0 + jitter(rng), 1.0 + jitter(rng), 1.0 + jitter(rng)};
  const double h = p.dt;
  auto step = [&] {
    const auto k1 = f(s);
    State t;
    for (int i = 0; i < 3; ++i) t[i] = s[i] + 0.5 * h * k1[i];
    const auto k2 = f(t);
    for (int i = 0; i < 3; ++i) t[i] = s[i] + 0.5 * h * k2[i];
    const auto k3 = f(t);
    for (int i = 0; i < 3; ++i) t[i] = s[i] + h * k3[i];
    const auto k4 = f(t);
    for (int i = 0; i < 3; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  };
  for (std::size_t i = 0; i < p.transient_steps; ++i) step();
  std::vector<double> out(p.length);
  for (auto& v : out) {
    step();
    v = s[0];
  }
  return out;
}

}  // namespace detail

inline TimeSeries synth(SynthKind kind, const SynthParams& p, std::uint64_t seed, SourceTag meta = {}) {
  if (p.length < 2) throw ParameterError("synth: length must be >= 2");
  if (kind == SynthKind::lorenz_x) {
    if (!(p.dt > 0.0)) throw ParameterError("synth: dt must be positive");
    return TimeSeries(detail::lorenz_x(p, seed), 1.0 / p.dt, std::move(meta));
  }
  if (!(p.rate_hz > 0.0)) throw ParameterError("synth: rate must be positive");
  if (kind != SynthKind::white_noise && !(p.frequency_hz >= 0.0 && p.frequency_hz < p.rate_hz / 2.0))
    throw ParameterError("synth: frequency must be below Nyquist");
  if (kind != SynthKind::sine && !(p.noise_sd >= 0.0)) throw ParameterError("synth: noise sd must be >= 0");

  std::vector<double> x(p.length, 0.0);
  if (kind == SynthKind::sine || kind == SynthKind::noisy_sine)
    for (std::size_t k = 0; k < p.length; ++k)
      x[k] = p.amplitude * std::sin(2.0 * std::numbers::pi * p.frequency_hz * double(k) / p.rate_hz + p.phase);
  if (kind == SynthKind::noisy_sine || kind == SynthKind::white_noise) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, kind == SynthKind::white_noise ? p.amplitude : p.noise_sd);
    for (auto& v : x) v += noise(rng);
  }
  return TimeSeries(std::move(x), p.rate_hz, std::move(meta));
}

/// Fourier phase-randomized surrogate: same periodogram, uniformly random
/// phases on every bin except DC and Nyquist.
inline std::vector<double> phase_randomize(std::span<const double> x, std::uint64_t seed) {
  const std::size_t n = x.size();
  if (n < 2) throw ParameterError("phase_randomize: need at least 2 samples");
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  Rng rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) {
    spec[k] = std::polar(std::abs(spec[k]), phase(rng));
    spec[n - k] = std::conj(spec[k]);
  }
  std::vector<double> out;
  fft.inv(out, spec);
  out.resize(n);
  return out;
}

}  // namespace topoeeg
