#pragma once

// On-disk matrix format shared by recordings and feature matrices:
//
//   <stem>.f32   rows*cols little-endian IEEE-754 binary32 values, row-major
//   <stem>.meta  plain text sidecar, one `key = value` per line, '#' comments
//
// Required sidecar keys: rows, cols. Recordings add rate_hz, channels
// (comma separated, one per row), subject and trial; feature matrices add
// labels, subjects, trials, segments and layout. Any other keys are carried
// through untouched.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "topoeeg/errors.hpp"
#include "topoeeg/homology.hpp"
#include "topoeeg/point_cloud.hpp"
#include "topoeeg/signals.hpp"
#include "topoeeg/text.hpp"

namespace topoeeg {

struct MatrixFile {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;  // row-major
  std::map<std::string, std::string> meta;

  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline std::filesystem::path data_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".f32";
  return p;
}

inline std::filesystem::path meta_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".meta";
  return p;
}

/// Strips a trailing .f32 or .meta so either file name can address the pair.
inline std::filesystem::path matrix_stem(const std::filesystem::path& p) {
  const auto ext = p.extension();
  if (ext == ".f32" || ext == ".meta") return p.parent_path() / p.stem();
  return p;
}

inline void write_matrix(const std::filesystem::path& stem_in, const MatrixFile& m) {
  const auto stem = matrix_stem(stem_in);
  if (m.data.size() != m.rows * m.cols) throw DataError("write_matrix: data size does not match rows*cols");
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  {
    std::ofstream out(data_path(stem), std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + data_path(stem).string() + " for writing");
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(m.data.data()), std::streamsize(m.data.size() * sizeof(float)));
    } else {
      for (float v : m.data) {
        auto bits = __builtin_bswap32(std::bit_cast<std::uint32_t>(v));
        out.write(reinterpret_cast<const char*>(&bits), 4);
      }
    }
    if (!out) throw DataError("write failed: " + data_path(stem).string());
  }
  std::ofstream meta(meta_path(stem), std::ios::trunc);
  if (!meta) throw DataError("cannot open " + meta_path(stem).string() + " for writing");
  meta << "# topoeeg matrix v1\n";
  meta << "rows = " << m.rows << "\ncols = " << m.cols << "\n";
  for (const auto& [k, v] : m.meta)
    if (k != "rows" && k != "cols") meta << k << " = " << v << "\n";
}

inline std::map<std::string, std::string> read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sidecar " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    kv[std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
  }
  return kv;
}

inline MatrixFile read_matrix(const std::filesystem::path& stem_in) {
  const auto stem = matrix_stem(stem_in);
  MatrixFile m;
  m.meta = read_sidecar(meta_path(stem));
  if (!m.meta.count("rows") || !m.meta.count("cols")) throw DataError(meta_path(stem).string() + ": missing rows/cols");
  m.rows = parse_size(m.meta.at("rows"), "rows");
  m.cols = parse_size(m.meta.at("cols"), "cols");
  m.meta.erase("rows");
  m.meta.erase("cols");
  std::ifstream in(data_path(stem), std::ios::binary);
  if (!in) throw DataError("cannot open " + data_path(stem).string());
  const auto expected = m.rows * m.cols * sizeof(float);
  const auto actual = std::filesystem::file_size(data_path(stem));
  if (actual != expected)
    throw DataError(data_path(stem).string() + ": expected " + std::to_string(expected) + " bytes, found " +
                    std::to_string(actual));
  m.data.resize(m.rows * m.cols);
  in.read(reinterpret_cast<char*>(m.data.data()), std::streamsize(expected));
  if (!in) throw DataError("short read: " + data_path(stem).string());
  if constexpr (std::endian::native != std::endian::little)
    for (auto& v : m.data) v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(v)));
  return m;
}

// ---------------------------------------------------------------------------
// Multichannel recordings

struct Recording {
  std::vector<std::string> channels;
  double rate_hz = 0.0;
  std::string subject;
  std::string trial;
  std::vector<std::vector<float>> data;  // one row per channel
  std::map<std::string, std::string> extra;

  std::size_t samples() const noexcept { return data.empty() ? 0 : data.front().size(); }

  TimeSeries channel_series(std::size_t c) const {
    return TimeSeries(std::vector<double>(data.at(c).begin(), data.at(c).end()), rate_hz,
                      SourceTag{subject, trial, channels.at(c)});
  }
};

inline void validate(const Recording& r) {
  if (r.channels.empty()) throw DataError("recording has no channels");
  if (r.channels.size() != r.data.size()) throw DataError("recording channel names do not match data rows");
  if (!(r.rate_hz > 0.0)) throw DataError("recording rate_hz must be positive");
  for (const auto& row : r.data)
    if (row.size() != r.samples()) throw DataError("recording rows have unequal length");
}

inline void write_recording(const std::filesystem::path& stem, const Recording& r) {
  validate(r);
  MatrixFile m;
  m.rows = r.channels.size();
  m.cols = r.samples();
  m.data.reserve(m.rows * m.cols);
  for (const auto& row : r.data) m.data.insert(m.data.end(), row.begin(), row.end());
  m.meta = r.extra;
  m.meta["kind"] = "recording";
  m.meta["rate_hz"] = format_double(r.rate_hz);
  m.meta["channels"] = join(r.channels, ",");
  m.meta["subject"] = r.subject;
  m.meta["trial"] = r.trial;
  write_matrix(stem, m);
}

inline Recording read_recording(const std::filesystem::path& stem) {
  auto m = read_matrix(stem);
  Recording r;
  auto take = [&](const char* key) {
    const auto it = m.meta.find(key);
    if (it == m.meta.end()) throw DataError(matrix_stem(stem).string() + ".meta: missing key '" + key + "'");
    auto v = it->second;
    m.meta.erase(it);
    return v;
  };
  r.rate_hz = parse_double(take("rate_hz"), "rate_hz");
  r.channels = split(take("channels"), ',');
  r.subject = m.meta.count("subject") ? take("subject") : std::string{};
  r.trial = m.meta.count("trial") ? take("trial") : std::string{};
  m.meta.erase("kind");
  r.extra = std::move(m.meta);
  if (r.channels.size() != m.rows) throw DataError("recording channel count does not match rows");
  r.data.resize(m.rows);
  for (std::size_t c = 0; c < m.rows; ++c)
    r.data[c].assign(m.data.begin() + std::ptrdiff_t(c * m.cols), m.data.begin() + std::ptrdiff_t((c + 1) * m.cols));
  validate(r);
  return r;
}

/// CSV recording: header row of channel names (first header cell labels the
/// sample-index column), then one row per sample with the index first.
inline Recording read_csv_recording(const std::filesystem::path& path, double rate_hz) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  auto header = split(std::string(trim(line)), ',');
  if (header.size() < 2) throw DataError(path.string() + ": header needs an index column and at least one channel");
  Recording r;
  r.rate_hz = rate_hz;
  for (std::size_t i = 1; i < header.size(); ++i) r.channels.push_back(std::string(trim(header[i])));
  r.data.resize(r.channels.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(std::string(trim(line)), ',');
    if (cells.size() != header.size())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                      " cells");
    for (std::size_t c = 1; c < cells.size(); ++c)
      r.data[c - 1].push_back(static_cast<float>(parse_double(cells[c], "csv cell")));
  }
  r.subject = path.stem().string();
  validate(r);
  return r;
}

// ---------------------------------------------------------------------------
// Point clouds and diagrams as text

/// One point per line, comma or whitespace separated. A first line that does
/// not parse as numbers is taken as a header and skipped.
inline PointCloud read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> coords;
  std::size_t dim = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = std::string(trim(line));
    if (t.empty() || t.front() == '#') continue;
    std::replace(t.begin(), t.end(), '\t', ',');
    std::replace(t.begin(), t.end(), ' ', ',');
    std::vector<double> row;
    try {
      for (const auto& cell : split(t, ','))
        if (!cell.empty()) row.push_back(parse_double(cell, "coordinate"));
    } catch (const DataError&) {
      if (coords.empty() && dim == 0 && lineno == 1) continue;
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": non-numeric coordinate");
    }
    if (dim == 0) dim = row.size();
    if (row.size() != dim) throw DataError(path.string() + ":" + std::to_string(lineno) + ": inconsistent point dimension");
    coords.insert(coords.end(), row.begin(), row.end());
  }
  if (dim == 0) throw DataError(path.string() + ": no points");
  try {
    return PointCloud(dim, std::move(coords));
  } catch (const ParameterError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Reads `dim<TAB>birth<TAB>death<TAB>essential` lines (header optional).
inline PersistenceDiagram read_diagram_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  PersistenceDiagram dg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = std::string(trim(line));
    if (t.empty() || t.front() == '#' || t.rfind("dim", 0) == 0) continue;
    const auto cells = split(t, '\t');
    if (cells.size() != 4) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    PersistencePair p;
    p.dim = int(parse_size(cells[0], "dim"));
    if (p.dim > kMaxHomologyDim) throw DataError(path.string() + ":" + std::to_string(lineno) + ": dim must be 0, 1 or 2");
    p.birth = parse_double(cells[1], "birth");
    p.death = parse_double(cells[2], "death");
    p.essential = cells[3] == "1" || cells[3] == "true";
    if (!(p.death >= p.birth)) throw DataError(path.string() + ":" + std::to_string(lineno) + ": death < birth");
    if (p.essential) dg.threshold = std::max(dg.threshold, p.death);
    dg.pairs(p.dim).push_back(p);
  }
  dg.normalize();
  return dg;
}

}  // namespace topoeeg
