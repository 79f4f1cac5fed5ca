#pragma once

// Tab-separated dumps for offline plotting. Every file starts with a header
// line naming its columns; rows are in a stable order.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "topoeeg/embedding.hpp"
#include "topoeeg/errors.hpp"
#include "topoeeg/homology.hpp"
#include "topoeeg/landscapes.hpp"
#include "topoeeg/pipeline/report.hpp"
#include "topoeeg/text.hpp"

namespace topoeeg {

enum class PlotKind { barcode, diagram, landscape, ami, fnn };

inline PlotKind parse_plot_kind(std::string_view s) {
  if (s == "barcode") return PlotKind::barcode;
  if (s == "diagram") return PlotKind::diagram;
  if (s == "landscape") return PlotKind::landscape;
  if (s == "ami") return PlotKind::ami;
  if (s == "fnn") return PlotKind::fnn;
  throw ParameterError("unknown plot kind '" + std::string(s) + "' (expected barcode, diagram, landscape, ami, fnn)");
}

/// Pairs sorted by (dim, birth, death, essential).
inline std::vector<PersistencePair> ordered_pairs(const PersistenceDiagram& dg) {
  std::vector<PersistencePair> out;
  for (int d = 0; d <= kMaxHomologyDim; ++d) {
    auto v = dg.pairs(d);
    std::sort(v.begin(), v.end(), pair_less);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

/// dim, birth, death, essential (the `ph` output format).
inline std::string diagram_tsv(const PersistenceDiagram& dg) {
  std::string s = "dim\tbirth\tdeath\tessential\n";
  for (const auto& p : ordered_pairs(dg))
    s += std::to_string(p.dim) + "\t" + format_double(p.birth) + "\t" + format_double(p.death) + "\t" +
         (p.essential ? "1" : "0") + "\n";
  return s;
}

/// One bar per row with a running index for the vertical axis.
inline std::string barcode_tsv(const PersistenceDiagram& dg) {
  std::string s = "bar\tdim\tbirth\tdeath\tessential\n";
  std::size_t i = 0;
  for (const auto& p : ordered_pairs(dg))
    s += std::to_string(i++) + "\t" + std::to_string(p.dim) + "\t" + format_double(p.birth) + "\t" +
         format_double(p.death) + "\t" + (p.essential ? "1" : "0") + "\n";
  return s;
}

inline std::string landscape_tsv(const Landscape& L) {
  std::string s = "t\tvalue\n";
  for (std::size_t g = 0; g < L.grid.size(); ++g) s += format_double(L.grid[g]) + "\t" + format_double(L.values[g]) + "\n";
  return s;
}

inline std::string ami_tsv(const LagSelection& sel) {
  std::string s = "lag\tami\n";
  for (std::size_t i = 0; i < sel.ami.size(); ++i) s += std::to_string(i + 1) + "\t" + format_double(sel.ami[i]) + "\n";
  return s;
}

inline std::string fnn_tsv(const DimensionSelection& sel) {
  std::string s = "dim\tfnn_fraction\n";
  for (std::size_t i = 0; i < sel.fnn.size(); ++i) s += std::to_string(i + 1) + "\t" + format_double(sel.fnn[i]) + "\n";
  return s;
}

}  // namespace topoeeg
