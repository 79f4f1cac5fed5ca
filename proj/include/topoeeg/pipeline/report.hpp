#pragma once

// JSON and text rendering of evaluation results and result tables.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "topoeeg/errors.hpp"
#include "topoeeg/learn/evaluate.hpp"
#include "topoeeg/pipeline/config.hpp"

namespace topoeeg {

using Json = nlohmann::ordered_json;

inline Json summary_to_json(const ClassificationSummary& s, const std::vector<std::string>& class_names = {}) {
  Json j;
  j["accuracy"] = s.accuracy;
  j["macro_precision"] = s.macro_precision;
  j["macro_recall"] = s.macro_recall;
  j["macro_f1"] = s.macro_f1;
  Json per = Json::array();
  for (std::size_t c = 0; c < s.per_class.size(); ++c) {
    Json k;
    k["class"] = c;
    if (c < class_names.size()) k["name"] = class_names[c];
    k["support"] = s.per_class[c].support;
    k["precision"] = s.per_class[c].precision;
    k["recall"] = s.per_class[c].recall;
    k["f1"] = s.per_class[c].f1;
    per.push_back(std::move(k));
  }
  j["per_class"] = std::move(per);
  j["confusion"] = s.confusion;
  return j;
}

inline Json eval_to_json(const EvalReport& r, const std::vector<std::string>& class_names = {}) {
  Json j;
  j["protocol"] = r.protocol;
  j["classifier"] = r.classifier;
  j["seed"] = r.seed;
  j["num_classes"] = r.num_classes;
  j["examples"] = r.examples;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  j["fold_accuracies"] = r.fold_accuracies;
  j["mean_accuracy"] = r.mean_accuracy;
  j["std_accuracy"] = r.std_accuracy;
  j["cv"] = summary_to_json(r.cv, class_names);
  j["holdout"] = r.holdout ? summary_to_json(*r.holdout, class_names) : Json(nullptr);
  j["warnings"] = r.warnings;
  return j;
}

/// One table cell: a metric aggregated over subjects.
struct TableCell {
  double mean = 0.0;
  double std = 0.0;
  std::size_t subjects = 0;
};

struct ResultTable {
  std::string title;
  std::string row_header;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<TableCell>>> cells;  // [row][column]

  void resize() { cells.assign(rows.size(), std::vector<std::optional<TableCell>>(columns.size())); }
};

inline TableCell aggregate(const std::vector<double>& per_subject) {
  return {mean_of(per_subject), std_of(per_subject), per_subject.size()};
}

inline Json table_to_json(const ResultTable& t) {
  Json j;
  j["title"] = t.title;
  j["row_header"] = t.row_header;
  j["columns"] = t.columns;
  Json rows = Json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Json row;
    row["name"] = t.rows[r];
    Json cells = Json::array();
    for (const auto& c : t.cells[r]) {
      if (!c) {
        cells.push_back(nullptr);
        continue;
      }
      Json cj;
      cj["mean"] = c->mean;
      cj["std"] = c->std;
      cj["subjects"] = c->subjects;
      cells.push_back(std::move(cj));
    }
    row["cells"] = std::move(cells);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

/// Plain-text rendering with "mean/std" percentages, '-' for empty cells.
inline std::string render_table(const ResultTable& t) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({t.row_header});
  for (const auto& c : t.columns) grid.back().push_back(c);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<std::string> line{t.rows[r]};
    for (const auto& c : t.cells[r]) {
      if (!c) {
        line.push_back("-");
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f/%.2f", 100.0 * c->mean, 100.0 * c->std);
      line.push_back(buf);
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::string out = t.title + "\n";
  for (std::size_t l = 0; l < grid.size(); ++l) {
    for (std::size_t i = 0; i < grid[l].size(); ++i) {
      out += grid[l][i];
      if (i + 1 < grid[l].size()) out += std::string(width[i] - grid[l][i].size() + 2, ' ');
    }
    out += "\n";
    if (l == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j = Json::object();
  for (const auto& [k, v] : config_entries(c)) {
    const auto dot = k.find('.');
    j[k.substr(0, dot)][k.substr(dot + 1)] = v;
  }
  return j;
}

/// Inverse of config_to_json; used to replay a run from its report.
inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("embedded config must be an object of sections");
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!value.is_string()) throw ConfigError("config value " + section + "." + key + " must be a string");
      apply_setting(c, section + "." + key, value.get<std::string>());
    }
  }
  return c;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace topoeeg
