#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsqp/dataset.hpp"

namespace fairsqp {

// Column roles for a CSV file. Categorical level lists are part of the
// schema (not inferred from data) so the encoded feature width is fixed.
struct DataSchema {
  std::string label_column;
  std::string label_positive = "1";
  std::string sensitive_column;
  std::string sensitive_positive = "1";
  std::map<std::string, std::vector<std::string>> categorical;
  std::set<std::string> drop;

  static DataSchema from_json(const nlohmann::json& j) {
    DataSchema s;
    s.label_column = j.at("label").get<std::string>();
    s.sensitive_column = j.at("sensitive").get<std::string>();
    if (j.contains("label_positive")) s.label_positive = j["label_positive"].get<std::string>();
    if (j.contains("sensitive_positive"))
      s.sensitive_positive = j["sensitive_positive"].get<std::string>();
    if (j.contains("categorical"))
      for (auto it = j["categorical"].begin(); it != j["categorical"].end(); ++it)
        s.categorical[it.key()] = it.value().get<std::vector<std::string>>();
    if (j.contains("drop"))
      for (const auto& c : j["drop"]) s.drop.insert(c.get<std::string>());
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["label"] = label_column;
    j["label_positive"] = label_positive;
    j["sensitive"] = sensitive_column;
    j["sensitive_positive"] = sensitive_positive;
    j["categorical"] = nlohmann::json::object();
    for (const auto& [col, levels] : categorical) j["categorical"][col] = levels;
    j["drop"] = std::vector<std::string>(drop.begin(), drop.end());
    return j;
  }
};

inline DataSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("schema: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return DataSchema::from_json(j);
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

// Parse a headered CSV into a Dataset: categoricals one-hot encoded over the
// schema's level lists, sensitive/label binarized by string match, remaining
// columns parsed as continuous reals. Rows with missing fields ("" or "?")
// are dropped. Continuous columns are NOT yet standardized; standardize()
// after split() so the statistics come from the training split.
inline Dataset load_csv(const std::string& path, const DataSchema& schema,
                        const std::string& dataset_name = "") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
  const std::vector<std::string> header = detail::split_line(line);

  int label_col = -1, sensitive_col = -1;
  struct ColPlan {
    int csv_index;
    std::string name;
    const std::vector<std::string>* levels;  // null for continuous
  };
  std::vector<ColPlan> plans;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == schema.label_column) {
      label_col = static_cast<int>(c);
    } else if (h == schema.sensitive_column) {
      sensitive_col = static_cast<int>(c);
    } else if (schema.drop.count(h)) {
      continue;
    } else if (auto it = schema.categorical.find(h); it != schema.categorical.end()) {
      plans.push_back({static_cast<int>(c), h, &it->second});
    } else {
      plans.push_back({static_cast<int>(c), h, nullptr});
    }
  }
  if (label_col < 0)
    throw std::runtime_error("load_csv: missing label column '" + schema.label_column + "'");
  if (sensitive_col < 0)
    throw std::runtime_error("load_csv: missing sensitive column '" + schema.sensitive_column + "'");

  // Feature layout: planned columns in CSV order (categoricals expanded in
  // level order), then the 0/1 sensitive column last.
  std::vector<std::string> names;
  std::vector<std::uint8_t> cont;
  for (const auto& p : plans) {
    if (p.levels) {
      for (const auto& lv : *p.levels) {
        names.push_back(p.name + "=" + lv);
        cont.push_back(0);
      }
    } else {
      names.push_back(p.name);
      cont.push_back(1);
    }
  }
  names.push_back(schema.sensitive_column);
  cont.push_back(0);
  const Index f = static_cast<Index>(names.size());

  std::vector<std::vector<double>> rows;
  std::vector<int> svals, yvals;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("load_csv: " + path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(cells.size()));
    bool missing = false;
    for (const auto& cell : cells)
      if (cell.empty() || cell == "?") { missing = true; break; }
    if (missing) continue;

    std::vector<double> row(static_cast<size_t>(f), 0.0);
    size_t out_col = 0;
    for (const auto& p : plans) {
      const std::string& cell = cells[static_cast<size_t>(p.csv_index)];
      if (p.levels) {
        auto lv = std::find(p.levels->begin(), p.levels->end(), cell);
        if (lv == p.levels->end())
          throw std::runtime_error("load_csv: " + path + ":" + std::to_string(line_no) +
                                   ": unknown level '" + cell + "' in column " + p.name);
        row[out_col + static_cast<size_t>(lv - p.levels->begin())] = 1.0;
        out_col += p.levels->size();
      } else {
        try {
          row[out_col] = std::stod(cell);
        } catch (const std::exception&) {
          throw std::runtime_error("load_csv: " + path + ":" + std::to_string(line_no) +
                                   ": cannot parse '" + cell + "' in column " + p.name);
        }
        ++out_col;
      }
    }
    const int s = cells[static_cast<size_t>(sensitive_col)] == schema.sensitive_positive ? 1 : 0;
    const int y = cells[static_cast<size_t>(label_col)] == schema.label_positive ? 1 : 0;
    row[static_cast<size_t>(f) - 1] = double(s);
    rows.push_back(std::move(row));
    svals.push_back(s);
    yvals.push_back(y);
  }

  Dataset data;
  data.name = dataset_name.empty() ? path : dataset_name;
  data.features.resize(static_cast<Index>(rows.size()), f);
  data.sensitive.resize(static_cast<Index>(rows.size()));
  data.labels.resize(static_cast<Index>(rows.size()));
  for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
    for (Index j = 0; j < f; ++j) data.features(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    data.sensitive[i] = svals[static_cast<size_t>(i)];
    data.labels[i] = yvals[static_cast<size_t>(i)];
  }
  data.feature_names = std::move(names);
  data.continuous_mask = std::move(cont);
  data.finalize();
  return data;
}

}  // namespace fairsqp
