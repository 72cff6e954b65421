// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "mtdfl/error.hpp"
#include "mtdfl/harness/data.hpp"

namespace mtdfl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                       " columns, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const char* b = cells[c].data();
      const char* e = b + cells[c].size();
      auto [p, ec] = std::from_chars(b, e, row[c]);
      if (ec != std::errc() || p != e || cells[c].empty())
        throw ParseError(path + ":" + std::to_string(line_no) + ": column '" + t.header[c] + "' is not numeric ('" +
                         cells[c] + "')");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(path + ": missing header line");
  if (t.rows.empty()) std::cerr << "warning: " << path << " has a header but no records\n";
  return t;
}

std::size_t column(const Table& t, const std::string& name, const std::string& path) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == name) return c;
  throw ParseError(path + ": missing mandatory column '" + name + "'");
}

int as_label(double v, const std::string& path, std::size_t row) {
  if (v != 0.0 && v != 1.0)
    throw ParseError(path + ": record " + std::to_string(row + 1) + " has a label other than 0 or 1");
  return static_cast<int>(v);
}

}  // namespace

DeviceShard load_flows_csv(const std::string& path) {
  const Table t = read_table(path);
  const std::size_t lc = column(t, "label", path);
  const auto f = static_cast<Eigen::Index>(t.header.size() - 1);
  DeviceShard s;
  s.x.resize(static_cast<Eigen::Index>(t.rows.size()), f);
  s.y.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (c != lc) s.x(static_cast<Eigen::Index>(r), k++) = t.rows[r][c];
    s.y[static_cast<Eigen::Index>(r)] = as_label(t.rows[r][lc], path, r);
  }
  return s;
}

std::vector<EventSequence> load_events_csv(const std::string& path) {
  const Table t = read_table(path);
  const std::size_t dc = column(t, "device_id", path);
  const std::size_t tc = column(t, "timestamp", path);
  const std::size_t lc = column(t, "label", path);
  std::vector<std::size_t> feat;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != dc && c != tc && c != lc) feat.push_back(c);

  std::map<std::size_t, std::vector<std::size_t>> by_device;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][dc] < 0) throw ParseError(path + ": record " + std::to_string(r + 1) + " has a negative device_id");
    by_device[static_cast<std::size_t>(t.rows[r][dc])].push_back(r);
  }
  std::vector<EventSequence> out;
  for (auto& [dev, rows] : by_device) {
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return t.rows[a][tc] < t.rows[b][tc]; });
    EventSequence e;
    e.device = dev;
    e.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feat.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (std::size_t j = 0; j < feat.size(); ++j)
        e.features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = t.rows[rows[k]][feat[j]];
      e.labels.push_back(static_cast<std::uint8_t>(as_label(t.rows[rows[k]][lc], path, rows[k])));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mtdfl
