#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "novas/dataset.hpp"
#include "novas/errors.hpp"

namespace novas::io {

/// A numeric table with a header row.
struct Table {
  std::vector<std::string> names;
  /// Row-major cells; rows.size() observations of names.size() columns.
  std::vector<std::vector<double>> rows;
  char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace detail

/// Parses a decimal literal, rejecting trailing junk and non-finite values.
inline std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Reads a delimited table. Without an explicit delimiter the header decides:
/// tab if it contains one, otherwise comma.
inline Table read_table(std::istream& in, std::optional<char> delimiter = std::nullopt) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("input is empty; a header row is required");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  t.delimiter = delimiter.value_or(line.find('\t') != std::string::npos ? '\t' : ',');
  for (auto name : detail::split(line, t.delimiter)) t.names.push_back(detail::unquote(name));
  for (std::size_t c = 0; c < t.names.size(); ++c)
    if (t.names[c].empty()) throw DataError("header column " + std::to_string(c + 1) + " has an empty name");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, t.delimiter);
    if (cells.size() != t.names.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.names.size()) +
                      " fields, found " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = parse_number(cells[c]);
      if (!v)
        throw DataError("line " + std::to_string(line_no) + ", column '" + t.names[c] + "' (" +
                        std::to_string(c + 1) + "): non-numeric value '" + std::string(cells[c]) + "'");
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table read_table(const std::string& path, std::optional<char> delimiter = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_table(in, delimiter);
}

/// Position of the response column: an exact header name, else a 1-based index.
inline std::size_t find_response(const Table& t, const std::string& response) {
  for (std::size_t c = 0; c < t.names.size(); ++c)
    if (t.names[c] == response) return c;
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(response.data(), response.data() + response.size(), idx);
  if (ec == std::errc{} && ptr == response.data() + response.size() && idx >= 1 && idx <= t.names.size())
    return idx - 1;
  throw DataError("response column '" + response + "' not found");
}

/// Dataset from a table: the response column plus every other column as a covariate.
struct LabelledDataset {
  Dataset data;
  std::vector<std::string> covariate_names;
  std::string response_name;
};

inline LabelledDataset to_dataset(const Table& t, const std::string& response) {
  const std::size_t rc = find_response(t, response);
  if (t.names.size() < 2) throw DataError("need at least one covariate besides the response");
  if (t.rows.size() < 2) throw DataError("need at least 2 data rows");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto p = static_cast<Eigen::Index>(t.names.size() - 1);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  LabelledDataset out;
  out.response_name = t.names[rc];
  for (std::size_t c = 0; c < t.names.size(); ++c)
    if (c != rc) out.covariate_names.push_back(t.names[c]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      const double v = t.rows[static_cast<std::size_t>(i)][c];
      if (c == rc)
        y[i] = v;
      else
        x(i, j++) = v;
    }
  }
  out.data = Dataset(std::move(x), std::move(y));
  return out;
}

}  // namespace novas::io
