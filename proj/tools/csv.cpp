#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace rhoconcave::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

bool parse_number(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

CsvData parse_csv(std::string_view text) {
  CsvData data;
  std::size_t row = 0;
  bool first = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    std::vector<double> values(fields.size());
    std::size_t bad = fields.size();
    for (std::size_t c = 0; c < fields.size() && bad == fields.size(); ++c) {
      if (!parse_number(fields[c], values[c])) bad = c;
    }
    if (first) {
      first = false;
      data.columns = fields.size();
      if (bad != fields.size()) {
        for (auto f : fields) data.header.emplace_back(f);
        continue;
      }
    }
    if (fields.size() != data.columns) {
      throw CsvError(fmt::format("row {}: found {} columns, expected {}", row, fields.size(), data.columns));
    }
    if (bad != fields.size()) {
      throw CsvError(fmt::format("row {}, column {}: '{}' is not a finite number", row, bad + 1, fields[bad]));
    }
    data.rows.push_back(std::move(values));
  }
  if (data.columns == 0) throw CsvError("input is empty");
  return data;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvData read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string format_csv(const CsvData& data) {
  std::string out;
  if (!data.header.empty()) out += fmt::format("{}\n", fmt::join(data.header, ","));
  for (const auto& r : data.rows) out += fmt::format("{}\n", fmt::join(r, ","));
  return out;
}

Sample to_sample(const CsvData& data) {
  if (data.columns != 1 && data.columns != 2) {
    throw CsvError(fmt::format("expected 1 or 2 numeric columns, found {}", data.columns));
  }
  if (data.rows.size() < 2) throw CsvError(fmt::format("need at least 2 observations, found {}", data.rows.size()));
  if (data.columns == 1) {
    std::vector<double> x;
    x.reserve(data.rows.size());
    for (const auto& r : data.rows) x.push_back(r[0]);
    return Sample::univariate(std::move(x));
  }
  std::vector<Point2> p;
  p.reserve(data.rows.size());
  for (const auto& r : data.rows) p.push_back({r[0], r[1]});
  return Sample::bivariate(std::move(p));
}

}  // namespace rhoconcave::cli
