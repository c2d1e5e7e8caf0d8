#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rhoconcave/mesh.hpp"

namespace rhoconcave::cli {

/// Malformed input; the message names the offending row and column.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvData {
  std::vector<std::string> header;  ///< empty when the first row is numeric
  std::size_t columns = 0;
  std::vector<std::vector<double>> rows;
};

/// Comma-separated numbers with an optional header row, detected by a
/// non-numeric first row. Blank lines are skipped; rows are 1-based in errors.
CsvData parse_csv(std::string_view text);
CsvData read_csv(const std::filesystem::path& path);

/// Shortest round-trip formatting of every value.
std::string format_csv(const CsvData& data);

/// Requires one or two columns and at least two rows.
Sample to_sample(const CsvData& data);

/// Parses a finite decimal number, allowing surrounding blanks and a
/// leading '+'. Returns false on anything else.
bool parse_number(std::string_view token, double& out);

std::string read_file(const std::filesystem::path& path);

}  // namespace rhoconcave::cli
