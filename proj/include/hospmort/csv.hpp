#ifndef HOSPMORT_CSV_HPP
#define HOSPMORT_CSV_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hospmort {

// Plain comma-delimited table: no quoting, '#' lines are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name, const std::string& context) const;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> split_csv_line(std::string_view line);

// Strict numeric parsing; throw InputError naming the context on failure.
double parse_real(std::string_view text, const std::string& context);
long parse_integer(std::string_view text, const std::string& context);

}  // namespace hospmort

#endif  // HOSPMORT_CSV_HPP
