#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rieszw {

/// Numeric CSV rows with exactly `columns` fields. A leading non-numeric row
/// is taken as a header; blank lines and '#' comments are skipped.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns);

/// Regular 1D axis recovered from (possibly repeated, unsorted) coordinates.
struct RegularAxis {
  double first = 0.0;
  double step = 1.0;
  int count = 0;
};
RegularAxis regular_axis(std::vector<double> coords, const std::string& what);

/// Writes a header line followed by rows, values at full precision.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace rieszw
