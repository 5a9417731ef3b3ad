#include "rieszw/io.hpp"

#include "rieszw/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rieszw {

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!numeric) {
      if (!seen_data) {
        seen_data = true;
        continue;
      }
      throw InvalidArgument(where + ": non-numeric row");
    }
    seen_data = true;
    if (vals.size() != columns) {
      throw InvalidArgument(where + ": expected " + std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + " has no data rows");
  return rows;
}

RegularAxis regular_axis(std::vector<double> coords, const std::string& what) {
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  if (coords.size() < 2) throw InvalidArgument(what + " needs at least two nodes per axis");
  RegularAxis ax;
  ax.first = coords.front();
  ax.count = static_cast<int>(coords.size());
  ax.step = (coords.back() - coords.front()) / static_cast<double>(coords.size() - 1);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (std::abs(coords[i] - (ax.first + ax.step * static_cast<double>(i))) > 1e-9 * std::max(1.0, ax.step)) {
      throw InvalidArgument(what + " nodes are not regularly spaced");
    }
  }
  return ax;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
}

}  // namespace rieszw
