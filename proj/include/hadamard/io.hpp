#pragma once

#include <cstdio>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

namespace hadamard {

// Comma-separated output with a header row and 17 significant digits.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);

private:
  std::FILE* file_;
  std::size_t columns_;
};

// Reads a CSV written by CsvWriter: header plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// Scalar field on a uniform (s, r) lattice, row-major in r (index j*ns + i).
struct GridView {
  double s0, ds;
  std::size_t ns;
  double r0, dr;
  std::size_t nr;
  const std::vector<double>* values;
  double at(std::size_t i, std::size_t j) const { return (*values)[j * ns + i]; }
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ContourSet {
  std::string label;
  GridView grid;
  std::vector<double> levels;
  std::string color;
};

void svg_heatmap(const std::string& path, const std::string& title, const GridView& grid,
                 bool symmetric_scale = false);
void svg_lines(const std::string& path, const std::string& title,
               const std::vector<Series>& series, const std::string& xlabel,
               const std::string& ylabel);
void svg_contours(const std::string& path, const std::string& title,
                  const std::vector<ContourSet>& sets);

} // namespace hadamard
