#include "hadamard/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hadamard {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : file_(std::fopen(path.c_str(), "w")), columns_(header.size()) {
  if (!file_) throw std::runtime_error("cannot open " + path);
  for (std::size_t k = 0; k < header.size(); ++k)
    std::fprintf(file_, k ? ",%s" : "%s", header[k].c_str());
  std::fputc('\n', file_);
}

CsvWriter::~CsvWriter() {
  if (file_) std::fclose(file_);
}

void CsvWriter::row(std::initializer_list<double> values) {
  row(std::vector<double>(values));
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("csv row width mismatch");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) std::fputc(',', file_);
    std::fprintf(file_, "%.17g", values[k]);
  }
  std::fputc('\n', file_);
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("no column " + name);
  return std::size_t(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

namespace {

constexpr double kW = 720, kH = 480, kLeft = 70, kRight = 110, kTop = 40, kBottom = 50;

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

std::string color_ramp(double t) {
  // Blue to white to red.
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = int(40 + 215 * u);
    g = int(70 + 185 * u);
    b = 200 + int(55 * u);
  } else {
    const double u = (t - 0.5) / 0.5;
    r = 255;
    g = int(255 - 195 * u);
    b = int(255 - 215 * u);
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void axes(std::ostream& o, const Frame& f, const std::string& title,
          const std::string& xlabel, const std::string& ylabel) {
  o << "<rect x='" << kLeft << "' y='" << kTop << "' width='" << kW - kLeft - kRight
    << "' height='" << kH - kTop - kBottom << "' fill='none' stroke='black'/>\n";
  o << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
    << "</text>\n";
  o << "<text x='" << (kLeft + kW - kRight) / 2 << "' y='" << kH - 12
    << "' text-anchor='middle' font-size='13'>" << xlabel << "</text>\n";
  o << "<text x='18' y='" << kH / 2 << "' font-size='13' transform='rotate(-90 18 "
    << kH / 2 << ")' text-anchor='middle'>" << ylabel << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0, y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    char bx[32], by[32];
    std::snprintf(bx, sizeof bx, "%.3g", x);
    std::snprintf(by, sizeof by, "%.3g", y);
    o << "<text x='" << f.px(x) << "' y='" << kH - kBottom + 16
      << "' text-anchor='middle' font-size='11'>" << bx << "</text>\n";
    o << "<text x='" << kLeft - 6 << "' y='" << f.py(y) + 4
      << "' text-anchor='end' font-size='11'>" << by << "</text>\n";
  }
}

void open_svg(std::ostream& o) {
  o << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH
    << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
}

} // namespace

void svg_heatmap(const std::string& path, const std::string& title, const GridView& g,
                 bool symmetric_scale) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot open " + path);
  open_svg(o);
  Frame f{g.s0, g.s0 + g.ds * double(g.ns - 1), g.r0, g.r0 + g.dr * double(g.nr - 1)};
  // Downsample to at most 150 x 100 cells.
  const std::size_t si = std::max<std::size_t>(1, g.ns / 150);
  const std::size_t sj = std::max<std::size_t>(1, g.nr / 100);
  double lo = INFINITY, hi = -INFINITY;
  for (double v : *g.values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(lo <= hi)) lo = hi = 0.0;
  if (symmetric_scale) {
    const double m = std::max(std::fabs(lo), std::fabs(hi));
    lo = -m;
    hi = m;
  }
  if (hi == lo) hi = lo + 1.0;
  for (std::size_t j = 0; j + sj < g.nr + sj && j < g.nr; j += sj) {
    for (std::size_t i = 0; i < g.ns; i += si) {
      const double v = g.at(i, j);
      const double x = g.s0 + g.ds * double(i), y = g.r0 + g.dr * double(j);
      const double w = f.px(x + g.ds * double(si)) - f.px(x);
      const double h = f.py(y) - f.py(y + g.dr * double(sj));
      o << "<rect x='" << f.px(x) << "' y='" << f.py(y) - h << "' width='" << w + 0.3
        << "' height='" << h + 0.3 << "' fill='"
        << (std::isfinite(v) ? color_ramp((v - lo) / (hi - lo)) : std::string("#000000"))
        << "'/>\n";
    }
  }
  axes(o, f, title, "s", "r");
  for (int k = 0; k <= 10; ++k) {
    const double y = kTop + (kH - kTop - kBottom) * (1.0 - k / 10.0);
    o << "<rect x='" << kW - kRight + 15 << "' y='" << y - (kH - kTop - kBottom) / 10.0
      << "' width='20' height='" << (kH - kTop - kBottom) / 10.0 + 0.5 << "' fill='"
      << color_ramp(k / 10.0) << "'/>\n";
  }
  char blo[32], bhi[32];
  std::snprintf(blo, sizeof blo, "%.3g", lo);
  std::snprintf(bhi, sizeof bhi, "%.3g", hi);
  o << "<text x='" << kW - kRight + 40 << "' y='" << kH - kBottom << "' font-size='11'>"
    << blo << "</text>\n<text x='" << kW - kRight + 40 << "' y='" << kTop + 10
    << "' font-size='11'>" << bhi << "</text>\n</svg>\n";
}

void svg_lines(const std::string& path, const std::string& title,
               const std::vector<Series>& series, const std::string& xlabel,
               const std::string& ylabel) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot open " + path);
  open_svg(o);
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const Series& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  if (!(x0 < x1)) x1 = x0 + 1;
  if (!(y0 < y1)) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  Frame f{x0, x1, y0 - pad, y1 + pad};
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t n = 0; n < series.size(); ++n) {
    const Series& s = series[n];
    o << "<polyline fill='none' stroke-width='1.5' stroke='" << colors[n % 5] << "' points='";
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (std::isfinite(s.y[k])) o << f.px(s.x[k]) << ',' << f.py(s.y[k]) << ' ';
    o << "'/>\n<text x='" << kW - kRight + 8 << "' y='" << kTop + 16 * (n + 1)
      << "' font-size='12' fill='" << colors[n % 5] << "'>" << s.label << "</text>\n";
  }
  axes(o, f, title, xlabel, ylabel);
  o << "</svg>\n";
}

void svg_contours(const std::string& path, const std::string& title,
                  const std::vector<ContourSet>& sets) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot open " + path);
  open_svg(o);
  if (sets.empty()) {
    o << "</svg>\n";
    return;
  }
  const GridView& g0 = sets.front().grid;
  Frame f{g0.s0, g0.s0 + g0.ds * double(g0.ns - 1), g0.r0, g0.r0 + g0.dr * double(g0.nr - 1)};
  for (std::size_t n = 0; n < sets.size(); ++n) {
    const ContourSet& c = sets[n];
    const GridView& g = c.grid;
    o << "<g stroke='" << c.color << "' stroke-width='1' fill='none'>\n";
    for (double level : c.levels) {
      // Marching squares, one segment per sign-change pair.
      for (std::size_t j = 0; j + 1 < g.nr; ++j)
        for (std::size_t i = 0; i + 1 < g.ns; ++i) {
          const double v[4] = {g.at(i, j) - level, g.at(i + 1, j) - level,
                               g.at(i + 1, j + 1) - level, g.at(i, j + 1) - level};
          const double xs[4] = {0, 1, 1, 0}, ys[4] = {0, 0, 1, 1};
          double px[4], py[4];
          int m = 0;
          for (int e = 0; e < 4; ++e) {
            const int a = e, b = (e + 1) % 4;
            if ((v[a] > 0) != (v[b] > 0)) {
              const double t = v[a] / (v[a] - v[b]);
              px[m] = g.s0 + g.ds * (double(i) + xs[a] + t * (xs[b] - xs[a]));
              py[m] = g.r0 + g.dr * (double(j) + ys[a] + t * (ys[b] - ys[a]));
              ++m;
            }
          }
          for (int k = 0; k + 1 < m; k += 2)
            o << "<line x1='" << f.px(px[k]) << "' y1='" << f.py(py[k]) << "' x2='"
              << f.px(px[k + 1]) << "' y2='" << f.py(py[k + 1]) << "'/>\n";
        }
    }
    o << "</g>\n<text x='" << kW - kRight + 8 << "' y='" << kTop + 16 * (n + 1)
      << "' font-size='12' fill='" << c.color << "'>" << c.label << "</text>\n";
  }
  axes(o, f, title, "s", "r");
  o << "</svg>\n";
}

} // namespace hadamard
