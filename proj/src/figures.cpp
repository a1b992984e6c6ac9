#include "ccfm/figures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ccfm {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 48.0;
constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#9467bd", "#ff7f0e", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Bounds {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  void pad() {
    auto widen = [](double& lo, double& hi) {
      const double span = hi - lo;
      const double extra = span > 0.0 ? 0.05 * span : 0.5;
      lo -= extra;
      hi += extra;
    };
    widen(x_lo, x_hi);
    widen(y_lo, y_hi);
  }
  double px(double x) const { return kMargin + (x - x_lo) / (x_hi - x_lo) * (kWidth - 2 * kMargin); }
  double py(double y) const {
    return kHeight - kMargin - (y - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin);
  }
};

void header(std::ostringstream& os, const std::string& title, const Bounds& b, const std::string& xlabel,
            const std::string& ylabel) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
     << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"#888\"/>\n";
  auto label = [&](double x, double y, const std::string& text, const char* anchor) {
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << text << "</text>\n";
  };
  label(kMargin, kHeight - kMargin + 16, num(b.x_lo), "start");
  label(kWidth - kMargin, kHeight - kMargin + 16, num(b.x_hi), "end");
  label(kMargin - 4, kHeight - kMargin, num(b.y_lo), "end");
  label(kMargin - 4, kMargin + 10, num(b.y_hi), "end");
  label(kWidth / 2, kHeight - 12, xlabel, "middle");
  label(14, kHeight / 2, ylabel, "middle");
}

void polyline(std::ostringstream& os, const std::vector<std::pair<double, double>>& pts, const Bounds& b,
              const char* color) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i)
    os << (i ? " " : "") << num(b.px(pts[i].first)) << ',' << num(b.py(pts[i].second));
  os << "\"/>\n";
}

std::string trajectories(const std::vector<SampleRecord>& records, const std::string& title) {
  Bounds b;
  for (const SampleRecord& r : records) {
    for (const Vec& s : r.states) {
      if (s.size() != 2) throw ConfigError("trajectory_2d figure needs 2-D states");
      b.add(s[0], s[1]);
    }
    for (const Vec& p : r.proposals) b.add(p[0], p[1]);
  }
  b.pad();
  std::ostringstream os;
  header(os, title, b, "x[0]", "x[1]");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SampleRecord& r = records[i];
    const char* color = kPalette[i % kPalette.size()];
    std::vector<std::pair<double, double>> pts;
    for (const Vec& s : r.states) pts.emplace_back(s[0], s[1]);
    polyline(os, pts, b, color);
    for (std::size_t k = 0; k < r.proposals.size() && k + 1 < r.states.size(); ++k) {
      const Vec& p = r.proposals[k];
      const Vec& s = r.states[k + 1];
      if ((p - s).norm() == 0.0) continue;
      os << "<line x1=\"" << num(b.px(p[0])) << "\" y1=\"" << num(b.py(p[1])) << "\" x2=\""
         << num(b.px(s[0])) << "\" y2=\"" << num(b.py(s[1])) << "\" stroke=\"" << color
         << "\" stroke-width=\"0.8\" stroke-dasharray=\"3,2\"/>\n";
    }
    os << "<circle cx=\"" << num(b.px(r.states.back()[0])) << "\" cy=\"" << num(b.py(r.states.back()[1]))
       << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string violations(const std::vector<SampleRecord>& records, const std::string& title) {
  Bounds b;
  std::vector<std::vector<std::pair<double, double>>> curves;
  for (const SampleRecord& r : records) {
    curves.push_back(violation_curve_data(r));
    for (const auto& [t, v] : curves.back()) b.add(t, v);
  }
  if (!std::isfinite(b.x_lo)) {
    b.add(0.0, 0.0);
    b.add(1.0, 0.0);
  }
  b.x_lo = 0.0;
  b.y_lo = std::min(b.y_lo, 0.0);
  b.pad();
  std::ostringstream os;
  header(os, title, b, "t", "max violation");
  for (std::size_t i = 0; i < curves.size(); ++i) polyline(os, curves[i], b, kPalette[i % kPalette.size()]);
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::vector<std::pair<double, double>> violation_curve_data(const SampleRecord& record) {
  std::vector<std::pair<double, double>> out;
  const std::size_t n = record.per_step_violation.size();
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.emplace_back(static_cast<double>(k + 1) / static_cast<double>(n), record.per_step_violation[k]);
  return out;
}

std::string render_figure(const std::vector<SampleRecord>& records, FigureKind kind, const std::string& title) {
  if (records.empty()) throw ConfigError("figure: no records");
  return kind == FigureKind::trajectory_2d ? trajectories(records, title) : violations(records, title);
}

void emit_figure(const std::vector<SampleRecord>& records, FigureKind kind, const std::filesystem::path& path,
                 const std::string& title) {
  const std::string svg = render_figure(records, kind, title);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("figure: cannot open " + path.string());
  out << svg;
}

}  // namespace ccfm
