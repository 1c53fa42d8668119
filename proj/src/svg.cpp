#include "kresling/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "kresling/error.hpp"

namespace kresling {

namespace {

constexpr int kLeft = 70, kRight = 20, kTop = 36, kBottom = 50;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-300) lo -= 0.5, hi += 0.5;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
         << "\" viewBox=\"0 0 " << w << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  std::ostringstream& os() { return out_; }

  void frame(const std::string& title, const std::string& xl, const std::string& yl,
             const Range& xr, const Range& yr, bool log_y) {
    const int x0 = kLeft, x1 = w_ - kRight, y0 = h_ - kBottom, y1 = kTop;
    out_ << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\""
         << y0 - y1 << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = xr.lo + i * (xr.hi - xr.lo) / 4, fy = yr.lo + i * (yr.hi - yr.lo) / 4;
      const double px = xr.map(fx, x0, x1), py = yr.map(fy, y0, y1);
      out_ << "<text x=\"" << px << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(fx)
           << "</text>\n";
      out_ << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
           << (log_y ? "1e" + num(fy) : num(fy)) << "</text>\n";
    }
    out_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << h_ - 12 << "\" text-anchor=\"middle\">"
         << escape(xl) << "</text>\n";
    out_ << "<text x=\"14\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
         << (y0 + y1) / 2 << ")\">" << escape(yl) << "</text>\n";
    out_ << "<text x=\"" << w_ / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
         << escape(title) << "</text>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

  int width() const { return w_; }
  int height() const { return h_; }

 private:
  int w_, h_;
  std::ostringstream out_;
};

double transform(double v, bool log) {
  if (!log) return v;
  return v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
}

// Viridis-like ramp on t in [0, 1].
std::string ramp(double t) {
  static const double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

}  // namespace

std::string render_svg(const LinePlot& plot, int width, int height) {
  Range xr, yr;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::InvalidArgument, "series x and y differ in length");
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      const double y = transform(s.y(i), plot.log_y);
      if (!std::isfinite(y)) continue;
      xr.add(s.x(i));
      yr.add(y);
    }
  }
  xr.settle();
  yr.settle();
  Canvas c(width, height);
  c.frame(plot.title, plot.x_label, plot.y_label, xr, yr, plot.log_y);
  const int x0 = kLeft, x1 = width - kRight, y0 = height - kBottom, y1 = kTop;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const Series& s = plot.series[k];
    const char* colour = kPalette[k % 8];
    // Non-finite samples break the polyline.
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        c.os() << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\""
               << pts << "\"/>\n";
      pts.clear();
    };
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      const double y = transform(s.y(i), plot.log_y);
      if (!std::isfinite(y) || !std::isfinite(s.x(i))) {
        flush();
        continue;
      }
      pts += num(xr.map(s.x(i), x0, x1)) + "," + num(yr.map(y, y0, y1)) + " ";
    }
    flush();
    if (!s.label.empty())
      c.os() << "<text x=\"" << x1 - 8 << "\" y=\"" << y1 + 14 + 13 * static_cast<int>(k)
             << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(s.label) << "</text>\n";
  }
  return c.finish();
}

std::string render_svg(const Heatmap& map, int width, int height) {
  if (map.z.rows() != map.y.size() || map.z.cols() != map.x.size())
    throw Error(ErrorCode::InvalidArgument, "heatmap grid does not match z");
  Range xr, yr, zr;
  for (Eigen::Index j = 0; j < map.x.size(); ++j) xr.add(map.x(j));
  for (Eigen::Index i = 0; i < map.y.size(); ++i) yr.add(map.y(i));
  for (Eigen::Index i = 0; i < map.z.size(); ++i) zr.add(transform(map.z.data()[i], map.log_z));
  xr.settle();
  yr.settle();
  zr.settle();
  Canvas c(width, height);
  c.frame(map.title, map.x_label, map.y_label, xr, yr, false);
  const int x0 = kLeft, x1 = width - kRight, y0 = height - kBottom, y1 = kTop;
  const double cw = static_cast<double>(x1 - x0) / std::max<Eigen::Index>(1, map.x.size());
  const double ch = static_cast<double>(y0 - y1) / std::max<Eigen::Index>(1, map.y.size());
  // Cells are drawn by index so uneven grids still tile the frame.
  for (Eigen::Index i = 0; i < map.z.rows(); ++i)
    for (Eigen::Index j = 0; j < map.z.cols(); ++j) {
      const double v = transform(map.z(i, j), map.log_z);
      if (!std::isfinite(v)) continue;
      c.os() << "<rect x=\"" << num(x0 + j * cw) << "\" y=\"" << num(y0 - (i + 1) * ch) << "\" width=\""
             << num(cw + 0.3) << "\" height=\"" << num(ch + 0.3) << "\" fill=\""
             << ramp((v - zr.lo) / (zr.hi - zr.lo)) << "\"/>\n";
    }
  return c.finish();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace kresling
