#include "dtmfc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dtmfc/common.hpp"

namespace dtmfc::svg {

namespace {

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void expand(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void pad() {
    if (hi <= lo) hi = lo + 1.0;
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;
  }
};

// Pixel coordinates rounded to 0.01 px keep the files small and the bytes
// reproducible.
std::string px(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return format_double(r);
}

std::string tick_label(double v) {
  // Shorten near-zero noise from range arithmetic.
  if (std::abs(v) < 1e-12) v = 0.0;
  const double r = std::round(v * 1e6) / 1e6;
  return format_double(r);
}

struct Frame {
  int width = 0;
  int height = 0;
  int ml = 64, mr = 16, mt = 36, mb = 44;
  Range xr, yr;

  double sx(double x) const {
    return ml + (x - xr.lo) / (xr.hi - xr.lo) * (width - ml - mr);
  }
  double sy(double y) const {
    return height - mb - (y - yr.lo) / (yr.hi - yr.lo) * (height - mt - mb);
  }
};

void open_svg(std::ostringstream& os, int w, int h, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
     << "<style>text{font-family:sans-serif;font-size:12px;}.title{font-size:14px;}"
        ".axis{stroke:#333;stroke-width:1;}.grid{stroke:#ddd;stroke-width:1;}"
        ".stem{stroke-width:1;}</style>\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n"
     << "<text class=\"title\" x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
     << "</text>\n";
}

void draw_axes(std::ostringstream& os, const Frame& f, const std::string& x_label,
               const std::string& y_label) {
  os << "<line class=\"axis\" x1=\"" << f.ml << "\" y1=\"" << f.height - f.mb << "\" x2=\""
     << f.width - f.mr << "\" y2=\"" << f.height - f.mb << "\"/>\n";
  os << "<line class=\"axis\" x1=\"" << f.ml << "\" y1=\"" << f.mt << "\" x2=\"" << f.ml
     << "\" y2=\"" << f.height - f.mb << "\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.xr.lo + (f.xr.hi - f.xr.lo) * i / 5.0;
    const double yv = f.yr.lo + (f.yr.hi - f.yr.lo) * i / 5.0;
    const std::string xp = px(f.sx(xv));
    const std::string yp = px(f.sy(yv));
    os << "<line class=\"grid\" x1=\"" << xp << "\" y1=\"" << f.mt << "\" x2=\"" << xp
       << "\" y2=\"" << f.height - f.mb << "\"/>\n";
    os << "<text x=\"" << xp << "\" y=\"" << f.height - f.mb + 16 << "\" text-anchor=\"middle\">"
       << tick_label(xv) << "</text>\n";
    os << "<text x=\"" << f.ml - 6 << "\" y=\"" << yp << "\" text-anchor=\"end\" dy=\"4\">"
       << tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << (f.ml + f.width - f.mr) / 2 << "\" y=\"" << f.height - 8
     << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  os << "<text x=\"14\" y=\"" << (f.mt + f.height - f.mb) / 2
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << (f.mt + f.height - f.mb) / 2
     << ")\">" << y_label << "</text>\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series, int width,
                       int height) {
  Frame f;
  f.width = width;
  f.height = height;
  f.xr.lo = std::numeric_limits<double>::infinity();
  f.xr.hi = -std::numeric_limits<double>::infinity();
  f.yr = f.xr;
  for (const auto& s : series) {
    for (double v : s.x) f.xr.expand(v);
    for (double v : s.y) f.yr.expand(v);
  }
  if (!std::isfinite(f.xr.lo)) f.xr = {0.0, 1.0};
  if (!std::isfinite(f.yr.lo)) f.yr = {0.0, 1.0};
  f.xr.pad();
  f.yr.pad();

  std::ostringstream os;
  open_svg(os, width, height, title);
  draw_axes(os, f, x_label, y_label);

  int legend_y = f.mt + 6;
  for (const auto& s : series) {
    os << "<path fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" d=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << (i == 0 ? 'M' : 'L') << px(f.sx(s.x[i])) << ' ' << px(f.sy(s.y[i]));
    }
    os << "\"/>\n";
    os << "<line x1=\"" << f.width - f.mr - 140 << "\" y1=\"" << legend_y << "\" x2=\""
       << f.width - f.mr - 120 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << f.width - f.mr - 114 << "\" y=\"" << legend_y + 4 << "\">" << s.label
       << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

std::string stem_chart(const std::string& title, const std::string& y_label,
                       const std::vector<double>& values, int width, int height) {
  Frame f;
  f.width = width;
  f.height = height;
  f.xr = {0.0, static_cast<double>(values.empty() ? 1 : values.size())};
  f.yr = {0.0, 0.0};
  for (double v : values) f.yr.expand(v);
  f.yr.pad();
  f.xr.pad();

  std::ostringstream os;
  open_svg(os, width, height, title);
  draw_axes(os, f, "draw", y_label);
  const std::string base = px(f.sy(0.0));
  os << "<line class=\"axis\" x1=\"" << f.ml << "\" y1=\"" << base << "\" x2=\"" << f.width - f.mr
     << "\" y2=\"" << base << "\"/>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const std::string xp = px(f.sx(static_cast<double>(i)));
    const char* color = std::isnan(v) ? "#999" : (v > 0.0 ? "#2a7" : "#c33");
    const std::string tip = std::isnan(v) ? base : px(f.sy(v));
    os << "<line class=\"stem\" stroke=\"" << color << "\" x1=\"" << xp << "\" y1=\"" << base
       << "\" x2=\"" << xp << "\" y2=\"" << tip << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string histogram_pair(const std::string& title, const std::string& label_a,
                           const std::vector<double>& a, const std::string& label_b,
                           const std::vector<double>& b, int width, int height) {
  std::ostringstream os;
  open_svg(os, width, height, title);

  auto panel = [&](const std::vector<double>& data, const std::string& label, int x0, int pw) {
    if (data.empty()) return;
    Range r;
    r.lo = *std::min_element(data.begin(), data.end());
    r.hi = *std::max_element(data.begin(), data.end());
    if (r.hi <= r.lo) r.hi = r.lo + 1.0;
    constexpr int bins = 20;
    std::vector<int> count(bins, 0);
    for (double v : data) {
      auto bi = static_cast<int>((v - r.lo) / (r.hi - r.lo) * bins);
      bi = std::clamp(bi, 0, bins - 1);
      ++count[static_cast<std::size_t>(bi)];
    }
    const int peak = *std::max_element(count.begin(), count.end());
    const int top = 48;
    const int bottom = height - 40;
    for (int i = 0; i < bins; ++i) {
      const double frac = static_cast<double>(count[static_cast<std::size_t>(i)]) / peak;
      const double bh = frac * (bottom - top);
      const double bx = x0 + static_cast<double>(i) / bins * pw;
      os << "<rect fill=\"#58c\" stroke=\"white\" x=\"" << px(bx) << "\" y=\"" << px(bottom - bh)
         << "\" width=\"" << px(static_cast<double>(pw) / bins) << "\" height=\"" << px(bh)
         << "\"/>\n";
    }
    os << "<line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << bottom << "\" x2=\"" << x0 + pw
       << "\" y2=\"" << bottom << "\"/>\n";
    os << "<text x=\"" << x0 << "\" y=\"" << bottom + 16 << "\">" << tick_label(r.lo)
       << "</text>\n";
    os << "<text x=\"" << x0 + pw << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\">"
       << tick_label(r.hi) << "</text>\n";
    os << "<text x=\"" << x0 + pw / 2 << "\" y=\"" << bottom + 32 << "\" text-anchor=\"middle\">"
       << label << "</text>\n";
  };

  const int pw = (width - 3 * 24) / 2;
  panel(a, label_a, 24, pw);
  panel(b, label_b, 24 * 2 + pw, pw);
  os << "</svg>\n";
  return os.str();
}

}  // namespace dtmfc::svg
