#include "compbench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "compbench/error.hpp"

namespace compbench::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void header(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt2(kWidth) << "\" height=\""
    << fmt2(kHeight) << "\" viewBox=\"0 0 " << fmt2(kWidth) << ' ' << fmt2(kHeight) << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << fmt2(kWidth) << "\" height=\"" << fmt2(kHeight)
    << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << fmt2(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\">"
    << escape(title) << "</text>\n";
}

void line(std::ostringstream& o, double x1, double y1, double x2, double y2, const char* stroke,
          const char* extra = "") {
  o << "<line x1=\"" << fmt2(x1) << "\" y1=\"" << fmt2(y1) << "\" x2=\"" << fmt2(x2) << "\" y2=\""
    << fmt2(y2) << "\" stroke=\"" << stroke << "\"" << extra << "/>\n";
}

void text(std::ostringstream& o, double x, double y, const std::string& s, const char* anchor,
          int size = 11) {
  o << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(y) << "\" text-anchor=\"" << anchor
    << "\" font-family=\"sans-serif\" font-size=\"" << size << "\">" << escape(s) << "</text>\n";
}

void y_axis(std::ostringstream& o, const Frame& f, const std::string& label) {
  const double x0 = kMarginLeft;
  line(o, x0, kMarginTop, x0, kHeight - kMarginBottom, "black");
  for (int k = 0; k <= 4; ++k) {
    const double v = f.y_lo + (f.y_hi - f.y_lo) * k / 4.0;
    line(o, x0 - 4, f.py(v), x0, f.py(v), "black");
    text(o, x0 - 6, f.py(v) + 4, fmt2(v), "end", 10);
  }
  o << "<text x=\"14\" y=\"" << fmt2((kMarginTop + kHeight - kMarginBottom) / 2)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 "
    << fmt2((kMarginTop + kHeight - kMarginBottom) / 2) << ")\">" << escape(label) << "</text>\n";
}

}  // namespace

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  // Avoid "-0.00".
  if (std::string_view(buf) == "-0.00") return "0.00";
  return buf;
}

double Frame::px(double x) const {
  return kMarginLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kMarginLeft - kMarginRight);
}

double Frame::py(double y) const {
  return kHeight - kMarginBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kMarginTop - kMarginBottom);
}

std::pair<double, double> padded_range(const std::vector<double>& v) {
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo <= 0.0) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string plot_box(const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& scores, const std::string& title) {
  if (names.empty() || names.size() != scores.size()) throw ArgumentError("plot_box: need one score set per name");
  std::vector<double> all;
  std::vector<stats::BoxSummary> boxes;
  for (const auto& s : scores) {
    if (s.empty()) throw ArgumentError("plot_box: empty score set");
    boxes.push_back(stats::box_summary(s));
    all.insert(all.end(), s.begin(), s.end());
    all.push_back(boxes.back().notch_low);
    all.push_back(boxes.back().notch_high);
  }
  Frame f;
  std::tie(f.y_lo, f.y_hi) = padded_range(all);
  f.x_lo = 0.0;
  f.x_hi = static_cast<double>(names.size());

  std::ostringstream o;
  header(o, title);
  y_axis(o, f, "score");
  line(o, kMarginLeft, kHeight - kMarginBottom, kWidth - kMarginRight, kHeight - kMarginBottom, "black");

  const double slot = f.px(1.0) - f.px(0.0);
  const double half = std::min(40.0, slot * 0.3);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = f.px(static_cast<double>(i) + 0.5);
    const double notch_in = half * 0.5;
    const double nlo = std::max(b.notch_low, b.q1), nhi = std::min(b.notch_high, b.q3);
    // Notched box outline, clockwise from the lower-left corner.
    o << "<polygon fill=\"#cfe0f3\" stroke=\"black\" points=\"";
    const double pts[][2] = {{cx - half, f.py(b.q1)},     {cx - half, f.py(nlo)},
                             {cx - notch_in, f.py(b.median)}, {cx - half, f.py(nhi)},
                             {cx - half, f.py(b.q3)},     {cx + half, f.py(b.q3)},
                             {cx + half, f.py(nhi)},      {cx + notch_in, f.py(b.median)},
                             {cx + half, f.py(nlo)},      {cx + half, f.py(b.q1)}};
    for (std::size_t k = 0; k < std::size(pts); ++k) {
      o << (k ? " " : "") << fmt2(pts[k][0]) << ',' << fmt2(pts[k][1]);
    }
    o << "\"/>\n";
    line(o, cx - notch_in, f.py(b.median), cx + notch_in, f.py(b.median), "red", " stroke-width=\"2\"");
    line(o, cx, f.py(b.q3), cx, f.py(b.whisker_high), "black");
    line(o, cx, f.py(b.q1), cx, f.py(b.whisker_low), "black");
    line(o, cx - half / 2, f.py(b.whisker_high), cx + half / 2, f.py(b.whisker_high), "black");
    line(o, cx - half / 2, f.py(b.whisker_low), cx + half / 2, f.py(b.whisker_low), "black");
    text(o, cx, kHeight - kMarginBottom + 16, names[i], "middle");
    text(o, cx, kHeight - kMarginBottom + 30, "median " + fmt2(b.median), "middle", 9);
  }
  o << "</svg>\n";
  return o.str();
}

Frame scatter_frame(const std::vector<double>& x, const std::vector<double>& y) {
  Frame f;
  std::tie(f.x_lo, f.x_hi) = padded_range(x);
  std::tie(f.y_lo, f.y_hi) = padded_range(y);
  return f;
}

std::string plot_scatter_fit(const std::vector<double>& x, const std::vector<double>& y,
                             const stats::RegressionFit& fit, const std::string& title,
                             const std::string& x_label, const std::string& y_label) {
  if (x.empty() || x.size() != y.size()) throw ArgumentError("plot_scatter_fit: need matching non-empty x, y");
  const Frame f = scatter_frame(x, y);

  std::ostringstream o;
  header(o, title);
  y_axis(o, f, y_label);
  const double base = kHeight - kMarginBottom;
  line(o, kMarginLeft, base, kWidth - kMarginRight, base, "black");
  for (int k = 0; k <= 4; ++k) {
    const double v = f.x_lo + (f.x_hi - f.x_lo) * k / 4.0;
    line(o, f.px(v), base, f.px(v), base + 4, "black");
    text(o, f.px(v), base + 16, fmt2(v), "middle", 10);
  }
  text(o, (kMarginLeft + kWidth - kMarginRight) / 2, kHeight - 10, x_label, "middle");

  o << "<g>\n";
  // Confidence band as a closed polygon sampled at 21 x positions.
  constexpr int kBandSteps = 20;
  o << "<polygon fill=\"#f4c7c3\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (int k = 0; k <= kBandSteps; ++k) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * k / kBandSteps;
    o << (k ? " " : "") << fmt2(f.px(xv)) << ',' << fmt2(f.py(fit.predict(xv) + fit.band_half_width(xv)));
  }
  for (int k = kBandSteps; k >= 0; --k) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * k / kBandSteps;
    o << ' ' << fmt2(f.px(xv)) << ',' << fmt2(f.py(fit.predict(xv) - fit.band_half_width(xv)));
  }
  o << "\"/>\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    o << "<circle cx=\"" << fmt2(f.px(x[i])) << "\" cy=\"" << fmt2(f.py(y[i]))
      << "\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
  }
  line(o, f.px(f.x_lo), f.py(fit.predict(f.x_lo)), f.px(f.x_hi), f.py(fit.predict(f.x_hi)), "red",
       " stroke-width=\"2\"");
  o << "</g>\n";
  text(o, kWidth - kMarginRight, kMarginTop - 6,
       "slope " + fmt2(fit.slope) + " [" + fmt2(fit.slope_ci_low) + ", " + fmt2(fit.slope_ci_high) +
           "]  r2 " + fmt2(fit.r2),
       "end", 10);
  o << "</svg>\n";
  return o.str();
}

}  // namespace compbench::svg
