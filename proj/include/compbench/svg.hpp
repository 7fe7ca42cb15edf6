#pragma once

#include <string>
#include <vector>

#include "compbench/stats.hpp"

namespace compbench::svg {

inline constexpr double kWidth = 640.0;
inline constexpr double kHeight = 400.0;
inline constexpr double kMarginLeft = 60.0;
inline constexpr double kMarginRight = 20.0;
inline constexpr double kMarginTop = 40.0;
inline constexpr double kMarginBottom = 50.0;

/// Linear map from data coordinates to canvas pixels (y grows downward).
struct Frame {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;

  [[nodiscard]] double px(double x) const;
  [[nodiscard]] double py(double y) const;
};

/// Data range padded by 5% on each side; a zero-width range is widened to +-0.5.
std::pair<double, double> padded_range(const std::vector<double>& v);

/// Pixel coordinates are written with two decimals.
std::string fmt2(double v);

/// Notched box plot, one box per model, in the given order.
std::string plot_box(const std::vector<std::string>& names,
                     const std::vector<std::vector<double>>& scores, const std::string& title);

/// Scatter of (x, y) with the fitted line and its 95% mean-response band.
std::string plot_scatter_fit(const std::vector<double>& x, const std::vector<double>& y,
                             const stats::RegressionFit& fit, const std::string& title,
                             const std::string& x_label, const std::string& y_label);

/// Frame used by plot_scatter_fit for the given data.
Frame scatter_frame(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace compbench::svg
