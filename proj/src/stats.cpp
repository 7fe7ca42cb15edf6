#include "compbench/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "compbench/error.hpp"

namespace compbench::stats {

double student_t_two_sided_p(double t, double df) {
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

double student_t_quantile(double prob, double df) {
  return boost::math::quantile(boost::math::students_t(df), prob);
}

PairedT paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ArgumentError("paired_t: score vectors differ in length");
  if (a.size() < 2) throw ArgumentError("paired_t: need at least 2 pairs");
  const auto n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  PairedT r;
  r.df = static_cast<int>(n - 1);
  if (sd == 0.0) {
    r.degenerate = true;
    r.exact_difference = mean != 0.0;
    r.p_two_sided = r.exact_difference ? 0.0 : 1.0;
    r.t = r.exact_difference ? std::copysign(std::numeric_limits<double>::infinity(), mean) : 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p_two_sided = student_t_two_sided_p(r.t, r.df);
  return r;
}

std::vector<double> bh_correct(const std::vector<double>& pvals) {
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("bh_correct: p-value outside [0, 1]");
  }
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pvals[i] < pvals[j]; });

  std::vector<double> adj(m);
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t k = m; k-- > 0;) {
    const double candidate = pvals[order[k]] * (static_cast<double>(m) / static_cast<double>(k + 1));
    running = std::min(running, candidate);
    adj[order[k]] = running;
  }
  return adj;
}

std::vector<PairedTestResult> pairwise_tests(const std::vector<std::string>& names,
                                             const std::vector<std::vector<double>>& scores, double q) {
  if (names.size() != scores.size()) throw ArgumentError("pairwise_tests: names/scores mismatch");
  std::vector<PairedTestResult> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      const PairedT t = paired_t(scores[i], scores[j]);
      out.push_back({names[i], names[j], t.t, t.df, t.p_two_sided, t.p_two_sided, false, t.degenerate});
    }
  }
  std::vector<double> raw;
  raw.reserve(out.size());
  for (const auto& r : out) raw.push_back(r.p_two_sided);
  const auto adj = bh_correct(raw);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].p_bh_adjusted = adj[k];
    out[k].significant = adj[k] <= q;
  }
  return out;
}

double RegressionFit::band_half_width(double x) const {
  return t_crit * residual_se * std::sqrt(1.0 / n + (x - mean_x) * (x - mean_x) / sxx);
}

RegressionFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("ols_fit: x and y differ in length");
  if (x.size() < 3) throw ArgumentError("ols_fit: need at least 3 points");
  const auto n = x.size();
  const double nd = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateError("ols_fit: x is constant");

  RegressionFit f;
  f.n = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.predict(x[i]);
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  f.mean_x = mx;
  f.sxx = sxx;
  f.residual_se = std::sqrt(sse / (nd - 2.0));
  f.t_crit = student_t_quantile(0.975, nd - 2.0);
  const double half = f.t_crit * f.residual_se / std::sqrt(sxx);
  f.slope_ci_low = f.slope - half;
  f.slope_ci_high = f.slope + half;
  return f;
}

double quantile_inclusive(std::vector<double> xs, double p) {
  if (xs.empty()) throw ArgumentError("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

BoxSummary box_summary(const std::vector<double>& scores) {
  if (scores.empty()) throw ArgumentError("box_summary: empty sample");
  std::vector<double> s = scores;
  std::sort(s.begin(), s.end());
  BoxSummary b;
  b.n = static_cast<int>(s.size());
  b.q1 = quantile_inclusive(s, 0.25);
  b.median = quantile_inclusive(s, 0.5);
  b.q3 = quantile_inclusive(s, 0.75);
  const double iqr = b.q3 - b.q1;
  const double half = 1.57 * iqr / std::sqrt(static_cast<double>(b.n));
  b.notch_low = b.median - half;
  b.notch_high = b.median + half;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = *std::lower_bound(s.begin(), s.end(), lo_fence);
  b.whisker_high = *(std::upper_bound(s.begin(), s.end(), hi_fence) - 1);
  return b;
}

}  // namespace compbench::stats
