#pragma once

#include <string>
#include <vector>

namespace compbench::stats {

struct PairedT {
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
  /// sd of the differences is zero; t is undefined.
  bool degenerate = false;
  /// Degenerate with a non-zero constant difference (p reported as 0).
  bool exact_difference = false;
};

/// Paired two-sided Student t-test on d = a - b.
PairedT paired_t(const std::vector<double>& a, const std::vector<double>& b);

/// Two-sided tail probability P(|T| >= |t|) for Student t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Upper quantile t such that P(T <= t) = prob.
double student_t_quantile(double prob, double df);

/// Benjamini-Hochberg adjusted p-values, returned in input order.
std::vector<double> bh_correct(const std::vector<double>& pvals);

struct PairedTestResult {
  std::string model_a, model_b;
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
  double p_bh_adjusted = 1.0;
  bool significant = false;
  bool degenerate = false;
};

/// All unordered pairs of `names` (i < j), tested and BH-adjusted together.
std::vector<PairedTestResult> pairwise_tests(const std::vector<std::string>& names,
                                             const std::vector<std::vector<double>>& scores,
                                             double q = 0.05);

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double r2 = 0.0;
  int n = 0;
  // For the pointwise 95% mean-response band.
  double mean_x = 0.0;
  double sxx = 0.0;
  double residual_se = 0.0;
  double t_crit = 0.0;

  [[nodiscard]] double predict(double x) const { return intercept + slope * x; }
  /// Half-width of the 95% confidence band of the fitted mean at x.
  [[nodiscard]] double band_half_width(double x) const;
};

/// Ordinary least squares y = intercept + slope * x with a 95% slope interval.
RegressionFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

struct BoxSummary {
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  double notch_low = 0.0, notch_high = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;
  int n = 0;
};

/// Quantile by linear interpolation between closest ranks (inclusive method).
double quantile_inclusive(std::vector<double> xs, double p);

BoxSummary box_summary(const std::vector<double>& scores);

}  // namespace compbench::stats
