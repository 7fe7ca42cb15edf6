#include "compbench/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "compbench/error.hpp"

namespace compbench {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double x, double beta) {
  if (std::abs(x) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace

PolyphaseResampler::PolyphaseResampler(Eigen::Index n_in, Eigen::Index n_out, int zero_crossings,
                                       double kaiser_beta)
    : n_in_(n_in), n_out_(n_out) {
  if (n_in <= 0 || n_out <= 0) throw ArgumentError("resampler sizes must be positive");
  if (zero_crossings <= 0) throw ArgumentError("resampler needs at least one zero crossing");
  const Eigen::Index g = std::gcd(n_in, n_out);
  up_ = n_out / g;
  down_ = n_in / g;

  // Cutoff in cycles per input sample.
  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(n_out) / static_cast<double>(n_in));
  const double half_width = zero_crossings / (2.0 * cutoff);
  half_taps_ = static_cast<Eigen::Index>(std::ceil(half_width));

  phases_.reserve(static_cast<std::size_t>(up_));
  for (Eigen::Index p = 0; p < up_; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up_);
    Eigen::VectorXd h(2 * half_taps_ + 2);
    for (Eigen::Index j = -half_taps_; j <= half_taps_ + 1; ++j) {
      const double tau = static_cast<double>(j) - frac;
      h[j + half_taps_] = 2.0 * cutoff * sinc(2.0 * cutoff * tau) * kaiser(tau / half_width, kaiser_beta);
    }
    // Unit DC gain per phase.
    h /= h.sum();
    phases_.push_back(std::move(h));
  }
}

Eigen::VectorXd PolyphaseResampler::apply(const Eigen::Ref<const Eigen::VectorXf>& x) const {
  if (x.size() != n_in_) {
    throw ArgumentError("resampler expects " + std::to_string(n_in_) + " samples, got " +
                        std::to_string(x.size()));
  }
  Eigen::VectorXd y(n_out_);
  const Eigen::Index span = 2 * half_taps_ + 2;
  for (Eigen::Index m = 0; m < n_out_; ++m) {
    const Eigen::Index num = m * down_;
    const Eigen::Index center = num / up_;
    const Eigen::VectorXd& h = phases_[static_cast<std::size_t>(num % up_)];
    const Eigen::Index first = center - half_taps_;
    const Eigen::Index lo = std::max<Eigen::Index>(0, first);
    const Eigen::Index hi = std::min<Eigen::Index>(n_in_, first + span);
    if (hi <= lo) {
      y[m] = 0.0;
      continue;
    }
    y[m] = h.segment(lo - first, hi - lo).dot(x.segment(lo, hi - lo).cast<double>());
  }
  return y;
}

}  // namespace compbench
