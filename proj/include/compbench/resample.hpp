#pragma once

#include <Eigen/Core>
#include <vector>

namespace compbench {

/// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
///
/// The kernel low-passes at the Nyquist frequency of the lower of the two rates. Signal values
/// outside [0, n_in) are treated as zero, so the map from input to output is linear.
class PolyphaseResampler {
 public:
  PolyphaseResampler(Eigen::Index n_in, Eigen::Index n_out, int zero_crossings = 64,
                     double kaiser_beta = 8.6);

  [[nodiscard]] Eigen::Index input_size() const { return n_in_; }
  [[nodiscard]] Eigen::Index output_size() const { return n_out_; }

  [[nodiscard]] Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXf>& x) const;

 private:
  Eigen::Index n_in_, n_out_;
  Eigen::Index up_, down_;
  Eigen::Index half_taps_;
  // One kernel per output phase; taps cover input offsets [-half_taps_, half_taps_ + 1].
  std::vector<Eigen::VectorXd> phases_;
};

}  // namespace compbench
