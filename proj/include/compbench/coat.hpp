#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "compbench/balance.hpp"
#include "compbench/encoders.hpp"

namespace compbench {

/// Cosine between zB - zA and zD - zC, differences in double. Empty when either difference is
/// the zero vector.
template <typename VA, typename VB, typename VC, typename VD>
std::optional<double> coat_score(const Eigen::MatrixBase<VA>& za, const Eigen::MatrixBase<VB>& zb,
                                 const Eigen::MatrixBase<VC>& zc, const Eigen::MatrixBase<VD>& zd) {
  if (za.size() != zb.size() || zb.size() != zc.size() || zc.size() != zd.size()) {
    throw ArgumentError("coat_score: embedding dimensions differ");
  }
  const Eigen::VectorXd d1 = zb.template cast<double>() - za.template cast<double>();
  const Eigen::VectorXd d2 = zd.template cast<double>() - zc.template cast<double>();
  if (!(d1.norm() > 0.0) || !(d2.norm() > 0.0)) return std::nullopt;
  return cosine(d1, d2);
}

struct CoatItem {
  std::string quad_id;
  /// Empty for degenerate quadruples.
  std::optional<double> score;
  EntropyProfile entropy;
};

struct CoatResult {
  std::vector<CoatItem> items;  // sorted by quad id
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_valid = 0;
  std::size_t n_degenerate = 0;

  /// Scores and H^quad of the valid items, in item order.
  [[nodiscard]] std::vector<double> valid_scores() const;
  [[nodiscard]] std::vector<double> valid_entropies() const;
};

/// Scores every quadruple. `profiles[i]` belongs to `quads[i]`.
CoatResult evaluate_coat(const EmbeddingSet& embeddings, const std::vector<Quadruple>& quads,
                         const std::vector<EntropyProfile>& profiles);

/// coat_scores.csv: quad_id, score, H_quad, H_timbre_quad, H_pitch_quad, H_rate_quad, H_amp_quad.
/// Degenerate quadruples have an empty score field.
void write_coat_csv(const std::filesystem::path& path, const CoatResult& r);

/// Mean and sample standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs);

/// Shortest round-trip decimal form of a double, used in every CSV the pipeline writes.
std::string format_double(double x);

}  // namespace compbench
