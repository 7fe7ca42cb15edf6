#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "compbench/core.hpp"
#include "compbench/pool.hpp"

namespace compbench {

/// Per-attribute entropies of one item plus their sum. For scenes each entry is in [0, 1];
/// for quadruples each is in [0, 3].
struct EntropyProfile {
  std::array<double, kNumAttributes> per_attribute{};
  double aggregate = 0.0;
};

/// Normalized Shannon entropy of the class histogram of `kind` over `sources`.
double scene_entropy(const std::vector<Source>& sources, AttributeKind kind);
double scene_entropy(const Scene& scene, AttributeKind kind);

/// H(A) + H(C) + H(T) for one attribute.
double quad_entropy(const Quadruple& quad, const Pool& pool, AttributeKind kind);

EntropyProfile scene_profile(const Scene& scene);
EntropyProfile quad_profile(const Quadruple& quad, const Pool& pool);

struct BalanceTarget {
  int bins_per_feature = 4;
  std::size_t subset_size = 0;
};

/// Equal-width bins per feature spanning the observed [min, max] of that feature.
struct FeatureBinning {
  int bins = 4;
  std::vector<double> lo, hi;

  static FeatureBinning fit(const std::vector<EntropyProfile>& profiles, int bins);
  [[nodiscard]] int bin(std::size_t feature, double value) const;
  [[nodiscard]] std::size_t num_features() const { return lo.size(); }
};

/// Greedy capped-coverage subset selection. Returns indices into `profiles` in pick order.
std::vector<std::size_t> entrofy_select(const std::vector<EntropyProfile>& profiles,
                                        const BalanceTarget& target, std::uint64_t seed);

/// Counts per (feature, bin) cell, row-major by feature.
std::vector<double> cell_counts(const std::vector<EntropyProfile>& profiles,
                                const FeatureBinning& binning,
                                const std::vector<std::size_t>& subset);

/// Largest |count - n / bins| over all cells.
double max_cell_deviation(const std::vector<double>& counts, int bins, std::size_t n);

/// Pearson chi-square of cell counts against the uniform target n / bins.
double chi_square_uniform(const std::vector<double>& counts, int bins, std::size_t n);

struct Splits {
  std::vector<std::string> train, val, test;
};

/// Stratified 80/10/10 split by aggregate-entropy bin.
Splits make_splits(const std::vector<std::string>& ids, const std::vector<double>& aggregate_h,
                   std::uint64_t seed, int bins = 4);

void write_balanced_ids(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const BalanceTarget& target, std::uint64_t seed, Task task);
std::vector<std::string> read_balanced_ids(const std::filesystem::path& path);

void write_splits(const std::filesystem::path& path, const Splits& splits);
Splits read_splits(const std::filesystem::path& path);

}  // namespace compbench
