#include "compbench/balance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "compbench/error.hpp"
#include "compbench/rng.hpp"

namespace compbench {

namespace {

using ojson = nlohmann::ordered_json;

// Values sitting on a bin edge up to rounding go to the upper bin.
constexpr double kBinSnap = 1e-9;

}  // namespace

double scene_entropy(const std::vector<Source>& sources, AttributeKind kind) {
  if (sources.empty()) throw ArgumentError("scene_entropy: empty scene");
  std::array<int, kNumClasses> hist{};
  for (const auto& s : sources) ++hist[static_cast<std::size_t>(s.cls(kind))];
  const double n = static_cast<double>(sources.size());
  double h = 0.0;
  for (int c : hist) {
    if (c == 0) continue;
    const double p = c / n;
    h -= p * std::log2(p);
  }
  return h / std::log2(static_cast<double>(kNumClasses));
}

double scene_entropy(const Scene& scene, AttributeKind kind) {
  if (scene.sources.empty()) throw ArgumentError("scene_entropy: scene " + scene.id + " is empty");
  return scene_entropy(scene.sources, kind);
}

double quad_entropy(const Quadruple& quad, const Pool& pool, AttributeKind kind) {
  if (quad.t_sources.empty()) throw ArgumentError("quad_entropy: empty T in " + quad.id);
  return scene_entropy(pool.scene(quad.a_id), kind) + scene_entropy(pool.scene(quad.c_id), kind) +
         scene_entropy(quad.t_sources, kind);
}

EntropyProfile scene_profile(const Scene& scene) {
  EntropyProfile p;
  for (AttributeKind k : kAttributeKinds) {
    p.per_attribute[static_cast<std::size_t>(k)] = scene_entropy(scene, k);
  }
  for (double h : p.per_attribute) p.aggregate += h;
  return p;
}

EntropyProfile quad_profile(const Quadruple& quad, const Pool& pool) {
  EntropyProfile p;
  for (AttributeKind k : kAttributeKinds) {
    p.per_attribute[static_cast<std::size_t>(k)] = quad_entropy(quad, pool, k);
  }
  for (double h : p.per_attribute) p.aggregate += h;
  return p;
}

FeatureBinning FeatureBinning::fit(const std::vector<EntropyProfile>& profiles, int bins) {
  if (bins < 2) throw ArgumentError("bins_per_feature must be at least 2");
  FeatureBinning b;
  b.bins = bins;
  b.lo.assign(kNumAttributes, 0.0);
  b.hi.assign(kNumAttributes, 0.0);
  for (std::size_t f = 0; f < kNumAttributes; ++f) {
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& p : profiles) {
      const double v = p.per_attribute[f];
      if (first || v < lo) lo = v;
      if (first || v > hi) hi = v;
      first = false;
    }
    b.lo[f] = lo;
    b.hi[f] = hi;
  }
  return b;
}

int FeatureBinning::bin(std::size_t feature, double value) const {
  const double width = hi[feature] - lo[feature];
  if (!(width > 0.0)) return 0;
  const int k = static_cast<int>(std::floor((value - lo[feature]) / width * bins + kBinSnap));
  return std::clamp(k, 0, bins - 1);
}

std::vector<std::size_t> entrofy_select(const std::vector<EntropyProfile>& profiles,
                                        const BalanceTarget& target, std::uint64_t seed) {
  const std::size_t n = profiles.size();
  if (target.subset_size > n) {
    throw ArgumentError("entrofy_select: subset_size " + std::to_string(target.subset_size) +
                        " exceeds pool of " + std::to_string(n));
  }
  std::vector<std::size_t> picked;
  if (target.subset_size == 0) return picked;

  const FeatureBinning binning = FeatureBinning::fit(profiles, target.bins_per_feature);
  const std::size_t nf = binning.num_features();
  const int bins = binning.bins;
  const double cell_target = static_cast<double>(target.subset_size) / bins;

  // Items with the same cell signature have the same marginal gain, so the greedy scan runs
  // over signatures; ties are still broken uniformly over items.
  std::map<std::vector<int>, std::size_t> group_of;
  std::vector<std::vector<int>> signatures;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> sig(nf);
    for (std::size_t f = 0; f < nf; ++f) sig[f] = binning.bin(f, profiles[i].per_attribute[f]);
    auto [it, inserted] = group_of.try_emplace(sig, signatures.size());
    if (inserted) {
      signatures.push_back(sig);
      members.emplace_back();
    }
    members[it->second].push_back(i);
  }

  std::vector<double> counts(nf * static_cast<std::size_t>(bins), 0.0);
  Rng rng(seed);
  picked.reserve(target.subset_size);

  auto take = [&](std::size_t g, std::size_t pos) {
    auto& m = members[g];
    picked.push_back(m[pos]);
    m[pos] = m.back();
    m.pop_back();
    for (std::size_t f = 0; f < nf; ++f) counts[f * bins + signatures[g][f]] += 1.0;
  };

  auto locate = [&](std::uint64_t r, const std::vector<std::size_t>& groups) {
    for (std::size_t g : groups) {
      if (r < members[g].size()) return std::make_pair(g, static_cast<std::size_t>(r));
      r -= members[g].size();
    }
    throw std::logic_error("entrofy_select: tie index out of range");
  };

  std::vector<std::size_t> all_groups(signatures.size());
  for (std::size_t g = 0; g < all_groups.size(); ++g) all_groups[g] = g;
  {
    const auto [g, pos] = locate(rng.uniform_index(n), all_groups);
    take(g, pos);
  }

  std::vector<std::size_t> best;
  while (picked.size() < target.subset_size) {
    double best_gain = -1.0;
    std::size_t tied_items = 0;
    best.clear();
    for (std::size_t g = 0; g < signatures.size(); ++g) {
      if (members[g].empty()) continue;
      double gain = 0.0;
      for (std::size_t f = 0; f < nf; ++f) {
        const double c = counts[f * bins + signatures[g][f]];
        gain += std::clamp(cell_target - c, 0.0, 1.0);
      }
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best.assign(1, g);
        tied_items = members[g].size();
      } else if (std::abs(gain - best_gain) <= 1e-12) {
        best.push_back(g);
        tied_items += members[g].size();
      }
    }
    const auto [g, pos] = locate(rng.uniform_index(tied_items), best);
    take(g, pos);
  }
  return picked;
}

std::vector<double> cell_counts(const std::vector<EntropyProfile>& profiles,
                                const FeatureBinning& binning,
                                const std::vector<std::size_t>& subset) {
  std::vector<double> counts(binning.num_features() * static_cast<std::size_t>(binning.bins), 0.0);
  for (std::size_t i : subset) {
    for (std::size_t f = 0; f < binning.num_features(); ++f) {
      counts[f * binning.bins + binning.bin(f, profiles.at(i).per_attribute[f])] += 1.0;
    }
  }
  return counts;
}

double max_cell_deviation(const std::vector<double>& counts, int bins, std::size_t n) {
  const double t = static_cast<double>(n) / bins;
  double worst = 0.0;
  for (double c : counts) worst = std::max(worst, std::abs(c - t));
  return worst;
}

double chi_square_uniform(const std::vector<double>& counts, int bins, std::size_t n) {
  const double t = static_cast<double>(n) / bins;
  double chi = 0.0;
  for (double c : counts) chi += (c - t) * (c - t) / t;
  return chi;
}

Splits make_splits(const std::vector<std::string>& ids, const std::vector<double>& aggregate_h,
                   std::uint64_t seed, int bins) {
  if (ids.size() != aggregate_h.size()) throw ArgumentError("make_splits: ids/entropy size mismatch");
  if (ids.size() < 10) throw ArgumentError("make_splits: need at least 10 scenes");
  if (bins < 1) throw ArgumentError("make_splits: bins must be positive");

  const auto [lo_it, hi_it] = std::minmax_element(aggregate_h.begin(), aggregate_h.end());
  const double lo = *lo_it, width = *hi_it - *lo_it;
  std::vector<std::vector<std::size_t>> strata(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    int b = 0;
    if (width > 0.0) {
      b = std::clamp(static_cast<int>(std::floor((aggregate_h[i] - lo) / width * bins + kBinSnap)),
                     0, bins - 1);
    }
    strata[static_cast<std::size_t>(b)].push_back(i);
  }

  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(ids.size());
  for (auto& s : strata) {
    rng.shuffle(s);
    order.insert(order.end(), s.begin(), s.end());
  }

  // Dealing the concatenated strata through this period-10 pattern gives exact global 80/10/10
  // counts, and any contiguous run (one stratum) lands within one item of each proportion.
  static constexpr char kPattern[10] = {'T', 'T', 'T', 'T', 'V', 'T', 'T', 'T', 'T', 'X'};
  Splits out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::string& id = ids[order[k]];
    switch (kPattern[k % 10]) {
      case 'T': out.train.push_back(id); break;
      case 'V': out.val.push_back(id); break;
      default: out.test.push_back(id); break;
    }
  }
  return out;
}

void write_balanced_ids(const std::filesystem::path& path, const std::vector<std::string>& ids,
                        const BalanceTarget& target, std::uint64_t seed, Task task) {
  ojson j;
  j["task"] = to_string(task);
  j["target"] = {{"bins_per_feature", target.bins_per_feature},
                 {"subset_size", target.subset_size},
                 {"cell_target", "uniform"},
                 {"bin_range", "observed"},
                 {"seed", seed}};
  j["ids"] = ids;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

std::vector<std::string> read_balanced_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return ojson::parse(in).at("ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_splits(const std::filesystem::path& path, const Splits& splits) {
  ojson j;
  j["train"] = splits.train;
  j["val"] = splits.val;
  j["test"] = splits.test;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

Splits read_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    const auto j = ojson::parse(in);
    return {j.at("train").get<std::vector<std::string>>(), j.at("val").get<std::vector<std::string>>(),
            j.at("test").get<std::vector<std::string>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace compbench
