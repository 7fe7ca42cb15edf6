#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "compbench/error.hpp"
#include "compbench/synth.hpp"

namespace compbench {

inline constexpr int kBaselineDim = 768;

using Embedding = Eigen::VectorXf;

/// All embeddings produced by one encoder, keyed (and ordered) by item id.
struct EmbeddingSet {
  std::string encoder_name;
  int dim = 0;
  std::map<std::string, Embedding> vectors;

  [[nodiscard]] const Embedding& at(const std::string& id) const;
  [[nodiscard]] bool contains(const std::string& id) const { return vectors.contains(id); }

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);
};

/// Cosine similarity accumulated in double precision. Throws DegenerateError on a zero-norm
/// operand.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) throw ArgumentError("cosine: dimension mismatch");
  const auto ud = u.template cast<double>();
  const auto vd = v.template cast<double>();
  const double nu = ud.norm();
  const double nv = vd.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw DegenerateError("cosine: zero-norm operand");
  const double c = ud.dot(vd) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

/// Band-limited resampling of a full scene waveform down to `dim` samples.
Embedding downsample_encode(const Waveform& w, int dim = kBaselineDim);

/// I.i.d. standard normal vector keyed by (seed, item_id).
Embedding random_encode(const std::string& item_id, int dim = kBaselineDim, std::uint64_t seed = 0);

inline constexpr char kEmbeddingMagic[4] = {'A', 'E', 'B', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Little-endian interchange file; ids written in lexicographic order.
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
std::string encode_embeddings(const EmbeddingSet& set);

/// Reads and validates an interchange file. The encoder name is taken from `encoder_name` (the
/// format does not store one).
EmbeddingSet read_embeddings(const std::filesystem::path& path, std::string encoder_name = "");
EmbeddingSet decode_embeddings(std::string_view bytes, std::string encoder_name = "");

}  // namespace compbench
