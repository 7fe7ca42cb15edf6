#include "compbench/encoders.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>

#include "compbench/resample.hpp"
#include "compbench/rng.hpp"

namespace compbench {

namespace {

const PolyphaseResampler& downsampler(int dim) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<PolyphaseResampler>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[dim];
  if (!slot) slot = std::make_unique<PolyphaseResampler>(kSceneSamples, dim, 64, 8.6);
  return *slot;
}

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  [[nodiscard]] std::size_t pos() const { return pos_; }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("embedding file truncated while reading " + std::string(what) +
                        " at byte offset " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Embedding& EmbeddingSet::at(const std::string& id) const {
  const auto it = vectors.find(id);
  if (it == vectors.end()) throw IntegrityError("encoder " + encoder_name + " has no embedding for " + id);
  return it->second;
}

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.dim != b.dim || a.vectors.size() != b.vectors.size()) return false;
  auto it = b.vectors.begin();
  for (const auto& [id, v] : a.vectors) {
    if (id != it->first || v.size() != it->second.size()) return false;
    if (std::memcmp(v.data(), it->second.data(), sizeof(float) * static_cast<std::size_t>(v.size())) != 0) {
      return false;
    }
    ++it;
  }
  return true;
}

Embedding downsample_encode(const Waveform& w, int dim) {
  if (w.samples.size() != kSceneSamples) {
    throw ArgumentError("downsample_encode: expected 320000 samples, got " +
                        std::to_string(w.samples.size()));
  }
  if (dim <= 0) throw ArgumentError("downsample_encode: dim must be positive");
  return downsampler(dim).apply(w.samples).cast<float>();
}

Embedding random_encode(const std::string& item_id, int dim, std::uint64_t seed) {
  if (dim <= 0) throw ArgumentError("random_encode: dim must be positive");
  Rng rng(keyed_seed(seed, item_id));
  Embedding z(dim);
  for (int i = 0; i < dim; ++i) z[i] = static_cast<float>(rng.normal());
  return z;
}

std::string encode_embeddings(const EmbeddingSet& set) {
  if (set.dim < 0) throw ArgumentError("embedding dim must be non-negative");
  std::string out(kEmbeddingMagic, 4);
  put_le(out, kEmbeddingVersion, 4);
  put_le(out, static_cast<std::uint32_t>(set.dim), 4);
  put_le(out, set.vectors.size(), 8);
  for (const auto& [id, v] : set.vectors) {
    if (v.size() != set.dim) {
      throw IntegrityError("embedding for " + id + " has dim " + std::to_string(v.size()) +
                           ", expected " + std::to_string(set.dim));
    }
    if (!v.allFinite()) throw IntegrityError("embedding for " + id + " has non-finite entries");
    if (id.size() > 0xFFFF) throw ArgumentError("id too long: " + id.substr(0, 32) + "...");
    put_le(out, id.size(), 2);
    out += id;
    for (Eigen::Index i = 0; i < v.size(); ++i) put_le(out, std::bit_cast<std::uint32_t>(v[i]), 4);
  }
  return out;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  const std::string bytes = encode_embeddings(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

EmbeddingSet decode_embeddings(std::string_view bytes, std::string encoder_name) {
  Reader r(bytes);
  if (r.take(4, "magic") != std::string_view(kEmbeddingMagic, 4)) {
    throw FormatError("embedding file: bad magic at byte offset 0 (expected AEB1)");
  }
  const auto version = r.le(4, "version");
  if (version != kEmbeddingVersion) {
    throw FormatError("embedding file: unsupported version " + std::to_string(version) +
                      " at byte offset 4");
  }
  EmbeddingSet set;
  set.encoder_name = std::move(encoder_name);
  set.dim = static_cast<int>(r.le(4, "dim"));
  const auto count = r.le(8, "count");
  const std::string* prev = nullptr;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = r.le(2, "id length");
    std::string id(r.take(len, "id"));
    if (prev != nullptr) {
      if (id == *prev) throw IntegrityError("embedding file: duplicate id " + id);
      if (id < *prev) throw FormatError("embedding file: ids not sorted at " + id);
    }
    if (r.remaining() < 4ull * static_cast<std::uint64_t>(set.dim)) {
      throw IntegrityError("embedding file: record " + id + " is shorter than dim " +
                           std::to_string(set.dim) + " (truncated or inconsistent dim)");
    }
    Embedding v(set.dim);
    for (int i = 0; i < set.dim; ++i) {
      v[i] = std::bit_cast<float>(static_cast<std::uint32_t>(r.le(4, "vector")));
    }
    if (!v.allFinite()) throw IntegrityError("embedding file: non-finite entries for " + id);
    auto [it, inserted] = set.vectors.emplace(std::move(id), std::move(v));
    prev = &it->first;
  }
  if (r.remaining() != 0) {
    throw IntegrityError("embedding file: " + std::to_string(r.remaining()) +
                         " trailing bytes after " + std::to_string(count) +
                         " records (inconsistent dim?)");
  }
  return set;
}

EmbeddingSet read_embeddings(const std::filesystem::path& path, std::string encoder_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingDependency("cannot open embedding file " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (encoder_name.empty()) encoder_name = path.stem().string();
  try {
    return decode_embeddings(bytes, std::move(encoder_name));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace compbench
