#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "compbench/core.hpp"
#include "compbench/rng.hpp"

namespace compbench {

enum class Task { Coat, Tre };

const char* to_string(Task task);
Task task_from_string(const std::string& s);

inline constexpr int kPoolSchemaVersion = 1;

struct PoolManifest {
  Task task = Task::Tre;
  std::uint64_t seed = 0;
  std::int64_t count = 0;
  int schema_version = kPoolSchemaVersion;
  /// ISO-8601 timestamp supplied by the caller; never read from the clock.
  std::string created;
};

/// Uniform class indices for all four attributes.
Source sample_source(Rng& rng);

/// Scene with a uniform source count in [n_min, n_max].
Scene sample_scene(Rng& rng, int n_min, int n_max, std::string id);

struct QuadrupleSample {
  /// A, B, C, D in that order.
  std::array<Scene, 4> scenes;
  Quadruple quad;
};

/// |T| uniform on {1,2,3}; |A|, |C| uniform on [1, 4 - |T|]; B = A ++ T, D = C ++ T.
QuadrupleSample sample_quadruple(Rng& rng, std::string id);

/// Scene metadata for one pool, indexed by id.
struct Pool {
  PoolManifest manifest;
  std::vector<Scene> scenes;
  std::vector<Quadruple> quads;

  [[nodiscard]] const Scene& scene(const std::string& id) const;
  [[nodiscard]] bool has_scene(const std::string& id) const { return index_.contains(id); }
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// Samples a pool in memory. For COAT, `count` is the number of quadruples.
Pool sample_pool(Task task, std::int64_t count, std::uint64_t seed, std::string created = "");

/// Writes scenes.jsonl, quads.jsonl (COAT only) and manifest.json into `dir`.
void write_pool(const std::filesystem::path& dir, const Pool& pool);

/// Reads a pool written by write_pool and re-validates every quadruple.
Pool read_pool(const std::filesystem::path& dir);

PoolManifest generate_pool(Task task, std::int64_t count, std::uint64_t seed,
                           const std::filesystem::path& dir, std::string created = "");

// JSON Lines record codecs.
std::string scene_to_jsonl(const Scene& scene);
Scene scene_from_jsonl(const std::string& line);
std::string quad_to_jsonl(const Quadruple& quad);
Quadruple quad_from_jsonl(const std::string& line);

}  // namespace compbench
