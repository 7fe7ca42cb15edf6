#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "compbench/tre/train.hpp"

namespace compbench {

inline constexpr int kConfigSchemaVersion = 1;

struct EncoderConfig {
  std::string name;
  /// "downsample", "random" or "external".
  std::string kind;
  int dim = 768;
  /// Interchange file for external encoders (resolved relative to the config file).
  std::filesystem::path embeddings;
};

/// Every knob of a run. Seeds are always explicit.
struct RunConfig {
  std::filesystem::path output_root;
  std::string created = "1970-01-01T00:00:00Z";
  struct Seeds {
    std::uint64_t pool = 0, balance = 0, model = 0, random_encoder = 0;
  } seeds;
  struct PoolSizes {
    std::int64_t coat_candidates = 50000;
    std::int64_t tre_candidates = 150000;
  } pool;
  struct Balance {
    std::size_t coat_subset = 2000;
    std::size_t tre_subset = 10000;
    int bins_per_feature = 4;
  } balance;
  struct Synth {
    std::optional<std::filesystem::path> patch_bank;
    bool write_wav = false;
  } synth;
  std::vector<EncoderConfig> encoders;
  tre::TrainConfig train;

  void validate() const;
};

/// Parses a JSON config; unknown keys and type errors raise ConfigError naming the field (or the
/// line and column for syntax errors). Relative paths resolve against the config's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

/// Small preset: 5,000-candidate pools, 200 quadruples and 500 scenes.
void apply_desk_scale(RunConfig& cfg);

/// Canonical JSON of the config without output_root.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct StageOptions {
  /// Restricts per-encoder stages to these names (empty: all configured encoders).
  std::vector<std::string> encoders;
};

inline const std::vector<std::string> kStages = {"gen-pool", "balance", "synth", "embed", "eval-coat",
                                                 "train-tre", "eval-tre", "report"};

/// Runs one stage ("run-all" runs every stage in order).
void run_stage(const std::string& stage, const RunConfig& cfg, const StageOptions& opts = {});

/// Maps an exception to the CLI exit code: 2 config, 3 missing dependency, 4 data integrity, 1 other.
int exit_code_for(const std::exception& e);

}  // namespace compbench
