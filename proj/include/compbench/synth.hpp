#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <string>

#include "compbench/core.hpp"

namespace compbench {

inline constexpr int kSampleRate = 32000;
inline constexpr double kSceneSeconds = 10.0;
inline constexpr Eigen::Index kSceneSamples = 320000;
inline constexpr double kFadeSeconds = 0.005;

struct AmpEnvelope {
  double attack_s = 0.0;
  double decay_s = 0.0;
  double sustain_level = 1.0;
  double release_s = 0.0;
};

/// Two-operator FM voice: a carrier phase-modulated by one sine modulator whose index decays
/// exponentially.
struct FmPatch {
  std::string name;
  double carrier_ratio = 1.0;
  double modulator_ratio = 1.0;
  double modulation_index = 0.0;
  double mod_env_decay = 1.0;
  AmpEnvelope amp_env;
};

/// Throws ArgumentError if the patch violates its parameter ranges.
void validate_patch(const FmPatch& patch);

using PatchBank = std::array<FmPatch, kNumClasses>;

inline constexpr int kPatchBankSchemaVersion = 1;

/// The eight timbre patches, indexed by timbre class.
const PatchBank& builtin_patch_bank();

PatchBank load_patch_bank(const std::filesystem::path& path);
void save_patch_bank(const std::filesystem::path& path, const PatchBank& bank);

/// Mono float waveform.
struct Waveform {
  Eigen::VectorXf samples;
  int sample_rate = kSampleRate;
};

/// One FM note of `duration_s` at fundamental `f0_hz`, faded in/out over 5 ms and peak
/// normalized to 1.
Waveform fm_tone(const FmPatch& patch, double f0_hz, double duration_s);

/// Seconds each repeated event of a source lasts: min(0.5 / rate, 1).
double tone_duration(double rate_hz);

/// Sample index of the k-th event onset.
Eigen::Index onset_sample(double rate_hz, int k);

/// Full 10 s stream of repeated notes, peak normalized then scaled by the source gain.
Waveform render_source(const Source& source, const PatchBank& bank = builtin_patch_bank());

struct RenderedScene {
  Waveform wave;
  /// Peak of the raw mix before conditional normalization.
  double mix_peak = 0.0;
  /// True when the mix exceeded 1 and was divided by its peak.
  bool normalized = false;
};

/// Sum of the sources with no conditional normalization (double-precision accumulation).
Eigen::VectorXd mix_sources(const std::vector<Source>& sources,
                            const PatchBank& bank = builtin_patch_bank());

RenderedScene render_scene(const Scene& scene, const PatchBank& bank = builtin_patch_bank());

}  // namespace compbench
