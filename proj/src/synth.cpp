#include "compbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <nlohmann/json.hpp>

#include "compbench/error.hpp"

namespace compbench {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// Ratios span 1..7 and indices 0..8 so the eight voices are clearly distinguishable.
PatchBank make_builtin_bank() {
  return PatchBank{{
      {"pure-sine", 1.0, 1.0, 0.0, 1.0, {0.010, 0.10, 0.80, 0.05}},
      {"soft-organ", 1.0, 1.0, 1.5, 2.0, {0.020, 0.10, 0.90, 0.05}},
      {"hollow-reed", 1.0, 2.0, 3.0, 1.0, {0.030, 0.10, 0.80, 0.05}},
      {"brass", 1.0, 1.0, 5.0, 0.3, {0.040, 0.20, 0.70, 0.08}},
      {"electric-piano", 1.0, 7.0, 2.0, 0.15, {0.002, 0.40, 0.30, 0.10}},
      {"bell", 1.0, 3.5, 4.0, 0.5, {0.002, 0.80, 0.00, 0.20}},
      {"marimba", 1.0, 4.0, 6.0, 0.05, {0.001, 0.25, 0.00, 0.05}},
      {"bright-pluck", 2.0, 7.0, 8.0, 0.08, {0.001, 0.15, 0.20, 0.05}},
  }};
}

// Linear ADSR over a note of `duration` seconds. The release occupies the final
// min(release, duration / 2) seconds.
double amp_envelope(const AmpEnvelope& env, double t, double duration) {
  const double release = std::min(env.release_s, duration / 2.0);
  const double gate = duration - release;
  auto held = [&](double tt) {
    if (tt < env.attack_s) return tt / env.attack_s;
    tt -= env.attack_s;
    if (tt < env.decay_s) return 1.0 - (1.0 - env.sustain_level) * (tt / env.decay_s);
    return env.sustain_level;
  };
  if (t < gate) return held(t);
  if (release <= 0.0) return held(gate);
  return held(gate) * std::max(0.0, 1.0 - (t - gate) / release);
}

void normalize_peak(Eigen::VectorXd& x, const char* what) {
  const double peak = x.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw DegenerateError(std::string(what) + " rendered to silence");
  x /= peak;
}

ojson patch_to_json(const FmPatch& p) {
  return {{"name", p.name},
          {"carrier_ratio", p.carrier_ratio},
          {"modulator_ratio", p.modulator_ratio},
          {"modulation_index", p.modulation_index},
          {"mod_env_decay", p.mod_env_decay},
          {"amp_env",
           {{"attack_s", p.amp_env.attack_s},
            {"decay_s", p.amp_env.decay_s},
            {"sustain_level", p.amp_env.sustain_level},
            {"release_s", p.amp_env.release_s}}}};
}

FmPatch patch_from_json(const json& j) {
  FmPatch p;
  p.name = j.at("name").get<std::string>();
  p.carrier_ratio = j.at("carrier_ratio").get<double>();
  p.modulator_ratio = j.at("modulator_ratio").get<double>();
  p.modulation_index = j.at("modulation_index").get<double>();
  p.mod_env_decay = j.at("mod_env_decay").get<double>();
  const auto& e = j.at("amp_env");
  p.amp_env = {e.at("attack_s").get<double>(), e.at("decay_s").get<double>(),
               e.at("sustain_level").get<double>(), e.at("release_s").get<double>()};
  return p;
}

}  // namespace

void validate_patch(const FmPatch& p) {
  auto bad = [&](const std::string& what) { throw ArgumentError("patch " + p.name + ": " + what); };
  if (!(p.carrier_ratio > 0.0) || !(p.modulator_ratio > 0.0)) bad("ratios must be positive");
  if (!(p.modulation_index >= 0.0)) bad("modulation index must be non-negative");
  if (!(p.mod_env_decay > 0.0)) bad("modulation decay must be positive");
  const auto& e = p.amp_env;
  if (!(e.attack_s >= 0.0 && e.decay_s >= 0.0 && e.release_s >= 0.0)) bad("negative envelope time");
  if (!(e.sustain_level >= 0.0 && e.sustain_level <= 1.0)) bad("sustain level outside [0, 1]");
}

const PatchBank& builtin_patch_bank() {
  static const PatchBank bank = make_builtin_bank();
  return bank;
}

PatchBank load_patch_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open patch bank " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("patch bank " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kPatchBankSchemaVersion) {
      throw FormatError("patch bank " + path.string() + ": unsupported schema_version");
    }
    const auto& arr = j.at("patches");
    if (!arr.is_array() || arr.size() != kNumClasses) {
      throw FormatError("patch bank " + path.string() + ": expected exactly 8 patches");
    }
    PatchBank bank;
    for (int i = 0; i < kNumClasses; ++i) {
      bank[i] = patch_from_json(arr[i]);
      validate_patch(bank[i]);
    }
    return bank;
  } catch (const json::exception& e) {
    throw FormatError("patch bank " + path.string() + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError("patch bank " + path.string() + ": " + e.what());
  }
}

void save_patch_bank(const std::filesystem::path& path, const PatchBank& bank) {
  ojson j;
  j["schema_version"] = kPatchBankSchemaVersion;
  j["patches"] = ojson::array();
  for (const auto& p : bank) j["patches"].push_back(patch_to_json(p));
  std::ofstream out(path);
  if (!out) throw Error("cannot write patch bank " + path.string());
  out << j.dump(2) << '\n';
}

Waveform fm_tone(const FmPatch& patch, double f0_hz, double duration_s) {
  if (!(f0_hz > 0.0)) throw ArgumentError("fm_tone: f0 must be positive");
  if (!(duration_s > 0.0)) throw ArgumentError("fm_tone: duration must be positive");
  validate_patch(patch);

  const auto n = std::max<Eigen::Index>(1, std::llround(duration_s * kSampleRate));
  const double fc = f0_hz * patch.carrier_ratio;
  const double fm = f0_hz * patch.modulator_ratio;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    const double index = patch.modulation_index * std::exp(-t / patch.mod_env_decay);
    y[i] = amp_envelope(patch.amp_env, t, duration_s) *
           std::sin(two_pi * fc * t + index * std::sin(two_pi * fm * t));
  }

  const Eigen::Index fade = std::min<Eigen::Index>(std::llround(kFadeSeconds * kSampleRate), n / 2);
  for (Eigen::Index i = 0; i < fade; ++i) {
    const double g = static_cast<double>(i) / fade;
    y[i] *= g;
    y[n - 1 - i] *= g;
  }
  normalize_peak(y, "fm_tone");
  return {y.cast<float>(), kSampleRate};
}

double tone_duration(double rate_hz) { return std::min(0.5 / rate_hz, 1.0); }

Eigen::Index onset_sample(double rate_hz, int k) {
  return std::llround(static_cast<double>(k) * kSampleRate / rate_hz);
}

namespace {

Eigen::VectorXd render_source_d(const Source& source, const PatchBank& bank) {
  const FmPatch& patch = bank.at(static_cast<std::size_t>(source.timbre()));
  const Eigen::VectorXd tone =
      fm_tone(patch, midi_to_hz(source.pitch_midi), tone_duration(source.rate_hz))
          .samples.cast<double>();

  Eigen::VectorXd out = Eigen::VectorXd::Zero(kSceneSamples);
  for (int k = 0;; ++k) {
    const Eigen::Index start = onset_sample(source.rate_hz, k);
    if (start >= kSceneSamples) break;
    const Eigen::Index len = std::min<Eigen::Index>(tone.size(), kSceneSamples - start);
    out.segment(start, len) += tone.head(len);
  }
  normalize_peak(out, "render_source");
  out *= source.gain_linear;
  // Round through float so a source's contribution is the same wherever it is mixed.
  return out.cast<float>().cast<double>();
}

}  // namespace

Waveform render_source(const Source& source, const PatchBank& bank) {
  return {render_source_d(source, bank).cast<float>(), kSampleRate};
}

Eigen::VectorXd mix_sources(const std::vector<Source>& sources, const PatchBank& bank) {
  Eigen::VectorXd mix = Eigen::VectorXd::Zero(kSceneSamples);
  for (const auto& s : sources) mix += render_source_d(s, bank);
  return mix;
}

RenderedScene render_scene(const Scene& scene, const PatchBank& bank) {
  if (scene.sources.empty()) throw ArgumentError("render_scene: scene " + scene.id + " is empty");
  Eigen::VectorXd mix = mix_sources(scene.sources, bank);
  RenderedScene out;
  out.mix_peak = mix.cwiseAbs().maxCoeff();
  if (out.mix_peak > 1.0) {
    mix /= out.mix_peak;
    out.normalized = true;
  }
  out.wave = {mix.cast<float>(), kSampleRate};
  return out;
}

}  // namespace compbench
