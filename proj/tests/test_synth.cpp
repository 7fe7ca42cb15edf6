#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "compbench/error.hpp"
#include "compbench/synth.hpp"

using namespace compbench;

namespace {

const FmPatch& patch_named(const std::string& name) {
  for (const auto& p : builtin_patch_bank()) {
    if (p.name == name) return p;
  }
  throw std::runtime_error("no patch " + name);
}

// Frequency of the largest DFT bin below Nyquist/2, by direct summation.
double dominant_frequency(const Eigen::VectorXf& x) {
  const auto n = x.size();
  double best = 0.0;
  Eigen::Index best_k = 0;
  for (Eigen::Index k = 1; k < n / 4; ++k) {
    std::complex<double> acc = 0.0;
    const double w = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) acc += static_cast<double>(x[i]) * std::polar(1.0, w * static_cast<double>(i));
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * kSampleRate / static_cast<double>(n);
}

Source with_gain(Source s, double g) {
  s.gain_linear = g;
  return s;
}

}  // namespace

TEST_CASE("built-in bank: eight valid, distinct patches") {
  const auto& bank = builtin_patch_bank();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK_NOTHROW(validate_patch(bank[i]));
    for (std::size_t j = 0; j < i; ++j) CHECK(bank[i].name != bank[j].name);
  }
}

TEST_CASE("shipped patch file equals the built-in bank") {
  const PatchBank file = load_patch_bank(std::filesystem::path(COMPBENCH_DATA_DIR) / "patches.json");
  const auto& bank = builtin_patch_bank();
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(file[i].name == bank[i].name);
    CHECK(file[i].carrier_ratio == bank[i].carrier_ratio);
    CHECK(file[i].modulator_ratio == bank[i].modulator_ratio);
    CHECK(file[i].modulation_index == bank[i].modulation_index);
    CHECK(file[i].mod_env_decay == bank[i].mod_env_decay);
    CHECK(file[i].amp_env.attack_s == bank[i].amp_env.attack_s);
    CHECK(file[i].amp_env.decay_s == bank[i].amp_env.decay_s);
    CHECK(file[i].amp_env.sustain_level == bank[i].amp_env.sustain_level);
    CHECK(file[i].amp_env.release_s == bank[i].amp_env.release_s);
  }
}

TEST_CASE("patch bank file errors") {
  const auto dir = std::filesystem::temp_directory_path() / "compbench_patch_test";
  std::filesystem::create_directories(dir);
  SUBCASE("wrong patch count") {
    std::ofstream(dir / "bad.json") << R"({"schema_version": 1, "patches": []})";
    CHECK_THROWS_AS(load_patch_bank(dir / "bad.json"), FormatError);
  }
  SUBCASE("invalid patch values") {
    PatchBank bank = builtin_patch_bank();
    bank[3].amp_env.sustain_level = 1.5;
    save_patch_bank(dir / "bad.json", bank);
    CHECK_THROWS_AS(load_patch_bank(dir / "bad.json"), FormatError);
  }
  SUBCASE("unknown schema version") {
    std::ofstream(dir / "bad.json") << R"({"schema_version": 9, "patches": []})";
    CHECK_THROWS_AS(load_patch_bank(dir / "bad.json"), FormatError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("fm_tone: peak normalized to one") {
  for (const auto& p : builtin_patch_bank()) {
    const Waveform w = fm_tone(p, 440.0, 0.5);
    CHECK(w.samples.size() == 16000);
    CHECK(w.samples.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w.samples.allFinite());
  }
}

TEST_CASE("fm_tone: zero index gives an enveloped sine at the carrier") {
  FmPatch p = patch_named("pure-sine");
  p.amp_env = {0.0, 0.0, 1.0, 0.0};
  const Waveform w = fm_tone(p, 500.0, 0.1);
  // Away from the fades the envelope is flat, so the tone is exactly a unit sine.
  for (Eigen::Index i = 200; i < 3000; i += 37) {
    const double t = static_cast<double>(i) / kSampleRate;
    CHECK(w.samples[i] == doctest::Approx(std::sin(2.0 * std::numbers::pi * 500.0 * t)).epsilon(1e-6));
  }
}

TEST_CASE("fm_tone: fades ramp linearly from zero") {
  FmPatch p = patch_named("pure-sine");
  p.amp_env = {0.0, 0.0, 1.0, 0.0};
  const Waveform w = fm_tone(p, 8000.0, 0.1);  // samples at quarter periods: 0, 1, 0, -1, ...
  CHECK(w.samples[0] == 0.0f);
  CHECK(w.samples[w.samples.size() - 1] == doctest::Approx(0.0).epsilon(1e-6));
  const double fade = kFadeSeconds * kSampleRate;
  CHECK(std::abs(w.samples[1]) == doctest::Approx(1.0 / fade).epsilon(1e-5));
}

TEST_CASE("fm_tone: carrier-dominant patches peak at the fundamental") {
  const double bin = kSampleRate / 16000.0;
  for (const char* name : {"pure-sine", "electric-piano", "marimba"}) {
    CAPTURE(name);
    CHECK(patch_named(name).carrier_ratio == 1.0);
    const Waveform w = fm_tone(patch_named(name), midi_to_hz(69.0), 0.5);
    CHECK(std::abs(dominant_frequency(w.samples) - 440.0) <= bin);
  }
}

TEST_CASE("fm_tone: argument errors") {
  const FmPatch& p = builtin_patch_bank()[0];
  CHECK_THROWS_AS(fm_tone(p, 0.0, 0.5), ArgumentError);
  CHECK_THROWS_AS(fm_tone(p, 440.0, -1.0), ArgumentError);
  FmPatch bad = p;
  bad.carrier_ratio = 0.0;
  CHECK_THROWS_AS(fm_tone(bad, 440.0, 0.5), ArgumentError);
}

TEST_CASE("onsets: lowest rate class fires three times") {
  const double r = representative(AttributeKind::Rate, 0);
  int count = 0;
  while (onset_sample(r, count) < kSceneSamples) ++count;
  CHECK(count == static_cast<int>(std::floor(10.0 * r)) + 1);
  CHECK(count == 3);
  CHECK(onset_sample(r, 1) / double(kSampleRate) == doctest::Approx(4.221).epsilon(1e-3));
  CHECK(onset_sample(r, 2) / double(kSampleRate) == doctest::Approx(8.441).epsilon(1e-3));
}

TEST_CASE("onsets: inter-onset interval of the fastest class") {
  const double r = representative(AttributeKind::Rate, 7);
  for (int k = 1; k < 20; ++k) {
    const double exact = k * kSampleRate / r;
    CHECK(onset_sample(r, k) == std::llround(exact));
    CHECK(std::abs(static_cast<double>(onset_sample(r, k) - onset_sample(r, k - 1)) - kSampleRate / r) <= 1.0);
  }
  CHECK(tone_duration(r) == doctest::Approx(0.5 / r));
  CHECK(tone_duration(0.25) == 1.0);
}

TEST_CASE("render_source: peak equals gain; events truncated at the clip end") {
  for (int t = 0; t < kNumClasses; ++t) {
    const Source s = Source::from_classes(t, t, 7 - t, t);
    const Waveform w = render_source(s);
    REQUIRE(w.samples.size() == kSceneSamples);
    CHECK(w.samples.cwiseAbs().maxCoeff() == doctest::Approx(s.gain_linear).epsilon(1e-6));
  }
}

TEST_CASE("render_source: silent between events") {
  const Source s = Source::from_classes(0, 3, 0, 7);
  const Waveform w = render_source(s);
  const auto tone_len = std::llround(tone_duration(s.rate_hz) * kSampleRate);
  CHECK(w.samples.segment(tone_len + 1, onset_sample(s.rate_hz, 1) - tone_len - 1).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("render_scene: single quiet source is not normalized") {
  const Scene sc{"x", {with_gain(Source::from_classes(1, 2, 3, 4), 0.5)}};
  const RenderedScene r = render_scene(sc);
  CHECK_FALSE(r.normalized);
  CHECK(r.wave.samples.cwiseAbs().maxCoeff() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("render_scene: two aligned sources at 0.8 normalize to exactly one") {
  const Source s = with_gain(Source::from_classes(2, 3, 4, 5), 0.8);
  const RenderedScene r = render_scene({"x", {s, s}});
  CHECK(r.normalized);
  CHECK(r.mix_peak == doctest::Approx(1.6).epsilon(1e-6));
  CHECK(r.wave.samples.cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("render_scene: additivity when nothing clips") {
  const Source a = Source::from_classes(0, 1, 2, 1), t1 = Source::from_classes(5, 6, 3, 2),
               t2 = Source::from_classes(7, 0, 6, 0);
  const RenderedScene ra = render_scene({"a", {a}});
  const RenderedScene rb = render_scene({"b", {a, t1, t2}});
  REQUIRE_FALSE(rb.normalized);
  const Eigen::VectorXd t_only = mix_sources({t1, t2});
  const Eigen::VectorXd diff = rb.wave.samples.cast<double>() - ra.wave.samples.cast<double>();
  CHECK((diff - t_only).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("render_scene: peak bounded and deterministic") {
  const Source s1 = Source::from_classes(3, 0, 7, 7), s2 = Source::from_classes(4, 0, 7, 7),
               s3 = Source::from_classes(5, 1, 7, 7), s4 = Source::from_classes(6, 2, 7, 7);
  const RenderedScene r1 = render_scene({"x", {s1, s2, s3, s4}});
  const RenderedScene r2 = render_scene({"x", {s1, s2, s3, s4}});
  CHECK(r1.wave.samples.cwiseAbs().maxCoeff() <= 1.0 + 1e-6);
  CHECK(r1.wave.samples == r2.wave.samples);
  CHECK_THROWS_AS(render_scene({"empty", {}}), ArgumentError);
}
