#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace compbench {

/// Number of classes per attribute.
inline constexpr int kNumClasses = 8;
inline constexpr int kNumAttributes = 4;
/// Size of the flattened class universe (all attributes, all classes).
inline constexpr int kNumTokens = kNumClasses * kNumAttributes;
/// Largest number of sources in any generated scene.
inline constexpr int kMaxSources = 4;

enum class AttributeKind : int { Timbre = 0, Pitch = 1, Rate = 2, Amplitude = 3 };

inline constexpr std::array<AttributeKind, kNumAttributes> kAttributeKinds = {
    AttributeKind::Timbre, AttributeKind::Pitch, AttributeKind::Rate, AttributeKind::Amplitude};

const char* to_string(AttributeKind kind);

struct AttributeClass {
  AttributeKind kind;
  int index;

  /// Row of this class in the token table (class_universe order).
  [[nodiscard]] int flat_index() const { return static_cast<int>(kind) * kNumClasses + index; }

  friend bool operator==(const AttributeClass&, const AttributeClass&) = default;
};

// Continuous ranges of the binned attributes.
inline constexpr double kPitchMinMidi = 36.0;
inline constexpr double kPitchMaxMidi = 84.0;
inline constexpr double kRateMinHz = 0.2;
inline constexpr double kRateMaxHz = 3.0;
inline constexpr double kAmpMinDb = -26.0;
inline constexpr double kAmpMaxDb = 0.0;

/// Maps a continuous value to its class. Amplitude values are in dB.
/// Bins are half-open except the last, which includes the range top.
int discretize(AttributeKind kind, double value);

/// Lower edge of bin `index` (index == kNumClasses gives the range top). Amplitude in dB.
double bin_edge(AttributeKind kind, int index);

/// Bin center used for synthesis. Pitch in MIDI, Rate in Hz, Amplitude as linear gain.
double representative(AttributeKind kind, int index);

/// Amplitude bin center in dB.
double representative_db(int amp_class);

double gain_to_db(double gain);
double midi_to_hz(double midi);

std::vector<AttributeClass> class_universe();

/// One sound event stream: four class indices plus the values it is synthesized at.
struct Source {
  std::array<int, kNumAttributes> classes{};
  double pitch_midi = 0.0;
  double rate_hz = 0.0;
  double gain_linear = 0.0;

  /// Builds a source whose continuous fields are the bin centers of its classes.
  static Source from_classes(int timbre, int pitch, int rate, int amp);

  [[nodiscard]] int timbre() const { return classes[0]; }
  [[nodiscard]] int pitch() const { return classes[1]; }
  [[nodiscard]] int rate() const { return classes[2]; }
  [[nodiscard]] int amp() const { return classes[3]; }
  [[nodiscard]] int cls(AttributeKind kind) const { return classes[static_cast<int>(kind)]; }

  friend bool operator==(const Source&, const Source&) = default;
};

struct Scene {
  std::string id;
  std::vector<Source> sources;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// A-COAT instance: B = A followed by T, D = C followed by T.
struct Quadruple {
  std::string id;
  std::string a_id, b_id, c_id, d_id;
  std::vector<Source> t_sources;

  friend bool operator==(const Quadruple&, const Quadruple&) = default;
};

/// Throws IntegrityError unless b == a ++ t and d == c ++ t and sizes are within limits.
void validate_quadruple(const Quadruple& quad, const Scene& a, const Scene& b, const Scene& c,
                        const Scene& d);

}  // namespace compbench
