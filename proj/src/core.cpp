#include "compbench/core.hpp"

#include <cmath>
#include <string>

#include "compbench/error.hpp"

namespace compbench {

namespace {

constexpr double kEdgeTolerance = 1e-9;

void check_binned(AttributeKind kind) {
  if (kind == AttributeKind::Timbre) {
    throw ArgumentError("timbre classes are chosen directly and have no continuous range");
  }
}

void check_class(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw RangeError("class index " + std::to_string(index) + " outside [0, 7]");
  }
}

double range_lo(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Pitch: return kPitchMinMidi;
    case AttributeKind::Rate: return kRateMinHz;
    case AttributeKind::Amplitude: return kAmpMinDb;
    default: break;
  }
  throw ArgumentError("no continuous range");
}

double range_hi(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Pitch: return kPitchMaxMidi;
    case AttributeKind::Rate: return kRateMaxHz;
    case AttributeKind::Amplitude: return kAmpMaxDb;
    default: break;
  }
  throw ArgumentError("no continuous range");
}

}  // namespace

const char* to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Timbre: return "timbre";
    case AttributeKind::Pitch: return "pitch";
    case AttributeKind::Rate: return "rate";
    case AttributeKind::Amplitude: return "amp";
  }
  return "?";
}

double bin_edge(AttributeKind kind, int index) {
  check_binned(kind);
  if (index < 0 || index > kNumClasses) {
    throw RangeError("bin edge index " + std::to_string(index) + " outside [0, 8]");
  }
  if (index == kNumClasses) return range_hi(kind);
  switch (kind) {
    case AttributeKind::Pitch: return kPitchMinMidi + 6.0 * index;
    // Geometric bins: 0.2 * 15^(k/8) spans [0.2, 3.0].
    case AttributeKind::Rate: return kRateMinHz * std::pow(15.0, index / 8.0);
    case AttributeKind::Amplitude: return kAmpMinDb + 3.25 * index;
    default: break;
  }
  throw ArgumentError("no continuous range");
}

int discretize(AttributeKind kind, double value) {
  check_binned(kind);
  const double lo = range_lo(kind);
  const double hi = range_hi(kind);
  if (!(value >= lo - kEdgeTolerance && value <= hi + kEdgeTolerance)) {
    throw RangeError(std::string(to_string(kind)) + " value " + std::to_string(value) +
                     " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  int k = 0;
  switch (kind) {
    case AttributeKind::Pitch: k = static_cast<int>(std::floor((value - lo) / 6.0)); break;
    case AttributeKind::Rate:
      k = static_cast<int>(std::floor(8.0 * std::log(value / lo) / std::log(15.0)));
      break;
    case AttributeKind::Amplitude: k = static_cast<int>(std::floor((value - lo) / 3.25)); break;
    default: break;
  }
  if (k < 0) k = 0;
  if (k > kNumClasses - 1) k = kNumClasses - 1;
  // The closed-form index can be off by one at exact edges; settle against the edge table.
  while (k < kNumClasses - 1 && value >= bin_edge(kind, k + 1)) ++k;
  while (k > 0 && value < bin_edge(kind, k)) --k;
  return k;
}

double representative_db(int amp_class) {
  check_class(amp_class);
  return kAmpMinDb + 3.25 * (amp_class + 0.5);
}

double representative(AttributeKind kind, int index) {
  check_binned(kind);
  check_class(index);
  switch (kind) {
    case AttributeKind::Pitch: return kPitchMinMidi + 6.0 * (index + 0.5);
    case AttributeKind::Rate: return kRateMinHz * std::pow(15.0, (index + 0.5) / 8.0);
    case AttributeKind::Amplitude: return std::pow(10.0, representative_db(index) / 20.0);
    default: break;
  }
  throw ArgumentError("no continuous range");
}

double gain_to_db(double gain) { return 20.0 * std::log10(gain); }

double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }

std::vector<AttributeClass> class_universe() {
  std::vector<AttributeClass> out;
  out.reserve(kNumTokens);
  for (AttributeKind kind : kAttributeKinds) {
    for (int k = 0; k < kNumClasses; ++k) out.push_back({kind, k});
  }
  return out;
}

Source Source::from_classes(int timbre, int pitch, int rate, int amp) {
  check_class(timbre);
  Source s;
  s.classes = {timbre, pitch, rate, amp};
  s.pitch_midi = representative(AttributeKind::Pitch, pitch);
  s.rate_hz = representative(AttributeKind::Rate, rate);
  s.gain_linear = representative(AttributeKind::Amplitude, amp);
  return s;
}

void validate_quadruple(const Quadruple& quad, const Scene& a, const Scene& b, const Scene& c,
                        const Scene& d) {
  auto fail = [&](const std::string& what) {
    throw IntegrityError("quadruple " + quad.id + ": " + what);
  };
  if (a.id != quad.a_id || b.id != quad.b_id || c.id != quad.c_id || d.id != quad.d_id) {
    fail("scene ids do not match the record");
  }
  const auto t = quad.t_sources.size();
  if (t < 1 || t > 3) fail("|T| must be in [1, 3]");
  if (a.sources.empty() || c.sources.empty()) fail("base scenes must be non-empty");
  if (a.sources.size() + t > kMaxSources || c.sources.size() + t > kMaxSources) {
    fail("base plus transformation exceeds 4 sources");
  }
  auto check_concat = [&](const Scene& base, const Scene& full, const char* name) {
    if (full.sources.size() != base.sources.size() + t) {
      fail(std::string(name) + " has wrong source count");
    }
    for (std::size_t i = 0; i < base.sources.size(); ++i) {
      if (!(full.sources[i] == base.sources[i])) fail(std::string(name) + " prefix differs from base");
    }
    for (std::size_t i = 0; i < t; ++i) {
      if (!(full.sources[base.sources.size() + i] == quad.t_sources[i])) {
        fail(std::string(name) + " suffix differs from T");
      }
    }
  };
  check_concat(a, b, "B");
  check_concat(c, d, "D");
}

}  // namespace compbench
