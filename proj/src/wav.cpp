#include "compbench/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "compbench/error.hpp"

namespace compbench {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  if (w.sample_rate != kSampleRate) throw ArgumentError("write_wav: sample rate must be 32000");
  if (!w.samples.allFinite()) throw ArgumentError("write_wav: non-finite samples");

  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 4);
  std::vector<unsigned char> b;
  b.reserve(44 + data_bytes);
  put_tag(b, "RIFF");
  put_u32(b, 36 + data_bytes);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put_u32(b, 16);
  put_u16(b, kFormatFloat);
  put_u16(b, 1);
  put_u32(b, kSampleRate);
  put_u32(b, kSampleRate * 4);
  put_u16(b, 4);
  put_u16(b, 32);
  put_tag(b, "data");
  put_u32(b, data_bytes);
  for (Eigen::Index i = 0; i < w.samples.size(); ++i) {
    put_u32(b, std::bit_cast<std::uint32_t>(w.samples[i]));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_wav: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw Error("write_wav: write failed for " + path.string());
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_wav: cannot open " + path.string());
  const std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  const std::string where = "read_wav " + path.string() + ": ";
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(where + "not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const unsigned char* chunk = b.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    if (pos + 8 + size > b.size()) throw FormatError(where + "truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError(where + "short fmt chunk");
      format = get_u16(chunk + 8);
      channels = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(where + "short extensible fmt chunk");
        format = get_u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos += 8 + size + (size & 1);
  }
  if (!have_fmt) throw FormatError(where + "missing fmt chunk");
  if (data == nullptr) throw FormatError(where + "missing data chunk");
  if (channels != 1) throw FormatError(where + "expected mono, got " + std::to_string(channels) + " channels");
  if (rate != kSampleRate) {
    throw FormatError(where + "sample rate " + std::to_string(rate) + ", expected 32000");
  }

  Waveform w;
  if (format == kFormatFloat && bits == 32) {
    const auto n = static_cast<Eigen::Index>(data_size / 4);
    w.samples.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) w.samples[i] = std::bit_cast<float>(get_u32(data + 4 * i));
  } else if (format == kFormatPcm && bits == 16) {
    const auto n = static_cast<Eigen::Index>(data_size / 2);
    w.samples.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(get_u16(data + 2 * i));
      w.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else {
    throw FormatError(where + "unsupported format " + std::to_string(format) + " with " +
                      std::to_string(bits) + " bits");
  }
  return w;
}

}  // namespace compbench
