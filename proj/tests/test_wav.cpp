#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "compbench/error.hpp"
#include "compbench/rng.hpp"
#include "compbench/wav.hpp"

using namespace compbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path = fs::temp_directory_path() / "compbench_wav_test";
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Hand-assembled RIFF file with a canonical fmt chunk.
std::string pcm_file(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                     const std::string& data) {
  std::string fmt;
  put16(fmt, format);
  put16(fmt, channels);
  put32(fmt, rate);
  put32(fmt, rate * channels * bits / 8);
  put16(fmt, static_cast<std::uint16_t>(channels * bits / 8));
  put16(fmt, bits);
  std::string out = "RIFF";
  put32(out, static_cast<std::uint32_t>(4 + 8 + fmt.size() + 8 + data.size()));
  out += "WAVEfmt ";
  put32(out, static_cast<std::uint32_t>(fmt.size()));
  out += fmt;
  out += "data";
  put32(out, static_cast<std::uint32_t>(data.size()));
  out += data;
  return out;
}

}  // namespace

TEST_CASE("wav: float round trip is bit exact") {
  TempDir dir;
  Rng rng(1);
  Waveform w;
  w.samples.resize(4097);
  for (auto& x : w.samples) x = static_cast<float>(rng.normal());
  w.samples[0] = -0.0f;
  w.samples[1] = 1e-40f;  // subnormal
  write_wav(dir.path / "a.wav", w);
  const Waveform r = read_wav(dir.path / "a.wav");
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(std::memcmp(r.samples.data(), w.samples.data(), sizeof(float) * 4097) == 0);
  CHECK(r.sample_rate == 32000);
  CHECK(fs::file_size(dir.path / "a.wav") == 44 + 4 * 4097);
}

TEST_CASE("wav: 16-bit PCM is scaled by 1/32768") {
  TempDir dir;
  std::string data;
  for (std::int16_t v : {std::int16_t(0), std::int16_t(16384), std::int16_t(-32768), std::int16_t(32767)}) {
    put16(data, static_cast<std::uint16_t>(v));
  }
  std::ofstream(dir.path / "b.wav", std::ios::binary) << pcm_file(1, 1, 32000, 16, data);
  const Waveform r = read_wav(dir.path / "b.wav");
  REQUIRE(r.samples.size() == 4);
  CHECK(r.samples[0] == 0.0f);
  CHECK(r.samples[1] == 0.5f);
  CHECK(r.samples[2] == -1.0f);
  CHECK(r.samples[3] == 32767.0f / 32768.0f);
}

TEST_CASE("wav: wrong sample rate names the expected rate") {
  TempDir dir;
  std::ofstream(dir.path / "c.wav", std::ios::binary) << pcm_file(3, 1, 44100, 32, std::string(8, '\0'));
  try {
    read_wav(dir.path / "c.wav");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("32000") != std::string::npos);
  }
}

TEST_CASE("wav: malformed and unsupported files") {
  TempDir dir;
  SUBCASE("stereo") {
    std::ofstream(dir.path / "d.wav", std::ios::binary) << pcm_file(3, 2, 32000, 32, std::string(8, '\0'));
    CHECK_THROWS_AS(read_wav(dir.path / "d.wav"), FormatError);
  }
  SUBCASE("8-bit") {
    std::ofstream(dir.path / "d.wav", std::ios::binary) << pcm_file(1, 1, 32000, 8, std::string(8, '\0'));
    CHECK_THROWS_AS(read_wav(dir.path / "d.wav"), FormatError);
  }
  SUBCASE("not RIFF") {
    std::ofstream(dir.path / "d.wav", std::ios::binary) << "hello world, definitely not a wav file";
    CHECK_THROWS_AS(read_wav(dir.path / "d.wav"), FormatError);
  }
  SUBCASE("truncated header") {
    std::ofstream(dir.path / "d.wav", std::ios::binary) << pcm_file(3, 1, 32000, 32, "").substr(0, 20);
    CHECK_THROWS_AS(read_wav(dir.path / "d.wav"), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_wav(dir.path / "nope.wav"), Error); }
}

TEST_CASE("wav: writer rejects non-finite samples") {
  TempDir dir;
  Waveform w;
  w.samples = Eigen::VectorXf::Zero(4);
  w.samples[2] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(write_wav(dir.path / "e.wav", w), ArgumentError);
}
