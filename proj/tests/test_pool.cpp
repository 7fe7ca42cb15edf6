#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "compbench/error.hpp"
#include "compbench/hash.hpp"
#include "compbench/pool.hpp"

using namespace compbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("sha256 known digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sample_source: class frequencies are uniform") {
  Rng rng(123);
  std::array<std::array<int, kNumClasses>, kNumAttributes> hist{};
  const int n = 80000;
  for (int i = 0; i < n; ++i) {
    const Source s = sample_source(rng);
    for (int a = 0; a < kNumAttributes; ++a) ++hist[a][s.classes[a]];
    REQUIRE(s.gain_linear > 0.0);
    REQUIRE(s.gain_linear <= 1.0);
    REQUIRE(s == Source::from_classes(s.timbre(), s.pitch(), s.rate(), s.amp()));
  }
  for (const auto& h : hist) {
    for (int c : h) CHECK(std::abs(static_cast<double>(c) / n - 0.125) <= 0.01);
  }
}

TEST_CASE("sample_source: same seed, same source") {
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) CHECK(sample_source(a) == sample_source(b));
}

TEST_CASE("sample_scene: counts and bounds") {
  Rng rng(4);
  CHECK(sample_scene(rng, 1, 1, "x").sources.size() == 1);
  std::array<int, 5> hist{};
  for (int i = 0; i < 10000; ++i) ++hist[sample_scene(rng, 1, 4, "x").sources.size()];
  CHECK(hist[0] == 0);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(hist[k] / 10000.0 - 0.25) <= 0.02);
  CHECK_THROWS_AS(sample_scene(rng, 0, 2, "x"), ArgumentError);
  CHECK_THROWS_AS(sample_scene(rng, 3, 2, "x"), ArgumentError);
  CHECK_THROWS_AS(sample_scene(rng, 1, 5, "x"), ArgumentError);
}

TEST_CASE("sample_quadruple: structure and |T| distribution") {
  Rng rng(8);
  std::array<int, 4> t_hist{};
  for (int i = 0; i < 30000; ++i) {
    const auto s = sample_quadruple(rng, "q");
    const auto& q = s.quad;
    const auto t = q.t_sources.size();
    ++t_hist[t];
    if (t == 3) {
      REQUIRE(s.scenes[0].sources.size() == 1);
      REQUIRE(s.scenes[2].sources.size() == 1);
    }
    REQUIRE(s.scenes[1].sources.size() == s.scenes[0].sources.size() + t);
    for (std::size_t k = 0; k < s.scenes[0].sources.size(); ++k) REQUIRE(s.scenes[1].sources[k] == s.scenes[0].sources[k]);
    REQUIRE_NOTHROW(validate_quadruple(q, s.scenes[0], s.scenes[1], s.scenes[2], s.scenes[3]));
  }
  CHECK(t_hist[0] == 0);
  for (int k = 1; k <= 3; ++k) CHECK(std::abs(t_hist[k] / 30000.0 - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("sample_pool: unique ids and source limits") {
  const Pool tre = sample_pool(Task::Tre, 3000, 5);
  std::set<std::string> ids;
  for (const auto& s : tre.scenes) {
    ids.insert(s.id);
    CHECK(s.sources.size() >= 1);
    CHECK(s.sources.size() <= 4);
  }
  CHECK(ids.size() == 3000);

  const Pool coat = sample_pool(Task::Coat, 500, 5);
  CHECK(coat.quads.size() == 500);
  CHECK(coat.scenes.size() == 2000);
  for (const auto& q : coat.quads) {
    CHECK_NOTHROW(validate_quadruple(q, coat.scene(q.a_id), coat.scene(q.b_id), coat.scene(q.c_id), coat.scene(q.d_id)));
  }
  CHECK_THROWS_AS(sample_pool(Task::Tre, 0, 1), ArgumentError);
}

TEST_CASE("jsonl codecs round trip") {
  Rng rng(3);
  const auto s = sample_quadruple(rng, "q000001");
  for (const auto& sc : s.scenes) CHECK(scene_from_jsonl(scene_to_jsonl(sc)) == sc);
  CHECK(quad_from_jsonl(quad_to_jsonl(s.quad)) == s.quad);
  CHECK(scene_to_jsonl({"x", {Source::from_classes(1, 2, 3, 4)}}) ==
        R"({"id":"x","sources":[{"t":1,"p":2,"r":3,"a":4}]})");
}

TEST_CASE("jsonl codecs reject bad records") {
  CHECK_THROWS_AS(scene_from_jsonl("{not json"), FormatError);
  CHECK_THROWS_AS(scene_from_jsonl(R"({"id":"x"})"), FormatError);
  CHECK_THROWS(scene_from_jsonl(R"({"id":"x","sources":[{"t":9,"p":2,"r":3,"a":4}]})"));
}

TEST_CASE("generate_pool: byte-identical reruns") {
  TempDir a("compbench_pool_a"), b("compbench_pool_b");
  generate_pool(Task::Coat, 200, 42, a.path, "2024-01-01T00:00:00Z");
  generate_pool(Task::Coat, 200, 42, b.path, "2024-01-01T00:00:00Z");
  for (const char* f : {"scenes.jsonl", "quads.jsonl", "manifest.json"}) {
    CHECK(sha256_file(a.path / f) == sha256_file(b.path / f));
  }
  const Pool p = read_pool(a.path);
  CHECK(p.manifest.task == Task::Coat);
  CHECK(p.manifest.seed == 42);
  CHECK(p.manifest.count == 200);
  CHECK(p.manifest.created == "2024-01-01T00:00:00Z");
  CHECK(p.quads.size() == 200);
  CHECK(p.scenes.size() == 800);
}

TEST_CASE("read_pool: re-validates quadruples on load") {
  TempDir dir("compbench_pool_c");
  Pool p = sample_pool(Task::Coat, 10, 1);
  REQUIRE(p.scenes[1].id == "q000000-B");
  Source& last = p.scenes[1].sources.back();
  last = Source::from_classes((last.timbre() + 1) % kNumClasses, last.pitch(), last.rate(), last.amp());
  write_pool(dir.path, p);
  CHECK_THROWS_AS(read_pool(dir.path), IntegrityError);
}

TEST_CASE("read_pool: malformed line reports file and line") {
  TempDir dir("compbench_pool_d");
  generate_pool(Task::Tre, 5, 1, dir.path);
  {
    std::ofstream out(dir.path / "scenes.jsonl", std::ios::app);
    out << "{broken\n";
  }
  try {
    read_pool(dir.path);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("scenes.jsonl:6") != std::string::npos);
  }
}

TEST_CASE("task names") {
  CHECK(std::string(to_string(Task::Coat)) == "COAT");
  CHECK(task_from_string("TRE") == Task::Tre);
  CHECK_THROWS(task_from_string("XYZ"));
}
