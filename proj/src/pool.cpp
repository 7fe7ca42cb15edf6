#include "compbench/pool.hpp"

#include <string>
#include <fstream>
#include <nlohmann/json.hpp>

#include "compbench/error.hpp"

namespace compbench {

namespace {

using ojson = nlohmann::ordered_json;

std::string zero_padded(std::int64_t i, std::size_t width) {
  std::string s = std::to_string(i);
  return s.size() < width ? std::string(width - s.size(), '0') + s : s;
}

ojson source_to_json(const Source& s) {
  return {{"t", s.timbre()}, {"p", s.pitch()}, {"r", s.rate()}, {"a", s.amp()}};
}

Source source_from_json(const ojson& j) {
  return Source::from_classes(j.at("t").get<int>(), j.at("p").get<int>(), j.at("r").get<int>(),
                              j.at("a").get<int>());
}

std::vector<Source> sources_from_json(const ojson& arr) {
  if (!arr.is_array()) throw FormatError("sources must be an array");
  std::vector<Source> out;
  out.reserve(arr.size());
  for (const auto& s : arr) out.push_back(source_from_json(s));
  return out;
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& fn) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(line);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const RangeError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

const char* to_string(Task task) { return task == Task::Coat ? "COAT" : "TRE"; }

Task task_from_string(const std::string& s) {
  if (s == "COAT" || s == "coat") return Task::Coat;
  if (s == "TRE" || s == "tre") return Task::Tre;
  throw ArgumentError("unknown task '" + s + "' (expected COAT or TRE)");
}

Source sample_source(Rng& rng) {
  const int t = rng.uniform_int(0, kNumClasses - 1);
  const int p = rng.uniform_int(0, kNumClasses - 1);
  const int r = rng.uniform_int(0, kNumClasses - 1);
  const int a = rng.uniform_int(0, kNumClasses - 1);
  return Source::from_classes(t, p, r, a);
}

Scene sample_scene(Rng& rng, int n_min, int n_max, std::string id) {
  if (n_min < 1 || n_max > kMaxSources || n_min > n_max) {
    throw ArgumentError("sample_scene: need 1 <= n_min <= n_max <= 4, got [" +
                        std::to_string(n_min) + ", " + std::to_string(n_max) + "]");
  }
  Scene scene{std::move(id), {}};
  const int n = rng.uniform_int(n_min, n_max);
  scene.sources.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) scene.sources.push_back(sample_source(rng));
  return scene;
}

QuadrupleSample sample_quadruple(Rng& rng, std::string id) {
  QuadrupleSample out;
  Quadruple& q = out.quad;
  q.id = std::move(id);
  const int t = rng.uniform_int(1, 3);
  for (int i = 0; i < t; ++i) q.t_sources.push_back(sample_source(rng));

  auto& [a, b, c, d] = out.scenes;
  a = sample_scene(rng, 1, kMaxSources - t, q.id + "-A");
  c = sample_scene(rng, 1, kMaxSources - t, q.id + "-C");
  b = {q.id + "-B", a.sources};
  b.sources.insert(b.sources.end(), q.t_sources.begin(), q.t_sources.end());
  d = {q.id + "-D", c.sources};
  d.sources.insert(d.sources.end(), q.t_sources.begin(), q.t_sources.end());
  q.a_id = a.id;
  q.b_id = b.id;
  q.c_id = c.id;
  q.d_id = d.id;
  return out;
}

const Scene& Pool::scene(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw IntegrityError("unknown scene id " + id);
  return scenes[it->second];
}

void Pool::reindex() {
  index_.clear();
  index_.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (!index_.emplace(scenes[i].id, i).second) {
      throw IntegrityError("duplicate scene id " + scenes[i].id);
    }
  }
}

Pool sample_pool(Task task, std::int64_t count, std::uint64_t seed, std::string created) {
  if (count <= 0) throw ArgumentError("pool count must be positive");
  Pool pool;
  pool.manifest = {task, seed, count, kPoolSchemaVersion, std::move(created)};
  Rng rng(seed);
  const int width = std::max<int>(6, static_cast<int>(std::to_string(count - 1).size()));
  if (task == Task::Tre) {
    pool.scenes.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
      pool.scenes.push_back(sample_scene(rng, 1, kMaxSources, "s" + zero_padded(i, width)));
    }
  } else {
    pool.scenes.reserve(static_cast<std::size_t>(4 * count));
    pool.quads.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
      auto sample = sample_quadruple(rng, "q" + zero_padded(i, width));
      for (auto& s : sample.scenes) pool.scenes.push_back(std::move(s));
      pool.quads.push_back(std::move(sample.quad));
    }
  }
  pool.reindex();
  return pool;
}

std::string scene_to_jsonl(const Scene& scene) {
  ojson j;
  j["id"] = scene.id;
  j["sources"] = ojson::array();
  for (const auto& s : scene.sources) j["sources"].push_back(source_to_json(s));
  return j.dump();
}

Scene scene_from_jsonl(const std::string& line) {
  try {
    const auto j = ojson::parse(line);
    Scene s{j.at("id").get<std::string>(), sources_from_json(j.at("sources"))};
    if (s.sources.empty()) throw FormatError("scene " + s.id + " has no sources");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad scene record: ") + e.what());
  }
}

std::string quad_to_jsonl(const Quadruple& q) {
  ojson j;
  j["id"] = q.id;
  j["a_id"] = q.a_id;
  j["b_id"] = q.b_id;
  j["c_id"] = q.c_id;
  j["d_id"] = q.d_id;
  j["t"] = ojson::array();
  for (const auto& s : q.t_sources) j["t"].push_back(source_to_json(s));
  return j.dump();
}

Quadruple quad_from_jsonl(const std::string& line) {
  try {
    const auto j = ojson::parse(line);
    Quadruple q;
    q.id = j.at("id").get<std::string>();
    q.a_id = j.at("a_id").get<std::string>();
    q.b_id = j.at("b_id").get<std::string>();
    q.c_id = j.at("c_id").get<std::string>();
    q.d_id = j.at("d_id").get<std::string>();
    q.t_sources = sources_from_json(j.at("t"));
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad quadruple record: ") + e.what());
  }
}

void write_pool(const std::filesystem::path& dir, const Pool& pool) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "scenes.jsonl", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "scenes.jsonl").string());
    for (const auto& s : pool.scenes) out << scene_to_jsonl(s) << '\n';
  }
  if (pool.manifest.task == Task::Coat) {
    std::ofstream out(dir / "quads.jsonl", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "quads.jsonl").string());
    for (const auto& q : pool.quads) out << quad_to_jsonl(q) << '\n';
  }
  ojson m;
  m["task"] = to_string(pool.manifest.task);
  m["seed"] = pool.manifest.seed;
  m["count"] = pool.manifest.count;
  m["schema_version"] = pool.manifest.schema_version;
  m["created"] = pool.manifest.created;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
}

Pool read_pool(const std::filesystem::path& dir) {
  Pool pool;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw FormatError("cannot open " + (dir / "manifest.json").string());
    try {
      const auto m = ojson::parse(in);
      pool.manifest.task = task_from_string(m.at("task").get<std::string>());
      pool.manifest.seed = m.at("seed").get<std::uint64_t>();
      pool.manifest.count = m.at("count").get<std::int64_t>();
      pool.manifest.schema_version = m.at("schema_version").get<int>();
      pool.manifest.created = m.at("created").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("pool manifest: " + std::string(e.what()));
    }
    if (pool.manifest.schema_version != kPoolSchemaVersion) {
      throw FormatError("pool manifest: unsupported schema_version");
    }
  }
  for_each_line(dir / "scenes.jsonl",
                [&](const std::string& line) { pool.scenes.push_back(scene_from_jsonl(line)); });
  pool.reindex();
  if (pool.manifest.task == Task::Coat) {
    for_each_line(dir / "quads.jsonl", [&](const std::string& line) {
      Quadruple q = quad_from_jsonl(line);
      validate_quadruple(q, pool.scene(q.a_id), pool.scene(q.b_id), pool.scene(q.c_id),
                         pool.scene(q.d_id));
      pool.quads.push_back(std::move(q));
    });
  }
  for (const auto& s : pool.scenes) {
    if (s.sources.size() > static_cast<std::size_t>(kMaxSources)) {
      throw IntegrityError("scene " + s.id + " has more than 4 sources");
    }
  }
  return pool;
}

PoolManifest generate_pool(Task task, std::int64_t count, std::uint64_t seed,
                           const std::filesystem::path& dir, std::string created) {
  const Pool pool = sample_pool(task, count, seed, std::move(created));
  write_pool(dir, pool);
  return pool.manifest;
}

}  // namespace compbench
