#include "compbench/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "compbench/balance.hpp"
#include "compbench/coat.hpp"
#include "compbench/encoders.hpp"
#include "compbench/hash.hpp"
#include "compbench/parallel.hpp"
#include "compbench/pool.hpp"
#include "compbench/report.hpp"
#include "compbench/synth.hpp"
#include "compbench/wav.hpp"

namespace compbench {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------------------------
// Config parsing

class Fields {
 public:
  Fields(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  template <typename T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key) + ": required field missing");
    return convert<T>(j_.at(key), key);
  }

  const ojson* child(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, unused] : j_.items()) {
      if (!used_.contains(k)) throw ConfigError(field(k) + ": unknown key");
    }
  }

  [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "<root>" : path_; }

  template <typename T>
  T convert(const ojson& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError(field(key) + ": expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    }
    return v.get<T>();
  }

  const ojson& j_;
  std::string path_;
  std::set<std::string> used_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// ---------------------------------------------------------------------------------------------
// Run layout and shared helpers

struct Layout {
  fs::path root;

  [[nodiscard]] fs::path coat_pool() const { return root / "pools" / "coat"; }
  [[nodiscard]] fs::path tre_pool() const { return root / "pools" / "tre"; }
  [[nodiscard]] fs::path coat_ids() const { return root / "balance" / "coat_balanced_ids.json"; }
  [[nodiscard]] fs::path tre_ids() const { return root / "balance" / "tre_balanced_ids.json"; }
  [[nodiscard]] fs::path splits() const { return root / "balance" / "splits.json"; }
  [[nodiscard]] fs::path render_info() const { return root / "audio" / "render_info.csv"; }
  [[nodiscard]] fs::path audio_dir() const { return root / "audio"; }
  [[nodiscard]] fs::path embeddings(const std::string& enc) const { return root / "embeddings" / (enc + ".aeb"); }
  [[nodiscard]] fs::path scores(const std::string& enc) const { return root / "scores" / enc; }
  [[nodiscard]] fs::path report() const { return root / "report"; }
  [[nodiscard]] fs::path manifests() const { return root / "manifests"; }
};

void require_file(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) {
    throw MissingDependency("missing " + p.string() + ": run `" + producer + "` first");
  }
}

std::uint64_t tre_pool_seed(const RunConfig& cfg) { return splitmix64(cfg.seeds.pool ^ 0x5452455F504F4F4CULL); }
std::uint64_t tre_balance_seed(const RunConfig& cfg) { return splitmix64(cfg.seeds.balance ^ 0x5452455F42414CULL); }
std::uint64_t split_seed(const RunConfig& cfg) { return splitmix64(cfg.seeds.balance ^ 0x53504C4954ULL); }

/// Records the files a stage reads and writes, then writes its manifest.
class StageRecord {
 public:
  StageRecord(const RunConfig& cfg, const Layout& layout, std::string stage)
      : cfg_(cfg), layout_(layout), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& p) { inputs_.insert(p); }
  void output(const fs::path& p) { outputs_.insert(p); }

  void finish(const ojson& seeds) {
    fs::create_directories(layout_.manifests());
    ojson m;
    m["stage"] = stage_;
    m["config_hash"] = config_hash(cfg_);
    m["seeds"] = seeds;
    auto hashes = [&](const std::set<fs::path>& files) {
      ojson h = ojson::object();
      for (const auto& f : files) h[fs::relative(f, layout_.root).generic_string()] = sha256_file(f);
      return h;
    };
    m["inputs"] = hashes(inputs_);
    m["outputs"] = hashes(outputs_);
    std::ofstream(layout_.manifests() / (stage_ + ".json"), std::ios::binary) << m.dump(2) << '\n';

    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_);
    ojson t;
    t["stage"] = stage_;
    t["duration_ms"] = ms.count();
    std::ofstream(layout_.manifests() / (stage_ + ".timing.json"), std::ios::binary) << t.dump(2) << '\n';
  }

 private:
  const RunConfig& cfg_;
  const Layout& layout_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
  std::set<fs::path> inputs_, outputs_;
};

const PatchBank& patch_bank(const RunConfig& cfg) {
  static std::map<fs::path, PatchBank> cache;
  if (!cfg.synth.patch_bank) return builtin_patch_bank();
  auto it = cache.find(*cfg.synth.patch_bank);
  if (it == cache.end()) it = cache.emplace(*cfg.synth.patch_bank, load_patch_bank(*cfg.synth.patch_bank)).first;
  return it->second;
}

std::vector<const EncoderConfig*> selected_encoders(const RunConfig& cfg, const StageOptions& opts) {
  std::vector<const EncoderConfig*> out;
  for (const auto& name : opts.encoders) {
    const auto it = std::find_if(cfg.encoders.begin(), cfg.encoders.end(),
                                 [&](const EncoderConfig& e) { return e.name == name; });
    if (it == cfg.encoders.end()) throw ConfigError("--encoder " + name + ": not configured");
  }
  for (const auto& e : cfg.encoders) {
    if (opts.encoders.empty() ||
        std::find(opts.encoders.begin(), opts.encoders.end(), e.name) != opts.encoders.end()) {
      out.push_back(&e);
    }
  }
  return out;
}

/// Balanced pools and splits as seen by the downstream stages.
struct Selection {
  Pool coat_pool, tre_pool;
  std::vector<Quadruple> quads;
  std::vector<EntropyProfile> quad_profiles;
  Splits splits;

  /// Every scene id that needs an embedding, sorted.
  [[nodiscard]] std::vector<std::string> scene_ids() const {
    std::set<std::string> ids;
    for (const auto& q : quads) ids.insert({q.a_id, q.b_id, q.c_id, q.d_id});
    for (const auto* part : {&splits.train, &splits.val, &splits.test}) ids.insert(part->begin(), part->end());
    return {ids.begin(), ids.end()};
  }

  [[nodiscard]] const Scene& scene(const std::string& id) const {
    return coat_pool.has_scene(id) ? coat_pool.scene(id) : tre_pool.scene(id);
  }
};

Selection load_selection(const Layout& L, StageRecord& rec) {
  for (const auto& p : {L.coat_pool() / "quads.jsonl", L.tre_pool() / "scenes.jsonl"}) require_file(p, "gen-pool");
  for (const auto& p : {L.coat_ids(), L.tre_ids(), L.splits()}) require_file(p, "balance");
  Selection s;
  s.coat_pool = read_pool(L.coat_pool());
  s.tre_pool = read_pool(L.tre_pool());
  for (const auto& f : {L.coat_pool() / "scenes.jsonl", L.coat_pool() / "quads.jsonl", L.tre_pool() / "scenes.jsonl",
                        L.coat_ids(), L.tre_ids(), L.splits()}) {
    rec.input(f);
  }

  std::map<std::string, const Quadruple*> by_id;
  for (const auto& q : s.coat_pool.quads) by_id.emplace(q.id, &q);
  for (const auto& id : read_balanced_ids(L.coat_ids())) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw IntegrityError("balanced quadruple " + id + " is not in the COAT pool");
    s.quads.push_back(*it->second);
    s.quad_profiles.push_back(quad_profile(*it->second, s.coat_pool));
  }
  s.splits = read_splits(L.splits());
  for (const auto* part : {&s.splits.train, &s.splits.val, &s.splits.test}) {
    for (const auto& id : *part) {
      if (!s.tre_pool.has_scene(id)) throw IntegrityError("split scene " + id + " is not in the TRE pool");
    }
  }
  return s;
}

EmbeddingSet load_encoder_embeddings(const Layout& L, const EncoderConfig& enc, StageRecord& rec) {
  const auto path = L.embeddings(enc.name);
  require_file(path, "embed");
  rec.input(path);
  return read_embeddings(path, enc.name);
}

tre::TrainData make_data(const std::vector<std::string>& ids, const Pool& pool, const EmbeddingSet& emb) {
  tre::TrainData d;
  d.ids = ids;
  d.targets.resize(static_cast<Eigen::Index>(ids.size()), emb.dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    d.scenes.push_back(pool.scene(ids[i]).sources);
    d.targets.row(static_cast<Eigen::Index>(i)) = emb.at(ids[i]).cast<double>().transpose();
  }
  return d;
}

std::map<std::string, std::string> coat_provenance(const Layout& L) {
  return {{"coat_pool", sha256_file(L.coat_pool() / "quads.jsonl")}, {"coat_balance", sha256_file(L.coat_ids())}};
}

std::map<std::string, std::string> tre_provenance(const Layout& L) {
  return {{"tre_pool", sha256_file(L.tre_pool() / "scenes.jsonl")}, {"tre_splits", sha256_file(L.splits())}};
}

void write_json(const fs::path& p, const ojson& j) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------------------------
// Stages

void stage_gen_pool(const RunConfig& cfg, const Layout& L) {
  StageRecord rec(cfg, L, "gen-pool");
  generate_pool(Task::Coat, cfg.pool.coat_candidates, cfg.seeds.pool, L.coat_pool(), cfg.created);
  generate_pool(Task::Tre, cfg.pool.tre_candidates, tre_pool_seed(cfg), L.tre_pool(), cfg.created);
  for (const auto& f : {L.coat_pool() / "scenes.jsonl", L.coat_pool() / "quads.jsonl", L.coat_pool() / "manifest.json",
                        L.tre_pool() / "scenes.jsonl", L.tre_pool() / "manifest.json"}) {
    rec.output(f);
  }
  rec.finish({{"coat_pool", cfg.seeds.pool}, {"tre_pool", tre_pool_seed(cfg)}});
}

void stage_balance(const RunConfig& cfg, const Layout& L) {
  StageRecord rec(cfg, L, "balance");
  require_file(L.coat_pool() / "manifest.json", "gen-pool");
  require_file(L.tre_pool() / "manifest.json", "gen-pool");
  const Pool coat = read_pool(L.coat_pool());
  const Pool tre = read_pool(L.tre_pool());
  for (const auto& f : {L.coat_pool() / "scenes.jsonl", L.coat_pool() / "quads.jsonl", L.tre_pool() / "scenes.jsonl"}) {
    rec.input(f);
  }
  fs::create_directories(L.coat_ids().parent_path());

  std::vector<EntropyProfile> qp;
  qp.reserve(coat.quads.size());
  for (const auto& q : coat.quads) qp.push_back(quad_profile(q, coat));
  const BalanceTarget coat_target{cfg.balance.bins_per_feature, cfg.balance.coat_subset};
  std::vector<std::string> coat_ids;
  for (std::size_t i : entrofy_select(qp, coat_target, cfg.seeds.balance)) coat_ids.push_back(coat.quads[i].id);
  std::sort(coat_ids.begin(), coat_ids.end());
  write_balanced_ids(L.coat_ids(), coat_ids, coat_target, cfg.seeds.balance, Task::Coat);

  std::vector<EntropyProfile> sp;
  sp.reserve(tre.scenes.size());
  for (const auto& s : tre.scenes) sp.push_back(scene_profile(s));
  const BalanceTarget tre_target{cfg.balance.bins_per_feature, cfg.balance.tre_subset};
  std::vector<std::size_t> picked = entrofy_select(sp, tre_target, tre_balance_seed(cfg));
  std::sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) { return tre.scenes[a].id < tre.scenes[b].id; });
  std::vector<std::string> tre_ids;
  std::vector<double> agg;
  for (std::size_t i : picked) {
    tre_ids.push_back(tre.scenes[i].id);
    agg.push_back(sp[i].aggregate);
  }
  write_balanced_ids(L.tre_ids(), tre_ids, tre_target, tre_balance_seed(cfg), Task::Tre);
  write_splits(L.splits(), make_splits(tre_ids, agg, split_seed(cfg), cfg.balance.bins_per_feature));

  rec.output(L.coat_ids());
  rec.output(L.tre_ids());
  rec.output(L.splits());
  rec.finish({{"coat_balance", cfg.seeds.balance}, {"tre_balance", tre_balance_seed(cfg)}, {"splits", split_seed(cfg)}});
}

void stage_synth(const RunConfig& cfg, const Layout& L) {
  StageRecord rec(cfg, L, "synth");
  const Selection sel = load_selection(L, rec);
  const auto ids = sel.scene_ids();
  const PatchBank& bank = patch_bank(cfg);
  if (cfg.synth.patch_bank) rec.input(*cfg.synth.patch_bank);
  fs::create_directories(L.audio_dir());

  std::vector<double> peaks(ids.size());
  std::vector<char> normalized(ids.size());
  parallel_for(ids.size(), worker_count(), [&](std::size_t i) {
    const RenderedScene r = render_scene(sel.scene(ids[i]), bank);
    peaks[i] = r.mix_peak;
    normalized[i] = r.normalized ? 1 : 0;
    if (cfg.synth.write_wav) write_wav(L.audio_dir() / (ids[i] + ".wav"), r.wave);
  });

  std::ofstream out(L.render_info(), std::ios::binary);
  out << "scene_id,mix_peak,normalized\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << ',' << format_double(peaks[i]) << ',' << int(normalized[i]) << '\n';
  }
  out.close();
  rec.output(L.render_info());
  if (cfg.synth.write_wav) {
    for (const auto& id : ids) rec.output(L.audio_dir() / (id + ".wav"));
  }
  rec.finish(ojson::object());
}

void stage_embed(const RunConfig& cfg, const Layout& L, const StageOptions& opts) {
  StageRecord rec(cfg, L, "embed");
  const Selection sel = load_selection(L, rec);
  const auto ids = sel.scene_ids();
  fs::create_directories(L.embeddings("x").parent_path());

  for (const EncoderConfig* enc : selected_encoders(cfg, opts)) {
    EmbeddingSet set;
    set.encoder_name = enc->name;
    set.dim = enc->dim;
    if (enc->kind == "external") {
      require_file(enc->embeddings, "the external encoder adapter");
      rec.input(enc->embeddings);
      set = read_embeddings(enc->embeddings, enc->name);
      std::vector<std::string> missing;
      for (const auto& id : ids) {
        if (!set.contains(id)) missing.push_back(id);
      }
      if (!missing.empty()) {
        throw IntegrityError("external embeddings for " + enc->name + " miss " + std::to_string(missing.size()) +
                             " scene ids, first: " + missing.front());
      }
    } else {
      std::vector<Embedding> vecs(ids.size());
      const PatchBank& bank = patch_bank(cfg);
      parallel_for(ids.size(), worker_count(), [&](std::size_t i) {
        if (enc->kind == "downsample") {
          vecs[i] = downsample_encode(render_scene(sel.scene(ids[i]), bank).wave, enc->dim);
        } else {
          vecs[i] = random_encode(ids[i], enc->dim, cfg.seeds.random_encoder);
        }
      });
      for (std::size_t i = 0; i < ids.size(); ++i) set.vectors.emplace(ids[i], std::move(vecs[i]));
    }
    write_embeddings(L.embeddings(enc->name), set);
    rec.output(L.embeddings(enc->name));
  }
  rec.finish({{"random_encoder", cfg.seeds.random_encoder}});
}

void stage_eval_coat(const RunConfig& cfg, const Layout& L, const StageOptions& opts) {
  StageRecord rec(cfg, L, "eval-coat");
  const Selection sel = load_selection(L, rec);
  for (const EncoderConfig* enc : selected_encoders(cfg, opts)) {
    const EmbeddingSet emb = load_encoder_embeddings(L, *enc, rec);
    const CoatResult r = evaluate_coat(emb, sel.quads, sel.quad_profiles);
    const auto dir = L.scores(enc->name);
    fs::create_directories(dir);
    write_coat_csv(dir / "coat_scores.csv", r);
    ojson s;
    s["encoder"] = enc->name;
    s["metric"] = "A-COAT";
    s["mean"] = r.mean;
    s["std"] = r.std;
    s["n_valid"] = r.n_valid;
    s["n_degenerate"] = r.n_degenerate;
    s["provenance"] = coat_provenance(L);
    write_json(dir / "coat_summary.json", s);
    rec.output(dir / "coat_scores.csv");
    rec.output(dir / "coat_summary.json");
  }
  rec.finish(ojson::object());
}

void stage_train_tre(const RunConfig& cfg, const Layout& L, const StageOptions& opts) {
  StageRecord rec(cfg, L, "train-tre");
  const Selection sel = load_selection(L, rec);
  for (const EncoderConfig* enc : selected_encoders(cfg, opts)) {
    const EmbeddingSet emb = load_encoder_embeddings(L, *enc, rec);
    // Only train and validation targets are handed to the trainer.
    const auto train_set = make_data(sel.splits.train, sel.tre_pool, emb);
    const auto val_set = make_data(sel.splits.val, sel.tre_pool, emb);
    tre::TrainConfig tc = cfg.train;
    tc.seed = cfg.seeds.model;
    const int hidden = tc.hidden > 0 ? tc.hidden : 4 * emb.dim;
    auto result = tre::train(tre::Model::init(emb.dim, hidden, splitmix64(cfg.seeds.model)), train_set, val_set, tc);
    const auto dir = L.scores(enc->name);
    fs::create_directories(dir);
    tre::save_checkpoint(dir / "tre_model.atr", result.best.params());
    tre::write_history_csv(dir / "tre_history.csv", result.history);
    rec.output(dir / "tre_model.atr");
    rec.output(dir / "tre_history.csv");
  }
  rec.finish({{"model", cfg.seeds.model}});
}

void stage_eval_tre(const RunConfig& cfg, const Layout& L, const StageOptions& opts) {
  StageRecord rec(cfg, L, "eval-tre");
  const Selection sel = load_selection(L, rec);
  std::vector<std::string> test_ids = sel.splits.test;
  std::sort(test_ids.begin(), test_ids.end());
  for (const EncoderConfig* enc : selected_encoders(cfg, opts)) {
    const auto dir = L.scores(enc->name);
    require_file(dir / "tre_model.atr", "train-tre");
    rec.input(dir / "tre_model.atr");
    const tre::SealedModel model = tre::load_checkpoint(dir / "tre_model.atr");
    const EmbeddingSet emb = load_encoder_embeddings(L, *enc, rec);
    const tre::TreResult r = tre::evaluate_tre(model, make_data(test_ids, sel.tre_pool, emb));

    std::ofstream out(dir / "tre_scores.csv", std::ios::binary);
    out << "scene_id,score,H,H_timbre,H_pitch,H_rate,H_amp\n";
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
      const EntropyProfile p = scene_profile(sel.tre_pool.scene(r.ids[i]));
      out << r.ids[i] << ',' << format_double(r.scores[i]) << ',' << format_double(p.aggregate);
      for (double h : p.per_attribute) out << ',' << format_double(h);
      out << '\n';
    }
    out.close();
    ojson s;
    s["encoder"] = enc->name;
    s["metric"] = "A-TRE";
    s["mean"] = r.mean;
    s["std"] = r.std;
    s["n"] = r.scores.size();
    s["provenance"] = tre_provenance(L);
    write_json(dir / "tre_summary.json", s);
    rec.output(dir / "tre_scores.csv");
    rec.output(dir / "tre_summary.json");
  }
  rec.finish(ojson::object());
}

void stage_report(const RunConfig& cfg, const Layout& L, const StageOptions& opts) {
  StageRecord rec(cfg, L, "report");
  std::vector<EncoderScores> scores;
  for (const EncoderConfig* enc : selected_encoders(cfg, opts)) {
    const auto dir = L.scores(enc->name);
    if (!fs::exists(dir / "coat_scores.csv") && !fs::exists(dir / "tre_scores.csv")) {
      throw MissingDependency("no scores for " + enc->name + ": run `eval-coat` or `eval-tre` first");
    }
    for (const char* f : {"coat_scores.csv", "coat_summary.json", "tre_scores.csv", "tre_summary.json"}) {
      if (fs::exists(dir / f)) rec.input(dir / f);
    }
    scores.push_back(load_encoder_scores(dir, enc->name));
  }
  std::map<std::string, std::string> prov = {{"config_hash", config_hash(cfg)}};
  for (const auto& [key, file] : {std::pair{"coat_pool_manifest", L.coat_pool() / "manifest.json"},
                                  std::pair{"tre_pool_manifest", L.tre_pool() / "manifest.json"}}) {
    if (fs::exists(file)) prov[key] = sha256_file(file);
  }
  const RunReport report = build_report(scores, prov);
  write_report(L.report(), report, scores);
  for (const auto& e : fs::directory_iterator(L.report())) rec.output(e.path());
  rec.finish(ojson::object());
}

}  // namespace

// ---------------------------------------------------------------------------------------------

void RunConfig::validate() const {
  if (pool.coat_candidates <= 0 || pool.tre_candidates <= 0) throw ConfigError("pool: candidate counts must be positive");
  if (balance.coat_subset == 0 || balance.coat_subset > static_cast<std::size_t>(pool.coat_candidates)) {
    throw ConfigError("balance.coat_subset: must be in [1, pool.coat_candidates]");
  }
  if (balance.tre_subset < 10 || balance.tre_subset > static_cast<std::size_t>(pool.tre_candidates)) {
    throw ConfigError("balance.tre_subset: must be in [10, pool.tre_candidates]");
  }
  if (balance.bins_per_feature < 2) throw ConfigError("balance.bins_per_feature: must be >= 2");
  if (synth.patch_bank && !fs::exists(*synth.patch_bank)) {
    throw ConfigError("synth.patch_bank: " + synth.patch_bank->string() + " does not exist");
  }
  if (encoders.empty()) throw ConfigError("encoders: at least one encoder required");
  std::set<std::string> names;
  for (const auto& e : encoders) {
    if (e.name.empty()) throw ConfigError("encoders: empty name");
    if (!names.insert(e.name).second) throw ConfigError("encoders: duplicate name " + e.name);
    if (e.kind != "downsample" && e.kind != "random" && e.kind != "external") {
      throw ConfigError("encoders." + e.name + ".kind: expected downsample, random or external");
    }
    if (e.dim <= 0) throw ConfigError("encoders." + e.name + ".dim: must be positive");
    if (e.kind == "external" && e.embeddings.empty()) {
      throw ConfigError("encoders." + e.name + ".embeddings: required for external encoders");
    }
  }
  train.validate();
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config syntax error at " + line_col(text, e.byte) + ": " + e.what());
  }
  RunConfig cfg;
  Fields root(j, "");
  const int version = root.require<int>("schema_version");
  if (version != kConfigSchemaVersion) throw ConfigError("schema_version: unsupported value " + std::to_string(version));
  cfg.output_root = resolve(base_dir, root.get<std::string>("output_root", "run"));
  cfg.created = root.get<std::string>("created", cfg.created);

  const ojson* seeds = root.child("seeds");
  if (seeds == nullptr) throw ConfigError("seeds: required field missing");
  {
    Fields f(*seeds, "seeds");
    cfg.seeds.pool = f.require<std::uint64_t>("pool");
    cfg.seeds.balance = f.require<std::uint64_t>("balance");
    cfg.seeds.model = f.require<std::uint64_t>("model");
    cfg.seeds.random_encoder = f.require<std::uint64_t>("random_encoder");
    f.finish();
  }
  if (const ojson* p = root.child("pool")) {
    Fields f(*p, "pool");
    cfg.pool.coat_candidates = f.get<std::int64_t>("coat_candidates", cfg.pool.coat_candidates);
    cfg.pool.tre_candidates = f.get<std::int64_t>("tre_candidates", cfg.pool.tre_candidates);
    f.finish();
  }
  if (const ojson* b = root.child("balance")) {
    Fields f(*b, "balance");
    cfg.balance.coat_subset = f.get<std::size_t>("coat_subset", cfg.balance.coat_subset);
    cfg.balance.tre_subset = f.get<std::size_t>("tre_subset", cfg.balance.tre_subset);
    cfg.balance.bins_per_feature = f.get<int>("bins_per_feature", cfg.balance.bins_per_feature);
    f.finish();
  }
  if (const ojson* s = root.child("synth")) {
    Fields f(*s, "synth");
    const std::string bank = f.get<std::string>("patch_bank", "");
    if (!bank.empty()) cfg.synth.patch_bank = resolve(base_dir, bank);
    cfg.synth.write_wav = f.get<bool>("write_wav", false);
    f.finish();
  }
  const ojson* encs = root.child("encoders");
  if (encs == nullptr) throw ConfigError("encoders: required field missing");
  if (!encs->is_array()) throw ConfigError("encoders: expected an array");
  for (std::size_t i = 0; i < encs->size(); ++i) {
    Fields f((*encs)[i], "encoders[" + std::to_string(i) + "]");
    EncoderConfig e;
    e.name = f.require<std::string>("name");
    e.kind = f.require<std::string>("kind");
    e.dim = f.get<int>("dim", e.dim);
    const std::string emb = f.get<std::string>("embeddings", "");
    if (!emb.empty()) e.embeddings = resolve(base_dir, emb);
    f.finish();
    cfg.encoders.push_back(e);
  }
  if (const ojson* t = root.child("train")) {
    Fields f(*t, "train");
    auto& c = cfg.train;
    c.beta1 = f.get<double>("beta1", c.beta1);
    c.beta2 = f.get<double>("beta2", c.beta2);
    c.eps = f.get<double>("eps", c.eps);
    c.lr_start = f.get<double>("lr_start", c.lr_start);
    c.lr_end = f.get<double>("lr_end", c.lr_end);
    c.weight_decay = f.get<double>("weight_decay", c.weight_decay);
    c.batch_size = f.get<int>("batch_size", c.batch_size);
    c.max_epochs = f.get<int>("max_epochs", c.max_epochs);
    c.early_stop_patience = f.get<int>("early_stop_patience", c.early_stop_patience);
    c.hidden = f.get<int>("hidden", c.hidden);
    f.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_desk_scale(RunConfig& cfg) {
  cfg.pool.coat_candidates = 5000;
  cfg.pool.tre_candidates = 5000;
  cfg.balance.coat_subset = 200;
  cfg.balance.tre_subset = 500;
}

std::string canonical_config(const RunConfig& cfg) {
  ojson j;
  j["schema_version"] = kConfigSchemaVersion;
  j["created"] = cfg.created;
  j["seeds"] = {{"pool", cfg.seeds.pool}, {"balance", cfg.seeds.balance}, {"model", cfg.seeds.model},
                {"random_encoder", cfg.seeds.random_encoder}};
  j["pool"] = {{"coat_candidates", cfg.pool.coat_candidates}, {"tre_candidates", cfg.pool.tre_candidates}};
  j["balance"] = {{"coat_subset", cfg.balance.coat_subset}, {"tre_subset", cfg.balance.tre_subset},
                  {"bins_per_feature", cfg.balance.bins_per_feature}};
  // The patch bank is identified by content, not location.
  j["synth"] = {{"patch_bank", cfg.synth.patch_bank ? sha256_file(*cfg.synth.patch_bank) : "builtin"},
                {"write_wav", cfg.synth.write_wav}};
  j["encoders"] = ojson::array();
  for (const auto& e : cfg.encoders) {
    j["encoders"].push_back({{"name", e.name}, {"kind", e.kind}, {"dim", e.dim},
                             {"embeddings", e.embeddings.generic_string()}});
  }
  const auto& t = cfg.train;
  j["train"] = {{"beta1", t.beta1}, {"beta2", t.beta2}, {"eps", t.eps}, {"lr_start", t.lr_start},
                {"lr_end", t.lr_end}, {"weight_decay", t.weight_decay}, {"batch_size", t.batch_size},
                {"max_epochs", t.max_epochs}, {"early_stop_patience", t.early_stop_patience}, {"hidden", t.hidden}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_config(cfg)); }

void run_stage(const std::string& stage, const RunConfig& cfg, const StageOptions& opts) {
  selected_encoders(cfg, opts);
  const Layout L{cfg.output_root};
  fs::create_directories(L.root);
  if (stage == "run-all") {
    for (const auto& s : kStages) run_stage(s, cfg, opts);
  } else if (stage == "gen-pool") {
    stage_gen_pool(cfg, L);
  } else if (stage == "balance") {
    stage_balance(cfg, L);
  } else if (stage == "synth") {
    stage_synth(cfg, L);
  } else if (stage == "embed") {
    stage_embed(cfg, L, opts);
  } else if (stage == "eval-coat") {
    stage_eval_coat(cfg, L, opts);
  } else if (stage == "train-tre") {
    stage_train_tre(cfg, L, opts);
  } else if (stage == "eval-tre") {
    stage_eval_tre(cfg, L, opts);
  } else if (stage == "report") {
    stage_report(cfg, L, opts);
  } else {
    throw ConfigError("unknown stage " + stage);
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const MissingDependency*>(&e)) return 3;
  if (dynamic_cast<const IntegrityError*>(&e) || dynamic_cast<const FormatError*>(&e)) return 4;
  return 1;
}

}  // namespace compbench
