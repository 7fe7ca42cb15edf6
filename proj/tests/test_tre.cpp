#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "compbench/error.hpp"
#include "compbench/tre/train.hpp"
#include "oracles.hpp"

using namespace compbench;
using namespace compbench::tre;

namespace {

std::vector<Source> random_scene(Rng& rng, int max_timbre = 7) {
  std::vector<Source> s;
  const int n = rng.uniform_int(1, 4);
  for (int k = 0; k < n; ++k) {
    s.push_back(Source::from_classes(rng.uniform_int(0, max_timbre), rng.uniform_int(0, 7),
                                     rng.uniform_int(0, 7), rng.uniform_int(0, 7)));
  }
  return s;
}

TrainData noise_data(std::size_t n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  TrainData d;
  d.targets.resize(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    d.ids.push_back("s" + std::to_string(i));
    d.scenes.push_back(random_scene(rng));
  }
  for (Eigen::Index i = 0; i < d.targets.size(); ++i) d.targets.data()[i] = rng.normal();
  return d;
}

TrainConfig small_config(int epochs) {
  TrainConfig cfg;
  cfg.max_epochs = epochs;
  cfg.early_stop_patience = epochs;
  cfg.batch_size = 16;
  cfg.seed = 9;
  return cfg;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "compbench_test_tre";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("source embedding sums the four attribute tokens") {
  Mat<double> tokens(kNumTokens, 2);
  for (int r = 0; r < kNumTokens; ++r) tokens.row(r) << r, 100.0 * r;
  const auto e = source_embed(Source::from_classes(1, 2, 3, 4), tokens);
  // rows 1, 8 + 2, 16 + 3, 24 + 4
  CHECK(e(0, 0) == doctest::Approx(1 + 10 + 19 + 28));
  CHECK(e(0, 1) == doctest::Approx(100.0 * (1 + 10 + 19 + 28)));
}

TEST_CASE("forward matches the full-sequence reference block") {
  const auto m = oracle::lively_model(8, 16, 3);
  Rng rng(4);
  std::vector<std::vector<Source>> scenes;
  for (int i = 0; i < 12; ++i) scenes.push_back(random_scene(rng));
  const Source dup = Source::from_classes(2, 5, 1, 6);
  scenes.push_back({dup, dup});
  const std::vector<SceneView> views(scenes.begin(), scenes.end());
  const Mat<double> out = forward(m, std::span<const SceneView>(views));
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto ref = oracle::forward(m, scenes[i]);
    for (int c = 0; c < 8; ++c) CHECK(out(static_cast<Eigen::Index>(i), c) == doctest::Approx(ref[c]).epsilon(1e-10));
  }
}

TEST_CASE("forward by hand on a one-source scene") {
  auto m = Model::zeros(2, 2);
  m.cls << 1.0, -1.0;
  m.ln2_gamma.setOnes();
  m.w1.setIdentity();
  m.w2.setIdentity();
  m.b2 << 0.25, 0.5;
  const std::vector<Source> scene{Source::from_classes(0, 0, 0, 0)};
  const auto out = predict(m, SceneView(scene));
  // Attention sees LN1 output zero, so xp = cls; LN2(cls) = (r, -r).
  const double r = 1.0 / std::sqrt(1.0 + 1e-5);
  auto gelu = [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); };
  CHECK(out(0, 0) == doctest::Approx(1.0 + gelu(r) + 0.25).epsilon(1e-14));
  CHECK(out(0, 1) == doctest::Approx(-1.0 + gelu(-r) + 0.5).epsilon(1e-14));
}

TEST_CASE("prediction is invariant to source order") {
  const auto m = oracle::lively_model(16, 32, 5);
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_scene(rng);
    const auto a = predict(m, SceneView(s));
    std::reverse(s.begin(), s.end());
    const auto b = predict(m, SceneView(s));
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("cosine loss values and degenerate rows") {
  Mat<double> z(3, 2), p(3, 2);
  z << 1, 0, 1, 0, 1, 0;
  p << 2, 0, -1, 0, 0, 5;
  Mat<double> g;
  CHECK(cosine_loss(z.topRows(1).eval(), p.topRows(1).eval()) == doctest::Approx(0.0));
  CHECK(cosine_loss(z.middleRows(1, 1).eval(), p.middleRows(1, 1).eval()) == doctest::Approx(2.0));
  CHECK(cosine_loss(z.bottomRows(1).eval(), p.bottomRows(1).eval()) == doctest::Approx(1.0));
  CHECK(cosine_loss(z, p, &g) == doctest::Approx(1.0));

  Mat<double> zero = Mat<double>::Zero(1, 2);
  CHECK_THROWS_AS(cosine_loss(zero, p.topRows(1).eval()), DegenerateError);
  CHECK_THROWS_AS(cosine_loss(z.topRows(1).eval(), zero), DegenerateError);
  CHECK_THROWS_AS(cosine_loss(z, p.topRows(2).eval()), ArgumentError);
}

TEST_CASE("cosine loss gradient vanishes for a collinear prediction") {
  Rng rng(7);
  Mat<double> z(4, 6);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  const Mat<double> p = 2.5 * z;
  Mat<double> g;
  CHECK(cosine_loss(z, p, &g) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("analytic gradients agree with central differences") {
  const auto check = oracle::gradient_check(8, 16, 200, 1e-4, 11);
  CHECK(check.checked == 200);
  CHECK(check.max_rel_error < 1e-4);
}

TEST_CASE("tokens of absent classes receive no gradient") {
  const auto m = oracle::lively_model(8, 16, 12);
  Rng rng(13);
  std::vector<std::vector<Source>> scenes;
  for (int i = 0; i < 10; ++i) scenes.push_back(random_scene(rng, 3));
  const std::vector<SceneView> views(scenes.begin(), scenes.end());
  Mat<double> targets(10, 8);
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = rng.normal();
  Model g;
  loss_and_grad(m, std::span<const SceneView>(views), targets, g);
  for (int r = 4; r < kNumClasses; ++r) CHECK(g.tokens.row(r).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.tokens.row(0).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("cosine-annealed learning rate endpoints") {
  TrainConfig cfg;
  CHECK(std::abs(cosine_annealed_lr(cfg, 0) - 1e-4) <= 1e-12);
  CHECK(std::abs(cosine_annealed_lr(cfg, cfg.max_epochs) - 1e-5) <= 1e-12);
  CHECK(cosine_annealed_lr(cfg, cfg.max_epochs / 2) == doctest::Approx(5.5e-5));
  for (int e = 1; e <= cfg.max_epochs; ++e) CHECK(cosine_annealed_lr(cfg, e) < cosine_annealed_lr(cfg, e - 1));
}

TEST_CASE("training config validation") {
  auto bad = [](auto mutate) {
    TrainConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  TrainConfig().validate();
  bad([](TrainConfig& c) { c.lr_end = 1e-3; });
  bad([](TrainConfig& c) { c.lr_end = 0.0; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.max_epochs = 0; });
  bad([](TrainConfig& c) { c.early_stop_patience = 0; });
  bad([](TrainConfig& c) { c.early_stop_patience = 21; });
  bad([](TrainConfig& c) { c.beta1 = 1.0; });
  bad([](TrainConfig& c) { c.eps = 0.0; });
  bad([](TrainConfig& c) { c.weight_decay = -1.0; });
  bad([](TrainConfig& c) { c.hidden = -1; });
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto tr = noise_data(64, 8, 1), va = noise_data(16, 8, 2);
  const auto init = Model::init(8, 16, 3);
  const auto a = train(init, tr, va, small_config(3));
  const auto b = train(init, tr, va, small_config(3));
  REQUIRE(a.history.size() == 3);
  CHECK(a.best_epoch == b.best_epoch);
  for (int i = 0; i < kNumTensors; ++i) CHECK(*a.best.params().tensors()[i] == *b.best.params().tensors()[i]);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].lr == cosine_annealed_lr(small_config(3), static_cast<int>(e)));
  }
}

TEST_CASE("unlearnable targets give chance-level validation A-TRE") {
  const auto tr = noise_data(400, 32, 21), va = noise_data(300, 32, 22);
  const auto r = train(Model::init(32, 64, 23), tr, va, small_config(4));
  CHECK(r.best_val_atre >= -0.1);
  CHECK(r.best_val_atre <= 0.1);
  CHECK(r.best_val_atre == doctest::Approx(r.history[static_cast<std::size_t>(r.best_epoch)].val_atre));
}

TEST_CASE("training rejects mismatched data") {
  auto tr = noise_data(10, 8, 1);
  const auto va = noise_data(5, 8, 2);
  CHECK_THROWS_AS(train(Model::init(8, 16, 1), tr, noise_data(5, 4, 2), small_config(1)), ArgumentError);
  tr.scenes.pop_back();
  CHECK_THROWS_AS(train(Model::init(8, 16, 1), tr, va, small_config(1)), ArgumentError);
}

TEST_CASE("evaluation is pure and invariant to target scale") {
  const auto data = noise_data(40, 8, 31);
  const auto model = SealedModel::seal(oracle::lively_model(8, 16, 32));
  const auto a = evaluate_tre(model, data);
  const auto b = evaluate_tre(model, data);
  CHECK(a.scores == b.scores);
  CHECK(a.ids == data.ids);
  auto scaled = data;
  scaled.targets *= 7.0;
  const auto c = evaluate_tre(model, scaled);
  for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(c.scores[i] == doctest::Approx(a.scores[i]).epsilon(1e-12));
  for (double s : a.scores) CHECK(std::abs(s) <= 1.0 + 1e-12);
}

TEST_CASE("checkpoint round trip and corruption") {
  auto m = oracle::lively_model(8, 16, 41);
  for (auto* t : m.tensors()) *t = t->cast<float>().cast<double>();
  const auto path = temp_file("model.atr");
  save_checkpoint(path, m);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.params().dim == 8);
  CHECK(loaded.params().hidden == 16);
  for (int i = 0; i < kNumTensors; ++i) CHECK(*loaded.params().tensors()[i] == *m.tensors()[i]);
  const auto bytes = read_bytes(path);
  CHECK(bytes.size() == 4 + 4 * 4 + kNumTensors * 8 + 4 * m.parameter_count());
  CHECK(bytes.substr(0, 4) == "ATR1");

  const auto bad = temp_file("bad.atr");
  write_bytes(bad, "XTR1" + bytes.substr(4));
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  write_bytes(bad, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  write_bytes(bad, bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  auto wrong_version = bytes;
  wrong_version[4] = 2;
  write_bytes(bad, wrong_version);
  CHECK_THROWS_AS(load_checkpoint(bad), FormatError);
  CHECK_THROWS_AS(load_checkpoint(temp_file("absent.atr")), MissingDependency);
}
