#include "compbench/tre/train.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>

namespace compbench::tre {

namespace {

constexpr Eigen::Index kEvalChunk = 256;

Mat<double> predict_all(const Model& m, const TrainData& data) {
  Mat<double> out(static_cast<Eigen::Index>(data.size()), m.dim);
  std::vector<SceneView> views;
  for (std::size_t lo = 0; lo < data.size(); lo += kEvalChunk) {
    const std::size_t hi = std::min(data.size(), lo + kEvalChunk);
    views.clear();
    for (std::size_t i = lo; i < hi; ++i) views.emplace_back(data.scenes[i]);
    out.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)) =
        forward(m, std::span<const SceneView>(views));
  }
  return out;
}

std::vector<double> row_cosines(const Mat<double>& target, const Mat<double>& pred) {
  std::vector<double> out(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    const double nz = target.row(i).norm(), np = pred.row(i).norm();
    if (!(nz > 0.0) || !(np > 0.0)) throw DegenerateError("A-TRE: zero-norm embedding in row " + std::to_string(i));
    out[static_cast<std::size_t>(i)] = std::clamp(target.row(i).dot(pred.row(i)) / (nz * np), -1.0, 1.0);
  }
  return out;
}

void check_data(const TrainData& d, int dim, const char* name) {
  if (d.scenes.size() != static_cast<std::size_t>(d.targets.rows())) {
    throw ArgumentError(std::string(name) + ": scene/target count mismatch");
  }
  if (d.targets.cols() != dim) throw ArgumentError(std::string(name) + ": target dim mismatch");
  if (d.scenes.empty()) throw ArgumentError(std::string(name) + ": empty split");
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& s, std::size_t& pos) {
  if (pos + 4 > s.size()) throw FormatError("checkpoint truncated at byte offset " + std::to_string(pos));
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_start >= lr_end && lr_end > 0.0)) throw ConfigError("train: need lr_start >= lr_end > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (early_stop_patience < 1 || early_stop_patience > max_epochs) {
    throw ConfigError("train: need 1 <= early_stop_patience <= max_epochs");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("train: eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
  if (hidden < 0) throw ConfigError("train: hidden must be non-negative");
}

double cosine_annealed_lr(const TrainConfig& cfg, int epoch) {
  return cfg.lr_end + 0.5 * (cfg.lr_start - cfg.lr_end) *
                          (1.0 + std::cos(std::numbers::pi * epoch / cfg.max_epochs));
}

AdamW::AdamW(const Model& shape, const TrainConfig& cfg)
    : cfg_(cfg), m_(Model::zeros(shape.dim, shape.hidden)), v_(Model::zeros(shape.dim, shape.hidden)) {}

void AdamW::step(Model& params, const Model& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (int i = 0; i < kNumTensors; ++i) {
    m[i]->array() = cfg_.beta1 * m[i]->array() + (1.0 - cfg_.beta1) * g[i]->array();
    v[i]->array() = cfg_.beta2 * v[i]->array() + (1.0 - cfg_.beta2) * g[i]->array().square();
    if (Model::kDecayed[static_cast<std::size_t>(i)]) *p[i] *= (1.0 - lr * cfg_.weight_decay);
    p[i]->array() -= lr * (m[i]->array() / c1) / ((v[i]->array() / c2).sqrt() + cfg_.eps);
  }
}

double mean_atre(const Model& m, const TrainData& data) {
  const auto scores = row_cosines(data.targets, predict_all(m, data));
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

TrainResult train(Model init, const TrainData& train_set, const TrainData& val_set,
                  const TrainConfig& cfg) {
  cfg.validate();
  check_data(train_set, init.dim, "train split");
  check_data(val_set, init.dim, "validation split");

  Model params = std::move(init);
  AdamW opt(params, cfg);
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{SealedModel::seal(params), -1, -std::numeric_limits<double>::infinity(), {}};
  int since_best = 0;
  std::vector<SceneView> views;
  Mat<double> targets;
  Model grads = Model::zeros(params.dim, params.hidden);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cosine_annealed_lr(cfg, epoch);
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      views.clear();
      targets.resize(static_cast<Eigen::Index>(hi - lo), params.dim);
      for (std::size_t k = lo; k < hi; ++k) {
        views.emplace_back(train_set.scenes[order[k]]);
        targets.row(static_cast<Eigen::Index>(k - lo)) = train_set.targets.row(static_cast<Eigen::Index>(order[k]));
      }
      double loss = 0.0;
      try {
        loss = loss_and_grad(params, std::span<const SceneView>(views), targets, grads);
      } catch (const DegenerateError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(loss) || !grads.all_finite()) {
        throw NumericalError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                             " batch " + std::to_string(batch_index));
      }
      loss_sum += loss * static_cast<double>(hi - lo);
      opt.step(params, grads, lr);
    }

    const double val = mean_atre(params, val_set);
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), val, lr});
    if (val > result.best_val_atre) {
      result.best_val_atre = val;
      result.best_epoch = epoch;
      result.best = SealedModel::seal(params);
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

TreResult evaluate_tre(const SealedModel& model, const TrainData& test_set) {
  check_data(test_set, model.params().dim, "test split");
  TreResult r;
  r.ids = test_set.ids;
  r.scores = row_cosines(test_set.targets, predict_all(model.params(), test_set));
  const double n = static_cast<double>(r.scores.size());
  r.mean = std::accumulate(r.scores.begin(), r.scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : r.scores) ss += (s - r.mean) * (s - r.mean);
  r.std = r.scores.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return r;
}

void save_checkpoint(const std::filesystem::path& path, const Model& m) {
  std::string bytes(kCheckpointMagic, 4);
  put_u32(bytes, kCheckpointVersion);
  put_u32(bytes, static_cast<std::uint32_t>(m.dim));
  put_u32(bytes, static_cast<std::uint32_t>(m.hidden));
  put_u32(bytes, kNumTensors);
  for (const auto* t : m.tensors()) {
    put_u32(bytes, static_cast<std::uint32_t>(t->rows()));
    put_u32(bytes, static_cast<std::uint32_t>(t->cols()));
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) {
        put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>((*t)(r, c))));
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SealedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingDependency("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || bytes.compare(0, 4, kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint " + path.string() + ": bad magic");
  }
  std::size_t pos = 4;
  if (get_u32(bytes, pos) != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  const auto dim = static_cast<int>(get_u32(bytes, pos));
  const auto hidden = static_cast<int>(get_u32(bytes, pos));
  if (get_u32(bytes, pos) != kNumTensors) throw FormatError("checkpoint: unexpected tensor count");
  Model m = Model::zeros(dim, hidden);
  for (auto* t : m.tensors()) {
    const auto rows = get_u32(bytes, pos);
    const auto cols = get_u32(bytes, pos);
    if (rows != t->rows() || cols != t->cols()) throw FormatError("checkpoint: tensor shape mismatch");
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) (*t)(r, c) = std::bit_cast<float>(get_u32(bytes, pos));
    }
  }
  if (pos != bytes.size()) throw FormatError("checkpoint: trailing bytes");
  return SealedModel::seal(std::move(m));
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,train_loss,val_atre,lr\n";
  char buf[160];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_atre, e.lr);
    out << buf;
  }
}

}  // namespace compbench::tre
