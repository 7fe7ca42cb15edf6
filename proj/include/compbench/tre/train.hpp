#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "compbench/tre/model.hpp"

namespace compbench::tre {

using Model = CompositionModel<double>;

struct TrainConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  double weight_decay = 1e-4;
  int batch_size = 64;
  int max_epochs = 20;
  int early_stop_patience = 4;
  /// Feed-forward width; 0 means 4 * dim.
  int hidden = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// lr(e) = lr_end + (lr_start - lr_end) * (1 + cos(pi * e / max_epochs)) / 2.
double cosine_annealed_lr(const TrainConfig& cfg, int epoch);

/// Scenes with their target embeddings (one row per scene).
struct TrainData {
  std::vector<std::string> ids;
  std::vector<std::vector<Source>> scenes;
  Mat<double> targets;

  [[nodiscard]] std::size_t size() const { return scenes.size(); }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_atre = 0.0;
  double lr = 0.0;
};

/// A finished model. Evaluation only accepts this type, so test targets never reach training.
class SealedModel {
 public:
  static SealedModel seal(Model m) { return SealedModel(std::move(m)); }
  [[nodiscard]] const Model& params() const { return model_; }

 private:
  explicit SealedModel(Model m) : model_(std::move(m)) {}
  Model model_;
};

struct TrainResult {
  SealedModel best;
  int best_epoch = 0;
  double best_val_atre = 0.0;
  std::vector<EpochRecord> history;
};

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const Model& shape, const TrainConfig& cfg);
  void step(Model& params, const Model& grads, double lr);

 private:
  TrainConfig cfg_;
  Model m_, v_;
  long t_ = 0;
};

/// Trains from `init` and returns the checkpoint with the best mean validation A-TRE.
TrainResult train(Model init, const TrainData& train_set, const TrainData& val_set,
                  const TrainConfig& cfg);

/// Mean cosine(target, prediction) over a data set, used for validation.
double mean_atre(const Model& m, const TrainData& data);

struct TreResult {
  std::vector<std::string> ids;
  std::vector<double> scores;
  double mean = 0.0;
  double std = 0.0;
};

TreResult evaluate_tre(const SealedModel& model, const TrainData& test_set);

inline constexpr char kCheckpointMagic[4] = {'A', 'T', 'R', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Model& m);
SealedModel load_checkpoint(const std::filesystem::path& path);

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace compbench::tre
