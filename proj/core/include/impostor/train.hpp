#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "impostor/adam.hpp"
#include "impostor/backbone.hpp"
#include "impostor/dataset.hpp"
#include "impostor/model.hpp"

namespace impostor {

struct PqSettings {
  std::size_t m = 8;
  /// Centroids per subspace; 0 means min(256, M).
  std::size_t k = 0;
};

struct TrainConfig {
  Scheme scheme = Scheme::loose;
  double sigma = 0.1;
  double lambda = 1.0;
  double learning_rate = 0.01;
  /// Loose scheme only; defaults to learning_rate.
  std::optional<double> impostor_learning_rate;
  double weight_decay = 5e-4;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  std::size_t tied_refresh_period = 10;
  std::uint64_t seed = 7;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Fixed scheme only: compress the initial impostors and train against the
  /// decoded (frozen) vectors.
  std::optional<PqSettings> pq;

  /// Diagnostics: drop the classification term (loose scheme) and/or keep the
  /// backbone parameters frozen.
  bool attachment_only = false;
  bool freeze_backbone = false;

  void validate() const;
  AdamHyper backbone_hyper() const;
  AdamHyper impostor_hyper() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double classification_term = 0.0;
  double attachment_term = 0.0;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::size_t anomalies = 0;
  /// Tied scheme: the impostor cache was reset at the end of this epoch.
  bool refreshed = false;
};

struct TrainResult {
  TrainedModel model;
  std::vector<EpochRecord> log;
};

/// State handed to the per-epoch observer after the epoch (and any refresh).
struct EpochView {
  const EpochRecord& record;
  const Backbone& backbone;
  const ImpostorSet* impostors;  // null for the softmax baseline
};

using EpochCallback = std::function<void(const EpochView&)>;

/// c_i = f(x_i) for every training example, labels copied, dataset order.
ImpostorSet init_impostors(const Backbone& backbone, const LabeledEmbeddingSet& data);

struct NormalizedStart {
  Backbone backbone;
  ImpostorSet impostors;
  double factor = 1.0;
};

/// Divides impostors and the last backbone layer by the mean impostor L2 norm.
NormalizedStart normalize_scale(const Backbone& backbone, const ImpostorSet& impostors);

/// Runs init -> normalize -> optimize for the configured scheme (the softmax
/// baseline skips the first two steps). `val`, when given, is scored after
/// every epoch.
TrainResult train(const LabeledEmbeddingSet& data, const TrainConfig& config, const Backbone& initial,
                  const LabeledEmbeddingSet* val = nullptr, const EpochCallback& on_epoch = {});

/// Fixed-scheme training that starts from an existing model and keeps its
/// impostors (raw or PQ-compressed) exactly as they are; no re-initialization
/// or normalization. The model's impostors must correspond one-to-one with
/// the rows of `data`.
TrainResult continue_training(const LabeledEmbeddingSet& data, const TrainConfig& config, const TrainedModel& start,
                              const LabeledEmbeddingSet* val = nullptr, const EpochCallback& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::size_t> per_class_correct;
  std::vector<std::size_t> per_class_total;
  std::vector<Label> predictions;

  double class_accuracy(std::size_t label) const;
};

EvalResult evaluate(const TrainedModel& model, const LabeledEmbeddingSet& data);

}  // namespace impostor
