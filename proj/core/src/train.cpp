#include "impostor/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "impostor/error.hpp"
#include "impostor/loss.hpp"

namespace impostor {

Scheme parse_scheme(const std::string& name) {
  if (name == "tied") return Scheme::tied;
  if (name == "fixed") return Scheme::fixed;
  if (name == "loose") return Scheme::loose;
  if (name == "softmax") return Scheme::softmax;
  throw ContractError("unknown scheme '" + name + "' (expected tied, fixed, loose or softmax)");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::tied: return "tied";
    case Scheme::fixed: return "fixed";
    case Scheme::loose: return "loose";
    case Scheme::softmax: return "softmax";
  }
  return "unknown";
}

ClassDistribution softmax_distribution(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty logit vector");
  const double top = *std::max_element(logits.begin(), logits.end());
  ClassDistribution out{std::vector<double>(logits.size())};
  double total = 0.0;
  for (std::size_t l = 0; l < logits.size(); ++l) {
    out.probs[l] = std::exp(logits[l] - top);
    total += out.probs[l];
  }
  for (double& p : out.probs) p /= total;
  return out;
}

std::size_t TrainedModel::impostor_count() const noexcept {
  if (const auto* raw = std::get_if<ImpostorSet>(&head)) return raw->size();
  if (const auto* pq = std::get_if<CompressedImpostors>(&head)) return pq->size();
  return 0;
}

ImpostorSet TrainedModel::impostor_points() const {
  if (const auto* raw = std::get_if<ImpostorSet>(&head)) return *raw;
  if (const auto* pq = std::get_if<CompressedImpostors>(&head)) return pq->decode();
  throw ContractError("model has a softmax head and no impostors");
}

ClassDistribution TrainedModel::predict_embedded(std::span<const double> embedding) const {
  if (const auto* raw = std::get_if<ImpostorSet>(&head)) return classify(embedding, *raw, kernel);
  if (const auto* pq = std::get_if<CompressedImpostors>(&head)) {
    return classify_compressed(embedding, *pq, kernel);
  }
  require(embedding.size() == class_count, "softmax head: logit width does not match class count");
  return softmax_distribution(embedding);
}

std::vector<ClassDistribution> TrainedModel::predict(const Matrix& inputs) const {
  const Matrix emb = embed(inputs);
  std::vector<ClassDistribution> out;
  out.reserve(emb.rows());
  for (std::size_t i = 0; i < emb.rows(); ++i) out.push_back(predict_embedded(emb.row(i)));
  return out;
}

void TrainedModel::validate() const {
  require(class_count >= 1, "model: class_count must be positive");
  if (const auto* raw = std::get_if<ImpostorSet>(&head)) {
    raw->validate();
    require(raw->class_count == class_count, "model: impostor class count mismatch");
    require(raw->dim() == backbone.embed_dim(), "model: impostor width does not match embedding width");
  } else if (const auto* pq = std::get_if<CompressedImpostors>(&head)) {
    pq->validate();
    require(pq->class_count == class_count, "model: impostor class count mismatch");
    require(pq->codebook.dim() == backbone.embed_dim(), "model: codebook width does not match embedding width");
  } else {
    require(backbone.embed_dim() == class_count, "model: softmax head needs one logit per class");
  }
}

void TrainConfig::validate() const {
  KernelParams check(sigma);
  (void)check;
  require(std::isfinite(lambda) && lambda >= 0.0, "train: lambda must be non-negative");
  require(batch_size >= 1, "train: batch_size must be positive");
  require(tied_refresh_period >= 1, "train: tied_refresh_period must be positive");
  backbone_hyper().validate();
  impostor_hyper().validate();
  if (pq) {
    require(scheme == Scheme::fixed, "train: PQ compression is supported for the fixed scheme only");
    require(pq->m >= 1, "train: pq m must be positive");
  }
  require(!attachment_only || scheme == Scheme::loose, "train: attachment_only applies to the loose scheme");
}

AdamHyper TrainConfig::backbone_hyper() const {
  return AdamHyper{learning_rate, adam_beta1, adam_beta2, adam_epsilon, weight_decay};
}

AdamHyper TrainConfig::impostor_hyper() const {
  return AdamHyper{impostor_learning_rate.value_or(learning_rate), adam_beta1, adam_beta2, adam_epsilon, 0.0};
}

ImpostorSet init_impostors(const Backbone& backbone, const LabeledEmbeddingSet& data) {
  data.validate();
  require(data.dim() == backbone.input_dim(), "init_impostors: dataset width does not match backbone input");
  return ImpostorSet{backbone.forward(data.vectors), data.labels, data.class_count, false};
}

NormalizedStart normalize_scale(const Backbone& backbone, const ImpostorSet& impostors) {
  impostors.validate();
  require(impostors.dim() == backbone.embed_dim(), "normalize_scale: impostor width does not match backbone");
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < impostors.size(); ++i) norm_sum += l2_norm(impostors.points.row(i));
  const double factor = norm_sum / static_cast<double>(impostors.size());
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw NumericError("normalize_scale: all impostors are zero; cannot normalize a degenerate initialization");
  }

  NormalizedStart out{rescale_last_layer(backbone, factor), impostors, factor};
  for (double& v : out.impostors.points.values()) v /= factor;

  double check = 0.0;
  for (std::size_t i = 0; i < out.impostors.size(); ++i) check += l2_norm(out.impostors.points.row(i));
  check /= static_cast<double>(out.impostors.size());
  if (std::abs(check - 1.0) > 1e-9) {
    throw NumericError("normalize_scale: mean impostor norm is " + std::to_string(check) + " after rescaling");
  }
  return out;
}

double EvalResult::class_accuracy(std::size_t label) const {
  if (label >= per_class_total.size() || per_class_total[label] == 0) return 0.0;
  return static_cast<double>(per_class_correct[label]) / static_cast<double>(per_class_total[label]);
}

EvalResult evaluate(const TrainedModel& model, const LabeledEmbeddingSet& data) {
  require(data.size() >= 1, "evaluate: empty dataset");
  require(data.dim() == model.backbone.input_dim(), "evaluate: dataset width does not match model input");
  const std::size_t classes = std::max(model.class_count, data.class_count);
  EvalResult result;
  result.per_class_correct.assign(classes, 0);
  result.per_class_total.assign(classes, 0);
  const auto dists = model.predict(data.vectors);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Label predicted = predict_label(dists[i]);
    result.predictions.push_back(predicted);
    ++result.per_class_total[data.labels[i]];
    if (predicted == data.labels[i]) {
      ++correct;
      ++result.per_class_correct[data.labels[i]];
    }
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return result;
}

namespace {

struct BatchLoss {
  LossValue value;
  Matrix d_embeddings;
  Matrix d_impostors;
  std::size_t anomalies = 0;
};

BatchLoss softmax_batch_loss(const Matrix& logits, std::span<const Label> labels) {
  const std::size_t batch = logits.rows();
  BatchLoss out;
  out.d_embeddings = Matrix(batch, logits.cols());
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double sum = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const ClassDistribution p = softmax_distribution(logits.row(i));
    const double pc = std::max(p.probs[labels[i]], std::numeric_limits<double>::min());
    sum += -std::log(pc);
    auto g = out.d_embeddings.row(i);
    for (std::size_t l = 0; l < p.probs.size(); ++l) {
      g[l] = (p.probs[l] - (l == labels[i] ? 1.0 : 0.0)) * inv_batch;
    }
  }
  out.value.classification_term = sum * inv_batch;
  out.value.total = out.value.classification_term;
  return out;
}

BatchLoss attachment_only_loss(const Matrix& emb, std::span<const std::size_t> indices,
                               const ImpostorSet& impostors, double lambda) {
  const std::size_t batch = emb.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  BatchLoss out;
  out.d_embeddings = Matrix(batch, emb.cols());
  out.d_impostors = Matrix(impostors.size(), impostors.dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto y = emb.row(i);
    const auto c = impostors.points.row(indices[i]);
    sum += squared_distance(y, c);
    auto gy = out.d_embeddings.row(i);
    auto gc = out.d_impostors.row(indices[i]);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double g = 2.0 * lambda * inv_batch * (y[k] - c[k]);
      gy[k] += g;
      gc[k] -= g;
    }
  }
  out.value.attachment_term = sum * inv_batch;
  out.value.total = lambda * out.value.attachment_term;
  return out;
}

double score(const Backbone& backbone, const ModelHead& head, const KernelParams& kernel,
             std::size_t classes, const LabeledEmbeddingSet& val) {
  TrainedModel probe{backbone, head, kernel, classes, {}};
  return evaluate(probe, val).accuracy;
}

/// Optimizes `start` in place. Impostors (raw or compressed) must already be
/// initialized and normalized; the softmax baseline carries a SoftmaxHead.
TrainResult run_training(const LabeledEmbeddingSet& data, const TrainConfig& config, TrainedModel start,
                         const LabeledEmbeddingSet* val, const EpochCallback& on_epoch) {
  const KernelParams kernel = start.kernel;
  const bool softmax = config.scheme == Scheme::softmax;
  const bool loose = config.scheme == Scheme::loose;

  Backbone backbone = std::move(start.backbone);
  ImpostorSet impostors;
  std::optional<CompressedImpostors> compressed;
  if (auto* pq = std::get_if<CompressedImpostors>(&start.head)) {
    compressed = std::move(*pq);
    impostors = compressed->decode();
  } else if (auto* raw = std::get_if<ImpostorSet>(&start.head)) {
    impostors = std::move(*raw);
  }
  if (!softmax) impostors.frozen = config.scheme == Scheme::fixed;

  AdamState backbone_state = AdamState::zeros_like(backbone.parameter_tensors());
  std::vector<std::span<double>> impostor_tensor{impostors.points.values()};
  AdamState impostor_state = AdamState::zeros_like(impostor_tensor);
  const AdamHyper backbone_hyper = config.backbone_hyper();
  const AdamHyper impostor_hyper = config.impostor_hyper();
  const LooseParams loose_params(config.lambda);

  auto current_head = [&]() -> ModelHead {
    if (softmax) return SoftmaxHead{};
    if (compressed) return *compressed;
    return impostors;
  };

  auto refresh_tied_cache = [&]() { impostors.points = backbone.forward(data.vectors); };

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  LossValue last_value;
  std::size_t total_anomalies = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record;
    record.epoch = epoch + 1;
    double loss_sum = 0.0, cls_sum = 0.0, att_sum = 0.0;

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> indices(order.data() + begin, end - begin);
      const Matrix inputs = data.vectors.gather_rows(indices);
      std::vector<Label> labels(indices.size());
      for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = data.labels[indices[i]];

      ForwardCache cache;
      const Matrix emb = backbone.forward(inputs, &cache);

      BatchLoss batch;
      if (softmax) {
        batch = softmax_batch_loss(emb, labels);
      } else if (config.attachment_only) {
        batch = attachment_only_loss(emb, indices, impostors, config.lambda);
      } else {
        LossResult lr = loose ? loose_loss(emb, indices, labels, impostors, kernel, loose_params)
                              : nca_loss(emb, indices, labels, impostors, kernel);
        batch = BatchLoss{lr.value, std::move(lr.gradients.d_embeddings), std::move(lr.gradients.d_impostors),
                          lr.anomalies};
      }

      const double weight = static_cast<double>(indices.size());
      loss_sum += batch.value.total * weight;
      cls_sum += batch.value.classification_term * weight;
      att_sum += batch.value.attachment_term * weight;
      record.anomalies += batch.anomalies;

      if (!config.freeze_backbone && backbone.parameter_count() > 0) {
        BackwardResult back = backbone.backward(cache, batch.d_embeddings);
        auto params = backbone.parameter_tensors();
        auto grads = std::as_const(back.params).tensors();
        adam_step(params, grads, backbone_state, backbone_hyper);
      }
      if (loose) {
        std::vector<std::span<const double>> grads{batch.d_impostors.values()};
        std::vector<std::span<double>> params{impostors.points.values()};
        adam_step(params, grads, impostor_state, impostor_hyper);
      }
    }

    const double n = static_cast<double>(data.size());
    record.mean_loss = loss_sum / n;
    record.classification_term = cls_sum / n;
    record.attachment_term = att_sum / n;
    total_anomalies += record.anomalies;
    last_value = LossValue{record.mean_loss, record.classification_term, record.attachment_term};

    if (config.scheme == Scheme::tied && (epoch + 1) % config.tied_refresh_period == 0) {
      refresh_tied_cache();
      record.refreshed = true;
    }
    if (val && val->size() > 0) {
      record.val_accuracy = score(backbone, current_head(), kernel, start.class_count, *val);
    }
    result.log.push_back(record);
    if (on_epoch) on_epoch(EpochView{result.log.back(), backbone, softmax ? nullptr : &impostors});
  }

  // The returned tied model satisfies c_i = f(x_i) for the final parameters.
  if (config.scheme == Scheme::tied && config.epochs > 0 && !result.log.back().refreshed) {
    refresh_tied_cache();
  }

  TrainedModel& model = result.model;
  model.backbone = std::move(backbone);
  model.head = current_head();
  model.kernel = kernel;
  model.class_count = start.class_count;
  model.meta = start.meta;
  model.meta.scheme = config.scheme;
  model.meta.seed = config.seed;
  model.meta.epochs = config.epochs;
  model.meta.lambda = loose ? config.lambda : 0.0;
  model.meta.final_loss = last_value.total;
  model.meta.final_classification_term = last_value.classification_term;
  model.meta.final_attachment_term = last_value.attachment_term;
  model.meta.anomalies = total_anomalies;
  return result;
}

void check_training_inputs(const LabeledEmbeddingSet& data, const TrainConfig& config, std::size_t input_dim,
                           const LabeledEmbeddingSet* val) {
  config.validate();
  data.validate();
  require(data.dim() == input_dim, "train: dataset width does not match backbone input");
  require(data.class_count >= 2, "train: at least two classes are required");
  if (val && val->size() > 0) {
    require(val->dim() == data.dim(), "train: validation width does not match training data");
  }
}

}  // namespace

TrainResult train(const LabeledEmbeddingSet& data, const TrainConfig& config, const Backbone& initial,
                  const LabeledEmbeddingSet* val, const EpochCallback& on_epoch) {
  check_training_inputs(data, config, initial.input_dim(), val);

  TrainedModel start;
  start.kernel = KernelParams(config.sigma);
  start.class_count = data.class_count;
  if (config.scheme == Scheme::softmax) {
    require(initial.embed_dim() == data.class_count,
            "train: the softmax baseline needs embed_dim equal to the class count");
    start.backbone = initial;
    start.head = SoftmaxHead{};
  } else {
    NormalizedStart normalized = normalize_scale(initial, init_impostors(initial, data));
    start.backbone = std::move(normalized.backbone);
    start.meta.normalization_factor = normalized.factor;
    if (config.pq) {
      const std::size_t k =
          config.pq->k == 0 ? std::min<std::size_t>(256, normalized.impostors.size()) : config.pq->k;
      start.head = compress(normalized.impostors, config.pq->m, k, config.seed);
    } else {
      start.head = std::move(normalized.impostors);
    }
  }
  return run_training(data, config, std::move(start), val, on_epoch);
}

TrainResult continue_training(const LabeledEmbeddingSet& data, const TrainConfig& config, const TrainedModel& start,
                              const LabeledEmbeddingSet* val, const EpochCallback& on_epoch) {
  check_training_inputs(data, config, start.backbone.input_dim(), val);
  require(config.scheme == Scheme::fixed, "continue_training: only the fixed scheme can resume from a model");
  require(!config.pq, "continue_training: compress the model before resuming instead of passing pq settings");
  require(start.has_impostors(), "continue_training: model has no impostors");
  require(start.impostor_count() == data.size(),
          "continue_training: impostor count does not match the training set size");
  require(start.class_count == data.class_count, "continue_training: class count mismatch");
  TrainedModel model = start;
  model.kernel = KernelParams(config.sigma);
  return run_training(data, config, std::move(model), val, on_epoch);
}

}  // namespace impostor
