#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "impostor/bench.hpp"
#include "impostor/dataset.hpp"
#include "impostor/error.hpp"
#include "impostor/model_io.hpp"
#include "impostor/openset.hpp"
#include "impostor/pq.hpp"
#include "impostor/synthetic.hpp"
#include "impostor/train.hpp"

namespace impostor::cli {
namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void need(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
    values.push_back(v);
  }
  return values;
}

// CSV destination: a file when `path` is set, otherwise `fallback`.
class CsvSink {
 public:
  CsvSink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw DataError(DataErrorCode::io, "cannot open for writing: " + path);
    stream_ = file_.get();
  }
  ~CsvSink() noexcept(false) {
    if (file_) {
      file_->close();
      if (!*file_ && std::uncaught_exceptions() == 0) throw DataError(DataErrorCode::io, "write failed");
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

TrainConfig training_config(const Options& o) {
  TrainConfig cfg;
  cfg.scheme = parse_scheme(o.scheme);
  cfg.sigma = o.sigma;
  cfg.lambda = o.lambda;
  cfg.learning_rate = o.lr;
  cfg.impostor_learning_rate = o.impostor_lr;
  cfg.weight_decay = o.weight_decay;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.tied_refresh_period = o.refresh_period;
  cfg.seed = o.seed;
  if (o.pq_requested) cfg.pq = PqSettings{o.pq_m, o.pq_k};
  return cfg;
}

Backbone initial_backbone(const Options& o, std::size_t input_dim, std::size_t embed_dim) {
  const auto hidden = parse_list<std::size_t>(o.hidden, "--hidden");
  for (std::size_t h : hidden) {
    if (h == 0) throw UsageError("--hidden: widths must be positive");
  }
  return Backbone::random_mlp(input_dim, hidden, embed_dim, o.seed);
}

std::optional<LabeledEmbeddingSet> optional_dataset(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_dataset(path);
}

TrainResult train_from_flags(const Options& o, const TrainConfig& cfg, const LabeledEmbeddingSet& data,
                             const LabeledEmbeddingSet* val) {
  const std::size_t embed_dim = cfg.scheme == Scheme::softmax ? data.class_count : o.embed_dim;
  return train(data, cfg, initial_backbone(o, data.dim(), embed_dim), val);
}

void write_log(std::ostream& os, const std::vector<EpochRecord>& log) {
  os << "epoch,mean_loss,classification_term,attachment_term,val_accuracy\n";
  for (const EpochRecord& r : log) {
    os << r.epoch << ',' << num(r.mean_loss) << ',' << num(r.classification_term) << ','
       << num(r.attachment_term) << ',' << num(r.val_accuracy) << '\n';
  }
}

}  // namespace

int cmd_train(const Options& o, std::ostream& out) {
  need(o.data, "--data");
  need(o.model, "--model");
  const LabeledEmbeddingSet data = read_dataset(o.data);
  const auto val = optional_dataset(o.val);
  const TrainConfig cfg = training_config(o);
  const TrainResult result = train_from_flags(o, cfg, data, val ? &*val : nullptr);
  write_model(o.model, result.model);
  {
    CsvSink log(o.out, out);
    write_log(*log, result.log);
  }
  out << "# final_loss=" << num(result.model.meta.final_loss) << '\n';
  out << "# anomalies=" << result.model.meta.anomalies << '\n';
  if (!result.log.empty()) out << "# val_accuracy=" << num(result.log.back().val_accuracy) << '\n';
  return exit_ok;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  need(o.data, "--data");
  need(o.val, "--val");
  const auto grid = parse_list<double>(o.sigma_grid, "--sigma-grid");
  if (grid.empty()) throw UsageError("--sigma-grid must list at least one value");
  for (double s : grid) {
    if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("--sigma-grid: values must be positive");
  }
  const LabeledEmbeddingSet data = read_dataset(o.data);
  const LabeledEmbeddingSet val = read_dataset(o.val);

  CsvSink csv(o.out, out);
  *csv << "sigma,val_accuracy,final_loss,anomalies\n";
  double best_sigma = 0.0;
  double best_accuracy = -1.0;
  std::optional<TrainedModel> best_model;
  for (double sigma : grid) {
    TrainConfig cfg = training_config(o);
    cfg.sigma = sigma;
    TrainResult result = train_from_flags(o, cfg, data, &val);
    const double accuracy = evaluate(result.model, val).accuracy;
    *csv << num(sigma) << ',' << num(accuracy) << ',' << num(result.model.meta.final_loss) << ','
         << result.model.meta.anomalies << '\n';
    // Ties go to the larger, smoother sigma.
    if (accuracy > best_accuracy || (accuracy == best_accuracy && sigma > best_sigma)) {
      best_accuracy = accuracy;
      best_sigma = sigma;
      best_model = std::move(result.model);
    }
  }
  if (!o.model.empty()) write_model(o.model, *best_model);
  out << "# best_sigma=" << num(best_sigma) << '\n';
  out << "# best_val_accuracy=" << num(best_accuracy) << '\n';
  return exit_ok;
}

int cmd_eval(const Options& o, std::ostream& out) {
  need(o.model, "--model");
  need(o.data, "--data");
  const TrainedModel model = read_model(o.model);
  const LabeledEmbeddingSet data = read_dataset(o.data);
  const EvalResult result = evaluate(model, data);
  {
    CsvSink csv(o.out, out);
    *csv << "class,correct,total,accuracy\n";
    for (std::size_t c = 0; c < result.per_class_total.size(); ++c) {
      if (result.per_class_total[c] == 0) continue;
      *csv << c << ',' << result.per_class_correct[c] << ',' << result.per_class_total[c] << ','
           << num(result.class_accuracy(c)) << '\n';
    }
    const std::size_t correct =
        std::accumulate(result.per_class_correct.begin(), result.per_class_correct.end(), std::size_t{0});
    *csv << "all," << correct << ',' << data.size() << ',' << num(result.accuracy) << '\n';
  }
  out << "# accuracy=" << num(result.accuracy) << '\n';
  return exit_ok;
}

int cmd_compress(const Options& o, std::ostream& out) {
  need(o.model, "--model");
  need(o.out, "--out");
  TrainedModel model = read_model(o.model);
  if (!model.has_impostors()) throw ContractError("compress: model has no impostors");
  if (model.is_compressed()) throw ContractError("compress: model is already compressed");
  const ImpostorSet points = model.impostor_points();
  const std::size_t k = o.pq_k == 0 ? std::min<std::size_t>(256, points.size()) : o.pq_k;
  model.head = compress(points, o.pq_m, k, o.seed);

  std::size_t epochs = 0;
  const auto data = optional_dataset(o.data);
  if (data && o.epochs > 0) {
    const auto val = optional_dataset(o.val);
    Options fixed = o;
    fixed.scheme = "fixed";
    fixed.pq_requested = false;
    TrainConfig cfg = training_config(fixed);
    if (!o.sigma_given) cfg.sigma = model.kernel.sigma();
    model = continue_training(*data, cfg, model, val ? &*val : nullptr).model;
    epochs = cfg.epochs;
  }
  write_model(o.out, model);

  const auto& pq = std::get<CompressedImpostors>(model.head);
  CsvSink csv(o.summary, out);
  *csv << "impostors,dim,m,k,code_storage_bytes,codebook_floats,epochs,final_loss\n";
  *csv << pq.codes.count << ',' << pq.codebook.dim() << ',' << pq.codebook.subspaces() << ','
       << pq.codebook.centroids_per_subspace() << ',' << pq.code_storage_bytes() << ',' << pq.codebook_floats()
       << ',' << epochs << ',' << num(epochs > 0 ? model.meta.final_loss : std::nan("")) << '\n';
  return exit_ok;
}

int cmd_bench(const Options& o, std::ostream& out) {
  TrainedModel model;
  if (!o.model.empty()) {
    model = read_model(o.model);
  } else {
    // Random model of the requested shape; only timings and counts matter.
    model.backbone = initial_backbone(o, o.input_dim, o.embed_dim);
    model.class_count = o.bench_classes;
    model.kernel = KernelParams(o.sigma);
    ImpostorSet set;
    set.points = Matrix(o.impostors, o.embed_dim);
    set.labels.resize(o.impostors);
    set.class_count = o.bench_classes;
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> normal;
    for (double& v : set.points.values()) v = normal(rng);
    for (std::size_t i = 0; i < o.impostors; ++i) set.labels[i] = static_cast<Label>(i % o.bench_classes);
    if (o.pq_requested) {
      const std::size_t k = o.pq_k == 0 ? std::min<std::size_t>(256, o.impostors) : o.pq_k;
      model.head = compress(set, o.pq_m, k, o.seed);
    } else {
      model.head = std::move(set);
    }
  }

  Matrix inputs;
  if (!o.data.empty()) {
    inputs = read_dataset(o.data).vectors;
  } else {
    inputs = Matrix(o.queries, model.backbone.input_dim());
    std::mt19937_64 rng(o.seed + 1);
    std::normal_distribution<double> normal;
    for (double& v : inputs.values()) v = normal(rng);
  }

  std::vector<std::size_t> thread_counts{1};
  if (o.threads > 1) thread_counts.push_back(o.threads);
  const OpCounts ops = op_counters(model);

  CsvSink csv(o.out, out);
  *csv << "impostors,dim,compressed,threads,repetitions,backbone_madds,rbf_madds,"
          "backbone_ns,backbone_iqr_ns,rbf_ns,rbf_iqr_ns,rbf_fraction\n";
  for (std::size_t threads : thread_counts) {
    const TimingReport t = bench_inference(model, inputs, BenchOptions{o.repetitions, 3, threads}).timing;
    *csv << t.impostors << ',' << t.dim << ',' << (t.compressed ? 1 : 0) << ',' << t.threads << ','
         << t.repetitions << ',' << ops.backbone_madds << ',' << ops.rbf_madds << ',' << num(t.backbone_ns) << ','
         << num(t.backbone_iqr_ns) << ',' << num(t.rbf_ns) << ',' << num(t.rbf_iqr_ns) << ','
         << num(t.rbf_fraction) << '\n';
  }
  return exit_ok;
}

int cmd_openset(const Options& o, std::ostream& out) {
  need(o.model, "--model");
  need(o.data, "--data");
  need(o.unseen, "--unseen");
  const TrainedModel model = read_model(o.model);
  const LabeledEmbeddingSet seen = read_dataset(o.data);
  const LabeledEmbeddingSet unseen = read_dataset(o.unseen);
  const EntropyReport report = open_set_report(model, seen, unseen, OpenSetOptions{o.allow_overlap});

  {
    CsvSink csv(o.out, out);
    *csv << "bin,lower,upper,seen,unseen\n";
    const EntropyHistogram& h = report.histogram;
    for (std::size_t b = 0; b < h.seen.size(); ++b) {
      *csv << b << ',' << num(h.edges[b]) << ',' << num(h.edges[b + 1]) << ',' << h.seen[b] << ','
           << h.unseen[b] << '\n';
    }
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  {
    CsvSink csv(o.summary, out);
    *csv << "seen_count,unseen_count,max_entropy,mean_seen_entropy,mean_unseen_entropy,ks_distance\n";
    *csv << report.seen_entropies.size() << ',' << report.unseen_entropies.size() << ','
         << num(report.max_entropy) << ',' << num(mean(report.seen_entropies)) << ','
         << num(mean(report.unseen_entropies)) << ',' << num(report.ks_distance) << '\n';
  }
  out << "# ks_distance=" << num(report.ks_distance) << '\n';
  return exit_ok;
}

int cmd_report(const Options& o, std::ostream& out) {
  need(o.model, "--model");
  need(o.data, "--data");
  const TrainedModel model = read_model(o.model);
  const LabeledEmbeddingSet data = read_dataset(o.data);
  if (!model.has_impostors()) throw ContractError("report: model has no impostors");
  if (model.impostor_count() != data.size()) {
    throw ContractError("report: dataset rows do not correspond to the model's impostors");
  }
  if (data.dim() != model.backbone.input_dim()) throw ContractError("report: dataset width does not match model");

  const Matrix emb = model.embed(data.vectors);
  const ImpostorSet points = model.impostor_points();
  std::vector<double> dist(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    dist[i] = std::sqrt(squared_distance(emb.row(i), points.points.row(i)));
  }

  constexpr std::size_t kFlagged = 5;
  CsvSink csv(o.out, out);
  *csv << "class,rank,example,distance,flag\n";
  for (std::size_t c = 0; c < data.class_count; ++c) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == c) ids.push_back(i);
    }
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const char* flag = r < kFlagged ? "nearest" : (r + kFlagged >= ids.size() ? "farthest" : "");
      *csv << c << ',' << r << ',' << ids[r] << ',' << num(dist[ids[r]]) << ',' << flag << '\n';
    }
  }
  return exit_ok;
}

int cmd_generate(const Options& o, std::ostream& out) {
  need(o.out, "--out");
  SyntheticSpec spec;
  spec.generator = parse_generator(o.generator);
  spec.class_count = o.classes;
  spec.samples_per_class = o.per_class;
  spec.noise = o.noise;
  spec.seed = o.seed;
  spec.first_label = o.first_label;
  spec.radii = parse_list<double>(o.radii, "--radii");
  const auto fractions = parse_list<double>(o.fractions, "--fractions");
  if (fractions.size() != 3) throw UsageError("--fractions needs three values: train,val,test");
  spec.train_fraction = fractions[0];
  spec.val_fraction = fractions[1];
  spec.test_fraction = fractions[2];

  const DatasetSplits splits = generate(spec);
  const std::pair<const char*, const LabeledEmbeddingSet*> parts[] = {
      {"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}};
  for (const auto& [name, set] : parts) {
    if (set->size() == 0) continue;
    const std::string path = o.out + "_" + name + ".impd";
    write_dataset(path, *set);
    out << "# wrote " << path << " (" << set->size() << " rows)\n";
  }
  return exit_ok;
}

}  // namespace impostor::cli
