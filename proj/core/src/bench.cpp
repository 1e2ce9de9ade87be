#include "impostor/bench.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

#include "impostor/error.hpp"

namespace impostor {

OpCounts op_counters(const TrainedModel& model) {
  OpCounts counts;
  counts.backbone_madds = model.backbone.multiply_adds();
  if (const auto* raw = std::get_if<ImpostorSet>(&model.head)) {
    const std::uint64_t m = raw->size();
    counts.rbf_madds = m * raw->dim() + m;
  } else if (const auto* pq = std::get_if<CompressedImpostors>(&model.head)) {
    const std::uint64_t sub = pq->codebook.subspaces();
    const std::uint64_t k = pq->codebook.centroids_per_subspace();
    counts.rbf_madds = pq->size() * sub + sub * k * pq->codebook.sub_dim();
  }
  return counts;
}

namespace {

struct Quartiles {
  double median, iqr;
};

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Quartiles quartiles(const std::vector<double>& v) {
  return {percentile(v, 0.5), percentile(v, 0.75) - percentile(v, 0.25)};
}

std::vector<ClassDistribution> rbf_stage(const TrainedModel& model, const Matrix& emb, std::size_t threads) {
  if (const auto* raw = std::get_if<ImpostorSet>(&model.head)) {
    return classify_batch(emb, *raw, model.kernel, threads);
  }
  std::vector<ClassDistribution> out;
  out.reserve(emb.rows());
  for (std::size_t i = 0; i < emb.rows(); ++i) out.push_back(model.predict_embedded(emb.row(i)));
  return out;
}

}  // namespace

BenchOutcome bench_inference(const TrainedModel& model, const Matrix& inputs, const BenchOptions& options) {
  require(inputs.rows() >= 1, "bench_inference: empty input");
  require(options.repetitions >= 5, "bench_inference: at least 5 repetitions are required");
  require(inputs.cols() == model.backbone.input_dim(), "bench_inference: input width does not match model");

  using clock = std::chrono::steady_clock;
  std::vector<double> backbone_ns, rbf_ns;
  std::vector<ClassDistribution> last;
  const double per_input = 1.0 / static_cast<double>(inputs.rows());

  for (std::size_t rep = 0; rep < options.warmup + options.repetitions; ++rep) {
    const auto t0 = clock::now();
    const Matrix emb = model.embed(inputs);
    const auto t1 = clock::now();
    last = rbf_stage(model, emb, options.threads);
    const auto t2 = clock::now();
    if (rep < options.warmup) continue;
    // Clamp to 1 ns so a stage too fast for the clock still reports a positive time.
    backbone_ns.push_back(std::max(1.0, std::chrono::duration<double, std::nano>(t1 - t0).count()) * per_input);
    rbf_ns.push_back(std::max(1.0, std::chrono::duration<double, std::nano>(t2 - t1).count()) * per_input);
  }

  BenchOutcome outcome;
  const Quartiles b = quartiles(backbone_ns);
  const Quartiles r = quartiles(rbf_ns);
  TimingReport& t = outcome.timing;
  t.backbone_ns = b.median;
  t.backbone_iqr_ns = b.iqr;
  t.rbf_ns = r.median;
  t.rbf_iqr_ns = r.iqr;
  t.rbf_fraction = r.median / (b.median + r.median);
  t.impostors = model.impostor_count();
  t.dim = model.backbone.embed_dim();
  t.compressed = model.is_compressed();
  t.threads = options.threads;
  t.repetitions = options.repetitions;
  for (const auto& d : last) outcome.predictions.push_back(predict_label(d));
  return outcome;
}

}  // namespace impostor
