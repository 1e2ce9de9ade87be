#include "impostor/openset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impostor/error.hpp"

namespace impostor {

double entropy(const ClassDistribution& dist) {
  require(dist.is_valid(), "entropy: invalid class distribution");
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), "ks_distance: both samples must be non-empty");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

EntropyHistogram entropy_histogram(std::span<const double> seen, std::span<const double> unseen,
                                   double max_entropy, std::size_t bins) {
  require(bins >= 1, "entropy_histogram: need at least one bin");
  EntropyHistogram h;
  // A one-class model has ln L = 0; keep the bins non-degenerate.
  const double top = max_entropy > 0.0 ? max_entropy : 1.0;
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(top * static_cast<double>(b) / static_cast<double>(bins));
  }
  auto fill = [&](std::span<const double> values, std::vector<std::size_t>& counts) {
    counts.assign(bins, 0);
    for (double v : values) {
      auto b = static_cast<std::size_t>(std::floor(v / top * static_cast<double>(bins)));
      ++counts[std::min(b, bins - 1)];
    }
  };
  fill(seen, h.seen);
  fill(unseen, h.unseen);
  return h;
}

EntropyReport open_set_report(const TrainedModel& model, const LabeledEmbeddingSet& seen,
                              const LabeledEmbeddingSet& unseen, const OpenSetOptions& options) {
  require(seen.size() >= 1 && unseen.size() >= 1, "open_set_report: both test sets must be non-empty");
  if (!options.allow_label_overlap) {
    for (std::size_t i = 0; i < unseen.size(); ++i) {
      require(unseen.labels[i] >= model.class_count,
              "open_set_report: unseen record " + std::to_string(i) + " has training-class label " +
                  std::to_string(unseen.labels[i]));
    }
  }
  EntropyReport report;
  report.max_entropy = std::log(static_cast<double>(model.class_count));
  for (const auto& d : model.predict(seen.vectors)) report.seen_entropies.push_back(entropy(d));
  for (const auto& d : model.predict(unseen.vectors)) report.unseen_entropies.push_back(entropy(d));
  report.ks_distance = ks_distance(report.seen_entropies, report.unseen_entropies);
  report.histogram = entropy_histogram(report.seen_entropies, report.unseen_entropies, report.max_entropy);
  return report;
}

}  // namespace impostor
