#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "impostor/dataset.hpp"
#include "impostor/model.hpp"
#include "impostor/rbf.hpp"

namespace impostor {

/// Shannon entropy in nats; 0 log 0 is taken as 0.
double entropy(const ClassDistribution& dist);

/// Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b| over the merged
/// sample points.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct EntropyHistogram {
  std::vector<double> edges;  // bins + 1 edges spanning [0, ln L]
  std::vector<std::size_t> seen;
  std::vector<std::size_t> unseen;
};

struct EntropyReport {
  std::vector<double> seen_entropies;
  std::vector<double> unseen_entropies;
  double ks_distance = 0.0;
  double max_entropy = 0.0;  // ln L
  EntropyHistogram histogram;
};

inline constexpr std::size_t kEntropyHistogramBins = 64;

/// Uniform bins over [0, max_entropy]; the top edge falls in the last bin.
EntropyHistogram entropy_histogram(std::span<const double> seen, std::span<const double> unseen,
                                   double max_entropy, std::size_t bins = kEntropyHistogramBins);

struct OpenSetOptions {
  /// Diagnostic: skip the check that unseen labels are disjoint from the
  /// model's training classes.
  bool allow_label_overlap = false;
};

/// Entropies of the model's predictions on a seen and an unseen test set.
EntropyReport open_set_report(const TrainedModel& model, const LabeledEmbeddingSet& seen,
                              const LabeledEmbeddingSet& unseen, const OpenSetOptions& options = {});

}  // namespace impostor
