#pragma once

#include <cstddef>
#include <cstdint>

#include "impostor/matrix.hpp"
#include "impostor/model.hpp"

namespace impostor {

/// Multiply-adds for one inference, split by stage.
struct OpCounts {
  std::uint64_t backbone_madds = 0;
  /// Uncompressed: M*d (distances) + M (kernel accumulation).
  /// PQ/ADC: m*k*sub_dim (table) + M*m (lookups and adds).
  std::uint64_t rbf_madds = 0;
};

OpCounts op_counters(const TrainedModel& model);

struct TimingReport {
  double backbone_ns = 0.0;  // median per input
  double backbone_iqr_ns = 0.0;
  double rbf_ns = 0.0;  // median per input
  double rbf_iqr_ns = 0.0;
  double rbf_fraction = 0.0;
  std::size_t impostors = 0;
  std::size_t dim = 0;
  bool compressed = false;
  std::size_t threads = 1;
  std::size_t repetitions = 0;
};

struct BenchOptions {
  std::size_t repetitions = 5;
  std::size_t warmup = 3;
  /// Worker threads for the uncompressed distance stage.
  std::size_t threads = 1;
};

struct BenchOutcome {
  TimingReport timing;
  /// Predicted labels from the timed runs.
  std::vector<Label> predictions;
};

/// Times backbone forward and the RBF rule separately over all rows of
/// `inputs`, repeated `repetitions` times after `warmup` discarded runs.
BenchOutcome bench_inference(const TrainedModel& model, const Matrix& inputs, const BenchOptions& options = {});

}  // namespace impostor
