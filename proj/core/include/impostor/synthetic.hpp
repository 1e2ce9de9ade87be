#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "impostor/dataset.hpp"

namespace impostor {

enum class Generator { rings, blobs, moons };

Generator parse_generator(const std::string& name);
std::string to_string(Generator g);

/// Desk-scale 2-D classification problems.
struct SyntheticSpec {
  Generator generator = Generator::rings;
  std::size_t class_count = 2;
  std::size_t samples_per_class = 1000;
  double noise = 0.1;
  std::uint64_t seed = 7;
  double train_fraction = 0.5;
  double val_fraction = 0.25;
  double test_fraction = 0.25;
  /// Ring radii; empty means radius k+1 for class k.
  std::vector<double> radii;
  /// Label of the first generated class. Classes occupy
  /// [first_label, first_label + class_count); L of the emitted sets is
  /// first_label + class_count. Used to build held-out unseen classes.
  Label first_label = 0;

  void validate() const;
};

struct DatasetSplits {
  LabeledEmbeddingSet train;
  LabeledEmbeddingSet val;  // may be empty when val_fraction == 0
  LabeledEmbeddingSet test;
};

/// Deterministic in the seed. Every class is split with the same fractions
/// (rounded per class; the test split takes the remainder). Coordinates are
/// rounded to float so the sets survive a dataset-file round trip unchanged.
DatasetSplits generate(const SyntheticSpec& spec);

}  // namespace impostor
