#include "impostor/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "impostor/error.hpp"

namespace impostor {

Generator parse_generator(const std::string& name) {
  if (name == "rings") return Generator::rings;
  if (name == "blobs") return Generator::blobs;
  if (name == "moons") return Generator::moons;
  throw ContractError("unknown generator '" + name + "' (expected rings, blobs or moons)");
}

std::string to_string(Generator g) {
  switch (g) {
    case Generator::rings: return "rings";
    case Generator::blobs: return "blobs";
    case Generator::moons: return "moons";
  }
  return "unknown";
}

void SyntheticSpec::validate() const {
  require(class_count >= 1, "synthetic: class_count must be positive");
  require(samples_per_class >= 1, "synthetic: samples_per_class must be positive");
  require(std::isfinite(noise) && noise >= 0.0, "synthetic: noise must be non-negative");
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    require(std::isfinite(f) && f >= 0.0 && f <= 1.0, "synthetic: fractions must lie in [0, 1]");
  }
  require(std::abs(train_fraction + val_fraction + test_fraction - 1.0) <= 1e-9,
          "synthetic: train/val/test fractions must sum to 1");
  require(train_fraction > 0.0, "synthetic: train fraction must be positive");
  if (generator == Generator::rings && !radii.empty()) {
    require(radii.size() == class_count, "synthetic: one radius per class is required");
    for (double r : radii) require(std::isfinite(r) && r > 0.0, "synthetic: radii must be positive");
  }
  if (generator == Generator::moons) {
    require(class_count == 2, "synthetic: the moons generator has exactly two classes");
  }
}

namespace {

struct Point {
  double x, y;
};

Point sample(const SyntheticSpec& spec, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (spec.generator) {
    case Generator::rings: {
      const double base = spec.radii.empty() ? static_cast<double>(k + 1) : spec.radii[k];
      const double theta = two_pi * unit(rng);
      const double r = base + spec.noise * gauss(rng);
      return {r * std::cos(theta), r * std::sin(theta)};
    }
    case Generator::blobs: {
      const double angle = two_pi * static_cast<double>(k) / static_cast<double>(spec.class_count);
      const double cx = spec.class_count == 1 ? 0.0 : 3.0 * std::cos(angle);
      const double cy = spec.class_count == 1 ? 0.0 : 3.0 * std::sin(angle);
      const double dx = spec.noise * gauss(rng);
      const double dy = spec.noise * gauss(rng);
      return {cx + dx, cy + dy};
    }
    case Generator::moons: {
      const double t = std::numbers::pi * unit(rng);
      const double dx = spec.noise * gauss(rng);
      const double dy = spec.noise * gauss(rng);
      if (k == 0) return {std::cos(t) + dx, std::sin(t) + dy};
      return {1.0 - std::cos(t) + dx, 0.5 - std::sin(t) + dy};
    }
  }
  return {0.0, 0.0};
}

struct Builder {
  std::vector<double> values;
  std::vector<Label> labels;

  void add(Point p, Label label) {
    values.push_back(static_cast<float>(p.x));
    values.push_back(static_cast<float>(p.y));
    labels.push_back(label);
  }
  LabeledEmbeddingSet finish(std::size_t class_count) {
    const std::size_t n = labels.size();
    return LabeledEmbeddingSet{Matrix(n, 2, std::move(values)), std::move(labels), class_count};
  }
};

}  // namespace

DatasetSplits generate(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.samples_per_class;
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(n)));
  require(n_train >= 1 && n_train + n_val <= n, "synthetic: fractions leave an empty or oversized split");

  Builder train, val, test;
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    const Label label = spec.first_label + static_cast<Label>(k);
    for (std::size_t i = 0; i < n; ++i) {
      const Point p = sample(spec, k, rng);
      if (i < n_train) {
        train.add(p, label);
      } else if (i < n_train + n_val) {
        val.add(p, label);
      } else {
        test.add(p, label);
      }
    }
  }
  const std::size_t total_classes = spec.first_label + spec.class_count;
  return DatasetSplits{train.finish(total_classes), val.finish(total_classes), test.finish(total_classes)};
}

}  // namespace impostor
