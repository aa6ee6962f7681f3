#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "faircf/tabular.hpp"

namespace faircf {

// Two protected groups, each a mixture of two Gaussian blobs over
// (income, credit, education, age). Labels come from a noisy linear rule.
// Group 1's blobs sit further below the decision boundary, so an action that
// lifts most of group 0 lifts fewer members of group 1.
struct SyntheticConfig {
  std::size_t rows_per_group = 300;
  std::uint64_t seed = 7;
  // Shift of group 1's blobs below group 0's, in units of the label rule.
  double asymmetry = 0.8;
};

FeatureSchema synthetic_schema();
Dataset make_synthetic_dataset(const SyntheticConfig& config = {});

// Writes data.csv and schema.json into `dir` (created if missing).
void write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& config = {});

}  // namespace faircf
