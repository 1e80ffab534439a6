#pragma once

#include "topogs/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace topogs {

// A column addressed either by 0-based position or by header name.
using ColumnRef = std::variant<std::size_t, std::string>;

struct CsvSchema {
  std::vector<ColumnRef> feature_columns;
  std::optional<ColumnRef> energy_column;
  std::optional<ColumnRef> label_column;
  char delimiter = ',';
  bool has_header = true;
};

// Builds a schema from the file's header: a column named "energy" feeds the
// energy vector, "label" the labels, and every other column is a feature.
// A first line that parses as numbers is treated as data (no header).
CsvSchema infer_csv_schema(const std::filesystem::path& path, char delimiter = ',');

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Writes features as x0..x{n-1}, then energy and label columns when present.
void write_csv(const Dataset& d, const std::filesystem::path& path);

// (t cos t, h, t sin t) with t ~ U[1.5pi, 4.5pi], h ~ U[0, 21]. Energy holds
// the unrolled coordinate (t - 1.5pi) / 3pi.
Dataset generate_swiss_roll(Index n_samples, double noise, std::uint64_t seed);

inline constexpr double kHelixRadius = 1.0;
inline constexpr double kHelixRise = 0.3;  // axial advance per radian

// Arc-length uniform helix with `turns` turns, lifted isometrically into R^dim
// by a random column-orthonormal dim x 3 map. Consecutive rows are curve
// neighbours. Energy is sin^2(pi u) of the normalized curve parameter u.
Dataset generate_trajectory(Index n_samples, Index dim, double turns, double noise, std::uint64_t seed);

// Centers every feature and rescales globally so the mean row norm is 1.
Dataset standardize(const Dataset& d);

}  // namespace topogs
