#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rmrecon {

/// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher),
/// in sample units. Seeds are samples with value 0; others start at +inf.
/// Applied separably along every axis of a row-major array whose first
/// dimension varies fastest.
void squared_distance_transform(std::span<double> values, std::span<const int> dims);

/// Squared distance (in samples) from every cell to the nearest `true` cell.
std::vector<double> squared_distance_to(std::span<const std::uint8_t> seeds, std::span<const int> dims);

}  // namespace rmrecon
