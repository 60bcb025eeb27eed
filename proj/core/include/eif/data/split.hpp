#pragma once

#include <array>
#include <cstddef>

#include "eif/data/dataset.hpp"

namespace eif {

struct ChronoSplit {
  Dataset train;
  Dataset val;
  Dataset test;
  std::array<std::size_t, 2> boundaries{};  // first step of val and of test
};

inline constexpr std::array<double, 3> kDefaultSplitRatios{0.6, 0.2, 0.2};

// Contiguous, unshuffled segments with boundaries at floor(T * cumulative
// ratio). Throws SplitError when a segment is shorter than min_segment_len
// (normally history + horizon).
ChronoSplit chrono_split(const Dataset& dataset, const std::array<double, 3>& ratios,
                         std::size_t min_segment_len);

}  // namespace eif
