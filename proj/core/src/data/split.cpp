#include "eif/data/split.hpp"

#include <cmath>
#include <string>

#include "eif/errors.hpp"

namespace eif {

ChronoSplit chrono_split(const Dataset& dataset, const std::array<double, 3>& ratios,
                         std::size_t min_segment_len) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw SplitError("split ratios must be positive");
    total += r;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw SplitError("split ratios must sum to 1");
  const double t = static_cast<double>(dataset.steps);
  // The small slack keeps e.g. 10 * (0.6 + 0.2) from flooring to 7.
  const auto b1 = static_cast<std::size_t>(std::floor(t * ratios[0] + 1e-9));
  const auto b2 = static_cast<std::size_t>(std::floor(t * (ratios[0] + ratios[1]) + 1e-9));
  const std::size_t lens[3] = {b1, b2 - b1, dataset.steps - b2};
  const char* names[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    if (lens[i] < min_segment_len || lens[i] == 0) {
      throw SplitError(std::string(names[i]) + " segment has " + std::to_string(lens[i]) +
                       " steps, fewer than the " + std::to_string(min_segment_len) +
                       " required for one window");
    }
  }
  return {dataset.time_slice(0, b1), dataset.time_slice(b1, b2),
          dataset.time_slice(b2, dataset.steps), {b1, b2}};
}

}  // namespace eif
