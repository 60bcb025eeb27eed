#pragma once

#include <cstddef>

namespace eif {

// Process-wide accounting of live tensor data bytes, plus the largest
// attention map materialized since the last reset. The benchmark and the
// latent-map boundedness tests read these counters.
class MemoryProbe {
 public:
  static void on_alloc(std::size_t bytes);
  static void on_free(std::size_t bytes);

  static std::size_t live_bytes();
  static std::size_t peak_bytes();
  // Sets the peak to the current live byte count.
  static void reset_peak();

  static void note_attention_map(std::size_t elements);
  static std::size_t max_attention_map_elements();
  static void reset_attention();
};

}  // namespace eif
