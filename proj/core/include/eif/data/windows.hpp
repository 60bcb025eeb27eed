#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eif/compute/rng.hpp"
#include "eif/compute/tensor.hpp"
#include "eif/data/dataset.hpp"

namespace eif {

struct WindowBatch {
  Tensor inputs;   // [B, T, N, C]
  Tensor targets;  // [B, F, N, C]
  std::vector<std::size_t> starts;
};

// Sliding windows over one segment. Window w covers steps
// [start, start + history) as input and the next `horizon` steps as target.
// Keeps a pointer to the segment, which must outlive the window set.
class WindowSet {
 public:
  WindowSet(const Dataset& segment, std::size_t history, std::size_t horizon, std::size_t stride);

  std::size_t size() const { return starts_.size(); }
  bool empty() const { return starts_.empty(); }
  // True when the segment cannot hold a single window.
  bool too_short() const { return too_short_; }
  const std::vector<std::size_t>& starts() const { return starts_; }
  std::size_t history() const { return history_; }
  std::size_t horizon() const { return horizon_; }
  const Dataset& segment() const { return *segment_; }

  // Window indices 0..size()-1, shuffled when rng is given.
  std::vector<std::size_t> order(Rng* rng = nullptr) const;

  WindowBatch batch(std::span<const std::size_t> window_indices) const;

 private:
  const Dataset* segment_;
  std::size_t history_;
  std::size_t horizon_;
  bool too_short_ = false;
  std::vector<std::size_t> starts_;
};

inline WindowSet make_windows(const Dataset& segment, std::size_t history, std::size_t horizon,
                              std::size_t stride) {
  return WindowSet(segment, history, horizon, stride);
}

}  // namespace eif
