#include "eif/data/windows.hpp"

#include <algorithm>
#include <numeric>

#include "eif/errors.hpp"

namespace eif {

WindowSet::WindowSet(const Dataset& segment, std::size_t history, std::size_t horizon,
                     std::size_t stride)
    : segment_(&segment), history_(history), horizon_(horizon) {
  if (history == 0 || horizon == 0 || stride == 0) {
    throw ConfigError("windows: history, horizon and stride must be >= 1");
  }
  if (segment.steps < history + horizon) {
    too_short_ = true;
    return;
  }
  const std::size_t count = (segment.steps - history - horizon) / stride + 1;
  starts_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) starts_.push_back(i * stride);
}

std::vector<std::size_t> WindowSet::order(Rng* rng) const {
  std::vector<std::size_t> idx(starts_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (rng) rng->shuffle(std::span<std::size_t>(idx));
  return idx;
}

WindowBatch WindowSet::batch(std::span<const std::size_t> window_indices) const {
  const Dataset& d = *segment_;
  const std::size_t row = d.entities * d.channels;
  const std::size_t b = window_indices.size();
  std::vector<double> in(b * history_ * row);
  std::vector<double> out(b * horizon_ * row);
  WindowBatch wb;
  for (std::size_t i = 0; i < b; ++i) {
    if (window_indices[i] >= starts_.size()) throw ContractError("window index out of range");
    const std::size_t s = starts_[window_indices[i]];
    wb.starts.push_back(s);
    auto src = d.values.begin() + static_cast<std::ptrdiff_t>(s * row);
    std::copy(src, src + static_cast<std::ptrdiff_t>(history_ * row),
              in.begin() + static_cast<std::ptrdiff_t>(i * history_ * row));
    auto tgt = src + static_cast<std::ptrdiff_t>(history_ * row);
    std::copy(tgt, tgt + static_cast<std::ptrdiff_t>(horizon_ * row),
              out.begin() + static_cast<std::ptrdiff_t>(i * horizon_ * row));
  }
  wb.inputs = Tensor({b, history_, d.entities, d.channels}, std::move(in));
  wb.targets = Tensor({b, horizon_, d.entities, d.channels}, std::move(out));
  return wb;
}

}  // namespace eif
