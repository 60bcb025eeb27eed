#include "eif/compute/memory_probe.hpp"

#include <atomic>

namespace eif {
namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_attention{0};

void raise_to(std::atomic<std::size_t>& target, std::size_t value) {
  std::size_t cur = target.load(std::memory_order_relaxed);
  while (cur < value &&
         !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

}  // namespace

void MemoryProbe::on_alloc(std::size_t bytes) {
  const std::size_t now = g_live.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  raise_to(g_peak, now);
}

void MemoryProbe::on_free(std::size_t bytes) {
  g_live.fetch_sub(bytes, std::memory_order_relaxed);
}

std::size_t MemoryProbe::live_bytes() { return g_live.load(std::memory_order_relaxed); }

std::size_t MemoryProbe::peak_bytes() { return g_peak.load(std::memory_order_relaxed); }

void MemoryProbe::reset_peak() { g_peak.store(g_live.load(std::memory_order_relaxed)); }

void MemoryProbe::note_attention_map(std::size_t elements) { raise_to(g_attention, elements); }

std::size_t MemoryProbe::max_attention_map_elements() { return g_attention.load(); }

void MemoryProbe::reset_attention() { g_attention.store(0); }

}  // namespace eif
