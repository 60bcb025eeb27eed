#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eif/compute/tensor.hpp"

namespace eif {

// Ordered log of differentiable operations executed while the tape is active
// on the current thread. Each record owns a closure that reads the output
// gradient and accumulates into the inputs' gradients.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Record {
    const char* op;
    BackwardFn backward;
  };

  void record(const char* op, BackwardFn fn) { records_.push_back({op, std::move(fn)}); }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

  // Seeds d(loss)/d(loss) = 1, runs every record in reverse execution order,
  // then clears the tape.
  void backward(const Tensor& loss);

 private:
  std::vector<Record> records_;
};

// Makes a tape the active recording target of this thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace eif
