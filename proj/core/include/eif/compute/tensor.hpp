#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eif {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Backing storage of a tensor. Data bytes are reported to MemoryProbe for the
// lifetime of the storage.
struct TensorStorage {
  TensorStorage(Shape s, std::vector<double> d);
  ~TensorStorage();
  TensorStorage(const TensorStorage&) = delete;
  TensorStorage& operator=(const TensorStorage&) = delete;

  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
};

// Shared handle to a dense row-major float64 array. Copies alias the same
// storage; use clone() for a deep copy. Operations never write into their
// inputs, so a tensor is effectively immutable once produced.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor from(std::initializer_list<double> values);
  static Tensor from(Shape shape, std::initializer_list<double> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> data() const;
  // Direct write access for initialization and loading.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t flat) const { return data()[flat]; }
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates zeros on first use
  void zero_grad();

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorStorage>& storage() const { return impl_; }

 private:
  std::shared_ptr<TensorStorage> impl_;
};

// Throws NumericError if any element is NaN or infinite.
void require_finite(const Tensor& t, const char* where);

}  // namespace eif
