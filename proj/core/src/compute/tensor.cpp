#include "eif/compute/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "eif/compute/memory_probe.hpp"
#include "eif/errors.hpp"

namespace eif {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

TensorStorage::TensorStorage(Shape s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_size(shape)) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_string(shape));
  }
  MemoryProbe::on_alloc(data.size() * sizeof(double));
}

TensorStorage::~TensorStorage() { MemoryProbe::on_free(data.size() * sizeof(double)); }

Tensor::Tensor(Shape shape, double fill) {
  const std::size_t n = shape_size(shape);
  impl_ = std::make_shared<TensorStorage>(std::move(shape), std::vector<double>(n, fill));
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : impl_(std::make_shared<TensorStorage>(std::move(shape), std::move(data))) {}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::from(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  return Tensor(std::move(shape), std::vector<double>(values));
}

const Shape& Tensor::shape() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::size() const { return impl_ ? impl_->data.size() : 0; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(s));
  }
  return s[axis];
}

std::span<const double> Tensor::data() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->data;
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  }
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank mismatch");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw ShapeError("index out of range");
    flat = flat * s[axis] + i;
    ++axis;
  }
  return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!impl_) throw ContractError("use of undefined tensor");
  impl_->requires_grad = value;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!impl_) throw ContractError("use of undefined tensor");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor out(shape(), std::vector<double>(impl_->data));
  out.impl_->requires_grad = impl_->requires_grad;
  return out;
}

void require_finite(const Tensor& t, const char* where) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(where) + ": non-finite value in input of shape " +
                         shape_string(t.shape()));
    }
  }
}

}  // namespace eif
