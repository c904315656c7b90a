#include "ulab/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace ulab {

namespace {
std::atomic<std::uint64_t> g_next_tape_id{1};
}

std::size_t shape_product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

static void check_shape(const std::vector<int>& shape) {
  if (shape.empty()) throw_validation("tensor shape must have at least one dimension");
  for (int d : shape) {
    if (d <= 0) throw_validation("tensor dimensions must be positive");
  }
}

Tensor Tensor::zeros(std::vector<int> shape) {
  check_shape(shape);
  auto d = std::make_shared<detail::TensorData>();
  d->values.assign(shape_product(shape), 0.0);
  d->shape = std::move(shape);
  return Tensor(std::move(d));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  check_shape(shape);
  auto d = std::make_shared<detail::TensorData>();
  d->values.assign(shape_product(shape), value);
  d->shape = std::move(shape);
  return Tensor(std::move(d));
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values) {
  check_shape(shape);
  if (shape_product(shape) != values.size()) {
    throw_validation("tensor values length does not match shape product");
  }
  auto d = std::make_shared<detail::TensorData>();
  d->shape = std::move(shape);
  d->values = std::move(values);
  return Tensor(std::move(d));
}

Tensor Tensor::randn(std::vector<int> shape, double std, Rng& rng) {
  check_shape(shape);
  auto d = std::make_shared<detail::TensorData>();
  d->shape = std::move(shape);
  d->values.resize(shape_product(d->shape));
  for (double& v : d->values) v = rng.next_normal(0.0, std);
  return Tensor(std::move(d));
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw_validation("scalar_value on tensor of shape " + shape_str());
  }
  return d_->values[0];
}

double Tensor::at(int r, int c) const {
  if (ndim() != 2) throw_validation("at(r,c) requires a 2-D tensor");
  return d_->values[static_cast<std::size_t>(r) * dim(1) + c];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < d_->shape.size(); ++i) {
    if (i) os << "x";
    os << d_->shape[i];
  }
  return os.str();
}

Tape::Tape() : id_(g_next_tape_id.fetch_add(1)) {}

void Tape::record(std::vector<std::shared_ptr<detail::TensorData>> inputs,
                  std::shared_ptr<detail::TensorData> output,
                  std::function<void()> pull) {
  for (const auto& in : inputs) {
    if (in->tape_id != 0 && in->tape_id != id_) {
      throw_validation("tape error: input tensor belongs to a different tape");
    }
    touched_.push_back(in);
  }
  output->tape_id = id_;
  touched_.push_back(output);
  nodes_.push_back(Node{std::move(pull)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape_id() != id_) {
    throw_validation("tape error: backward on a tensor not produced by this tape");
  }
  if (loss.size() != 1) {
    throw_validation("backward requires a scalar loss, got shape " + loss.shape_str());
  }
  for (const auto& d : touched_) {
    d->grad.assign(d->values.size(), 0.0);
  }
  loss.data()->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->pull();
  }
  for (const auto& d : touched_) {
    for (double g : d->grad) {
      if (!std::isfinite(g)) throw_numeric("backward produced a non-finite gradient");
    }
  }
}

}  // namespace ulab
