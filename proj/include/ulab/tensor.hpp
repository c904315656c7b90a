#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ulab/error.hpp"
#include "ulab/rng.hpp"

namespace ulab {

class Tape;

namespace detail {

struct TensorData {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;    // empty until a backward pass populates it
  std::uint64_t tape_id = 0;   // 0 = not produced by any tape
};

}  // namespace detail

// Dense row-major tensor of doubles. Copies are shallow handles; operations
// never mutate their inputs. Parameters are leaf tensors (tape_id 0) whose
// storage the optimizer updates in place between tapes.
class Tensor {
 public:
  Tensor() : d_(std::make_shared<detail::TensorData>()) {}

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double value) { return from_values({1}, {value}); }
  static Tensor randn(std::vector<int> shape, double std, Rng& rng);

  const std::vector<int>& shape() const { return d_->shape; }
  int ndim() const { return static_cast<int>(d_->shape.size()); }
  int dim(int i) const { return d_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return d_->values.size(); }

  std::span<const double> values() const { return d_->values; }
  // In-place access; meant for leaves (parameter updates, test setup).
  std::span<double> mutable_values() { return d_->values; }

  bool has_grad() const { return !d_->grad.empty(); }
  std::span<const double> grad() const { return d_->grad; }

  double scalar_value() const;
  double at(int r, int c) const;  // 2-D convenience

  std::uint64_t tape_id() const { return d_->tape_id; }

  std::string shape_str() const;

  const std::shared_ptr<detail::TensorData>& data() const { return d_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<detail::TensorData> d_;

  friend class Tape;
};

// Records the elementary operations of one forward pass. Nodes are appended
// in execution order, which is a topological order by construction; backward
// replays them exactly once in reverse. Single-writer: a tape must not be
// shared across concurrent forward passes.
class Tape {
 public:
  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and pulls gradients back through every node.
  // loss must be a scalar produced on this tape.
  void backward(const Tensor& loss);

  // -- used by ops ----------------------------------------------------------
  // inputs: data the node reads; output: data the node wrote.
  void record(std::vector<std::shared_ptr<detail::TensorData>> inputs,
              std::shared_ptr<detail::TensorData> output,
              std::function<void()> pull);

 private:
  struct Node {
    std::function<void()> pull;
  };
  std::uint64_t id_;
  std::vector<Node> nodes_;
  std::vector<std::shared_ptr<detail::TensorData>> touched_;
};

std::size_t shape_product(const std::vector<int>& shape);

}  // namespace ulab
