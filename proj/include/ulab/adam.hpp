#pragma once

#include <vector>

#include "ulab/tensor.hpp"

namespace ulab {

// Adam with bias correction. Accumulators mirror the trainable parameter list
// passed at construction; steps read each parameter's grad in place.
class Adam {
 public:
  explicit Adam(const std::vector<Tensor>& params);

  // One update; throws a numeric error naming step/task on non-finite grads.
  void step(std::vector<Tensor>& params, double lr, const std::string& context = "");

  std::uint64_t step_count() const { return step_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t step_ = 0;
};

}  // namespace ulab
