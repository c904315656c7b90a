#include "ulab/adam.hpp"

#include <cmath>

#include "ulab/error.hpp"

namespace ulab {

Adam::Adam(const std::vector<Tensor>& params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(std::vector<Tensor>& params, double lr, const std::string& context) {
  if (lr <= 0) throw_validation("adam: lr must be positive");
  if (params.size() != m_.size()) {
    throw_validation("adam: parameter list does not match optimizer state");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto vals = params[pi].mutable_values();
    auto grad = params[pi].grad();
    if (grad.size() != vals.size()) {
      throw_validation("adam: parameter " + std::to_string(pi) + " has no gradient");
    }
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double g = grad[i];
      if (!std::isfinite(g)) {
        throw_numeric("adam: non-finite gradient at step " + std::to_string(step_) +
                      (context.empty() ? "" : " (" + context + ")"));
      }
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      vals[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

}  // namespace ulab
