#pragma once

#include <span>
#include <vector>

#include "ulab/tensor.hpp"

namespace ulab {

// Differentiable primitives. Every op takes the tape first; pass nullptr for
// inference (no recording). Outputs are validated finite: an op that would
// produce NaN/Inf throws a numeric error instead of returning it.

// c[m x n] = a[m x k] . b[k x n]
Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);

// elementwise, same shape
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);

// x[t x n] + row[n], broadcast over rows
Tensor add_row(Tape* tape, const Tensor& x, const Tensor& row);

Tensor scale(Tape* tape, const Tensor& x, double c);
Tensor add_const(Tape* tape, const Tensor& x, double c);
Tensor reciprocal(Tape* tape, const Tensor& x);
Tensor gelu(Tape* tape, const Tensor& x);

Tensor transpose(Tape* tape, const Tensor& x);
Tensor slice_rows(Tape* tape, const Tensor& x, int r0, int r1);
Tensor slice_cols(Tape* tape, const Tensor& x, int c0, int c1);
Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts);

// out[t, :] = table[ids[t], :]
Tensor embedding(Tape* tape, const Tensor& table, std::span<const int> ids);

// per-row y = gamma * (x - mean) / sqrt(var + eps) + beta
Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma,
                  const Tensor& beta, double eps);

// softmax over row prefix j <= i; entries above the diagonal are exactly 0
Tensor causal_softmax(Tape* tape, const Tensor& scores);

// per-row log-softmax with max subtraction
Tensor log_softmax(Tape* tape, const Tensor& x);

// sum over masked rows t of -log_probs[t, targets[t]]
Tensor masked_nll_sum(Tape* tape, const Tensor& log_probs,
                      std::span<const int> targets, const std::vector<bool>& mask);

// mean over masked positions of -log_softmax(logits)[t, targets[t]]
Tensor cross_entropy(Tape* tape, const Tensor& logits,
                     std::span<const int> targets, const std::vector<bool>& mask);

// inverted dropout on the full tensor; scales kept entries by 1/(1-p)
Tensor dropout(Tape* tape, const Tensor& x, double p, Rng& rng);

Tensor sum_all(Tape* tape, const Tensor& x);

}  // namespace ulab
