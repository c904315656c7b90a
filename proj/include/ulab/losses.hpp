#pragma once

#include <span>

#include "ulab/dataset.hpp"
#include "ulab/model.hpp"

namespace ulab {

// Masked next-token cross-entropy pooled over every masked position in the
// batch (mean over positions, not over examples).
Tensor ntp_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                bool training = false, Rng* rng = nullptr);

// alpha / (L_ntp + epsilon). The epsilon term bounds the loss as L_ntp -> 0;
// it is the only deviation from the bare reciprocal.
Tensor eul_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                double alpha, double epsilon, bool training = false, Rng* rng = nullptr,
                Tensor* ntp_out = nullptr);

// (alpha / (L_ntp + epsilon))^2 — alpha sits inside the square.
Tensor eul_squared_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                        double alpha, double epsilon, bool training = false, Rng* rng = nullptr,
                        Tensor* ntp_out = nullptr);

// -L_ntp: descending this loss ascends the next-token loss.
Tensor grad_ascent_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                        bool training = false, Rng* rng = nullptr, Tensor* ntp_out = nullptr);

// Mean masked next-token loss of a single example, inference mode.
double example_ntp_loss(const Model& model, const EncodedExample& enc);

}  // namespace ulab
