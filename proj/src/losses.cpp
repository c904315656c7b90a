#include "ulab/losses.hpp"

#include "ulab/error.hpp"
#include "ulab/ops.hpp"

namespace ulab {

Tensor ntp_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                bool training, Rng* rng) {
  if (batch.empty()) throw_validation("ntp_loss: empty batch");
  Tensor total;
  bool first = true;
  std::size_t positions = 0;
  for (const EncodedExample& enc : batch) {
    const int t = static_cast<int>(enc.tokens.size());
    if (t < 2) throw_validation("ntp_loss: example too short");
    std::size_t masked = 0;
    for (bool b : enc.loss_mask) masked += b ? 1 : 0;
    if (masked == 0) throw_validation("ntp_loss: example has no masked positions");
    positions += masked;

    Tensor logits = model.forward(tape, enc.tokens, training, rng);
    Tensor preds = slice_rows(tape, logits, 0, t - 1);
    std::vector<int> targets(enc.tokens.begin() + 1, enc.tokens.end());
    Tensor ex_sum = masked_nll_sum(tape, log_softmax(tape, preds), targets, enc.loss_mask);
    total = first ? ex_sum : add(tape, total, ex_sum);
    first = false;
  }
  return scale(tape, total, 1.0 / static_cast<double>(positions));
}

Tensor eul_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                double alpha, double epsilon, bool training, Rng* rng, Tensor* ntp_out) {
  if (alpha <= 0) throw_validation("eul_loss: alpha must be positive");
  if (epsilon <= 0) throw_validation("eul_loss: epsilon must be positive");
  Tensor ntp = ntp_loss(tape, model, batch, training, rng);
  if (ntp_out) *ntp_out = ntp;
  return scale(tape, reciprocal(tape, add_const(tape, ntp, epsilon)), alpha);
}

Tensor eul_squared_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                        double alpha, double epsilon, bool training, Rng* rng, Tensor* ntp_out) {
  Tensor e = eul_loss(tape, model, batch, alpha, epsilon, training, rng, ntp_out);
  return mul(tape, e, e);
}

Tensor grad_ascent_loss(Tape* tape, const Model& model, std::span<const EncodedExample> batch,
                        bool training, Rng* rng, Tensor* ntp_out) {
  Tensor ntp = ntp_loss(tape, model, batch, training, rng);
  if (ntp_out) *ntp_out = ntp;
  return scale(tape, ntp, -1.0);
}

double example_ntp_loss(const Model& model, const EncodedExample& enc) {
  const EncodedExample* p = &enc;
  return ntp_loss(nullptr, model, std::span<const EncodedExample>(p, 1)).scalar_value();
}

}  // namespace ulab
