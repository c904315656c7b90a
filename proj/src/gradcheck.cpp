#include "ulab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ulab/losses.hpp"
#include "ulab/model.hpp"

namespace ulab {

namespace {

std::string random_text(Rng& rng, int min_len, int max_len) {
  const int len = min_len + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_len - min_len + 1)));
  std::string s;
  for (int i = 0; i < len; ++i) {
    s.push_back(static_cast<char>('a' + rng.next_below(26)));
  }
  return s;
}

}  // namespace

GradcheckResult gradcheck(std::uint64_t seed, const GradcheckOptions& opts) {
  Rng rng(Rng::mix(seed, 0x6C6C));

  ModelConfig mc;
  mc.n_heads = 1 + static_cast<int>(rng.next_below(2));           // 1 or 2
  mc.d_model = mc.n_heads * (4 + static_cast<int>(rng.next_below(5)));  // 4..8 per head
  mc.n_layers = 1 + static_cast<int>(rng.next_below(2));
  mc.d_ff = 8 + static_cast<int>(rng.next_below(17));
  mc.ctx = 32;
  Model model(mc, rng.next_u64());

  std::vector<EncodedExample> batch;
  const int batch_size = 1 + static_cast<int>(rng.next_below(3));
  for (int i = 0; i < batch_size; ++i) {
    batch.push_back(encode_io(random_text(rng, 2, 5), random_text(rng, 2, 6), mc.ctx));
  }
  const double alpha = 0.5 + 1.5 * rng.next_double();
  const double epsilon = std::pow(10.0, -4.0 + 2.0 * rng.next_double());  // 1e-4..1e-2

  GradcheckResult res;

  // pass 1: plain ntp gradient
  std::vector<std::vector<double>> ntp_grads;
  {
    Tape tape;
    Tensor ntp = ntp_loss(&tape, model, batch);
    tape.backward(ntp);
    res.ntp_value = ntp.scalar_value();
    for (const Tensor& p : model.trainable()) {
      ntp_grads.emplace_back(p.grad().begin(), p.grad().end());
    }
  }

  // pass 2: EUL gradient
  std::vector<std::vector<double>> eul_grads;
  {
    Tape tape;
    Tensor eul = eul_loss(&tape, model, batch, alpha, epsilon);
    tape.backward(eul);
    for (const Tensor& p : model.trainable()) {
      eul_grads.emplace_back(p.grad().begin(), p.grad().end());
    }
  }
  if (opts.corrupt_for_test) {
    // simulate a wrong gradient rule on the most active coordinate
    std::size_t bp = 0, bi = 0;
    double best = -1.0;
    for (std::size_t pi = 0; pi < eul_grads.size(); ++pi) {
      for (std::size_t i = 0; i < eul_grads[pi].size(); ++i) {
        if (std::abs(eul_grads[pi][i]) > best) {
          best = std::abs(eul_grads[pi][i]);
          bp = pi;
          bi = i;
        }
      }
    }
    eul_grads[bp][bi] *= 1.0 + 1e-6;
  }

  const double denom = res.ntp_value + epsilon;
  const double factor = -alpha / (denom * denom);
  double grad_scale = 0.0;
  for (std::size_t pi = 0; pi < eul_grads.size(); ++pi) {
    for (std::size_t i = 0; i < eul_grads[pi].size(); ++i) {
      grad_scale = std::max({grad_scale, std::abs(factor * ntp_grads[pi][i]),
                             std::abs(eul_grads[pi][i])});
    }
  }
  // coordinates whose exact gradient is zero (e.g. key biases, which cancel
  // inside the row softmax) carry only cancellation noise; they count as
  // consistent zeros rather than as infinite relative error
  const double zero_floor = 1e-14 * std::max(1.0, grad_scale);
  for (std::size_t pi = 0; pi < eul_grads.size(); ++pi) {
    for (std::size_t i = 0; i < eul_grads[pi].size(); ++i) {
      const double want = factor * ntp_grads[pi][i];
      const double got = eul_grads[pi][i];
      if (std::max(std::abs(want), std::abs(got)) < zero_floor) continue;
      if (want != got) {
        const double scale = std::max(std::abs(want), std::abs(got));
        res.max_dual_rel_err = std::max(res.max_dual_rel_err, std::abs(want - got) / scale);
      }
    }
  }

  // pass 3: central finite differences of the EUL scalar on sampled coordinates
  auto trainable = model.trainable();
  auto eval_eul = [&]() {
    return eul_loss(nullptr, model, batch, alpha, epsilon).scalar_value();
  };
  std::size_t total = 0;
  for (const Tensor& p : trainable) total += p.size();
  for (int c = 0; c < opts.fd_coords; ++c) {
    std::size_t flat = rng.next_below(total);
    std::size_t pi = 0;
    while (flat >= trainable[pi].size()) {
      flat -= trainable[pi].size();
      ++pi;
    }
    auto vals = trainable[pi].mutable_values();
    const double orig = vals[flat];
    vals[flat] = orig + opts.fd_step;
    const double up = eval_eul();
    vals[flat] = orig - opts.fd_step;
    const double down = eval_eul();
    vals[flat] = orig;
    const double fd = (up - down) / (2.0 * opts.fd_step);
    const double ad = eul_grads[pi][flat];
    res.max_fd_rel_err = std::max(res.max_fd_rel_err, std::abs(ad - fd) / std::max(1.0, std::abs(fd)));
  }

  res.ok = res.max_dual_rel_err <= opts.dual_tol && res.max_fd_rel_err <= opts.fd_tol;
  return res;
}

}  // namespace ulab
