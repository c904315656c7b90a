#pragma once

#include <cstdint>

namespace ulab {

struct GradcheckOptions {
  int fd_coords = 120;          // sampled parameter coordinates for finite differences
  double fd_step = 1e-5;
  double dual_tol = 1e-10;
  double fd_tol = 1e-4;
  bool corrupt_for_test = false;  // perturbs one AD gradient; must trip the check
};

struct GradcheckResult {
  double max_dual_rel_err = 0.0;  // EUL gradient identity, dual backward passes
  double max_fd_rel_err = 0.0;    // central finite differences on the EUL loss
  double ntp_value = 0.0;
  bool ok = false;
};

// Builds a random tiny model and batch (dimensions, alpha, epsilon drawn from
// the seed) and verifies that backpropagating alpha/(L_ntp+eps) matches
// -alpha/(L_ntp+eps)^2 times the backpropagated L_ntp gradient, and that both
// agree with central finite differences.
GradcheckResult gradcheck(std::uint64_t seed, const GradcheckOptions& opts = {});

}  // namespace ulab
