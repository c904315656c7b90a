#include "ulab/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "ulab/error.hpp"

namespace ulab {

double lcs_f1(std::span<const int> reference, std::span<const int> candidate) {
  if (reference.empty() || candidate.empty()) return 0.0;
  const std::size_t n = reference.size(), m = candidate.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (reference[i - 1] == candidate[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const int l = prev[m];
  if (l == 0) return 0.0;
  const double p = static_cast<double>(l) / static_cast<double>(m);
  const double r = static_cast<double>(l) / static_cast<double>(n);
  return 2.0 * p * r / (p + r);
}

double mia_auc(std::span<const double> member_losses, std::span<const double> nonmember_losses) {
  if (member_losses.empty() || nonmember_losses.empty()) {
    throw_validation("mia_auc: both loss lists must be nonempty");
  }
  double wins = 0.0;
  for (double m : member_losses) {
    for (double nm : nonmember_losses) {
      if (m < nm) {
        wins += 1.0;
      } else if (m == nm) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(member_losses.size()) * static_cast<double>(nonmember_losses.size()));
}

double final_score(double mia, double tas, double capability) {
  for (double v : {mia, tas, capability}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw_validation("final_score: inputs must lie in [0,1]");
    }
  }
  return (mia + tas + capability) / 3.0;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace ulab
