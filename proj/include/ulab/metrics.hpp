#pragma once

#include <span>
#include <string>
#include <vector>

namespace ulab {

// LCS-based F1 between token sequences; 0 when either side is empty or no
// token is shared, 1 iff both are nonempty and identical.
double lcs_f1(std::span<const int> reference, std::span<const int> candidate);

// Mann-Whitney AUC of "lower loss means member": fraction of (member,
// nonmember) pairs with member < nonmember, ties counted 0.5.
double mia_auc(std::span<const double> member_losses, std::span<const double> nonmember_losses);

// Arithmetic mean; inputs must lie in [0,1].
double final_score(double mia, double tas, double capability);

// 3-decimal display string, e.g. 0.5433 -> "0.543".
std::string format_score(double v);

}  // namespace ulab
