#pragma once

#include <span>
#include <vector>

#include "pairgrpo/policy.hpp"

namespace pairgrpo::detail {

std::vector<double> log_softmax(std::span<const double> row);
std::vector<double> softmax(std::span<const double> row);
/// KL(softmax(policy_row) || softmax(reference_row)), clamped at 0.
double row_kl(std::span<const double> policy_row,
              std::span<const double> reference_row);
void require_same_shape(const TabularPolicy& a, const TabularPolicy& b);

}  // namespace pairgrpo::detail
