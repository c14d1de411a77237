#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dart/core.hpp"

namespace dart {

/// The `count` candidates with the largest (Max) or smallest (Min) score,
/// ties going to the lower index. Returned in ascending index order.
///
/// Shared by pivot selection, duplication-based retention and the importance
/// baseline so that all three break ties identically.
std::vector<std::size_t> select_extreme(std::span<const double> scores,
                                        std::span<const std::size_t> candidates,
                                        std::size_t count, Direction direction);

}  // namespace dart
