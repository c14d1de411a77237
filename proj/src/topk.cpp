#include "dart/topk.hpp"

#include <algorithm>

namespace dart {

std::vector<std::size_t> select_extreme(std::span<const double> scores,
                                        std::span<const std::size_t> candidates,
                                        std::size_t count, Direction direction) {
    std::vector<std::size_t> order(candidates.begin(), candidates.end());
    if (count > order.size()) count = order.size();
    auto before = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return direction == Direction::Max ? scores[a] > scores[b] : scores[a] < scores[b];
        }
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count),
                      order.end(), before);
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace dart
