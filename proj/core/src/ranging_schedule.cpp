#include <cmath>

#include "coopnav/messaging.hpp"

namespace coopnav::msg {

std::vector<std::pair<std::uint16_t, std::uint16_t>> round_robin_pairs(int agents) {
  if (agents < 2) throw InvalidInputError("ranging needs at least two agents");
  std::vector<std::pair<std::uint16_t, std::uint16_t>> pairs;
  for (int a = 0; a < agents; ++a)
    for (int b = a + 1; b < agents; ++b)
      pairs.emplace_back(static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b));
  return pairs;
}

std::vector<RangingSlot> ranging_schedule(int agents, double rate_total, double t_begin,
                                          double t_end, double phase) {
  if (!(rate_total > 0.0) || !std::isfinite(rate_total))
    throw InvalidInputError("ranging rate must be > 0");
  const auto pairs = round_robin_pairs(agents);
  std::vector<RangingSlot> out;
  for (std::size_t k = 0;; ++k) {
    // Multiply rather than accumulate so long schedules do not drift.
    const double t = t_begin + phase + static_cast<double>(k) / rate_total;
    if (!(t < t_end)) break;
    const auto& p = pairs[k % pairs.size()];
    out.push_back({t, p.first, p.second});
  }
  return out;
}

}  // namespace coopnav::msg
