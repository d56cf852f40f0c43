#ifndef MPATH_CLI_STATS_HPP_
#define MPATH_CLI_STATS_HPP_

#include <optional>
#include <span>

namespace mpath::cli {

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Two-sided two-sample t-test with Welch's correction. nullopt when either
/// sample has fewer than 2 values. Two constant samples give p = 1 when
/// their means agree and p = 0 otherwise.
std::optional<TTestResult> welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace mpath::cli

#endif  // MPATH_CLI_STATS_HPP_
