#ifndef MPATH_ARCH_AGGREGATION_HPP_
#define MPATH_ARCH_AGGREGATION_HPP_

#include <string>
#include <string_view>

#include "mpath/errors.hpp"

namespace mpath::arch {

/// How path representations are combined.
///  decoupled      router-weighted forward, unweighted backward to representations
///  standard       router-weighted forward and backward
///  sum            unweighted forward and backward; no router
///  ema_decoupled  weighted forward, backward weights w / EMA(w)
enum class AggregationMode { decoupled, standard, sum, ema_decoupled };

inline std::string_view aggregation_name(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::decoupled:
      return "decoupled";
    case AggregationMode::standard:
      return "standard";
    case AggregationMode::sum:
      return "sum";
    case AggregationMode::ema_decoupled:
      return "ema_decoupled";
  }
  return "?";
}

inline AggregationMode parse_aggregation(std::string_view name) {
  if (name == "decoupled") return AggregationMode::decoupled;
  if (name == "standard") return AggregationMode::standard;
  if (name == "sum") return AggregationMode::sum;
  if (name == "ema_decoupled") return AggregationMode::ema_decoupled;
  throw ValueError("unknown aggregation mode '" + std::string(name) + "'");
}

inline bool uses_router(AggregationMode mode) { return mode != AggregationMode::sum; }

}  // namespace mpath::arch

#endif  // MPATH_ARCH_AGGREGATION_HPP_
