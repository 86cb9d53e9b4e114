#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace congest {

// The aggregation functions every solver and oracle agree on. Values are
// 64-bit words; sum wraps mod 2^64. first_by_id reports the value held by the
// smallest node id, packed so that plain min works as the combiner.
enum class AggOp { min, max, sum, bit_or, bit_and, first_by_id };

inline constexpr uint64_t kFirstByIdValueBits = 40;
inline constexpr uint64_t kFirstByIdValueMask = (uint64_t{1} << kFirstByIdValueBits) - 1;

inline uint64_t first_by_id_pack(int id, uint64_t value) {
  return (static_cast<uint64_t>(id) << kFirstByIdValueBits) | (value & kFirstByIdValueMask);
}
inline uint64_t first_by_id_value(uint64_t packed) { return packed & kFirstByIdValueMask; }
inline int first_by_id_owner(uint64_t packed) {
  return static_cast<int>(packed >> kFirstByIdValueBits);
}

inline uint64_t agg_identity(AggOp op) {
  switch (op) {
    case AggOp::min: return std::numeric_limits<uint64_t>::max();
    case AggOp::max: return 0;
    case AggOp::sum: return 0;
    case AggOp::bit_or: return 0;
    case AggOp::bit_and: return std::numeric_limits<uint64_t>::max();
    case AggOp::first_by_id: return std::numeric_limits<uint64_t>::max();
  }
  throw std::logic_error("unknown aggregation op");
}

inline uint64_t agg_combine(AggOp op, uint64_t a, uint64_t b) {
  switch (op) {
    case AggOp::min: return a < b ? a : b;
    case AggOp::max: return a > b ? a : b;
    case AggOp::sum: return a + b;
    case AggOp::bit_or: return a | b;
    case AggOp::bit_and: return a & b;
    case AggOp::first_by_id: return a < b ? a : b;
  }
  throw std::logic_error("unknown aggregation op");
}

inline const char* agg_name(AggOp op) {
  switch (op) {
    case AggOp::min: return "min";
    case AggOp::max: return "max";
    case AggOp::sum: return "sum";
    case AggOp::bit_or: return "or";
    case AggOp::bit_and: return "and";
    case AggOp::first_by_id: return "first_by_id";
  }
  return "?";
}

inline AggOp agg_from_name(const std::string& s) {
  if (s == "min") return AggOp::min;
  if (s == "max") return AggOp::max;
  if (s == "sum") return AggOp::sum;
  if (s == "or") return AggOp::bit_or;
  if (s == "and") return AggOp::bit_and;
  if (s == "first_by_id") return AggOp::first_by_id;
  throw std::invalid_argument("unknown aggregation op: " + s);
}

inline constexpr AggOp kAllAggOps[] = {AggOp::min,    AggOp::max,     AggOp::sum,
                                       AggOp::bit_or, AggOp::bit_and, AggOp::first_by_id};

}  // namespace congest
