#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "congest/graph.hpp"
#include "congest/ops.hpp"

namespace congest {

// One aggregation problem: connected parts over a graph, one payload word per
// node, the fold operator, and (optionally) one leader per part that every
// member already knows. Plain data — both the solvers and the centralized
// references consume it.
struct PaInstance {
  Partition partition;
  std::vector<uint64_t> values;
  AggOp op = AggOp::min;
  std::vector<int> leaders;  // one node per part, or empty for leaderless

  bool has_leaders() const { return !leaders.empty(); }
};

// Shape checks: values cover every node, partition valid for g, and each
// leader (when present) is a member of the part it leads. Throws
// PartitionInvalidError / std::invalid_argument.
void validate_pa_instance(const NetworkGraph& g, const PaInstance& inst);

// Connected random parts with random word values. first_by_id values are
// packed with the owning node id so the combiner stays plain min. Leaders,
// when requested, are each part's smallest member.
PaInstance random_pa_instance(const NetworkGraph& g, int parts, AggOp op, uint64_t seed,
                              bool with_leaders = true);

// Text format:
//   op <name>
//   values
//   <v> <value>      (one line per node)
//   partition
//   <v> <part>       (one line per node)
// Leaders are not stored; callers re-attach them (usually min ids).
std::string format_pa_instance(const PaInstance& inst);
PaInstance parse_pa_instance(const std::string& text);

}  // namespace congest
