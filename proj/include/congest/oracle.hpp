#pragma once

#include <cstdint>
#include <vector>

#include "congest/graph.hpp"
#include "congest/pa_instance.hpp"

namespace congest {

// Centralized references that the simulated runs are judged against.
// Everything in this header is straight sequential code over the graph
// structures; none of it touches the simulator.

// Per-part fold of the instance's values under its operator.
std::vector<uint64_t> oracle_pa(const PaInstance& inst);

struct MstResult {
  std::vector<int> edges;  // graph edge ids, ascending
  uint64_t total_weight = 0;

  bool operator==(const MstResult&) const = default;
};

// The unique minimum spanning tree under the total edge order
// (weight, low endpoint, high endpoint). Computed by two unrelated methods —
// sorted greedy merging and repeated cheapest-cut growth — which must agree,
// or this throws; the reference has to be more trustworthy than the code it
// judges. Throws DisconnectedGraphError when no spanning tree exists.
MstResult oracle_mst(const NetworkGraph& g);

// The two methods individually, so tests can compare them head to head.
MstResult mst_by_sorted_merge(const NetworkGraph& g);
MstResult mst_by_cut_growth(const NetworkGraph& g);

// Doubling claim pass over one path. Positions run 1..len from the deep end
// (source) to the top (sink); the edge leaving position p toward p+1 is edge
// index p-1. All three per-edge/per-node lists hold sorted part ids.
struct PathShortcutTrace {
  std::vector<std::vector<int>> final_sets;  // ids resting at each position
  std::vector<std::vector<int>> claimed;     // ids using each edge
  std::vector<char> broken;                  // edge severed mid-pass
  int iterations = 0;

  int len() const { return static_cast<int>(final_sets.size()); }
};

// ceil(log2(len)); 0 when the path has at most one node. Doubling passes and
// their round/congestion budgets all count iterations with this.
int path_shortcut_iterations(int len);

// Sequential reference for the path claim pass. start_sets[k] holds the part
// ids initially wanting the edge above position k+1. Per iteration
// i = 0..iterations-1, the position with odd index/2^i either severs its
// upward edge (when it holds >= 2c ids, dropping them) or pushes its ids
// 2^i positions up, stopping early at a severed edge; every edge an id
// travels over is claimed for it, and ids still resting at the end claim the
// unsevered edge directly above them. c must be >= 1.
PathShortcutTrace oracle_path_shortcut(const std::vector<std::vector<int>>& start_sets, int c);

// Bundle the acceptance suite fills from whichever references a scenario
// exercises; empty fields simply were not computed.
struct OracleReport {
  std::vector<uint64_t> part_folds;
  MstResult mst;
  std::vector<int> part_block_counts;
  std::vector<int> edge_congestion;
  PathShortcutTrace path_trace;
};

}  // namespace congest
