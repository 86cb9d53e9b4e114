#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "congest/graph.hpp"
#include "congest/ops.hpp"
#include "congest/sim.hpp"

namespace congest::treecomm {

// Wave-and-join tree growth: the root floods a wave outward; every other node
// adopts the smallest-id sender of the first wave it hears as parent, answers
// it with a join, and passes the wave to its remaining neighbors. Exactly 2m
// messages, last join lands in round height+1. Produces the same tree as
// bfs_tree(g, root).
std::pair<RootedTree, sim::SimReport> build_bfs_tree_distributed(sim::Simulator& s, int root,
                                                                 uint64_t round_limit);

// Two-pass heavy path labeling: a subtree-size convergecast (each node also
// reports the length of the heavy chain ending at it), then one broadcast in
// which a parent tells each child whether it continues the parent's path or
// starts its own. n-1 messages each way; matches heavy_paths(t).
std::pair<HeavyPathDecomposition, sim::SimReport> heavy_paths_distributed(sim::Simulator& s,
                                                                          const RootedTree& t,
                                                                          uint64_t round_limit);

// One rooted tree per part, grown by the same wave-and-join rule restricted
// to intra-part edges, rooted at that part's given root node.
struct SpanningForest {
  std::vector<int> parent;       // -1 at roots
  std::vector<int> parent_edge;  // graph edge id, -1 at roots
  std::vector<int> depth;
  std::vector<std::vector<int>> children;
  std::vector<int> roots;  // per part

  int n() const { return static_cast<int>(parent.size()); }
  std::vector<int> heights(const Partition& p) const;
};

std::pair<SpanningForest, sim::SimReport> build_part_forest_distributed(
    sim::Simulator& s, const Partition& p, const std::vector<int>& roots, uint64_t round_limit);

// Centralized equivalents, for cross-checks.
SpanningForest part_forest_reference(const NetworkGraph& g, const Partition& p,
                                     const std::vector<int>& roots);

// Convergecast + broadcast over a forest: every node ends up knowing the
// op-aggregate of its tree's values. 2 * (#non-root nodes) messages,
// 2 * height rounds per tree.
struct ForestAggregate {
  std::vector<uint64_t> root_value;  // per part / per tree
  std::vector<uint64_t> node_value;  // what each node learned
  sim::SimReport report;
};

ForestAggregate aggregate_on_forest(sim::Simulator& s, const SpanningForest& f, AggOp op,
                                    const std::vector<uint64_t>& values, uint64_t round_limit);

// Whole-tree convenience wrappers.
SpanningForest forest_of_tree(const RootedTree& t);
std::pair<uint64_t, sim::SimReport> aggregate_on_tree(sim::Simulator& s, const RootedTree& t,
                                                      AggOp op,
                                                      const std::vector<uint64_t>& values,
                                                      uint64_t round_limit);
// Root's value pushed to every node: n-1 messages, height rounds.
std::pair<std::vector<uint64_t>, sim::SimReport> broadcast_on_tree(sim::Simulator& s,
                                                                   const RootedTree& t,
                                                                   uint64_t value,
                                                                   uint64_t round_limit);

}  // namespace congest::treecomm
