#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "congest/graph.hpp"
#include "congest/ops.hpp"
#include "congest/sim.hpp"

namespace congest::shortcuts {

// Round-bound constant for block_route: a finished run satisfies
// rounds <= kRouteRoundFactor * (D_T + c) * beta. Message bound constant:
// messages <= kRouteMessageFactor * |S| * D_T.
inline constexpr int kRouteRoundFactor = 4;   // K1
inline constexpr int kRouteMessageFactor = 2; // K2

struct ShortcutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// block_route found more concurrent streams on an edge than the declared
// congestion admits (only possible when the inputs break the contract).
struct CongestionContractViolated : ShortcutError {
  using ShortcutError::ShortcutError;
};

// Per part, a set of tree edges (each named by its child endpoint). Parts use
// only their own edges for routing; quality is measured by how many parts
// share an edge and how many pieces each part's edge set leaves it in.
class TreeRestrictedShortcut {
 public:
  TreeRestrictedShortcut(const RootedTree& tree, const Partition& parts);

  void assign(int part, int child_node);  // add the tree edge above child_node
  bool has(int part, int child_node) const;
  // Sorted child endpoints of part's edges.
  const std::set<int>& edges_of(int part) const { return assigned_[part]; }

  const RootedTree& tree() const { return *tree_; }
  const Partition& parts() const { return *parts_; }
  int part_count() const { return parts_->count; }
  uint64_t total_edges() const;

 private:
  const RootedTree* tree_;
  const Partition* parts_;
  std::vector<std::set<int>> assigned_;
};

struct CongestionReport {
  int c = 0;                   // max load over tree edges
  std::vector<int> edge_load;  // indexed by child endpoint; 0 where unused
};
CongestionReport congestion(const TreeRestrictedShortcut& sc);

// Connected components of (P_i ∪ V(H_i), H_i) for every part i. A component's
// root is its unique minimum-depth node (a connected subgraph of a tree has
// exactly one such apex); among the blocks of one part the apexes are
// distinct, so ties by id never fire for routing, but the ordering keeps
// block ids deterministic anyway.
struct BlockStructure {
  struct Block {
    int part = -1;
    int root = -1;
    int root_depth = 0;
    std::vector<int> members;  // sorted; includes non-part relay nodes
  };
  std::vector<Block> blocks;
  std::vector<std::vector<int>> of_part;    // part -> block indices
  std::vector<std::map<int, int>> node_block;  // part -> node -> block index
  std::vector<int> block_count;             // b_i
  int max_block_count = 0;                  // b

  int index_of(int part, int node) const {
    auto it = node_block[part].find(node);
    return it == node_block[part].end() ? -1 : it->second;
  }
};
BlockStructure blocks(const TreeRestrictedShortcut& sc);

// One contributing (or receiving) node. `part` selects the stream; a node may
// appear for several parts but at most once per part.
struct RouteParticipant {
  int node = -1;
  int part = -1;
  uint64_t value = 0;  // payload for convergecast; ignored for broadcast
};

enum class RouteDirection { convergecast, broadcast };

struct BlockRouteResult {
  // Convergecast: per block index, the aggregate over its participants and
  // the round in which the block root finished collecting.
  std::map<int, uint64_t> root_value;
  std::map<int, uint64_t> root_round;
  // Broadcast: value delivered to each (node, part) recipient.
  std::map<std::pair<int, int>, uint64_t> delivered;
  sim::SimReport report;
};

// Priority-queued store-and-forward over block edges. Convergecast merges
// participant values toward each block root; broadcast mirrors the same edge
// sets downward from the roots (inject supplies per-block-index payloads and
// `group` lists the recipients). When two streams want one edge in one round,
// the lower (root depth, root id, part) triple goes first. `beta` lets a node
// forward that many queued packets per edge per round (the simulator runs at
// multiplicity beta); with beta=1 a queue deeper than declared_c proves the
// congestion contract was broken. `part_delay`, when given, holds each
// injection back by its part's offset.
BlockRouteResult block_route(sim::Simulator& s, const RootedTree& tree,
                             const BlockStructure& bs, const std::vector<RouteParticipant>& group,
                             AggOp op, RouteDirection dir,
                             const std::map<int, uint64_t>& inject, int declared_c, int beta,
                             uint64_t round_limit,
                             const std::vector<uint64_t>* part_delay = nullptr);

// Text format: one "part_id u v" line per assigned tree edge.
std::string format_shortcut(const TreeRestrictedShortcut& sc);
void parse_shortcut_into(const std::string& text, TreeRestrictedShortcut& sc);

}  // namespace congest::shortcuts
