#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace congest {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DisconnectedGraphError : GraphError {
  using GraphError::GraphError;
};
struct InfeasiblePartCountError : GraphError {
  using GraphError::GraphError;
};
struct PartitionInvalidError : GraphError {
  using GraphError::GraphError;
};

struct Edge {
  int u = -1;
  int v = -1;
  int64_t w = 1;

  int other(int x) const { return x == u ? v : u; }
};

// Simple undirected graph with stable 0-based node ids. Adjacency lists are
// sorted by neighbor id; every deterministic tie-break in the library leans on
// that ordering.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  NetworkGraph(int n, std::vector<Edge> edges, bool weighted = false);

  int n() const { return n_; }
  int m() const { return static_cast<int>(edges_.size()); }
  bool weighted() const { return weighted_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  // (neighbor id, edge id) sorted by neighbor id.
  const std::vector<std::pair<int, int>>& adj(int v) const { return adj_[v]; }
  int degree(int v) const { return static_cast<int>(adj_[v].size()); }

  // Edge id joining u and v, or -1.
  int edge_between(int u, int v) const;
  bool adjacent(int u, int v) const { return edge_between(u, v) >= 0; }

  bool connected() const;

 private:
  int n_ = 0;
  bool weighted_ = false;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
};

// Rooted spanning tree of a NetworkGraph. parent[root] = -1. Every tree edge
// is a graph edge (parent_edge holds its graph edge id).
struct RootedTree {
  int root = 0;
  std::vector<int> parent;       // node -> parent node, -1 at root
  std::vector<int> parent_edge;  // node -> graph edge id, -1 at root
  std::vector<int> depth;        // node -> hops from root
  std::vector<std::vector<int>> children;  // sorted ascending
  int height = 0;                // max depth (D_T)

  int n() const { return static_cast<int>(parent.size()); }
  // Scheduling windows divide by the tree height; a single-node tree has
  // height 0, so schedules use this floor instead.
  int sched_height() const { return height < 1 ? 1 : height; }
};

// Breadth-first spanning tree, parent = smallest-id neighbor in the previous
// layer. This is the centralized reference; the node-program version in
// graph_dist.hpp must produce the identical tree.
RootedTree bfs_tree(const NetworkGraph& g, int root);

// Heavy path decomposition of a rooted tree. An edge to child c is heavy when
// c's subtree (counting c) holds more than half of its parent's subtree
// (counting the parent). Maximal heavy chains form the paths; every node lies
// on exactly one path (light-only nodes are singleton paths). Paths are keyed
// by their sink: the highest (closest-to-root) node on the chain. Nodes are
// indexed 1..len from the source (deepest node).
struct HeavyPathDecomposition {
  std::vector<int> subtree_size;    // node -> descendants incl. self
  std::vector<int> heavy_child;     // node -> heavy child or -1
  std::vector<int> path_top;        // node -> sink node id of its path
  std::vector<int> pos_from_source; // node -> 1-based index along its path
  std::map<int, std::vector<int>> path_nodes;  // sink id -> source..sink order

  bool parent_edge_heavy(int v, const RootedTree& t) const {
    int p = t.parent[v];
    return p >= 0 && heavy_child[p] == v;
  }
  int path_len(int v) const { return static_cast<int>(path_nodes.at(path_top[v]).size()); }
};

HeavyPathDecomposition heavy_paths(const RootedTree& t);

// Light edges on any root-to-leaf path: at most floor(log2 n).
int max_light_edges_on_root_paths(const RootedTree& t, const HeavyPathDecomposition& h);

// Node-connected partition of V. Part ids are dense 0..count-1, ordered by
// the smallest member id (generator output) or by the original file ids.
struct Partition {
  std::vector<int> part_of;
  int count = 0;

  std::vector<std::vector<int>> members() const;
  std::vector<int> sizes() const;
};

// Throws PartitionInvalidError unless every part is nonempty, ids are dense,
// and each part induces a connected subgraph of g.
void validate_partition(const NetworkGraph& g, const Partition& p);

// Smallest member id per part.
std::vector<int> min_id_leaders(const Partition& p);

// D x w grid plus one apex adjacent to every top-row node. Node (r, c) is
// r*w + c; the apex is node D*w. Partition: one part per row, apex alone.
struct GridWithApex {
  NetworkGraph graph;
  Partition rows;
  int apex = -1;
  int depth = 0;  // D
  int width = 0;  // w
};
GridWithApex gen_grid_with_apex(int D, int w);

// Random connected graph: a random spanning tree over a random relabeling,
// plus each remaining pair independently with probability extra_edge_prob.
// Weighted graphs draw integer weights uniformly from [1, n^3].
NetworkGraph gen_random_connected(int n, double extra_edge_prob, uint64_t seed,
                                  bool weighted = false);

// Seeded multi-source flooding from `parts` distinct start nodes; every part
// comes out connected and nonempty.
Partition gen_random_connected_partition(const NetworkGraph& g, int parts, uint64_t seed);

// Text formats (0-based ids):
//   graph:      "n m" or "n m weighted", then one "u v" / "u v w" line per edge
//   partition:  one "v part_id" line per node
std::string format_graph(const NetworkGraph& g);
NetworkGraph parse_graph(const std::string& text);
std::string format_partition(const Partition& p);
Partition parse_partition(const std::string& text, int n);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace congest
