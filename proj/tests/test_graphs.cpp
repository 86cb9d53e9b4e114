#include "congest/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

using namespace congest;

TEST_CASE("adjacency lists are sorted and edge lookup works") {
  NetworkGraph g(5, {{3, 1, 1}, {0, 3, 1}, {4, 0, 1}, {1, 0, 1}});
  CHECK(g.n() == 5);
  CHECK(g.m() == 4);
  CHECK(g.degree(0) == 3);
  CHECK(g.adj(0)[0].first == 1);
  CHECK(g.adj(0)[1].first == 3);
  CHECK(g.adj(0)[2].first == 4);
  CHECK(g.edge_between(1, 3) >= 0);
  CHECK(g.edge_between(1, 4) == -1);
  CHECK(g.adjacent(4, 0));
}

TEST_CASE("malformed graphs are rejected") {
  CHECK_THROWS_AS(NetworkGraph(3, {{0, 0, 1}}), GraphError);
  CHECK_THROWS_AS(NetworkGraph(3, {{0, 1, 1}, {1, 0, 1}}), GraphError);
  CHECK_THROWS_AS(NetworkGraph(3, {{0, 7, 1}}), GraphError);
}

TEST_CASE("bfs tree picks the smallest-id parent in the previous layer") {
  //   0 - 1
  //   |   |
  //   2 - 3 - 4
  NetworkGraph g(5, {{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}, {3, 4, 1}});
  RootedTree t = bfs_tree(g, 0);
  CHECK(t.parent[1] == 0);
  CHECK(t.parent[2] == 0);
  CHECK(t.parent[3] == 1);  // 1 and 2 both qualify; 1 wins
  CHECK(t.parent[4] == 3);
  CHECK(t.height == 3);
  CHECK(t.depth[4] == 3);
  CHECK(t.children[0] == std::vector<int>{1, 2});
  CHECK(t.parent_edge[4] == g.edge_between(3, 4));
}

TEST_CASE("bfs tree on a disconnected graph throws") {
  NetworkGraph g(4, {{0, 1, 1}, {2, 3, 1}});
  CHECK_FALSE(g.connected());
  CHECK_THROWS_AS(bfs_tree(g, 0), DisconnectedGraphError);
}

namespace {

// Independent heavy classification: count descendants by a fresh traversal
// per node, never touching HeavyPathDecomposition internals.
int brute_subtree(const RootedTree& t, int v) {
  int count = 1;
  for (int c : t.children[v]) count += brute_subtree(t, c);
  return count;
}

std::set<std::pair<int, int>> brute_heavy_edges(const RootedTree& t) {
  std::set<std::pair<int, int>> out;
  for (int v = 0; v < t.n(); ++v) {
    int p = t.parent[v];
    if (p >= 0 && 2 * brute_subtree(t, v) > brute_subtree(t, p)) out.insert({p, v});
  }
  return out;
}

std::set<std::pair<int, int>> decomposition_heavy_edges(const RootedTree& t,
                                                        const HeavyPathDecomposition& h) {
  std::set<std::pair<int, int>> out;
  for (int v = 0; v < t.n(); ++v)
    if (h.heavy_child[v] >= 0) out.insert({v, h.heavy_child[v]});
  return out;
}

NetworkGraph path_n(int n) {
  std::vector<Edge> es;
  for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, 1});
  return NetworkGraph(n, std::move(es));
}

}  // namespace

TEST_CASE("heavy path decomposition marks strict-majority children and chains them") {
  // A caterpillar: spine 0-1-2-3, each spine node with one extra leaf.
  NetworkGraph g(8, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 4, 1}, {1, 5, 1}, {2, 6, 1}, {3, 7, 1}});
  RootedTree t = bfs_tree(g, 0);
  HeavyPathDecomposition h = heavy_paths(t);
  CHECK(h.subtree_size[0] == 8);
  CHECK(h.subtree_size[1] == 6);
  CHECK(h.subtree_size[2] == 4);
  CHECK(h.heavy_child[0] == 1);   // 2*6 > 8
  CHECK(h.heavy_child[1] == 2);   // 2*4 > 6
  CHECK(h.heavy_child[2] == -1);  // 2*2 > 4 fails: strict majority
  CHECK(h.heavy_child[3] == -1);  // 2*1 > 2 fails
  CHECK(h.path_nodes.at(0) == std::vector<int>{2, 1, 0});
  CHECK(h.pos_from_source[2] == 1);
  CHECK(h.pos_from_source[0] == 3);
  CHECK(h.path_top[3] == 3);
  CHECK(h.path_top[7] == 7);
  CHECK(h.path_len(4) == 1);
  CHECK(decomposition_heavy_edges(t, h) == brute_heavy_edges(t));
}

TEST_CASE("two-node tree has no heavy edge") {
  NetworkGraph g = path_n(2);
  HeavyPathDecomposition h = heavy_paths(bfs_tree(g, 0));
  CHECK(h.heavy_child[0] == -1);
  CHECK(h.path_top[0] == 0);
  CHECK(h.path_top[1] == 1);
}

TEST_CASE("path of 8 rooted at one end is one long chain plus a light leaf") {
  NetworkGraph g = path_n(8);
  RootedTree t = bfs_tree(g, 0);
  HeavyPathDecomposition h = heavy_paths(t);
  CHECK(decomposition_heavy_edges(t, h) == brute_heavy_edges(t));
  CHECK(h.path_nodes.at(0) == std::vector<int>{6, 5, 4, 3, 2, 1, 0});
  CHECK(h.path_nodes.at(7) == std::vector<int>{7});
  CHECK(max_light_edges_on_root_paths(t, h) == 1);
}

TEST_CASE("complete balanced binary tree on 15 nodes is all light at the log bound") {
  std::vector<Edge> es;
  for (int v = 1; v < 15; ++v) es.push_back({(v - 1) / 2, v, 1});
  NetworkGraph g(15, std::move(es));
  RootedTree t = bfs_tree(g, 0);
  HeavyPathDecomposition h = heavy_paths(t);
  CHECK(decomposition_heavy_edges(t, h) == brute_heavy_edges(t));
  CHECK(brute_heavy_edges(t).empty());
  CHECK(h.path_nodes.size() == 15);
  CHECK(max_light_edges_on_root_paths(t, h) == 3);  // exactly floor(log2 15)
}

TEST_CASE("every node has at most one heavy child and light depth is logarithmic") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    NetworkGraph g = gen_random_connected(400, 0.0, seed);
    RootedTree t = bfs_tree(g, 0);
    HeavyPathDecomposition h = heavy_paths(t);
    for (int v = 0; v < g.n(); ++v) {
      int heavies = 0;
      for (int c : t.children[v])
        if (2 * h.subtree_size[c] > h.subtree_size[v]) ++heavies;
      CHECK(heavies <= 1);
      CHECK((h.heavy_child[v] == -1 || heavies == 1));
    }
    int bound = static_cast<int>(std::floor(std::log2(g.n())));
    CHECK(max_light_edges_on_root_paths(t, h) <= bound);
    // Paths partition the nodes.
    size_t covered = 0;
    for (auto& [top, nodes] : h.path_nodes) covered += nodes.size();
    CHECK(covered == static_cast<size_t>(g.n()));
  }
}

TEST_CASE("grid with apex has the advertised shape") {
  GridWithApex gw = gen_grid_with_apex(2, 3);
  CHECK(gw.graph.n() == 7);
  CHECK(gw.graph.m() == 10);  // 4 horizontal + 3 vertical + 3 apex
  CHECK(gw.apex == 6);
  CHECK(gw.rows.count == 3);
  validate_partition(gw.graph, gw.rows);
  CHECK(gw.rows.part_of[gw.apex] == 2);
  CHECK(gw.rows.sizes() == std::vector<int>{3, 3, 1});
  for (int c = 0; c < 3; ++c) CHECK(gw.graph.adjacent(gw.apex, c));
}

TEST_CASE("random connected graphs are connected, deterministic, and weight-capped") {
  for (int n : {1, 2, 17, 120}) {
    NetworkGraph g = gen_random_connected(n, 0.05, 99, true);
    CHECK(g.connected());
    CHECK(g.m() >= n - 1);
    int64_t cap = static_cast<int64_t>(n) * n * n;
    for (const Edge& e : g.edges()) {
      CHECK(e.w >= 1);
      CHECK(e.w <= cap);
    }
  }
  NetworkGraph a = gen_random_connected(60, 0.1, 5);
  NetworkGraph b = gen_random_connected(60, 0.1, 5);
  NetworkGraph c = gen_random_connected(60, 0.1, 6);
  CHECK(format_graph(a) == format_graph(b));
  CHECK(format_graph(a) != format_graph(c));
}

TEST_CASE("random partitions are connected covers with the requested part count") {
  NetworkGraph g = gen_random_connected(150, 0.03, 11);
  for (int k : {1, 2, 7, 150}) {
    Partition p = gen_random_connected_partition(g, k, 42);
    CHECK(p.count == k);
    validate_partition(g, p);
  }
  Partition p1 = gen_random_connected_partition(g, 7, 1);
  Partition p2 = gen_random_connected_partition(g, 7, 1);
  CHECK(p1.part_of == p2.part_of);
  CHECK_THROWS_AS(gen_random_connected_partition(g, 151, 1), InfeasiblePartCountError);
  CHECK_THROWS_AS(gen_random_connected_partition(g, 0, 1), InfeasiblePartCountError);
}

TEST_CASE("graph text format round-trips") {
  NetworkGraph g = gen_random_connected(40, 0.1, 3, true);
  NetworkGraph back = parse_graph(format_graph(g));
  CHECK(back.n() == g.n());
  CHECK(back.m() == g.m());
  CHECK(back.weighted());
  CHECK(format_graph(back) == format_graph(g));
  NetworkGraph u = parse_graph("2 1\n0 1\n");
  CHECK_FALSE(u.weighted());
  CHECK(u.m() == 1);
  CHECK_THROWS_AS(parse_graph("2 1 colorful\n0 1\n"), GraphError);
  CHECK_THROWS_AS(parse_graph("3 2\n0 1\n"), GraphError);
}

TEST_CASE("partition text format round-trips and squeezes ids dense") {
  Partition p = parse_partition("0 10\n1 4\n2 10\n3 4\n", 4);
  CHECK(p.count == 2);
  CHECK(p.part_of == std::vector<int>{1, 0, 1, 0});
  CHECK(format_partition(p) == "0 1\n1 0\n2 1\n3 0\n");
  CHECK_THROWS_AS(parse_partition("0 1\n", 2), PartitionInvalidError);
  CHECK_THROWS_AS(parse_partition("0 1\n0 2\n1 0\n", 2), PartitionInvalidError);
  CHECK_THROWS_AS(parse_partition("0 1\n5 2\n", 2), PartitionInvalidError);
}

TEST_CASE("partition validation catches disconnection and gaps") {
  NetworkGraph g(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
  Partition ok{{0, 0, 1, 1}, 2};
  validate_partition(g, ok);
  Partition split{{0, 1, 1, 0}, 2};  // part 0 = {0, 3}: not connected
  CHECK_THROWS_AS(validate_partition(g, split), PartitionInvalidError);
  Partition bad_count{{0, 0, 0, 0}, 2};  // part 1 empty
  CHECK_THROWS_AS(validate_partition(g, bad_count), PartitionInvalidError);
  CHECK(min_id_leaders(ok) == std::vector<int>{0, 2});
}
