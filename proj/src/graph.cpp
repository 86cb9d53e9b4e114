#include "congest/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include "congest/rng.hpp"

namespace congest {

NetworkGraph::NetworkGraph(int n, std::vector<Edge> edges, bool weighted)
    : n_(n), weighted_(weighted), edges_(std::move(edges)) {
  if (n_ < 1) throw GraphError("graph needs at least one node");
  adj_.assign(n_, {});
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    Edge& ed = edges_[e];
    if (ed.u < 0 || ed.u >= n_ || ed.v < 0 || ed.v >= n_)
      throw GraphError("edge endpoint out of range");
    if (ed.u == ed.v) throw GraphError("self loops are not allowed");
    if (ed.u > ed.v) std::swap(ed.u, ed.v);
    if (!weighted_) ed.w = 1;
    adj_[ed.u].push_back({ed.v, e});
    adj_[ed.v].push_back({ed.u, e});
  }
  for (auto& a : adj_) std::sort(a.begin(), a.end());
  for (int v = 0; v < n_; ++v)
    for (size_t i = 1; i < adj_[v].size(); ++i)
      if (adj_[v][i].first == adj_[v][i - 1].first)
        throw GraphError("duplicate edge between " + std::to_string(v) + " and " +
                         std::to_string(adj_[v][i].first));
}

int NetworkGraph::edge_between(int u, int v) const {
  const auto& a = adj_[u];
  auto it = std::lower_bound(a.begin(), a.end(), std::pair<int, int>{v, -1});
  if (it != a.end() && it->first == v) return it->second;
  return -1;
}

bool NetworkGraph::connected() const {
  std::vector<char> seen(n_, 0);
  std::deque<int> q{0};
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (auto [v, e] : adj_[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        q.push_back(v);
      }
  }
  return reached == n_;
}

RootedTree bfs_tree(const NetworkGraph& g, int root) {
  const int n = g.n();
  std::vector<int> dist(n, -1);
  std::deque<int> q{root};
  dist[root] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (auto [v, e] : g.adj(u))
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  RootedTree t;
  t.root = root;
  t.parent.assign(n, -1);
  t.parent_edge.assign(n, -1);
  t.depth = dist;
  t.children.assign(n, {});
  for (int v = 0; v < n; ++v) {
    if (dist[v] < 0) throw DisconnectedGraphError("graph is not connected");
    t.height = std::max(t.height, dist[v]);
    if (v == root) continue;
    // Deterministic parent: the smallest-id neighbor one layer up.
    for (auto [u, e] : g.adj(v))
      if (dist[u] == dist[v] - 1) {
        t.parent[v] = u;
        t.parent_edge[v] = e;
        break;
      }
  }
  for (int v = 0; v < n; ++v)
    if (v != root) t.children[t.parent[v]].push_back(v);
  return t;
}

HeavyPathDecomposition heavy_paths(const RootedTree& t) {
  const int n = t.n();
  HeavyPathDecomposition h;
  h.subtree_size.assign(n, 1);
  h.heavy_child.assign(n, -1);
  h.path_top.assign(n, -1);
  h.pos_from_source.assign(n, 0);

  // Sizes bottom-up: nodes in decreasing depth order.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return t.depth[a] > t.depth[b]; });
  for (int v : order)
    if (t.parent[v] >= 0) h.subtree_size[t.parent[v]] += h.subtree_size[v];
  for (int v = 0; v < n; ++v)
    for (int c : t.children[v])
      if (2 * h.subtree_size[c] > h.subtree_size[v]) h.heavy_child[v] = c;

  // Walk each maximal chain from its sink (a node whose parent edge is not
  // heavy) down through heavy children to the source.
  for (int v = 0; v < n; ++v) {
    int p = t.parent[v];
    bool is_sink = (p < 0) || h.heavy_child[p] != v;
    if (!is_sink) continue;
    std::vector<int> chain;
    for (int u = v; u >= 0; u = h.heavy_child[u]) chain.push_back(u);
    std::reverse(chain.begin(), chain.end());  // source first
    for (int i = 0; i < static_cast<int>(chain.size()); ++i) {
      h.path_top[chain[i]] = v;
      h.pos_from_source[chain[i]] = i + 1;
    }
    h.path_nodes[v] = std::move(chain);
  }
  return h;
}

int max_light_edges_on_root_paths(const RootedTree& t, const HeavyPathDecomposition& h) {
  const int n = t.n();
  std::vector<int> light(n, 0);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return t.depth[a] < t.depth[b]; });
  int best = 0;
  for (int v : order) {
    int p = t.parent[v];
    if (p >= 0) light[v] = light[p] + (h.heavy_child[p] == v ? 0 : 1);
    best = std::max(best, light[v]);
  }
  return best;
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(count);
  for (int v = 0; v < static_cast<int>(part_of.size()); ++v) out[part_of[v]].push_back(v);
  return out;
}

std::vector<int> Partition::sizes() const {
  std::vector<int> out(count, 0);
  for (int p : part_of) ++out[p];
  return out;
}

void validate_partition(const NetworkGraph& g, const Partition& p) {
  if (static_cast<int>(p.part_of.size()) != g.n())
    throw PartitionInvalidError("partition does not cover every node");
  if (p.count < 1) throw PartitionInvalidError("partition needs at least one part");
  for (int v = 0; v < g.n(); ++v)
    if (p.part_of[v] < 0 || p.part_of[v] >= p.count)
      throw PartitionInvalidError("node " + std::to_string(v) + " has part id out of range");
  auto mem = p.members();
  for (int i = 0; i < p.count; ++i) {
    if (mem[i].empty())
      throw PartitionInvalidError("part " + std::to_string(i) + " is empty");
    // Connectivity inside the induced subgraph.
    std::vector<char> in(g.n(), 0), seen(g.n(), 0);
    for (int v : mem[i]) in[v] = 1;
    std::deque<int> q{mem[i][0]};
    seen[mem[i][0]] = 1;
    size_t reached = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (auto [v, e] : g.adj(u))
        if (in[v] && !seen[v]) {
          seen[v] = 1;
          ++reached;
          q.push_back(v);
        }
    }
    if (reached != mem[i].size())
      throw PartitionInvalidError("part " + std::to_string(i) + " is not connected");
  }
}

std::vector<int> min_id_leaders(const Partition& p) {
  std::vector<int> leader(p.count, -1);
  for (int v = static_cast<int>(p.part_of.size()) - 1; v >= 0; --v) leader[p.part_of[v]] = v;
  return leader;
}

GridWithApex gen_grid_with_apex(int D, int w) {
  if (D < 1 || w < 1) throw GraphError("grid needs positive depth and width");
  auto id = [w](int r, int c) { return r * w + c; };
  const int apex = D * w;
  std::vector<Edge> edges;
  for (int r = 0; r < D; ++r)
    for (int c = 0; c + 1 < w; ++c) edges.push_back({id(r, c), id(r, c + 1), 1});
  for (int r = 0; r + 1 < D; ++r)
    for (int c = 0; c < w; ++c) edges.push_back({id(r, c), id(r + 1, c), 1});
  for (int c = 0; c < w; ++c) edges.push_back({apex, id(0, c), 1});
  GridWithApex out;
  out.graph = NetworkGraph(D * w + 1, std::move(edges));
  out.rows.part_of.assign(D * w + 1, 0);
  for (int r = 0; r < D; ++r)
    for (int c = 0; c < w; ++c) out.rows.part_of[id(r, c)] = r;
  out.rows.part_of[apex] = D;
  out.rows.count = D + 1;
  out.apex = apex;
  out.depth = D;
  out.width = w;
  return out;
}

NetworkGraph gen_random_connected(int n, double extra_edge_prob, uint64_t seed, bool weighted) {
  if (n < 1) throw GraphError("graph needs at least one node");
  Rng rng(split_seed(seed, 0x67656e, n));
  // Random labels so that id order carries no structural signal.
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(label[i], label[rng.below(static_cast<uint64_t>(i) + 1)]);

  const uint64_t wmax = static_cast<uint64_t>(n) * n * n;
  auto draw_w = [&]() -> int64_t {
    return weighted ? static_cast<int64_t>(1 + rng.below(wmax)) : 1;
  };

  std::vector<Edge> edges;
  std::vector<std::pair<int, int>> tree_pairs;
  for (int i = 1; i < n; ++i) {
    int p = static_cast<int>(rng.below(static_cast<uint64_t>(i)));
    tree_pairs.push_back({std::min(label[i], label[p]), std::max(label[i], label[p])});
    edges.push_back({tree_pairs.back().first, tree_pairs.back().second, draw_w()});
  }
  if (extra_edge_prob > 0) {
    std::sort(tree_pairs.begin(), tree_pairs.end());
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) {
        if (rng.unit() >= extra_edge_prob) continue;
        if (std::binary_search(tree_pairs.begin(), tree_pairs.end(), std::pair<int, int>{u, v}))
          continue;
        edges.push_back({u, v, draw_w()});
      }
  }
  return NetworkGraph(n, std::move(edges), weighted);
}

Partition gen_random_connected_partition(const NetworkGraph& g, int parts, uint64_t seed) {
  if (parts < 1 || parts > g.n())
    throw InfeasiblePartCountError("cannot split " + std::to_string(g.n()) + " nodes into " +
                                   std::to_string(parts) + " connected parts");
  Rng rng(split_seed(seed, 0x706172, parts));
  std::vector<int> part_of(g.n(), -1);
  std::vector<int> frontier;
  // Distinct seeds via partial Fisher-Yates over node ids.
  std::vector<int> ids(g.n());
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < parts; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(g.n() - i)));
    std::swap(ids[i], ids[j]);
    frontier.push_back(ids[i]);
  }
  std::sort(frontier.begin(), frontier.end());
  // Dense part ids ordered by seed node id.
  for (int i = 0; i < parts; ++i) part_of[frontier[i]] = i;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int u : frontier)
      for (auto [v, e] : g.adj(u))
        if (part_of[v] < 0) {
          part_of[v] = part_of[u];
          next.push_back(v);
        }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }
  Partition out;
  out.part_of = std::move(part_of);
  out.count = parts;
  return out;
}

std::string format_graph(const NetworkGraph& g) {
  std::ostringstream os;
  os << g.n() << ' ' << g.m();
  if (g.weighted()) os << " weighted";
  os << '\n';
  for (const Edge& e : g.edges()) {
    os << e.u << ' ' << e.v;
    if (g.weighted()) os << ' ' << e.w;
    os << '\n';
  }
  return os.str();
}

NetworkGraph parse_graph(const std::string& text) {
  std::istringstream is(text);
  int n = 0, m = 0;
  if (!(is >> n >> m)) throw GraphError("graph header must be 'n m [weighted]'");
  std::string flag;
  bool weighted = false;
  // Peek the rest of the header line.
  std::string rest;
  std::getline(is, rest);
  std::istringstream hs(rest);
  if (hs >> flag) {
    if (flag != "weighted") throw GraphError("unknown graph header flag: " + flag);
    weighted = true;
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (int i = 0; i < m; ++i) {
    Edge e;
    if (!(is >> e.u >> e.v)) throw GraphError("graph file ended before all edges were read");
    if (weighted && !(is >> e.w)) throw GraphError("weighted graph line is missing a weight");
    edges.push_back(e);
  }
  return NetworkGraph(n, std::move(edges), weighted);
}

std::string format_partition(const Partition& p) {
  std::ostringstream os;
  for (int v = 0; v < static_cast<int>(p.part_of.size()); ++v)
    os << v << ' ' << p.part_of[v] << '\n';
  return os.str();
}

Partition parse_partition(const std::string& text, int n) {
  std::istringstream is(text);
  std::vector<int> raw(n, -1);
  int v, pid;
  while (is >> v >> pid) {
    if (v < 0 || v >= n) throw PartitionInvalidError("partition line names an unknown node");
    if (raw[v] != -1) throw PartitionInvalidError("node " + std::to_string(v) + " listed twice");
    raw[v] = pid;
  }
  // Remap arbitrary file ids to dense ids ordered by original value.
  std::vector<int> seen;
  for (int x : raw) {
    if (x < 0) throw PartitionInvalidError("partition does not cover every node");
    seen.push_back(x);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  Partition out;
  out.count = static_cast<int>(seen.size());
  out.part_of.resize(n);
  for (int i = 0; i < n; ++i)
    out.part_of[i] = static_cast<int>(
        std::lower_bound(seen.begin(), seen.end(), raw[i]) - seen.begin());
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw GraphError("cannot open for writing: " + path);
  f << text;
  if (!f) throw GraphError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw GraphError("cannot open for reading: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace congest
