#include "congest/treecomm.hpp"

#include <algorithm>
#include <deque>
#include <memory>

namespace congest::treecomm {
namespace {

constexpr uint64_t kWave = 1;
constexpr uint64_t kJoin = 2;
constexpr uint64_t kUp = 3;
constexpr uint64_t kDown = 4;

// Wave-and-join growth, optionally fenced inside one part.
class WaveJoinProgram : public sim::NodeProgram {
 public:
  WaveJoinProgram(bool is_root, const Partition* fence) : is_root_(is_root), fence_(fence) {}

  int parent = -1;

  void on_round(sim::RoundApi& api) override {
    if (is_root_) {
      flood(api, -1);
      halt();
      return;
    }
    for (const sim::Envelope& env : api.inbox()) {
      if (env.w0() != kWave) continue;
      parent = env.src;  // inbox is sorted by sender, so this is the min id
      api.send(parent, kJoin);
      flood(api, parent);
      halt();
      return;
    }
  }

 private:
  void flood(sim::RoundApi& api, int skip) {
    int me = api.node();
    for (auto [nb, e] : api.graph().adj(me)) {
      if (nb == skip) continue;
      if (fence_ && fence_->part_of[nb] != fence_->part_of[me]) continue;
      api.send(nb, kWave);
    }
  }

  bool is_root_;
  const Partition* fence_;
};

RootedTree tree_from_parents(const NetworkGraph& g, int root, const std::vector<int>& parent) {
  RootedTree t;
  t.root = root;
  t.parent = parent;
  const int n = g.n();
  t.parent_edge.assign(n, -1);
  t.depth.assign(n, -1);
  t.children.assign(n, {});
  for (int v = 0; v < n; ++v) {
    if (v == root) continue;
    if (parent[v] < 0) throw DisconnectedGraphError("graph is not connected");
    t.parent_edge[v] = g.edge_between(v, parent[v]);
    t.children[parent[v]].push_back(v);
  }
  t.depth[root] = 0;
  std::deque<int> q{root};
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int c : t.children[u]) {
      t.depth[c] = t.depth[u] + 1;
      t.height = std::max(t.height, t.depth[c]);
      q.push_back(c);
    }
  }
  for (int v = 0; v < n; ++v)
    if (t.depth[v] < 0) throw DisconnectedGraphError("parent pointers do not reach every node");
  return t;
}

SpanningForest forest_from_parents(const NetworkGraph& g, const std::vector<int>& roots,
                                   const std::vector<int>& parent) {
  SpanningForest f;
  f.parent = parent;
  f.roots = roots;
  const int n = g.n();
  f.parent_edge.assign(n, -1);
  f.depth.assign(n, -1);
  f.children.assign(n, {});
  for (int v = 0; v < n; ++v) {
    if (parent[v] < 0) continue;
    f.parent_edge[v] = g.edge_between(v, parent[v]);
    f.children[parent[v]].push_back(v);
  }
  std::deque<int> q;
  for (int r : roots) {
    f.depth[r] = 0;
    q.push_back(r);
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int c : f.children[u]) {
      f.depth[c] = f.depth[u] + 1;
      q.push_back(c);
    }
  }
  for (int v = 0; v < n; ++v)
    if (f.depth[v] < 0) throw DisconnectedGraphError("forest does not span its parts");
  return f;
}

constexpr uint64_t kSizeUp = 5;
constexpr uint64_t kPathCont = 6;
constexpr uint64_t kPathFresh = 7;

// Heavy path labeling on a known tree. Up pass: subtree size plus the length
// of the maximal heavy chain ending here. Down pass: each child hears whether
// its parent edge is heavy (continue parent's path at parent_pos - 1) or
// light (start a fresh path of its own chain length).
class HeavyPathProgram : public sim::NodeProgram {
 public:
  HeavyPathProgram(int me, int parent, std::vector<int> children)
      : me_(me), parent_(parent), children_(std::move(children)) {}

  int subtree = 1;
  int chain_below = 0;  // heavy chain length among children (0 = none)
  int heavy_child = -1;
  int path_top = -1;
  int pos = 0;   // 1-based from the path's source
  int len = 0;   // node count on the path

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& env : api.inbox()) {
      if (env.w0() == kSizeUp) {
        child_size_.push_back({env.src, static_cast<int>(env.w[1])});
        child_chain_.push_back(static_cast<int>(env.w[2]));
        subtree += static_cast<int>(env.w[1]);
        ++got_;
      } else if (env.w0() == kPathCont) {
        path_top = static_cast<int>(env.w[1]);
        pos = static_cast<int>(env.w[2] & 0xffffffffu);
        len = static_cast<int>(env.w[2] >> 32);
        settled_ = true;
      } else if (env.w0() == kPathFresh) {
        start_own_path();
      }
    }
    if (!sent_up_ && got_ == children_.size()) {
      sent_up_ = true;
      for (size_t i = 0; i < child_size_.size(); ++i)
        if (2 * child_size_[i].second > subtree) {
          heavy_child = child_size_[i].first;
          chain_below = child_chain_[i];
        }
      if (parent_ >= 0) {
        api.send(parent_, kSizeUp, static_cast<uint64_t>(subtree),
                 static_cast<uint64_t>(chain_below + 1));
      } else {
        start_own_path();
      }
    }
    if (settled_ && !sent_down_) {
      sent_down_ = true;
      for (int c : children_) {
        if (c == heavy_child)
          api.send(c, kPathCont, static_cast<uint64_t>(path_top),
                   (static_cast<uint64_t>(len) << 32) | static_cast<uint64_t>(pos - 1));
        else
          api.send(c, kPathFresh);
      }
      halt();
    }
  }

 private:
  void start_own_path() {
    path_top = me_;
    len = chain_below + 1;
    pos = len;
    settled_ = true;
  }

  int me_;
  int parent_;
  std::vector<int> children_;
  std::vector<std::pair<int, int>> child_size_;
  std::vector<int> child_chain_;
  size_t got_ = 0;
  bool sent_up_ = false;
  bool sent_down_ = false;
  bool settled_ = false;
};

class AggregateProgram : public sim::NodeProgram {
 public:
  AggregateProgram(int parent, std::vector<int> children, AggOp op, uint64_t value)
      : parent_(parent), children_(std::move(children)), op_(op), acc_(value) {}

  uint64_t learned = 0;
  bool have = false;

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& env : api.inbox()) {
      if (env.w0() == kUp) {
        acc_ = agg_combine(op_, acc_, env.w[1]);
        ++got_;
      } else if (env.w0() == kDown) {
        learned = env.w[1];
        have = true;
      }
    }
    if (!sent_up_ && got_ == children_.size()) {
      sent_up_ = true;
      if (parent_ >= 0) {
        api.send(parent_, kUp, acc_);
      } else {
        learned = acc_;
        have = true;
      }
    }
    if (have) {
      for (int c : children_) api.send(c, kDown, learned);
      halt();
    }
  }

 private:
  int parent_;
  std::vector<int> children_;
  AggOp op_;
  uint64_t acc_;
  size_t got_ = 0;
  bool sent_up_ = false;
};

class BroadcastProgram : public sim::NodeProgram {
 public:
  BroadcastProgram(bool is_root, std::vector<int> children, uint64_t value)
      : is_root_(is_root), children_(std::move(children)), value_(value) {}

  uint64_t learned = 0;

  void on_round(sim::RoundApi& api) override {
    if (is_root_) {
      learned = value_;
    } else {
      if (api.inbox().empty()) return;  // round-0 warmup
      learned = api.inbox()[0].w[1];
    }
    for (int c : children_) api.send(c, kDown, learned);
    halt();
  }

 private:
  bool is_root_;
  std::vector<int> children_;
  uint64_t value_;
};

}  // namespace

std::vector<int> SpanningForest::heights(const Partition& p) const {
  std::vector<int> h(p.count, 0);
  for (int v = 0; v < n(); ++v) h[p.part_of[v]] = std::max(h[p.part_of[v]], depth[v]);
  return h;
}

std::pair<RootedTree, sim::SimReport> build_bfs_tree_distributed(sim::Simulator& s, int root,
                                                                 uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v)
    progs.push_back(std::make_unique<WaveJoinProgram>(v == root, nullptr));
  sim::SimReport rep = s.run(progs, round_limit);
  std::vector<int> parent(n, -1);
  for (int v = 0; v < n; ++v)
    parent[v] = static_cast<WaveJoinProgram&>(*progs[v]).parent;
  return {tree_from_parents(s.graph(), root, parent), rep};
}

std::pair<HeavyPathDecomposition, sim::SimReport> heavy_paths_distributed(sim::Simulator& s,
                                                                          const RootedTree& t,
                                                                          uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v)
    progs.push_back(std::make_unique<HeavyPathProgram>(v, t.parent[v], t.children[v]));
  sim::SimReport rep = s.run(progs, round_limit);

  HeavyPathDecomposition h;
  h.subtree_size.resize(n);
  h.heavy_child.resize(n);
  h.path_top.resize(n);
  h.pos_from_source.resize(n);
  for (int v = 0; v < n; ++v) {
    auto& pr = static_cast<HeavyPathProgram&>(*progs[v]);
    if (pr.pos == 0) throw sim::SimError("path labeling did not reach node " + std::to_string(v));
    h.subtree_size[v] = pr.subtree;
    h.heavy_child[v] = pr.heavy_child;
    h.path_top[v] = pr.path_top;
    h.pos_from_source[v] = pr.pos;
    auto& nodes = h.path_nodes[pr.path_top];
    if (static_cast<int>(nodes.size()) < pr.len) nodes.resize(pr.len, -1);
    nodes[pr.pos - 1] = v;
  }
  return {h, rep};
}

std::pair<SpanningForest, sim::SimReport> build_part_forest_distributed(
    sim::Simulator& s, const Partition& p, const std::vector<int>& roots, uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<char> is_root(n, 0);
  for (int r : roots) is_root[r] = 1;
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v)
    progs.push_back(std::make_unique<WaveJoinProgram>(is_root[v] != 0, &p));
  sim::SimReport rep = s.run(progs, round_limit);
  std::vector<int> parent(n, -1);
  for (int v = 0; v < n; ++v)
    parent[v] = static_cast<WaveJoinProgram&>(*progs[v]).parent;
  return {forest_from_parents(s.graph(), roots, parent), rep};
}

SpanningForest part_forest_reference(const NetworkGraph& g, const Partition& p,
                                     const std::vector<int>& roots) {
  const int n = g.n();
  std::vector<int> dist(n, -1), parent(n, -1);
  std::deque<int> q;
  for (int r : roots) {
    dist[r] = 0;
    q.push_back(r);
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (auto [v, e] : g.adj(u))
      if (p.part_of[v] == p.part_of[u] && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  for (int v = 0; v < n; ++v) {
    if (dist[v] < 0) throw PartitionInvalidError("part is not connected");
    if (dist[v] == 0) continue;
    for (auto [u, e] : g.adj(v))
      if (p.part_of[u] == p.part_of[v] && dist[u] == dist[v] - 1) {
        parent[v] = u;
        break;
      }
  }
  return forest_from_parents(g, roots, parent);
}

ForestAggregate aggregate_on_forest(sim::Simulator& s, const SpanningForest& f, AggOp op,
                                    const std::vector<uint64_t>& values, uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v)
    progs.push_back(std::make_unique<AggregateProgram>(f.parent[v], f.children[v], op, values[v]));
  ForestAggregate out;
  out.report = s.run(progs, round_limit);
  out.node_value.resize(n);
  for (int v = 0; v < n; ++v) {
    auto& pr = static_cast<AggregateProgram&>(*progs[v]);
    if (!pr.have) throw sim::SimError("aggregation did not reach node " + std::to_string(v));
    out.node_value[v] = pr.learned;
  }
  out.root_value.reserve(f.roots.size());
  for (int r : f.roots) out.root_value.push_back(out.node_value[r]);
  return out;
}

SpanningForest forest_of_tree(const RootedTree& t) {
  SpanningForest f;
  f.parent = t.parent;
  f.parent_edge = t.parent_edge;
  f.depth = t.depth;
  f.children = t.children;
  f.roots = {t.root};
  return f;
}

std::pair<uint64_t, sim::SimReport> aggregate_on_tree(sim::Simulator& s, const RootedTree& t,
                                                      AggOp op,
                                                      const std::vector<uint64_t>& values,
                                                      uint64_t round_limit) {
  ForestAggregate a = aggregate_on_forest(s, forest_of_tree(t), op, values, round_limit);
  return {a.root_value[0], a.report};
}

std::pair<std::vector<uint64_t>, sim::SimReport> broadcast_on_tree(sim::Simulator& s,
                                                                   const RootedTree& t,
                                                                   uint64_t value,
                                                                   uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v)
    progs.push_back(std::make_unique<BroadcastProgram>(v == t.root, t.children[v], value));
  sim::SimReport rep = s.run(progs, round_limit);
  std::vector<uint64_t> learned(n);
  for (int v = 0; v < n; ++v) learned[v] = static_cast<BroadcastProgram&>(*progs[v]).learned;
  return {learned, rep};
}

}  // namespace congest::treecomm
