#include "congest/oracle.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

namespace congest {

namespace {

struct MergeSets {
  std::vector<int> parent;

  explicit MergeSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

std::tuple<int64_t, int, int> edge_key(const NetworkGraph& g, int e) {
  const Edge& ed = g.edge(e);
  return {ed.w, ed.u, ed.v};
}

void finish(const NetworkGraph& g, MstResult& r) {
  std::sort(r.edges.begin(), r.edges.end());
  r.total_weight = 0;
  for (int e : r.edges) r.total_weight += static_cast<uint64_t>(g.edge(e).w);
}

}  // namespace

std::vector<uint64_t> oracle_pa(const PaInstance& inst) {
  if (inst.values.size() != inst.partition.part_of.size())
    throw std::invalid_argument("instance values do not cover every node");
  std::vector<uint64_t> out(inst.partition.count, agg_identity(inst.op));
  for (size_t v = 0; v < inst.values.size(); ++v) {
    int p = inst.partition.part_of[v];
    out[p] = agg_combine(inst.op, out[p], inst.values[v]);
  }
  return out;
}

MstResult mst_by_sorted_merge(const NetworkGraph& g) {
  if (!g.connected()) throw DisconnectedGraphError("spanning tree needs a connected graph");
  std::vector<int> order(g.m());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return edge_key(g, a) < edge_key(g, b); });
  MergeSets ms(g.n());
  MstResult out;
  for (int e : order)
    if (ms.unite(g.edge(e).u, g.edge(e).v)) out.edges.push_back(e);
  finish(g, out);
  return out;
}

MstResult mst_by_cut_growth(const NetworkGraph& g) {
  if (!g.connected()) throw DisconnectedGraphError("spanning tree needs a connected graph");
  std::vector<char> inside(g.n(), 0);
  inside[0] = 1;
  MstResult out;
  for (int step = 1; step < g.n(); ++step) {
    int best = -1;
    for (int e = 0; e < g.m(); ++e) {
      if (inside[g.edge(e).u] == inside[g.edge(e).v]) continue;
      if (best < 0 || edge_key(g, e) < edge_key(g, best)) best = e;
    }
    inside[g.edge(best).u] = inside[g.edge(best).v] = 1;
    out.edges.push_back(best);
  }
  finish(g, out);
  return out;
}

MstResult oracle_mst(const NetworkGraph& g) {
  MstResult merged = mst_by_sorted_merge(g);
  MstResult grown = mst_by_cut_growth(g);
  if (!(merged == grown))
    throw std::logic_error("spanning tree methods disagree; the edge order is not total");
  return merged;
}

int path_shortcut_iterations(int len) {
  if (len <= 1) return 0;
  int it = 0;
  while ((int64_t{1} << it) < len) ++it;
  return it;
}

PathShortcutTrace oracle_path_shortcut(const std::vector<std::vector<int>>& start_sets, int c) {
  if (c < 1) throw std::invalid_argument("congestion target must be at least 1");
  const int len = static_cast<int>(start_sets.size());
  const int edges = len > 0 ? len - 1 : 0;

  std::vector<std::set<int>> resting(len);
  for (int k = 0; k < len; ++k) resting[k].insert(start_sets[k].begin(), start_sets[k].end());
  std::vector<std::set<int>> claimed(edges);

  PathShortcutTrace out;
  out.broken.assign(edges, 0);
  out.iterations = path_shortcut_iterations(len);

  for (int i = 0; i < out.iterations; ++i) {
    const int64_t step = int64_t{1} << i;
    // Landings are staged so every union reads this iteration's inputs; at
    // most one payload lands on any position per iteration regardless.
    std::vector<std::pair<int, std::vector<int>>> landings;
    for (int64_t v = step; v <= len; v += 2 * step) {
      std::set<int>& held = resting[v - 1];
      if (v < len && static_cast<int>(held.size()) >= 2 * c) {
        out.broken[v - 1] = 1;
        held.clear();
        continue;
      }
      int64_t u = std::min<int64_t>(v + step, len);
      if (u == v || held.empty()) continue;
      bool arrived = true;
      for (int64_t w = v; w < u; ++w) {
        if (out.broken[w - 1]) {  // ids stop here; edges behind them stay claimed
          arrived = false;
          break;
        }
        claimed[w - 1].insert(held.begin(), held.end());
      }
      if (arrived) landings.push_back({static_cast<int>(u - 1), {held.begin(), held.end()}});
    }
    for (auto& [target, ids] : landings) resting[target].insert(ids.begin(), ids.end());
  }

  for (int k = 0; k < edges; ++k)
    if (!out.broken[k]) claimed[k].insert(resting[k].begin(), resting[k].end());

  out.final_sets.resize(len);
  for (int k = 0; k < len; ++k) out.final_sets[k] = {resting[k].begin(), resting[k].end()};
  out.claimed.resize(edges);
  for (int k = 0; k < edges; ++k) out.claimed[k] = {claimed[k].begin(), claimed[k].end()};
  return out;
}

}  // namespace congest
