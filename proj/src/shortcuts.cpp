#include "congest/shortcuts.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <sstream>
#include <tuple>

namespace congest::shortcuts {
namespace {

int dsu_find(std::vector<int>& up, int x) {
  while (up[x] != x) {
    up[x] = up[up[x]];
    x = up[x];
  }
  return x;
}

// Everything block_route needs to know about one node's role in one stream.
struct StreamCfg {
  int part = -1;
  int block = -1;
  int kappa = 0;  // expected contributions: children with payload below + self
  bool participant = false;
  uint64_t value = 0;
  bool is_root = false;
  int root_depth = 0;
  int root_id = 0;
  uint64_t delay = 0;
  std::vector<int> fwd;  // broadcast: children to forward to, ascending
};

using NodeCfg = std::map<int, std::vector<StreamCfg>>;  // node -> its streams

// Walks every participant's tree path to its block root, accumulating kappa
// counts and forward lists. Shared by both directions.
NodeCfg plan_routes(const RootedTree& tree, const BlockStructure& bs,
                    const std::vector<RouteParticipant>& group,
                    const std::vector<uint64_t>* part_delay) {
  NodeCfg cfg;
  std::set<std::pair<int, int>> seen;  // (part, node) pairs already walked from
  std::set<std::pair<int, int>> registered;

  auto stream_of = [&](int node, int part, int block) -> StreamCfg& {
    auto& list = cfg[node];
    for (StreamCfg& s : list)
      if (s.part == part) return s;
    StreamCfg s;
    s.part = part;
    s.block = block;
    const BlockStructure::Block& b = bs.blocks[block];
    s.is_root = (node == b.root);
    s.root_depth = b.root_depth;
    s.root_id = b.root;
    if (part_delay && part < static_cast<int>(part_delay->size())) s.delay = (*part_delay)[part];
    list.push_back(std::move(s));
    return list.back();
  };

  for (const RouteParticipant& rp : group) {
    if (!registered.insert({rp.part, rp.node}).second)
      throw std::invalid_argument("node listed twice for one part in block_route");
    int block = bs.index_of(rp.part, rp.node);
    if (block < 0)
      throw std::invalid_argument("block_route participant is outside every block of its part");
    StreamCfg& own = stream_of(rp.node, rp.part, block);
    own.participant = true;
    own.value = rp.value;
    int root = bs.blocks[block].root;
    int v = rp.node;
    while (v != root) {
      if (!seen.insert({rp.part, v}).second) break;  // shared suffix already walked
      int p = tree.parent[v];
      if (p < 0 || bs.index_of(rp.part, p) != block)
        throw std::invalid_argument("block of part " + std::to_string(rp.part) +
                                    " is not upward-connected at node " + std::to_string(v));
      StreamCfg& ps = stream_of(p, rp.part, block);
      ps.kappa += 1;
      ps.fwd.push_back(v);
      v = p;
    }
  }
  for (auto& [node, list] : cfg)
    for (StreamCfg& s : list) {
      if (s.participant) s.kappa += 1;
      std::sort(s.fwd.begin(), s.fwd.end());
    }
  return cfg;
}

struct RootRecord {
  int block;
  uint64_t value;
  uint64_t round;
};

// Convergecast node. All outbound packets go to the tree parent; when several
// streams are ripe the (root depth, root id, part) order decides.
class RouteUpProgram : public sim::NodeProgram {
 public:
  RouteUpProgram(int parent, std::vector<StreamCfg> streams, AggOp op, int declared_c, int beta)
      : parent_(parent), op_(op), declared_c_(declared_c), beta_(beta) {
    for (StreamCfg& s : streams) {
      State st;
      st.cfg = std::move(s);
      st.acc = st.cfg.participant ? st.cfg.value : agg_identity(op_);
      st.got = st.cfg.participant ? 1 : 0;
      by_part_[st.cfg.part] = static_cast<int>(states_.size());
      states_.push_back(std::move(st));
    }
  }

  std::vector<RootRecord> finished;

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& env : api.inbox()) {
      State& st = states_[by_part_.at(static_cast<int>(env.w0()))];
      st.acc = agg_combine(op_, st.acc, env.w[1]);
      ++st.got;
      if (st.got == st.cfg.kappa) ripen(st, api.round());
    }
    if (!injected_) {
      bool all_in = true;
      for (State& st : states_) {
        if (st.activated || st.got != st.cfg.kappa) continue;
        if (api.round() >= st.cfg.delay)
          ripen(st, api.round());
        else
          all_in = false;
      }
      injected_ = all_in;
    }
    if (static_cast<int>(outq_.size()) > declared_c_ && beta_ == 1)
      throw CongestionContractViolated(
          "node " + std::to_string(api.node()) + " holds " + std::to_string(outq_.size()) +
          " pending streams for its parent edge; declared congestion is " +
          std::to_string(declared_c_));
    for (int k = 0; k < beta_ && !outq_.empty(); ++k) {
      auto it = outq_.begin();
      State& st = states_[std::get<3>(*it)];
      api.send(parent_, static_cast<uint64_t>(st.cfg.part), st.acc);
      outq_.erase(it);
      --pending_;
    }
    if (pending_ == 0 && injected_ && all_done()) halt();
  }

  uint64_t next_action_round(uint64_t now) const override {
    if (pending_ > 0) return now;
    uint64_t wake = sim::kNever;
    if (!injected_)
      for (const State& st : states_)
        if (!st.activated && st.got == st.cfg.kappa && st.cfg.delay >= now)
          wake = std::min(wake, st.cfg.delay);
    return wake;
  }

 private:
  struct State {
    StreamCfg cfg;
    uint64_t acc = 0;
    int got = 0;
    bool activated = false;  // recorded at root, or queued for sending
  };

  void ripen(State& st, uint64_t round) {
    st.activated = true;
    if (st.cfg.is_root) {
      finished.push_back({st.cfg.block, st.acc, round});
    } else {
      int idx = by_part_.at(st.cfg.part);
      outq_.insert({st.cfg.root_depth, st.cfg.root_id, st.cfg.part, idx});
      ++pending_;
    }
  }

  bool all_done() const {
    for (const State& st : states_)
      if (!st.activated) return false;
    return true;
  }

  int parent_;
  AggOp op_;
  int declared_c_;
  int beta_;
  std::vector<State> states_;
  std::map<int, int> by_part_;
  std::set<std::tuple<int, int, int, int>> outq_;
  int pending_ = 0;
  bool injected_ = false;
};

// Broadcast node: the mirror image. Packets flow root-down along exactly the
// edges the convergecast would use; per-child queues obey the same priority.
class RouteDownProgram : public sim::NodeProgram {
 public:
  RouteDownProgram(std::vector<StreamCfg> streams, int declared_c, int beta)
      : declared_c_(declared_c), beta_(beta) {
    for (StreamCfg& s : streams) {
      State st;
      st.cfg = std::move(s);
      st.value = st.cfg.value;  // meaningful at injecting roots
      by_part_[st.cfg.part] = static_cast<int>(states_.size());
      states_.push_back(std::move(st));
    }
  }

  std::vector<std::pair<int, uint64_t>> received;  // (part, value) at recipients

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& env : api.inbox()) {
      State& st = states_[by_part_.at(static_cast<int>(env.w0()))];
      st.value = env.w[1];
      arm(st);
    }
    if (!injected_) {
      bool all_in = true;
      for (State& st : states_) {
        if (!st.cfg.is_root || st.armed) continue;
        if (api.round() >= st.cfg.delay)
          arm(st);
        else
          all_in = false;
      }
      injected_ = all_in;
    }
    if (beta_ == 1)
      for (const auto& [child, depth] : qdepth_)
        if (depth > declared_c_)
          throw CongestionContractViolated(
              "node " + std::to_string(api.node()) + " holds " + std::to_string(depth) +
              " pending streams for the edge to " + std::to_string(child) +
              "; declared congestion is " + std::to_string(declared_c_));
    std::map<int, int> sent_now;
    for (auto it = outq_.begin(); it != outq_.end();) {
      auto [rd, rid, part, child] = *it;
      if (sent_now[child] < beta_) {
        State& st = states_[by_part_.at(part)];
        api.send(child, static_cast<uint64_t>(part), st.value);
        ++sent_now[child];
        --qdepth_[child];
        it = outq_.erase(it);
      } else {
        ++it;
      }
    }
    if (outq_.empty() && injected_ && all_armed()) halt();
  }

  uint64_t next_action_round(uint64_t now) const override {
    if (!outq_.empty()) return now;
    uint64_t wake = sim::kNever;
    if (!injected_)
      for (const State& st : states_)
        if (st.cfg.is_root && !st.armed && st.cfg.delay >= now) wake = std::min(wake, st.cfg.delay);
    return wake;
  }

 private:
  struct State {
    StreamCfg cfg;
    uint64_t value = 0;
    bool armed = false;  // value known; forwards queued
  };

  void arm(State& st) {
    st.armed = true;
    if (st.cfg.participant) received.push_back({st.cfg.part, st.value});
    for (int child : st.cfg.fwd) {
      outq_.insert({st.cfg.root_depth, st.cfg.root_id, st.cfg.part, child});
      ++qdepth_[child];
    }
  }

  bool all_armed() const {
    for (const State& st : states_)
      if (!st.armed) return false;
    return true;
  }

  int declared_c_;
  int beta_;
  std::vector<State> states_;
  std::map<int, int> by_part_;
  std::set<std::tuple<int, int, int, int>> outq_;
  std::map<int, int> qdepth_;
  bool injected_ = false;
};

}  // namespace

TreeRestrictedShortcut::TreeRestrictedShortcut(const RootedTree& tree, const Partition& parts)
    : tree_(&tree), parts_(&parts), assigned_(parts.count) {}

void TreeRestrictedShortcut::assign(int part, int child_node) {
  if (part < 0 || part >= static_cast<int>(assigned_.size()))
    throw ShortcutError("part id out of range");
  if (child_node < 0 || child_node >= tree_->n() || tree_->parent[child_node] < 0)
    throw ShortcutError("no tree edge above node " + std::to_string(child_node));
  assigned_[part].insert(child_node);
}

bool TreeRestrictedShortcut::has(int part, int child_node) const {
  return assigned_[part].count(child_node) > 0;
}

uint64_t TreeRestrictedShortcut::total_edges() const {
  uint64_t total = 0;
  for (const auto& s : assigned_) total += s.size();
  return total;
}

CongestionReport congestion(const TreeRestrictedShortcut& sc) {
  CongestionReport rep;
  rep.edge_load.assign(sc.tree().n(), 0);
  for (int i = 0; i < sc.part_count(); ++i)
    for (int child : sc.edges_of(i)) ++rep.edge_load[child];
  for (int load : rep.edge_load) rep.c = std::max(rep.c, load);
  return rep;
}

BlockStructure blocks(const TreeRestrictedShortcut& sc) {
  const RootedTree& t = sc.tree();
  const Partition& P = sc.parts();
  BlockStructure out;
  out.of_part.resize(P.count);
  out.node_block.resize(P.count);
  out.block_count.assign(P.count, 0);
  auto mem = P.members();

  for (int i = 0; i < P.count; ++i) {
    std::set<int> universe(mem[i].begin(), mem[i].end());
    for (int child : sc.edges_of(i)) {
      universe.insert(child);
      universe.insert(t.parent[child]);
    }
    std::map<int, int> local;
    int k = 0;
    for (int v : universe) local[v] = k++;
    std::vector<int> up(k);
    std::iota(up.begin(), up.end(), 0);
    for (int child : sc.edges_of(i)) {
      int a = dsu_find(up, local[child]);
      int b = dsu_find(up, local[t.parent[child]]);
      if (a != b) up[a] = b;
    }
    std::map<int, std::vector<int>> comps;  // dsu component -> sorted members
    for (int v : universe) comps[dsu_find(up, local[v])].push_back(v);

    std::vector<BlockStructure::Block> part_blocks;
    for (auto& [key, nodes] : comps) {
      BlockStructure::Block blk;
      blk.part = i;
      blk.members = nodes;
      blk.root = nodes[0];
      for (int v : nodes)
        if (t.depth[v] < t.depth[blk.root] ||
            (t.depth[v] == t.depth[blk.root] && v < blk.root))
          blk.root = v;
      blk.root_depth = t.depth[blk.root];
      part_blocks.push_back(std::move(blk));
    }
    std::sort(part_blocks.begin(), part_blocks.end(),
              [](const auto& a, const auto& b) { return a.root < b.root; });
    for (auto& blk : part_blocks) {
      int idx = static_cast<int>(out.blocks.size());
      out.of_part[i].push_back(idx);
      for (int v : blk.members) out.node_block[i][v] = idx;
      out.blocks.push_back(std::move(blk));
    }
    out.block_count[i] = static_cast<int>(out.of_part[i].size());
    out.max_block_count = std::max(out.max_block_count, out.block_count[i]);
  }
  return out;
}

BlockRouteResult block_route(sim::Simulator& s, const RootedTree& tree,
                             const BlockStructure& bs, const std::vector<RouteParticipant>& group,
                             AggOp op, RouteDirection dir,
                             const std::map<int, uint64_t>& inject, int declared_c, int beta,
                             uint64_t round_limit, const std::vector<uint64_t>* part_delay) {
  if (beta < 1) throw std::invalid_argument("beta must be at least 1");
  NodeCfg cfg = plan_routes(tree, bs, group, part_delay);
  const int n = s.graph().n();
  BlockRouteResult out;
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);

  if (dir == RouteDirection::convergecast) {
    for (int v = 0; v < n; ++v) {
      auto it = cfg.find(v);
      std::vector<StreamCfg> streams = it == cfg.end() ? std::vector<StreamCfg>{} : it->second;
      progs.push_back(
          std::make_unique<RouteUpProgram>(tree.parent[v], std::move(streams), op, declared_c, beta));
    }
    out.report = s.run(progs, round_limit, [beta](uint64_t) { return beta; });
    for (auto& p : progs)
      for (const RootRecord& rec : static_cast<RouteUpProgram&>(*p).finished) {
        out.root_value[rec.block] = rec.value;
        out.root_round[rec.block] = rec.round;
      }
  } else {
    // Fill in the injected value at each block root; recipients are the group.
    for (auto& [node, streams] : cfg)
      for (StreamCfg& st : streams)
        if (st.is_root) {
          auto it = inject.find(st.block);
          if (it == inject.end())
            throw std::invalid_argument("broadcast is missing a value for block " +
                                        std::to_string(st.block));
          st.value = it->second;
        }
    for (int v = 0; v < n; ++v) {
      auto it = cfg.find(v);
      std::vector<StreamCfg> streams = it == cfg.end() ? std::vector<StreamCfg>{} : it->second;
      progs.push_back(std::make_unique<RouteDownProgram>(std::move(streams), declared_c, beta));
    }
    out.report = s.run(progs, round_limit, [beta](uint64_t) { return beta; });
    for (int v = 0; v < n; ++v)
      for (auto& [part, value] : static_cast<RouteDownProgram&>(*progs[v]).received)
        out.delivered[{v, part}] = value;
  }
  return out;
}

std::string format_shortcut(const TreeRestrictedShortcut& sc) {
  std::ostringstream os;
  for (int i = 0; i < sc.part_count(); ++i)
    for (int child : sc.edges_of(i))
      os << i << ' ' << child << ' ' << sc.tree().parent[child] << '\n';
  return os.str();
}

void parse_shortcut_into(const std::string& text, TreeRestrictedShortcut& sc) {
  std::istringstream is(text);
  int part, u, v;
  while (is >> part >> u >> v) {
    int child;
    if (u >= 0 && u < sc.tree().n() && sc.tree().parent[u] == v)
      child = u;
    else if (v >= 0 && v < sc.tree().n() && sc.tree().parent[v] == u)
      child = v;
    else
      throw ShortcutError("line names a non-tree edge: " + std::to_string(u) + " " +
                          std::to_string(v));
    sc.assign(part, child);
  }
}

}  // namespace congest::shortcuts
