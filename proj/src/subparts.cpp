#include "congest/subparts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "congest/rng.hpp"

namespace congest::subparts {

using sim::NodeProgram;
using sim::RoundApi;
using sim::SimReport;
using sim::Simulator;

namespace {

constexpr uint64_t kTagAnnounce = 1;
constexpr uint64_t kTagColor = 2;
constexpr uint64_t kTagOneShot = 3;
constexpr uint64_t kTagClaim = 4;
constexpr uint64_t kTagWave = 5;

constexpr uint64_t kIdBits = 24;
constexpr uint64_t kIdMask = (uint64_t{1} << kIdBits) - 1;
constexpr uint64_t kDepthBits = 20;
constexpr uint64_t kDepthMask = (uint64_t{1} << kDepthBits) - 1;

int ceil_log2(int n) {
  int b = 0;
  while ((1 << b) < n) ++b;
  return b;
}

// Smallest of {0,1,2} different from both arguments.
uint64_t min3_excluding(uint64_t a, uint64_t b) {
  for (uint64_t c = 0; c < 3; ++c) {
    if (c != a && c != b) return c;
  }
  throw std::logic_error("no free color in {0,1,2}");
}

// Smallest of {0,1,2} different from c.
uint64_t root_shift(uint64_t c) { return c == 0 ? 1 : 0; }

// ---------------------------------------------------------------------------
// One-shot exchange: every node fires its configured messages in round 0 and
// anything that arrives is recorded. The workhorse for pointer rounds,
// replies, claims and probes; one run costs one round.

struct ReceivedWord {
  int src = -1;
  uint64_t w1 = 0;
  uint64_t w2 = 0;
};

class SendOnceProgram final : public NodeProgram {
 public:
  struct Out {
    int dst = -1;
    uint64_t w1 = 0;
    uint64_t w2 = 0;
  };

  SendOnceProgram(int node, std::vector<Out> out, bool two_words,
                  std::vector<std::vector<ReceivedWord>>* sink)
      : node_(node), out_(std::move(out)), two_words_(two_words), sink_(sink) {}

  void on_round(RoundApi& api) override {
    for (const auto& e : api.inbox()) {
      if (e.w0() != kTagOneShot) continue;
      (*sink_)[node_].push_back({e.src, e.w[1], e.len > 2 ? e.w[2] : 0});
    }
    if (api.round() == 0) {
      for (const auto& o : out_) {
        if (two_words_) {
          api.send(o.dst, kTagOneShot, o.w1, o.w2);
        } else {
          api.send(o.dst, kTagOneShot, o.w1);
        }
      }
    }
  }

 private:
  int node_;
  std::vector<Out> out_;
  bool two_words_;
  std::vector<std::vector<ReceivedWord>>* sink_;
};

// Runs one exchange; outs[v] holds node v's messages. Returns what each node
// received (in inbox order, i.e. sorted by sender) plus the run's counters.
std::pair<std::vector<std::vector<ReceivedWord>>, SimReport> run_send_once(
    Simulator& s, const std::vector<std::vector<SendOnceProgram::Out>>& outs, bool two_words,
    uint64_t round_limit) {
  int n = s.graph().n();
  std::vector<std::vector<ReceivedWord>> sink(n);
  std::vector<std::unique_ptr<NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v) {
    progs.push_back(std::make_unique<SendOnceProgram>(v, outs[v], two_words, &sink));
  }
  SimReport r = s.run(progs, round_limit);
  return {std::move(sink), r};
}

// ---------------------------------------------------------------------------
// Hop-capped competitive flooding: seeds claim themselves, everyone else
// adopts the smallest representative id among the first round's arrivals and
// forwards it once. A node at claim distance d adopts in round d, so each
// node's depth equals its adoption round and stays <= cap.

class ClaimFloodProgram final : public NodeProgram {
 public:
  ClaimFloodProgram(int node, int part, bool seed, int cap)
      : node_(node), part_(part), seed_(seed), cap_(cap) {}

  void on_round(RoundApi& api) override {
    if (api.round() == 0) {
      if (seed_) {
        rep_ = node_;
        depth_ = 0;
        forward(api);
        halt();
      }
      return;
    }
    if (rep_ >= 0) {
      halt();
      return;
    }
    int best_rep = -1;
    int best_src = -1;
    int best_depth = 0;
    for (const auto& e : api.inbox()) {
      if (e.w0() != kTagClaim) continue;
      int crep = static_cast<int>((e.w[1] >> 40) & kIdMask);
      int cpart = static_cast<int>((e.w[1] >> 16) & kIdMask);
      int cdepth = static_cast<int>(e.w[1] & 0xffff);
      if (cpart != part_) continue;
      if (best_rep < 0 || crep < best_rep || (crep == best_rep && e.src < best_src)) {
        best_rep = crep;
        best_src = e.src;
        best_depth = cdepth;
      }
    }
    if (best_rep < 0) return;
    rep_ = best_rep;
    parent_ = best_src;
    depth_ = best_depth;
    if (depth_ < cap_) forward(api);
    halt();
  }

  int rep() const { return rep_; }
  int parent() const { return parent_; }
  int depth() const { return depth_; }

 private:
  void forward(RoundApi& api) {
    uint64_t w = (static_cast<uint64_t>(rep_) << 40) | (static_cast<uint64_t>(part_) << 16) |
                 static_cast<uint64_t>(depth_ + 1);
    for (const auto& [nbr, eid] : api.graph().adj(node_)) {
      (void)eid;
      api.send(nbr, kTagClaim, w);
    }
  }

  int node_;
  int part_;
  bool seed_;
  int cap_;
  int rep_ = -1;
  int parent_ = -1;
  int depth_ = -1;
};

// ---------------------------------------------------------------------------
// Re-rooting wave: when a sub-part joins through edge (origin -> outside),
// the origin becomes the tree's new connection point and the old tree is
// re-oriented away from it. The wave travels over old tree edges only; every
// member hears it exactly once and adopts the sender as parent.

class RerootWaveProgram final : public NodeProgram {
 public:
  RerootWaveProgram(int node, std::vector<int> tree_nbrs, bool origin, int origin_parent,
                    int origin_depth, int new_rep)
      : node_(node),
        tree_nbrs_(std::move(tree_nbrs)),
        origin_(origin),
        origin_parent_(origin_parent),
        origin_depth_(origin_depth),
        new_rep_(new_rep) {}

  void on_round(RoundApi& api) override {
    if (api.round() == 0 && origin_) {
      parent_ = origin_parent_;
      depth_ = origin_depth_;
      rep_ = new_rep_;
      spread(api, -1);
      halt();
      return;
    }
    for (const auto& e : api.inbox()) {
      if (e.w0() != kTagWave || done_) continue;
      rep_ = static_cast<int>((e.w[1] >> kDepthBits) & kIdMask);
      depth_ = static_cast<int>(e.w[1] & kDepthMask);
      parent_ = e.src;
      done_ = true;
      spread(api, e.src);
      halt();
    }
  }

  bool touched() const { return rep_ >= 0; }
  int rep() const { return rep_; }
  int parent() const { return parent_; }
  int depth() const { return depth_; }

 private:
  void spread(RoundApi& api, int skip) {
    uint64_t w = (static_cast<uint64_t>(rep_) << kDepthBits) |
                 static_cast<uint64_t>(depth_ + 1);
    for (int nbr : tree_nbrs_) {
      if (nbr != skip) api.send(nbr, kTagWave, w);
    }
  }

  int node_;
  std::vector<int> tree_nbrs_;
  bool origin_;
  int origin_parent_;
  int origin_depth_;
  int new_rep_;
  bool done_ = false;
  int rep_ = -1;
  int parent_ = -1;
  int depth_ = -1;
};

// ---------------------------------------------------------------------------
// Node-level three-coloring program. Fixed 12-round schedule (see header):
// round 0 announces predecessors, rounds 1-5 carry four color reductions,
// rounds 6-11 carry three shift+recolor steps eliminating 5, 4, 3.

class ColorProgram final : public NodeProgram {
 public:
  ColorProgram(int node, int succ, uint64_t initial)
      : node_(node), succ_(succ), color_(initial) {}

  void on_round(RoundApi& api) override {
    uint64_t succ_word = 0;
    for (const auto& e : api.inbox()) {
      if (e.w0() == kTagAnnounce) {
        preds_.push_back(e.src);
      } else if (e.w0() == kTagColor && e.src == succ_) {
        succ_word = e.w[1];
      }
    }
    uint64_t r = api.round();
    if (r == 0) {
      if (succ_ >= 0) api.send(succ_, kTagAnnounce);
    } else if (r == 1) {
      send_color(api);
    } else if (r <= 5) {
      color_ = succ_ >= 0 ? cv_reduce(color_, succ_word) : cv_reduce_root(color_);
      send_color(api);
    } else if (r == 6 || r == 8 || r == 10) {
      prev_ = color_;
      color_ = succ_ >= 0 ? succ_word : root_shift(color_);
      send_color(api);
    } else {
      uint64_t target = r == 7 ? 5 : r == 9 ? 4 : 3;
      if (color_ == target) color_ = min3_excluding(succ_ >= 0 ? succ_word : prev_, prev_);
      if (r < 11) {
        send_color(api);
      } else {
        halt();
      }
    }
    want_ = r + 1;
  }

  uint64_t next_action_round(uint64_t now) const override {
    (void)now;
    return want_ <= 11 ? want_ : sim::kNever;
  }

  int final_color() const { return static_cast<int>(color_); }

 private:
  void send_color(RoundApi& api) {
    for (int p : preds_) api.send(p, kTagColor, color_);
  }

  int node_;
  int succ_;
  uint64_t color_;
  uint64_t prev_ = 0;
  std::vector<int> preds_;
  uint64_t want_ = 0;
};

uint64_t pack_settled_color(bool settled, uint64_t color) {
  return (settled ? (uint64_t{1} << 63) : 0) | color;
}

}  // namespace

// ---------------------------------------------------------------------------
// TreePaProvider

TreePaProvider::TreePaProvider(Simulator& s, treecomm::SpanningForest forest,
                               uint64_t round_limit)
    : sim_(s), forest_(std::move(forest)), round_limit_(round_limit) {}

std::vector<uint64_t> TreePaProvider::solve(AggOp op, const std::vector<uint64_t>& values,
                                            SimReport& cost) {
  treecomm::ForestAggregate agg =
      treecomm::aggregate_on_forest(sim_, forest_, op, values, round_limit_);
  cost.absorb(agg.report);
  ++calls_;
  return std::move(agg.node_value);
}

// ---------------------------------------------------------------------------
// Three-coloring

uint64_t cv_reduce(uint64_t own, uint64_t succ) {
  if (own == succ) throw std::logic_error("cv_reduce needs distinct colors");
  int idx = std::countr_zero(own ^ succ);
  return (static_cast<uint64_t>(idx) << 1) | ((own >> idx) & 1);
}

uint64_t cv_reduce_root(uint64_t own) { return own & 1; }

std::pair<std::vector<int>, SimReport> cole_vishkin_3color(Simulator& s,
                                                           const std::vector<int>& succ,
                                                           const std::vector<uint64_t>& initial,
                                                           uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  int n = g.n();
  if (static_cast<int>(succ.size()) != n) {
    throw OutDegreeViolation("successor list size mismatch");
  }
  for (int v = 0; v < n; ++v) {
    if (succ[v] == -1) continue;
    if (succ[v] < 0 || succ[v] >= n || succ[v] == v || !g.adjacent(v, succ[v])) {
      throw OutDegreeViolation("successor of " + std::to_string(v) +
                               " is not a distinct graph neighbor");
    }
  }
  std::vector<uint64_t> colors0(n);
  if (initial.empty()) {
    for (int v = 0; v < n; ++v) colors0[v] = static_cast<uint64_t>(v);
  } else {
    if (static_cast<int>(initial.size()) != n) {
      throw std::invalid_argument("initial color list size mismatch");
    }
    colors0 = initial;
    auto sorted = colors0;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("initial colors must be distinct");
    }
  }

  Simulator::PhaseScope scope(s, "three-color");
  std::vector<std::unique_ptr<NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v) {
    progs.push_back(std::make_unique<ColorProgram>(v, succ[v], colors0[v]));
  }
  SimReport r = s.run(progs, round_limit);
  std::vector<int> out(n);
  for (int v = 0; v < n; ++v) {
    out[v] = static_cast<ColorProgram*>(progs[v].get())->final_color();
  }
  return {std::move(out), r};
}

// ---------------------------------------------------------------------------
// Star joinings

int StarJoining::joiner_count() const {
  int c = 0;
  for (StarRole r : role) c += r == StarRole::joiner ? 1 : 0;
  return c;
}

int StarJoining::receiver_count() const {
  int c = 0;
  for (StarRole r : role) c += r == StarRole::receiver ? 1 : 0;
  return c;
}

void validate_star_joining(const NetworkGraph& g, const Partition& parts,
                           const std::vector<int>& chosen_edge, const StarJoining& sj) {
  int p = parts.count;
  if (static_cast<int>(sj.role.size()) != p || static_cast<int>(sj.joiner_edge.size()) != p ||
      static_cast<int>(chosen_edge.size()) != p) {
    throw std::logic_error("star joining arrays sized wrong");
  }
  for (int i = 0; i < p; ++i) {
    if (sj.role[i] != StarRole::joiner) {
      if (sj.joiner_edge[i] != -1) throw std::logic_error("non-joiner carries an edge");
      continue;
    }
    if (chosen_edge[i] < 0) throw std::logic_error("joiner without a chosen edge");
    if (sj.joiner_edge[i] != chosen_edge[i]) {
      throw std::logic_error("joiner edge differs from the part's chosen edge");
    }
    const Edge& e = g.edge(sj.joiner_edge[i]);
    int inside = parts.part_of[e.u] == i ? e.u : e.v;
    int outside = e.other(inside);
    if (parts.part_of[inside] != i || parts.part_of[outside] == i) {
      throw std::logic_error("joiner edge does not exit its part");
    }
    if (sj.role[parts.part_of[outside]] != StarRole::receiver) {
      throw std::logic_error("joiner edge does not land in a receiver");
    }
  }
}

namespace {

// Shared scaffolding for both joining variants: resolves edge endpoints,
// runs the pointer round, and spreads part-level facts through the provider.
struct JoinScaffold {
  Simulator& s;
  const Partition& q;
  const std::vector<int>& leaders;
  const std::vector<int>& chosen;
  PaProvider& pa;
  uint64_t limit;
  SimReport report;

  int n = 0;
  int p = 0;
  std::vector<int> owner;   // per part, -1 for non-participants
  std::vector<int> target;  // per part
  std::vector<char> is_owner;                // per node
  std::vector<int> owner_part;               // per node: which part v owns for
  std::vector<std::vector<int>> ptr_in;      // per node: pointer senders

  JoinScaffold(Simulator& s_, const Partition& q_, const std::vector<int>& leaders_,
               const std::vector<int>& chosen_, PaProvider& pa_, uint64_t limit_)
      : s(s_), q(q_), leaders(leaders_), chosen(chosen_), pa(pa_), limit(limit_) {
    const NetworkGraph& g = s.graph();
    n = g.n();
    p = q.count;
    if (static_cast<int>(q.part_of.size()) != n) {
      throw std::invalid_argument("partition size mismatch");
    }
    if (static_cast<int>(leaders.size()) != p || static_cast<int>(chosen.size()) != p) {
      throw std::invalid_argument("leaders/chosen edge lists must have one entry per part");
    }
    owner.assign(p, -1);
    target.assign(p, -1);
    is_owner.assign(n, 0);
    owner_part.assign(n, -1);
    ptr_in.assign(n, {});
    for (int i = 0; i < p; ++i) {
      if (leaders[i] < 0 || leaders[i] >= n || q.part_of[leaders[i]] != i) {
        throw std::invalid_argument("leader outside its part");
      }
      if (chosen[i] < 0) continue;
      const Edge& e = g.edge(chosen[i]);
      int a = q.part_of[e.u] == i ? e.u : e.v;
      int b = e.other(a);
      if (q.part_of[a] != i || q.part_of[b] == i) {
        throw std::invalid_argument("chosen edge must exit its part");
      }
      owner[i] = a;
      target[i] = b;
      is_owner[a] = 1;
      owner_part[a] = i;
    }
  }

  void pointer_round() {
    std::vector<std::vector<SendOnceProgram::Out>> outs(n);
    for (int i = 0; i < p; ++i) {
      if (owner[i] >= 0) outs[owner[i]].push_back({target[i], 0, 0});
    }
    auto [sink, r] = run_send_once(s, outs, false, limit);
    report.absorb(r);
    for (int v = 0; v < n; ++v) {
      for (const auto& rec : sink[v]) ptr_in[v].push_back(rec.src);
    }
  }

  // Every pointed-at node answers each pointer with f(v); owners read the
  // answer coming back over their own edge.
  std::vector<uint64_t> reply_round(const std::vector<uint64_t>& node_word,
                                    std::vector<char>* got_word) {
    std::vector<std::vector<SendOnceProgram::Out>> outs(n);
    for (int v = 0; v < n; ++v) {
      for (int src : ptr_in[v]) outs[v].push_back({src, node_word[v], 0});
    }
    auto [sink, r] = run_send_once(s, outs, false, limit);
    report.absorb(r);
    std::vector<uint64_t> got(p, 0);
    for (int i = 0; i < p; ++i) {
      if (owner[i] < 0) continue;
      for (const auto& rec : sink[owner[i]]) {
        if (rec.src == target[i]) {
          got[i] = rec.w1;
          if (got_word) (*got_word)[i] = 1;
        }
      }
    }
    return got;
  }

  // Part-level fold: owners (or any chosen injector set) contribute, everyone
  // learns, and the per-part value is read at the leader.
  std::vector<uint64_t> spread(AggOp op, const std::vector<uint64_t>& values) {
    std::vector<uint64_t> node_vals = pa.solve(op, values, report);
    std::vector<uint64_t> per_part(p);
    for (int i = 0; i < p; ++i) per_part[i] = node_vals[leaders[i]];
    return per_part;
  }
};

}  // namespace

std::pair<StarJoining, SimReport> star_joining_random(Simulator& s, const Partition& parts,
                                                      const std::vector<int>& leaders,
                                                      const std::vector<int>& chosen_edge,
                                                      PaProvider& pa, uint64_t seed,
                                                      uint64_t round_limit) {
  Simulator::PhaseScope scope(s, "star-join-rand");
  JoinScaffold sc(s, parts, leaders, chosen_edge, pa, round_limit);
  sc.pointer_round();

  // The leader's coin, spread part-wide.
  std::vector<uint64_t> values(sc.n, 0);
  for (int i = 0; i < sc.p; ++i) {
    values[leaders[i]] = Rng(split_seed(seed, static_cast<uint64_t>(leaders[i]))).coin() ? 1 : 0;
  }
  std::vector<uint64_t> heads = sc.spread(AggOp::bit_or, values);

  // Each pointed-at node answers with its part's coin; tails parts whose
  // target is heads join, spread as one more or-fold.
  std::vector<uint64_t> node_word(sc.n, 0);
  for (int v = 0; v < sc.n; ++v) node_word[v] = heads[parts.part_of[v]];
  std::vector<uint64_t> succ_heads = sc.reply_round(node_word, nullptr);

  values.assign(sc.n, 0);
  for (int i = 0; i < sc.p; ++i) {
    if (sc.owner[i] >= 0 && heads[i] == 0 && succ_heads[i] == 1) values[sc.owner[i]] = 1;
  }
  std::vector<uint64_t> joins = sc.spread(AggOp::bit_or, values);

  StarJoining sj;
  sj.role.assign(sc.p, StarRole::untouched);
  sj.joiner_edge.assign(sc.p, -1);
  for (int i = 0; i < sc.p; ++i) {
    if (heads[i]) {
      sj.role[i] = StarRole::receiver;
    } else if (joins[i]) {
      sj.role[i] = StarRole::joiner;
      sj.joiner_edge[i] = chosen_edge[i];
    }
  }
  return {std::move(sj), sc.report};
}

std::pair<StarJoining, SimReport> star_joining_det(Simulator& s, const Partition& parts,
                                                   const std::vector<int>& leaders,
                                                   const std::vector<int>& chosen_edge,
                                                   PaProvider& pa, uint64_t round_limit) {
  Simulator::PhaseScope scope(s, "star-join-det");
  JoinScaffold sc(s, parts, leaders, chosen_edge, pa, round_limit);
  sc.pointer_round();

  int n = sc.n;
  int p = sc.p;

  // In-degree fold; two pointers force a receiver, and parts that cannot
  // point anywhere accept their first pointer immediately.
  std::vector<uint64_t> values(n, 0);
  for (int v = 0; v < n; ++v) values[v] = sc.ptr_in[v].size();
  std::vector<uint64_t> indeg = sc.spread(AggOp::sum, values);

  std::vector<char> receiver(p, 0), joiner(p, 0), settled(p, 0);
  for (int i = 0; i < p; ++i) {
    bool participant = sc.owner[i] >= 0;
    receiver[i] = (participant && indeg[i] >= 2) || (!participant && indeg[i] >= 1);
    settled[i] = receiver[i] || !participant;
  }

  // Stage-1 joiners: targets answer with their receiver bit.
  std::vector<uint64_t> node_word(n, 0);
  for (int v = 0; v < n; ++v) node_word[v] = receiver[parts.part_of[v]];
  std::vector<uint64_t> succ_recv = sc.reply_round(node_word, nullptr);
  values.assign(n, 0);
  for (int i = 0; i < p; ++i) {
    if (sc.owner[i] >= 0 && !receiver[i] && succ_recv[i]) values[sc.owner[i]] = 1;
  }
  std::vector<uint64_t> joined = sc.spread(AggOp::bit_or, values);
  for (int i = 0; i < p; ++i) {
    if (joined[i]) {
      joiner[i] = 1;
      settled[i] = 1;
    }
  }

  auto any_unsettled = [&] {
    for (int i = 0; i < p; ++i) {
      if (!settled[i]) return true;
    }
    return false;
  };

  // The rest of the parts form pointer chains and cycles; color them at part
  // level, each part's color transition computed from the color its edge
  // endpoint fetched from the target.
  std::vector<uint64_t> color(p, 0), pre(p, 0);
  if (any_unsettled()) {
    for (int i = 0; i < p; ++i) color[i] = static_cast<uint64_t>(leaders[i]);

    auto settled_color_words = [&] {
      std::vector<uint64_t> w(n, 0);
      for (int v = 0; v < n; ++v) {
        int i = parts.part_of[v];
        w[v] = pack_settled_color(settled[i], color[i]);
      }
      return w;
    };

    for (int step = 0; step < 4; ++step) {
      std::vector<uint64_t> succ_word = sc.reply_round(settled_color_words(), nullptr);
      values.assign(n, agg_identity(AggOp::min));
      for (int i = 0; i < p; ++i) {
        if (settled[i] || sc.owner[i] < 0) continue;
        bool succ_settled = (succ_word[i] >> 63) != 0;
        uint64_t succ_color = succ_word[i] & ~(uint64_t{1} << 63);
        values[sc.owner[i]] =
            succ_settled ? cv_reduce_root(color[i]) : cv_reduce(color[i], succ_color);
      }
      std::vector<uint64_t> next = sc.spread(AggOp::min, values);
      for (int i = 0; i < p; ++i) {
        if (!settled[i] && sc.owner[i] >= 0) color[i] = next[i];
      }
    }

    // Three shift+recolor steps squeeze {0..5} down to {0,1,2}.
    for (uint64_t target = 5; target >= 3; --target) {
      std::vector<uint64_t> succ_word = sc.reply_round(settled_color_words(), nullptr);
      values.assign(n, agg_identity(AggOp::min));
      for (int i = 0; i < p; ++i) {
        if (settled[i] || sc.owner[i] < 0) continue;
        bool succ_settled = (succ_word[i] >> 63) != 0;
        uint64_t succ_color = succ_word[i] & ~(uint64_t{1} << 63);
        values[sc.owner[i]] = succ_settled ? root_shift(color[i]) : succ_color;
      }
      std::vector<uint64_t> shifted = sc.spread(AggOp::min, values);
      for (int i = 0; i < p; ++i) {
        if (!settled[i] && sc.owner[i] >= 0) {
          pre[i] = color[i];
          color[i] = shifted[i];
        }
      }

      std::vector<uint64_t> succ_shifted = sc.reply_round(settled_color_words(), nullptr);
      values.assign(n, agg_identity(AggOp::min));
      for (int i = 0; i < p; ++i) {
        if (settled[i] || sc.owner[i] < 0) continue;
        uint64_t c = color[i];
        if (c == target) {
          bool succ_settled = (succ_shifted[i] >> 63) != 0;
          uint64_t sc_color = succ_shifted[i] & ~(uint64_t{1} << 63);
          c = min3_excluding(succ_settled ? pre[i] : sc_color, pre[i]);
        }
        values[sc.owner[i]] = c;
      }
      std::vector<uint64_t> recolored = sc.spread(AggOp::min, values);
      for (int i = 0; i < p; ++i) {
        if (!settled[i] && sc.owner[i] >= 0) color[i] = recolored[i];
      }
    }

    // Color sweeps: a still-unsettled part whose target is still unsettled
    // joins when its color comes up; the target becomes a receiver. Adjacent
    // parts never share a color, so roles stay consistent within a sweep.
    for (uint64_t k = 0; k < 3 && any_unsettled(); ++k) {
      std::vector<uint64_t> settled_word(n, 0);
      for (int v = 0; v < n; ++v) settled_word[v] = settled[parts.part_of[v]];
      std::vector<uint64_t> succ_settled = sc.reply_round(settled_word, nullptr);

      std::vector<std::vector<SendOnceProgram::Out>> outs(n);
      for (int i = 0; i < p; ++i) {
        if (settled[i] || sc.owner[i] < 0) continue;
        if (color[i] == k && succ_settled[i] == 0) {
          outs[sc.owner[i]].push_back({sc.target[i], 1, 0});
        }
      }
      auto [claims, r] = run_send_once(s, outs, false, round_limit);
      sc.report.absorb(r);

      values.assign(n, 0);
      for (int i = 0; i < p; ++i) {
        if (!settled[i] && sc.owner[i] >= 0 && color[i] == k && succ_settled[i] == 0) {
          values[sc.owner[i]] |= 1;
        }
      }
      for (int v = 0; v < n; ++v) {
        if (!claims[v].empty()) values[v] |= 2;
      }
      std::vector<uint64_t> bits = sc.spread(AggOp::bit_or, values);
      for (int i = 0; i < p; ++i) {
        if (settled[i]) continue;
        if ((bits[i] & 1) && (bits[i] & 2)) {
          throw std::logic_error("part designated joiner and receiver in one sweep");
        }
        if (bits[i] & 1) {
          joiner[i] = 1;
          settled[i] = 1;
        } else if (bits[i] & 2) {
          receiver[i] = 1;
          settled[i] = 1;
        }
      }
    }
  }

  StarJoining sj;
  sj.role.assign(p, StarRole::untouched);
  sj.joiner_edge.assign(p, -1);
  for (int i = 0; i < p; ++i) {
    if (joiner[i]) {
      sj.role[i] = StarRole::joiner;
      sj.joiner_edge[i] = chosen_edge[i];
    } else if (receiver[i]) {
      sj.role[i] = StarRole::receiver;
    }
  }
  return {std::move(sj), sc.report};
}

// ---------------------------------------------------------------------------
// Sub-part divisions

std::vector<int> SubPartDivision::counts_per_part(const Partition& p) const {
  std::vector<std::set<int>> reps(p.count);
  for (int v = 0; v < n(); ++v) reps[p.part_of[v]].insert(rep[v]);
  std::vector<int> out(p.count);
  for (int i = 0; i < p.count; ++i) out[i] = static_cast<int>(reps[i].size());
  return out;
}

std::vector<int> SubPartDivision::representatives() const {
  std::vector<int> out;
  for (int v = 0; v < n(); ++v) {
    if (rep[v] == v) out.push_back(v);
  }
  return out;
}

void validate_division(const NetworkGraph& g, const Partition& p, const SubPartDivision& d,
                       int diameter_cap) {
  int n = g.n();
  if (d.n() != n || static_cast<int>(d.parent.size()) != n ||
      static_cast<int>(d.depth.size()) != n || static_cast<int>(d.complete.size()) != n) {
    throw std::logic_error("division arrays sized wrong");
  }
  for (int v = 0; v < n; ++v) {
    int r = d.rep[v];
    if (r < 0 || r >= n || p.part_of[r] != p.part_of[v] || d.rep[r] != r) {
      throw std::logic_error("bad representative at node " + std::to_string(v));
    }
    if (v == r) {
      if (d.parent[v] != -1 || d.depth[v] != 0) {
        throw std::logic_error("representative must be a depth-0 root");
      }
      continue;
    }
    int par = d.parent[v];
    if (par < 0 || par >= n || !g.adjacent(v, par) || d.rep[par] != r ||
        d.depth[v] != d.depth[par] + 1) {
      throw std::logic_error("bad tree pointer at node " + std::to_string(v));
    }
    if (d.complete[v] != d.complete[r]) {
      throw std::logic_error("completeness not uniform in sub-part of " + std::to_string(r));
    }
  }
  if (diameter_cap < 0) return;
  // Tree diameter per sub-part by the usual two-sweep walk.
  std::map<int, std::vector<int>> members;
  for (int v = 0; v < n; ++v) members[d.rep[v]].push_back(v);
  std::vector<std::vector<int>> tree_adj(n);
  for (int v = 0; v < n; ++v) {
    if (d.parent[v] >= 0) {
      tree_adj[v].push_back(d.parent[v]);
      tree_adj[d.parent[v]].push_back(v);
    }
  }
  auto far = [&](int start) {
    std::map<int, int> dist;
    dist[start] = 0;
    std::vector<int> queue{start};
    int best = start;
    for (size_t h = 0; h < queue.size(); ++h) {
      int v = queue[h];
      if (dist[v] > dist[best]) best = v;
      for (int w : tree_adj[v]) {
        if (!dist.count(w)) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
      }
    }
    return std::pair<int, int>{best, dist[best]};
  };
  for (const auto& [r, mem] : members) {
    auto [a, da] = far(r);
    auto [b, diam] = far(a);
    (void)b;
    (void)da;
    if (diam > diameter_cap) {
      throw std::logic_error("sub-part of " + std::to_string(r) + " has tree diameter " +
                             std::to_string(diam) + " > " + std::to_string(diameter_cap));
    }
  }
}

std::string format_division(const SubPartDivision& d) {
  std::ostringstream out;
  for (int v = 0; v < d.n(); ++v) {
    out << v << ' ' << d.rep[v] << ' ' << d.rep[v] << ' ' << d.parent[v] << '\n';
  }
  return out.str();
}

SubPartDivision parse_division(const std::string& text, int n) {
  SubPartDivision d;
  d.rep.assign(n, -1);
  d.parent.assign(n, -2);
  d.depth.assign(n, -1);
  d.complete.assign(n, 1);
  std::istringstream in(text);
  int v, sp, r, par;
  while (in >> v >> sp >> r >> par) {
    if (v < 0 || v >= n) throw std::invalid_argument("node id out of range");
    if (sp != r) throw std::invalid_argument("sub-part id and representative id must agree");
    if (d.rep[v] != -1) throw std::invalid_argument("duplicate node line");
    d.rep[v] = r;
    d.parent[v] = par;
  }
  for (int i = 0; i < n; ++i) {
    if (d.rep[i] == -1) throw std::invalid_argument("missing node line");
  }
  // Depths recomputed by walking up; a walk longer than n means a cycle.
  for (int i = 0; i < n; ++i) {
    int steps = 0;
    int w = i;
    while (d.parent[w] != -1) {
      w = d.parent[w];
      if (w < 0 || w >= n || ++steps > n) throw std::invalid_argument("broken parent chain");
    }
    if (w != d.rep[i]) throw std::invalid_argument("parent chain does not end at the rep");
  }
  for (int i = 0; i < n; ++i) {
    int steps = 0;
    int w = i;
    while (d.parent[w] != -1) {
      w = d.parent[w];
      ++steps;
    }
    d.depth[i] = steps;
  }
  return d;
}

namespace {

// Per-iteration neighbor snapshot for the deterministic division.
struct NeighborSample {
  int src = -1;
  int rep = -1;
  int depth = 0;
  bool complete = false;
  bool same_part = false;
};

uint64_t pack_sample(int rep, int depth, bool complete) {
  return (static_cast<uint64_t>(rep) << (kDepthBits + 1)) |
         (static_cast<uint64_t>(depth) << 1) | (complete ? 1 : 0);
}

uint64_t pack_edge_key(int cls, int a, int b) {
  int lo = std::min(a, b), hi = std::max(a, b);
  return (static_cast<uint64_t>(cls) << (2 * kIdBits)) | (static_cast<uint64_t>(lo) << kIdBits) |
         static_cast<uint64_t>(hi);
}

}  // namespace

DivisionResult subpart_division_random(Simulator& s, const Partition& p,
                                       const std::vector<int>& leaders, int threshold,
                                       uint64_t seed, uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  int n = g.n();
  if (threshold < 1) throw std::invalid_argument("threshold must be positive");
  if (static_cast<int>(p.part_of.size()) != n) throw std::invalid_argument("partition mismatch");
  if (static_cast<int>(leaders.size()) != p.count) {
    throw std::invalid_argument("one leader per part required");
  }
  for (int i = 0; i < p.count; ++i) {
    if (leaders[i] < 0 || leaders[i] >= n || p.part_of[leaders[i]] != i) {
      throw std::invalid_argument("leader outside its part");
    }
  }
  std::vector<int> size_of = p.sizes();
  double prob = std::min(1.0, kSampleFactor * std::log(std::max(2, n)) /
                                  static_cast<double>(threshold));

  Simulator::PhaseScope scope(s, "division-rand");
  DivisionResult res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<std::unique_ptr<NodeProgram>> progs;
    progs.reserve(n);
    for (int v = 0; v < n; ++v) {
      int part = p.part_of[v];
      bool seed_node;
      if (size_of[part] <= threshold) {
        seed_node = v == leaders[part];
      } else {
        seed_node = Rng(split_seed(seed, static_cast<uint64_t>(v),
                                   static_cast<uint64_t>(attempt)))
                        .unit() < prob;
      }
      progs.push_back(std::make_unique<ClaimFloodProgram>(v, part, seed_node, threshold));
    }
    res.report.absorb(s.run(progs, round_limit));

    bool covered = true;
    SubPartDivision d;
    d.rep.assign(n, -1);
    d.parent.assign(n, -1);
    d.depth.assign(n, 0);
    d.complete.assign(n, 1);
    for (int v = 0; v < n; ++v) {
      auto* cp = static_cast<ClaimFloodProgram*>(progs[v].get());
      if (cp->rep() < 0) {
        covered = false;
        break;
      }
      d.rep[v] = cp->rep();
      d.parent[v] = cp->parent();
      d.depth[v] = cp->depth();
    }
    if (covered) {
      res.division = std::move(d);
      res.retries = attempt;
      return res;
    }
    prob = std::min(1.0, 2 * prob);
  }
  throw CoverageFailure("nodes left unclaimed even after the doubled-probability retry");
}

namespace {

// All the moving state of the deterministic division, plus the per-iteration
// steps. Everything here mirrors what each node itself knows: its sub-part
// rep, tree pointer, depth, and the completeness/size facts its sub-part
// folds told it.
struct DetDivision {
  Simulator& s;
  const Partition& p;
  int threshold;
  uint64_t limit;
  const NetworkGraph& g;
  int n;
  std::vector<int> part_size_of;  // per node
  std::vector<int> rep, parent, depth;
  std::vector<char> complete;
  SimReport report;

  DetDivision(Simulator& s_, const Partition& p_, int threshold_, uint64_t limit_)
      : s(s_), p(p_), threshold(threshold_), limit(limit_), g(s.graph()), n(g.n()) {
    std::vector<int> sizes = p.sizes();
    part_size_of.resize(n);
    rep.resize(n);
    parent.assign(n, -1);
    depth.assign(n, 0);
    complete.resize(n);
    for (int v = 0; v < n; ++v) {
      part_size_of[v] = sizes[p.part_of[v]];
      rep[v] = v;
      complete[v] = 1 >= threshold || part_size_of[v] == 1;
    }
  }

  treecomm::SpanningForest forest() const {
    treecomm::SpanningForest f;
    f.parent = parent;
    f.depth = depth;
    f.parent_edge.assign(n, -1);
    f.children.assign(n, {});
    for (int v = 0; v < n; ++v) {
      if (parent[v] >= 0) {
        f.parent_edge[v] = g.edge_between(v, parent[v]);
        f.children[parent[v]].push_back(v);
      }
    }
    for (int v = 0; v < n; ++v) {
      if (rep[v] == v) f.roots.push_back(v);
    }
    return f;
  }

  std::vector<std::vector<NeighborSample>> exchange() {
    std::vector<std::vector<SendOnceProgram::Out>> outs(n);
    for (int v = 0; v < n; ++v) {
      uint64_t w1 = pack_sample(rep[v], depth[v], complete[v]);
      uint64_t w2 = static_cast<uint64_t>(p.part_of[v]);
      for (const auto& [nbr, eid] : g.adj(v)) {
        (void)eid;
        outs[v].push_back({nbr, w1, w2});
      }
    }
    auto [sink, r] = run_send_once(s, outs, true, limit);
    report.absorb(r);
    std::vector<std::vector<NeighborSample>> samples(n);
    for (int v = 0; v < n; ++v) {
      for (const auto& rec : sink[v]) {
        NeighborSample ns;
        ns.src = rec.src;
        ns.rep = static_cast<int>((rec.w1 >> (kDepthBits + 1)) & kIdMask);
        ns.depth = static_cast<int>((rec.w1 >> 1) & kDepthMask);
        ns.complete = (rec.w1 & 1) != 0;
        ns.same_part = rec.w2 == static_cast<uint64_t>(p.part_of[v]);
        samples[v].push_back(ns);
      }
    }
    return samples;
  }

  // Dense sub-part indexing for one round of star joining.
  struct DenseView {
    Partition q;
    std::vector<int> reps;          // dense id -> rep node
    std::map<int, int> dense_of;    // rep node -> dense id
  };

  DenseView dense_view() const {
    DenseView dv;
    for (int v = 0; v < n; ++v) {
      if (rep[v] == v) {
        dv.dense_of[v] = 0;
        dv.reps.push_back(v);
      }
    }
    std::sort(dv.reps.begin(), dv.reps.end());
    for (int i = 0; i < static_cast<int>(dv.reps.size()); ++i) dv.dense_of[dv.reps[i]] = i;
    dv.q.count = static_cast<int>(dv.reps.size());
    dv.q.part_of.resize(n);
    for (int v = 0; v < n; ++v) dv.q.part_of[v] = dv.dense_of.at(rep[v]);
    return dv;
  }

  // Merges each joiner sub-part into its target: the edge endpoints swap
  // landing info, then the joiner's tree re-roots at its endpoint.
  void merge(const DenseView& dv, const std::vector<int>& chosen,
             const std::vector<char>& is_joiner) {
    std::vector<int> j_owner(dv.q.count, -1), j_target(dv.q.count, -1);
    std::vector<std::vector<SendOnceProgram::Out>> note(n);
    for (int i = 0; i < dv.q.count; ++i) {
      if (!is_joiner[i]) continue;
      const Edge& e = g.edge(chosen[i]);
      int a = dv.q.part_of[e.u] == i ? e.u : e.v;
      int b = e.other(a);
      j_owner[i] = a;
      j_target[i] = b;
      note[a].push_back({b, 0, 0});
    }
    auto [noted, r1] = run_send_once(s, note, false, limit);
    report.absorb(r1);

    std::vector<std::vector<SendOnceProgram::Out>> reply(n);
    for (int v = 0; v < n; ++v) {
      for (const auto& rec : noted[v]) {
        reply[v].push_back({rec.src, pack_sample(rep[v], depth[v], complete[v]), 0});
      }
    }
    auto [landing, r2] = run_send_once(s, reply, false, limit);
    report.absorb(r2);

    // Old tree adjacency, needed before any pointers change.
    std::vector<std::vector<int>> tree_nbrs(n);
    for (int v = 0; v < n; ++v) {
      if (parent[v] >= 0) {
        tree_nbrs[v].push_back(parent[v]);
        tree_nbrs[parent[v]].push_back(v);
      }
    }
    std::vector<std::unique_ptr<NodeProgram>> progs;
    progs.reserve(n);
    for (int v = 0; v < n; ++v) {
      int i = dv.q.part_of[v];
      bool active = is_joiner[i];
      bool origin = active && j_owner[i] == v;
      int opar = -1, odepth = 0, nrep = -1;
      if (origin) {
        uint64_t w = 0;
        for (const auto& rec : landing[v]) {
          if (rec.src == j_target[i]) w = rec.w1;
        }
        nrep = static_cast<int>((w >> (kDepthBits + 1)) & kIdMask);
        odepth = static_cast<int>((w >> 1) & kDepthMask) + 1;
        opar = j_target[i];
      }
      progs.push_back(std::make_unique<RerootWaveProgram>(
          v, active ? tree_nbrs[v] : std::vector<int>{}, origin, opar, odepth, nrep));
    }
    report.absorb(s.run(progs, limit));
    for (int v = 0; v < n; ++v) {
      auto* wp = static_cast<RerootWaveProgram*>(progs[v].get());
      if (wp->touched()) {
        rep[v] = wp->rep();
        parent[v] = wp->parent();
        depth[v] = wp->depth();
      }
    }
  }

  void refresh_completeness() {
    TreePaProvider pa(s, forest(), limit);
    std::vector<uint64_t> ones(n, 1);
    std::vector<uint64_t> sizes = pa.solve(AggOp::sum, ones, report);
    for (int v = 0; v < n; ++v) {
      complete[v] =
          sizes[v] >= static_cast<uint64_t>(threshold) || static_cast<int>(sizes[v]) == part_size_of[v];
    }
  }

  SubPartDivision division() const {
    SubPartDivision d;
    d.rep = rep;
    d.parent = parent;
    d.depth = depth;
    d.complete = complete;
    return d;
  }
};

}  // namespace

DivisionResult subpart_division_det(Simulator& s, const Partition& p, int threshold,
                                    uint64_t round_limit, bool absorb_leftovers) {
  if (threshold < 1) throw std::invalid_argument("threshold must be positive");
  if (static_cast<int>(p.part_of.size()) != s.graph().n()) {
    throw std::invalid_argument("partition mismatch");
  }
  Simulator::PhaseScope scope(s, "division-det");
  DetDivision st(s, p, threshold, round_limit);
  int n = st.n;

  int iterations = kIterFactor * ceil_log2(std::max(2, n));
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::vector<NeighborSample>> samples = st.exchange();

    // Per-node candidate keys: exits to incomplete sub-parts first, else
    // exits landing at depth <= threshold in complete ones.
    std::vector<uint64_t> values(n, agg_identity(AggOp::min));
    std::vector<char> has_exit(n, 0);
    for (int v = 0; v < n; ++v) {
      if (st.complete[v]) continue;
      for (const auto& ns : samples[v]) {
        if (!ns.same_part || ns.rep == st.rep[v]) continue;
        has_exit[v] = 1;
        uint64_t key;
        if (!ns.complete) {
          key = pack_edge_key(0, v, ns.src);
        } else if (ns.depth <= threshold) {
          key = pack_edge_key(1, v, ns.src);
        } else {
          continue;
        }
        values[v] = std::min(values[v], key);
      }
    }

    DetDivision::DenseView dv = st.dense_view();
    TreePaProvider pa(s, st.forest(), round_limit);
    std::vector<uint64_t> folded = pa.solve(AggOp::min, values, st.report);

    std::vector<int> chosen(dv.q.count, -1);
    std::vector<int> subpart_sz(dv.q.count, 0);
    std::vector<char> subpart_exit(dv.q.count, 0);
    for (int v = 0; v < n; ++v) {
      int i = dv.q.part_of[v];
      ++subpart_sz[i];
      subpart_exit[i] |= has_exit[v];
    }
    int participants = 0;
    for (int i = 0; i < dv.q.count; ++i) {
      int r = dv.reps[i];
      if (st.complete[r]) continue;
      uint64_t key = folded[r];
      if (key == agg_identity(AggOp::min)) {
        if (!subpart_exit[i] && subpart_sz[i] < st.part_size_of[r]) {
          throw Stalled("incomplete sub-part of " + std::to_string(r) + " has no exit edge");
        }
        continue;
      }
      int lo = static_cast<int>((key >> kIdBits) & kIdMask);
      int hi = static_cast<int>(key & kIdMask);
      chosen[i] = st.g.edge_between(lo, hi);
      ++participants;
    }
    if (participants == 0) break;

    auto [sj, sj_report] =
        star_joining_det(s, dv.q, dv.reps, chosen, pa, round_limit);
    st.report.absorb(sj_report);

    std::vector<char> is_joiner(dv.q.count, 0);
    for (int i = 0; i < dv.q.count; ++i) is_joiner[i] = sj.role[i] == StarRole::joiner;
    st.merge(dv, chosen, is_joiner);
    st.refresh_completeness();
  }

  if (absorb_leftovers) {
    // Mop-up: leftover incomplete sub-parts hang themselves onto any complete
    // neighbor (smallest edge, no depth filter, no symmetry breaking needed
    // because every target is complete and so never a joiner).
    for (int pass = 0; pass < n + 1; ++pass) {
      std::vector<std::vector<NeighborSample>> samples = st.exchange();
      std::vector<uint64_t> values(n, agg_identity(AggOp::min));
      for (int v = 0; v < n; ++v) {
        if (st.complete[v]) continue;
        for (const auto& ns : samples[v]) {
          if (!ns.same_part || ns.rep == st.rep[v] || !ns.complete) continue;
          values[v] = std::min(values[v], pack_edge_key(0, v, ns.src));
        }
      }
      DetDivision::DenseView dv = st.dense_view();
      TreePaProvider pa(s, st.forest(), round_limit);
      std::vector<uint64_t> folded = pa.solve(AggOp::min, values, st.report);
      std::vector<int> chosen(dv.q.count, -1);
      std::vector<char> is_joiner(dv.q.count, 0);
      int joiners = 0;
      for (int i = 0; i < dv.q.count; ++i) {
        int r = dv.reps[i];
        if (st.complete[r] || folded[r] == agg_identity(AggOp::min)) continue;
        int lo = static_cast<int>((folded[r] >> kIdBits) & kIdMask);
        int hi = static_cast<int>(folded[r] & kIdMask);
        chosen[i] = st.g.edge_between(lo, hi);
        is_joiner[i] = 1;
        ++joiners;
      }
      if (joiners == 0) break;
      st.merge(dv, chosen, is_joiner);
      st.refresh_completeness();
    }
  }

  DivisionResult res;
  res.division = st.division();
  res.report = st.report;
  return res;
}

std::pair<std::vector<int>, SimReport> k_dominating_set(Simulator& s, int k,
                                                        uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  if (k < 1 || k > g.n()) throw std::invalid_argument("k must be in [1, n]");
  if (!g.connected()) throw std::invalid_argument("graph must be connected");
  Partition whole;
  whole.count = 1;
  whole.part_of.assign(g.n(), 0);
  int threshold = (k + 5) / 6;
  DivisionResult res =
      subpart_division_det(s, whole, threshold, round_limit, /*absorb_leftovers=*/true);
  return {res.division.representatives(), res.report};
}

}  // namespace congest::subparts
