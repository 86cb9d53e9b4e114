#include "congest/pa.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "congest/rng.hpp"

namespace congest::pa {

namespace {

using shortcuts::BlockStructure;
using shortcuts::RouteDirection;
using shortcuts::RouteParticipant;
using subparts::SubPartDivision;
using treecomm::SpanningForest;

int ceil_log2(uint64_t x) {
  int k = 0;
  while ((uint64_t{1} << k) < x) ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Single-wave exchange: everything is sent in round 0, everything arrives in
// round 1. The workhorse for neighbor announcements, boundary hops, and
// complaint delivery.

struct Shot {
  int dst = -1;
  uint64_t a = 0;
  uint64_t b = 0;
  int len = 1;
};

struct ShotIn {
  int src = -1;
  uint64_t a = 0;
  uint64_t b = 0;
};

class OneShotProgram final : public sim::NodeProgram {
 public:
  explicit OneShotProgram(std::vector<Shot> outs) : outs_(std::move(outs)) {}

  void on_round(sim::RoundApi& api) override {
    if (api.round() == 0)
      for (const Shot& sh : outs_) {
        if (sh.len >= 2)
          api.send(sh.dst, sh.a, sh.b);
        else
          api.send(sh.dst, sh.a);
      }
    for (const sim::Envelope& e : api.inbox()) got.push_back({e.src, e.w[0], e.w[1]});
  }

  uint64_t next_action_round(uint64_t) const override { return sim::kNever; }

  std::vector<ShotIn> got;  // sender-sorted: the inbox arrives that way

 private:
  std::vector<Shot> outs_;
};

struct OneShotOutcome {
  std::vector<std::vector<ShotIn>> got;
  sim::SimReport report;
};

OneShotOutcome run_one_shot(sim::Simulator& s, std::vector<std::vector<Shot>> outs,
                            uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<std::unique_ptr<sim::NodeProgram>> progs;
  progs.reserve(n);
  for (int v = 0; v < n; ++v) progs.push_back(std::make_unique<OneShotProgram>(std::move(outs[v])));
  OneShotOutcome out;
  out.report = s.run(progs, round_limit);
  out.got.resize(n);
  for (int v = 0; v < n; ++v) out.got[v] = std::move(static_cast<OneShotProgram&>(*progs[v]).got);
  return out;
}

// ---------------------------------------------------------------------------
// Climb toward a tree root, forwarding only strict improvements of the
// smallest word seen, and remember which child delivered the current winner.
// When every injector carries the same word each node forwards at most once,
// and the crumb chain from the root threads back to the first injector to
// reach it (ties break toward the smaller sender id, the inbox order).

class UpcastProgram final : public sim::NodeProgram {
 public:
  bool has = false;
  uint64_t best = 0;
  int crumb = -1;

  UpcastProgram(int parent, bool inject, uint64_t value)
      : has(inject), best(value), parent_(parent) {}

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& e : api.inbox())
      if (!has || e.w0() < best) {
        has = true;
        best = e.w0();
        crumb = e.src;
      }
    if (has && parent_ >= 0 && (!sent_ || best < last_)) {
      api.send(parent_, best);
      last_ = best;
      sent_ = true;
    }
  }

  uint64_t next_action_round(uint64_t) const override { return sim::kNever; }

 private:
  int parent_;
  uint64_t last_ = 0;
  bool sent_ = false;
};

// ---------------------------------------------------------------------------
// Walk a crumb chain downwards carrying one word; the chain's terminal keeps
// it. A node whose crumb is -1 is its own terminal.

class DownrouteProgram final : public sim::NodeProgram {
 public:
  bool landed = false;
  uint64_t carry = 0;

  DownrouteProgram(int crumb, bool start, uint64_t carry_word)
      : carry(carry_word), crumb_(crumb), start_(start) {}

  void on_round(sim::RoundApi& api) override {
    if (api.round() == 0 && start_) {
      if (crumb_ >= 0)
        api.send(crumb_, carry);
      else
        landed = true;
    }
    for (const sim::Envelope& e : api.inbox()) {
      if (crumb_ >= 0) {
        api.send(crumb_, e.w0());
      } else {
        carry = e.w0();
        landed = true;
      }
    }
  }

  uint64_t next_action_round(uint64_t) const override { return sim::kNever; }

 private:
  int crumb_ = -1;
  bool start_ = false;
};

// ---------------------------------------------------------------------------
// Flood a tree from one origin; every node adopts the sender of its first
// message as parent and depth = sender's depth + 1. Used when a merged part
// hangs a whole tree under a new attachment point.

class RerootProgram final : public sim::NodeProgram {
 public:
  int parent = -1;
  uint64_t depth = 0;

  RerootProgram(std::vector<int> tree_nbrs, bool origin, uint64_t origin_depth)
      : depth(origin_depth), nbrs_(std::move(tree_nbrs)), origin_(origin) {}

  void on_round(sim::RoundApi& api) override {
    if (api.round() == 0 && origin_) {
      done_ = true;
      for (int nb : nbrs_) api.send(nb, depth);
    }
    for (const sim::Envelope& e : api.inbox()) {
      if (done_) continue;
      done_ = true;
      parent = e.src;
      depth = e.w0() + 1;
      for (int nb : nbrs_)
        if (nb != e.src) api.send(nb, depth);
    }
  }

  uint64_t next_action_round(uint64_t) const override { return sim::kNever; }

 private:
  std::vector<int> nbrs_;
  bool origin_ = false;
  bool done_ = false;
};

// ---------------------------------------------------------------------------
// Shared per-call state for the spreading solver and the budget check.

struct Ctx {
  sim::Simulator& s;
  const NetworkGraph& g;
  const Partition& parts;
  std::vector<int> leaders;
  const SubPartDivision& div;
  const shortcuts::TreeRestrictedShortcut& sc;
  BlockStructure bs;

  Ctx(sim::Simulator& sim, const Partition& p, const SubPartDivision& d,
      const shortcuts::TreeRestrictedShortcut& sh)
      : s(sim), g(sim.graph()), parts(p), div(d), sc(sh), bs(shortcuts::blocks(sh)) {}

  int n = 0;
  int depth_cap = 0;  // tree height D_T
  int cong = 0;       // measured shortcut congestion c
  int b = 0;          // iteration budget
  int beta = 1;
  uint64_t directed_m = 0;
  uint64_t round_limit = 0;

  std::vector<char> big;            // per part
  std::vector<char> is_big_leader;  // per node
  std::map<int, std::vector<int>> members;       // rep -> sub-part nodes, ascending
  std::vector<std::vector<int>> cross_targets;   // same part, different sub-part
  std::vector<std::vector<int>> part_neighbors;  // same part, any sub-part
  std::vector<uint64_t> delay;                   // per part, rand mode only
  int reps_big = 0;

  sim::SimReport cost;

  const std::vector<uint64_t>* delays() const { return delay.empty() ? nullptr : &delay; }
};

void check_leaders(const Partition& parts, const std::vector<int>& leaders, int n) {
  if (static_cast<int>(leaders.size()) != parts.count)
    throw std::invalid_argument("need exactly one leader per part");
  for (int i = 0; i < parts.count; ++i) {
    int l = leaders[i];
    if (l < 0 || l >= n || parts.part_of[l] != i)
      throw std::invalid_argument("leader of part " + std::to_string(i) +
                                  " is not a member of it");
  }
}

Ctx build_ctx(sim::Simulator& s, const Partition& parts, const std::vector<int>& leaders,
              const SubPartDivision& division, const shortcuts::TreeRestrictedShortcut& sc,
              SolveMode mode, uint64_t seed, int b, uint64_t round_limit, bool all_big) {
  const NetworkGraph& g = s.graph();
  if (parts.part_of != sc.parts().part_of || parts.count != sc.parts().count)
    throw std::invalid_argument("shortcut was built for a different partition");
  subparts::validate_division(g, parts, division, -1);
  check_leaders(parts, leaders, g.n());
  if (b < -1) throw std::invalid_argument("iteration budget must be -1 (auto) or >= 0");

  Ctx c(s, parts, division, sc);
  c.leaders = leaders;
  c.n = g.n();
  c.depth_cap = sc.tree().height;
  c.cong = shortcuts::congestion(sc).c;
  c.b = b >= 0 ? b : std::max(1, c.bs.max_block_count);
  c.directed_m = 2ull * static_cast<uint64_t>(g.m());
  c.round_limit = round_limit;

  std::vector<int> sizes = parts.sizes();
  std::vector<int> subcounts = division.counts_per_part(parts);
  c.big.assign(parts.count, 0);
  for (int i = 0; i < parts.count; ++i)
    c.big[i] = all_big || !(sizes[i] < c.depth_cap && subcounts[i] == 1);

  c.is_big_leader.assign(c.n, 0);
  for (int i = 0; i < parts.count; ++i)
    if (c.big[i]) c.is_big_leader[leaders[i]] = 1;

  for (int v = 0; v < c.n; ++v) c.members[division.rep[v]].push_back(v);
  for (int v = 0; v < c.n; ++v)
    if (division.rep[v] == v && c.big[parts.part_of[v]]) ++c.reps_big;

  if (mode == SolveMode::rand) {
    c.beta = std::max(1, static_cast<int>(std::ceil(
                             kBetaFactor * std::log(static_cast<double>(std::max(2, c.n))))));
    c.delay.resize(parts.count, 0);
    for (int i = 0; i < parts.count; ++i)
      if (c.cong > 0) c.delay[i] = Rng(split_seed(seed, static_cast<uint64_t>(i))).below(
                          static_cast<uint64_t>(c.cong));
  }

  // Neighbors exchange (part, representative) once; from the answers every
  // node learns which incident edges stay inside its part and which of those
  // leave its sub-part. Skipped when no part runs the spreading loop.
  c.cross_targets.assign(c.n, {});
  c.part_neighbors.assign(c.n, {});
  bool any_big = false;
  for (int i = 0; i < parts.count; ++i) any_big = any_big || c.big[i];
  if (any_big && g.m() > 0) {
    sim::Simulator::PhaseScope ph(s, "pa.announce");
    std::vector<std::vector<Shot>> outs(c.n);
    for (int v = 0; v < c.n; ++v)
      for (const auto& half : g.adj(v))
        outs[v].push_back({half.first, static_cast<uint64_t>(parts.part_of[v]),
                           static_cast<uint64_t>(division.rep[v]), 2});
    OneShotOutcome ann = run_one_shot(s, std::move(outs), round_limit);
    c.cost.absorb(ann.report);
    for (int v = 0; v < c.n; ++v)
      for (const ShotIn& in : ann.got[v])
        if (in.a == static_cast<uint64_t>(parts.part_of[v])) {
          c.part_neighbors[v].push_back(in.src);
          if (in.b != static_cast<uint64_t>(division.rep[v])) c.cross_targets[v].push_back(in.src);
        }
  }
  return c;
}

// Forest restricted to the sub-part trees rooted at `roots`; everyone else is
// an isolated singleton and folds only its own value.
SpanningForest slice_forest(const Ctx& c, const std::vector<int>& roots) {
  SpanningForest f;
  f.parent.assign(c.n, -1);
  f.parent_edge.assign(c.n, -1);
  f.depth.assign(c.n, 0);
  f.children.assign(c.n, {});
  f.roots = roots;
  for (int r : roots)
    for (int v : c.members.at(r))
      if (v != r) {
        int p = c.div.parent[v];
        f.parent[v] = p;
        f.parent_edge[v] = c.g.edge_between(v, p);
        f.depth[v] = c.div.depth[v];
        f.children[p].push_back(v);
      }
  return f;
}

// ---------------------------------------------------------------------------
// The forward schedule. Per iteration: active representatives converge their
// word to the block root (A), the root hands it to every representative of
// the block (B), sub-parts reached for the first time broadcast it internally
// (C), their members poke same-part neighbors across sub-part boundaries (D),
// and nodes hearing the word for the first time lift it to their own
// representative (E), forming the next frontier. If the budget ends with a
// frontier still pending, one more A/B pair routes those blocks so that the
// backward schedule (and the block count) sees every activated structure.

struct Fwd {
  int iters = 0;    // full A..E iterations executed
  int top = 0;      // iters, +1 when the closing A/B pair ran
  std::vector<std::vector<int>> frontier;  // [t]: reps first reached across a boundary
  std::vector<std::vector<int>> reached;   // [t]: reps first reached through their block
  std::vector<std::map<int, int>> canon;   // [t]: routed block -> its canonical frontier rep
  std::vector<char> covered;               // node holds the part word
  std::vector<int> crumb;                  // toward the word's first source
  std::vector<int> cross_from;             // node -> boundary sender it first heard, else -1
  std::vector<int> act;                    // rep -> iteration it became active, else -1
  uint64_t block_msgs = 0;
  uint64_t cross_msgs = 0;
};

void forward_block_pair(Ctx& c, Fwd& f, const std::vector<uint64_t>& payload, bool canonize,
                        int t) {
  // A: the frontier's words climb to their block roots.
  std::map<int, uint64_t> root_words;
  {
    std::vector<RouteParticipant> grp;
    for (int r : f.frontier[t]) {
      int part = c.parts.part_of[r];
      uint64_t w = canonize ? first_by_id_pack(static_cast<uint64_t>(r), payload[part])
                            : payload[part];
      grp.push_back({r, part, w});
    }
    if (!grp.empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.block");
      auto res = shortcuts::block_route(c.s, c.sc.tree(), c.bs, grp,
                                        canonize ? AggOp::first_by_id : AggOp::min,
                                        RouteDirection::convergecast, {}, c.cong, c.beta,
                                        c.round_limit, c.delays());
      c.cost.absorb(res.report);
      f.block_msgs += res.report.messages;
      root_words = std::move(res.root_value);
    }
  }
  if (canonize)
    for (const auto& [blk, w] : root_words)
      f.canon[t][blk] = static_cast<int>(first_by_id_owner(w));

  // B: every representative of a routed block hears the block's word.
  std::vector<RouteParticipant> grp;
  for (const auto& kv : root_words) {
    const BlockStructure::Block& bl = c.bs.blocks[kv.first];
    for (int member : bl.members)
      if (c.parts.part_of[member] == bl.part && c.div.rep[member] == member)
        grp.push_back({member, bl.part, 0});
  }
  if (!grp.empty()) {
    sim::Simulator::PhaseScope ph(c.s, "pa.block");
    auto res = shortcuts::block_route(c.s, c.sc.tree(), c.bs, grp,
                                      canonize ? AggOp::first_by_id : AggOp::min,
                                      RouteDirection::broadcast, root_words, c.cong, c.beta,
                                      c.round_limit, c.delays());
    c.cost.absorb(res.report);
    f.block_msgs += res.report.messages;
    for (const auto& [key, w] : res.delivered) {
      int node = key.first;
      f.covered[node] = 1;
      if (f.act[node] == -1) {
        f.act[node] = t;
        f.reached[t].push_back(node);
      }
      (void)w;
    }
  }
  std::sort(f.reached[t].begin(), f.reached[t].end());
}

Fwd forward_pass(Ctx& c, const std::vector<uint64_t>& payload, bool canonize) {
  Fwd f;
  f.covered.assign(c.n, 0);
  f.crumb.assign(c.n, -1);
  f.cross_from.assign(c.n, -1);
  f.act.assign(c.n, -1);
  f.frontier.assign(static_cast<size_t>(c.b) + 2, {});
  f.reached.assign(static_cast<size_t>(c.b) + 2, {});
  f.canon.assign(static_cast<size_t>(c.b) + 2, {});

  // Leaders lift the part word to their own representative.
  {
    sim::Simulator::PhaseScope ph(c.s, "pa.route");
    std::vector<std::unique_ptr<sim::NodeProgram>> progs;
    progs.reserve(c.n);
    for (int v = 0; v < c.n; ++v) {
      bool lead = c.is_big_leader[v];
      progs.push_back(std::make_unique<UpcastProgram>(
          c.div.parent[v], lead, lead ? payload[c.parts.part_of[v]] : 0));
    }
    c.cost.absorb(c.s.run(progs, c.round_limit));
    for (int v = 0; v < c.n; ++v) {
      auto& up = static_cast<UpcastProgram&>(*progs[v]);
      if (up.has) f.covered[v] = 1;
      if (up.crumb >= 0) f.crumb[v] = up.crumb;
    }
  }
  for (int i = 0; i < c.parts.count; ++i)
    if (c.big[i]) {
      int r = c.div.rep[c.leaders[i]];
      f.act[r] = 1;
      f.frontier[1].push_back(r);
    }
  std::sort(f.frontier[1].begin(), f.frontier[1].end());

  int t = 1;
  for (; t <= c.b; ++t) {
    if (f.frontier[t].empty()) break;
    forward_block_pair(c, f, payload, canonize, t);

    // C: sub-parts reached this iteration broadcast the word to every member.
    std::vector<int> active = f.frontier[t];
    active.insert(active.end(), f.reached[t].begin(), f.reached[t].end());
    std::sort(active.begin(), active.end());
    {
      sim::Simulator::PhaseScope ph(c.s, "pa.subpart");
      SpanningForest sf = slice_forest(c, active);
      std::vector<uint64_t> vals(c.n, agg_identity(AggOp::min));
      for (int r : active) vals[r] = payload[c.parts.part_of[r]];
      auto fa = treecomm::aggregate_on_forest(c.s, sf, AggOp::min, vals, c.round_limit);
      c.cost.absorb(fa.report);
      for (int r : active)
        for (int v : c.members.at(r)) f.covered[v] = 1;
    }

    // D: the fresh region pokes its same-part neighbors across sub-part lines.
    std::vector<int> fresh;
    {
      sim::Simulator::PhaseScope ph(c.s, "pa.cross");
      std::vector<std::vector<Shot>> outs(c.n);
      bool any = false;
      for (int r : active)
        for (int v : c.members.at(r))
          for (int u : c.cross_targets[v]) {
            outs[v].push_back({u, payload[c.parts.part_of[v]], 0, 1});
            any = true;
          }
      if (any) {
        OneShotOutcome res = run_one_shot(c.s, std::move(outs), c.round_limit);
        c.cost.absorb(res.report);
        f.cross_msgs += res.report.messages;
        for (int u = 0; u < c.n; ++u)
          if (!res.got[u].empty() && !f.covered[u]) {
            fresh.push_back(u);
            f.cross_from[u] = res.got[u].front().src;
          }
      }
    }

    // E: first-time hearers lift the word inside their own sub-part.
    if (!fresh.empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.route");
      std::vector<char> is_fresh(c.n, 0);
      for (int u : fresh) is_fresh[u] = 1;
      std::vector<std::unique_ptr<sim::NodeProgram>> progs;
      progs.reserve(c.n);
      for (int v = 0; v < c.n; ++v)
        progs.push_back(std::make_unique<UpcastProgram>(
            c.div.parent[v], is_fresh[v] != 0,
            is_fresh[v] ? payload[c.parts.part_of[v]] : 0));
      c.cost.absorb(c.s.run(progs, c.round_limit));
      for (int v = 0; v < c.n; ++v) {
        auto& up = static_cast<UpcastProgram&>(*progs[v]);
        if (!up.has) continue;
        f.covered[v] = 1;
        if (up.crumb >= 0) f.crumb[v] = up.crumb;
        if (c.div.rep[v] == v && f.act[v] == -1) {
          f.act[v] = t + 1;
          f.frontier[t + 1].push_back(v);
        }
      }
      std::sort(f.frontier[t + 1].begin(), f.frontier[t + 1].end());
    }
  }
  f.iters = t - 1;
  f.top = f.iters;

  // Closing pair: blocks whose only active representatives arrived in the very
  // last boundary hop still get routed once, so the backward schedule can fold
  // and count them.
  if (!f.frontier[f.iters + 1].empty()) {
    f.top = f.iters + 1;
    forward_block_pair(c, f, payload, canonize, f.top);
  }

  if (f.cross_msgs > c.directed_m)
    throw std::logic_error("boundary hops exceeded one message per directed edge");
  uint64_t cap = 2ull * shortcuts::kRouteMessageFactor *
                 static_cast<uint64_t>(std::max(1, c.reps_big)) *
                 static_cast<uint64_t>(std::max(1, c.depth_cap));
  if (f.block_msgs > cap)
    throw std::logic_error("block routing exceeded its per-pass message budget");
  return f;
}

// ---------------------------------------------------------------------------
// The backward schedule: the same activations in reverse order, folding
// per-node words toward the leader. Every activated sub-part folds its tree
// exactly once; each routed block folds its representatives' totals to the
// root and hands them to the single canonical frontier rep; each boundary
// entry returns its sub-part's total to the sender that first crossed; and
// the entry words of the first frontier walk the leader's own sub-part down
// to the leader.

std::vector<uint64_t> mirror_pass(Ctx& c, const Fwd& f, AggOp op, std::vector<uint64_t> running) {
  std::vector<uint64_t> fold(static_cast<size_t>(c.parts.count), agg_identity(op));

  for (int t = f.top; t >= 0; --t) {
    // Totals of representatives first reached after iteration t walk the crumb
    // chain back to their entry node.
    std::vector<std::pair<int, uint64_t>> landings;  // (terminal, word)
    if (t < static_cast<int>(f.frontier.size()) - 1 && !f.frontier[t + 1].empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.route");
      std::vector<char> start(c.n, 0);
      for (int r : f.frontier[t + 1]) start[r] = 1;
      std::vector<std::unique_ptr<sim::NodeProgram>> progs;
      progs.reserve(c.n);
      for (int v = 0; v < c.n; ++v)
        progs.push_back(std::make_unique<DownrouteProgram>(f.crumb[v], start[v] != 0,
                                                           start[v] ? running[v] : 0));
      c.cost.absorb(c.s.run(progs, c.round_limit));
      for (int v = 0; v < c.n; ++v) {
        auto& d = static_cast<DownrouteProgram&>(*progs[v]);
        if (d.landed) landings.push_back({v, d.carry});
      }
    }

    if (t == 0) {
      for (const auto& [v, w] : landings) {
        if (c.leaders[c.parts.part_of[v]] != v)
          throw std::logic_error("first-frontier total landed away from the leader");
        fold[c.parts.part_of[v]] = w;
      }
      break;
    }

    // The entry node returns the total across the boundary edge it was first
    // reached over; the receiving side merges it.
    if (!landings.empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.cross");
      std::vector<std::vector<Shot>> outs(c.n);
      for (const auto& [v, w] : landings) {
        if (f.cross_from[v] < 0)
          throw std::logic_error("entry node has no recorded boundary sender");
        outs[v].push_back({f.cross_from[v], w, 0, 1});
      }
      OneShotOutcome res = run_one_shot(c.s, std::move(outs), c.round_limit);
      c.cost.absorb(res.report);
      for (int u = 0; u < c.n; ++u)
        for (const ShotIn& in : res.got[u]) running[u] = agg_combine(op, running[u], in.a);
    }

    // Sub-parts activated at t fold their members into the representative.
    std::vector<int> active = f.frontier[t];
    active.insert(active.end(), f.reached[t].begin(), f.reached[t].end());
    std::sort(active.begin(), active.end());
    if (!active.empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.subpart");
      SpanningForest sf = slice_forest(c, active);
      auto fa = treecomm::aggregate_on_forest(c.s, sf, op, running, c.round_limit);
      c.cost.absorb(fa.report);
      for (int r : active) running[r] = fa.node_value[r];
    }

    // Blocks: totals of block-reached reps converge to the root, and the root
    // hands the merged word to the block's canonical frontier rep.
    std::map<int, uint64_t> root_totals;
    if (!f.reached[t].empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.block");
      std::vector<RouteParticipant> grp;
      for (int r : f.reached[t]) grp.push_back({r, c.parts.part_of[r], running[r]});
      auto res = shortcuts::block_route(c.s, c.sc.tree(), c.bs, grp, op,
                                        RouteDirection::convergecast, {}, c.cong, c.beta,
                                        c.round_limit, c.delays());
      c.cost.absorb(res.report);
      root_totals = std::move(res.root_value);
    }
    if (!root_totals.empty()) {
      sim::Simulator::PhaseScope ph(c.s, "pa.block");
      std::vector<RouteParticipant> grp;
      for (const auto& [blk, rep] : f.canon[t])
        if (root_totals.count(blk)) grp.push_back({rep, c.bs.blocks[blk].part, 0});
      if (!grp.empty()) {
        auto res = shortcuts::block_route(c.s, c.sc.tree(), c.bs, grp, op,
                                          RouteDirection::broadcast, root_totals, c.cong, c.beta,
                                          c.round_limit, c.delays());
        c.cost.absorb(res.report);
        for (const auto& [key, w] : res.delivered)
          running[key.first] = agg_combine(op, running[key.first], w);
      }
    }
  }
  return fold;
}

// One fold over the single-tree parts that skip the spreading loop.
void small_fold(Ctx& c, AggOp op, const std::vector<uint64_t>& values,
                std::vector<uint64_t>& out) {
  std::vector<int> roots;
  for (const auto& [r, mem] : c.members)
    if (!c.big[c.parts.part_of[r]]) roots.push_back(r);
  if (roots.empty()) return;
  sim::Simulator::PhaseScope ph(c.s, "pa.small");
  SpanningForest sf = slice_forest(c, roots);
  std::vector<uint64_t> vals(c.n, agg_identity(op));
  for (int r : roots)
    for (int v : c.members.at(r)) vals[v] = values[v];
  auto fa = treecomm::aggregate_on_forest(c.s, sf, op, vals, c.round_limit);
  c.cost.absorb(fa.report);
  for (int r : roots)
    for (int v : c.members.at(r)) out[v] = fa.node_value[v];
}

void assert_budgets(const Ctx& c, SolveMode mode) {
  const int lg = ceil_log2(std::max<uint64_t>(4, static_cast<uint64_t>(c.n)));
  uint64_t msg_cap = static_cast<uint64_t>(kPaMessageFactor) *
                     std::max<uint64_t>(1, static_cast<uint64_t>(c.g.m())) *
                     static_cast<uint64_t>(lg + 1) * static_cast<uint64_t>(lg + 1);
  if (c.cost.messages > msg_cap)
    throw std::logic_error("solver exceeded its message budget");
  if (mode == SolveMode::det) {
    int hdiv = 0;
    for (int v = 0; v < c.n; ++v) hdiv = std::max(hdiv, c.div.depth[v]);
    uint64_t round_cap = static_cast<uint64_t>(kPaRoundFactor) *
                         static_cast<uint64_t>(std::max(1, c.b)) *
                         static_cast<uint64_t>(c.depth_cap + c.cong + hdiv + 1) *
                         static_cast<uint64_t>(lg + 1);
    if (c.cost.rounds > round_cap)
      throw std::logic_error("solver exceeded its round budget");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

PaResult pa_solve(sim::Simulator& s, const PaInstance& inst, const SubPartDivision& division,
                  const shortcuts::TreeRestrictedShortcut& sc, SolveMode mode, uint64_t seed,
                  int b, uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  validate_pa_instance(g, inst);
  if (!inst.has_leaders())
    throw std::invalid_argument("pa_solve needs a leader per part; elect them first");

  Ctx c = build_ctx(s, inst.partition, inst.leaders, division, sc, mode, seed, b, round_limit,
                    /*all_big=*/false);

  std::vector<uint64_t> result(static_cast<size_t>(c.n), 0);
  small_fold(c, inst.op, inst.values, result);

  bool any_big = false;
  for (int i = 0; i < c.parts.count; ++i) any_big = any_big || c.big[i];
  if (any_big) {
    // Pass 1: spread each leader's id and record the activation schedule.
    std::vector<uint64_t> ids(static_cast<size_t>(c.parts.count), 0);
    for (int i = 0; i < c.parts.count; ++i) ids[i] = static_cast<uint64_t>(c.leaders[i]);
    Fwd led = forward_pass(c, ids, /*canonize=*/true);
    for (int v = 0; v < c.n; ++v)
      if (c.big[c.parts.part_of[v]] && !led.covered[v])
        throw ShortcutTooWeak("node " + std::to_string(v) + " of part " +
                              std::to_string(c.parts.part_of[v]) +
                              " stayed uninformed after " + std::to_string(c.b) +
                              " iterations");

    // Pass 2: fold everyone's value back to the leader along the mirror.
    std::vector<uint64_t> start(static_cast<size_t>(c.n), agg_identity(inst.op));
    for (int v = 0; v < c.n; ++v)
      if (c.big[c.parts.part_of[v]]) start[v] = inst.values[v];
    std::vector<uint64_t> folded = mirror_pass(c, led, inst.op, std::move(start));

    // Pass 3: replay the spreading with the folded aggregate as the word.
    Fwd rep = forward_pass(c, folded, /*canonize=*/false);
    if (rep.covered != led.covered)
      throw std::logic_error("replay diverged from the recorded spreading schedule");
    for (int v = 0; v < c.n; ++v)
      if (c.big[c.parts.part_of[v]]) result[v] = folded[c.parts.part_of[v]];
  }

  assert_budgets(c, mode);
  return {std::move(result), c.cost};
}

BlockBudgetReport verify_block_parameter(sim::Simulator& s, const Partition& partition,
                                         const std::vector<int>& leaders,
                                         const SubPartDivision& division,
                                         const shortcuts::TreeRestrictedShortcut& sc, int b,
                                         uint64_t round_limit) {
  if (b < 1) throw std::invalid_argument("the budget under test must be at least 1");
  Ctx c = build_ctx(s, partition, leaders, division, sc, SolveMode::det, 0, b, round_limit,
                    /*all_big=*/true);

  std::vector<uint64_t> ids(static_cast<size_t>(c.parts.count), 0);
  for (int i = 0; i < c.parts.count; ++i) ids[i] = static_cast<uint64_t>(c.leaders[i]);
  Fwd led = forward_pass(c, ids, /*canonize=*/true);

  // Uninformed nodes complain to every same-part neighbor. A covered node that
  // hears a complaint raises a relay bit; the part is fully covered exactly
  // when no covered node heard one (parts are connected, so an uninformed
  // region always borders an informed node of the same part).
  std::vector<char> relay(static_cast<size_t>(c.n), 0);
  {
    sim::Simulator::PhaseScope ph(s, "pa.complaint");
    std::vector<std::vector<Shot>> outs(c.n);
    bool any = false;
    for (int v = 0; v < c.n; ++v)
      if (!led.covered[v])
        for (int u : c.part_neighbors[v]) {
          outs[v].push_back({u, 1, 0, 1});
          any = true;
        }
    if (any) {
      OneShotOutcome res = run_one_shot(s, std::move(outs), round_limit);
      c.cost.absorb(res.report);
      for (int u = 0; u < c.n; ++u)
        if (led.covered[u] && !res.got[u].empty()) relay[u] = 1;
    }
  }

  // Each block is charged exactly once: a block with its own tree edges is
  // charged at the canonical frontier rep its routing recorded; a lone node
  // that is not a representative is its own block and charges itself. (Lone
  // representatives are charged through their routing like any other block.)
  std::vector<uint64_t> count(static_cast<size_t>(c.n), 0);
  for (int v = 0; v < c.n; ++v) {
    int blk = c.bs.index_of(c.parts.part_of[v], v);
    if (blk >= 0 && c.bs.blocks[blk].members.size() == 1 && division.rep[v] != v) count[v] = 1;
  }
  for (int t = 0; t <= led.top; ++t)
    for (const auto& [blk, rep] : led.canon[t]) {
      (void)blk;
      ++count[rep];
    }

  std::vector<uint64_t> packed(static_cast<size_t>(c.n), 0);
  for (int v = 0; v < c.n; ++v)
    packed[v] = (static_cast<uint64_t>(relay[v]) << 32) | count[v];
  std::vector<uint64_t> sums = mirror_pass(c, led, AggOp::sum, std::move(packed));

  BlockBudgetReport out;
  out.part_clean.assign(partition.count, 0);
  out.part_blocks.assign(partition.count, 0);
  out.part_pass.assign(partition.count, 0);
  for (int i = 0; i < partition.count; ++i) {
    out.part_clean[i] = (sums[i] >> 32) == 0;
    out.part_blocks[i] = sums[i] & 0xffffffffull;
    out.part_pass[i] = out.part_clean[i] && out.part_blocks[i] <= static_cast<uint64_t>(b);
  }

  // Publish the verdicts along the identical schedule; a node that never got
  // the word reports failure for itself.
  std::vector<uint64_t> verdicts(static_cast<size_t>(partition.count), 0);
  for (int i = 0; i < partition.count; ++i) verdicts[i] = out.part_pass[i] ? 1 : 0;
  Fwd rep = forward_pass(c, verdicts, /*canonize=*/false);
  if (rep.covered != led.covered)
    throw std::logic_error("verdict replay diverged from the recorded spreading schedule");
  out.node_pass.assign(c.n, 0);
  for (int v = 0; v < c.n; ++v)
    out.node_pass[v] = led.covered[v] && out.part_pass[c.parts.part_of[v]];

  out.report = c.cost;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SpanningForest coarse_forest(const std::vector<int>& parent, const std::vector<int>& parent_edge,
                             const std::vector<int>& depth) {
  const int n = static_cast<int>(parent.size());
  SpanningForest f;
  f.parent = parent;
  f.parent_edge = parent_edge;
  f.depth = depth;
  f.children.assign(n, {});
  for (int v = 0; v < n; ++v)
    if (parent[v] >= 0) f.children[parent[v]].push_back(v);
  for (int v = 0; v < n; ++v)
    if (parent[v] < 0) f.roots.push_back(v);
  return f;
}

constexpr uint64_t kEdgePackBits = 24;

}  // namespace

PaResult pa_solve_leaderless(sim::Simulator& s, const PaInstance& inst,
                             const SubPartDivision& division,
                             const shortcuts::TreeRestrictedShortcut& sc, SolveMode mode,
                             uint64_t seed, int b, uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  const int n = g.n();
  validate_pa_instance(g, inst);
  if (inst.has_leaders())
    throw std::invalid_argument("instance already has leaders; call pa_solve");
  if (n >= (1 << kEdgePackBits))
    throw std::invalid_argument("node ids must fit the edge-packing width");

  // Every node starts as its own one-node cluster; clusters merge along edges
  // inside their input part until each part is a single spanning tree whose
  // root is the elected leader.
  std::vector<int> leader(n), parent(n, -1), parent_edge(n, -1), depth(n, 0);
  std::iota(leader.begin(), leader.end(), 0);
  const int cap =
      subparts::kIterFactor * ceil_log2(std::max<uint64_t>(2, static_cast<uint64_t>(n)));
  sim::SimReport total;

  for (int it = 0;; ++it) {
    if (it >= cap)
      throw CoarseningIncomplete("leader election unfinished after " + std::to_string(cap) +
                                 " merge attempts");
    sim::Simulator::PhaseScope ph(s, "pa.coarsen");

    // Neighbors exchange (input part, current cluster leader).
    std::vector<std::vector<Shot>> outs(n);
    for (int v = 0; v < n; ++v)
      for (const auto& half : g.adj(v))
        outs[v].push_back({half.first, static_cast<uint64_t>(inst.partition.part_of[v]),
                           static_cast<uint64_t>(leader[v]), 2});
    OneShotOutcome ann = run_one_shot(s, std::move(outs), round_limit);
    total.absorb(ann.report);

    // Candidate exit edge per node: same input part, different cluster.
    std::vector<uint64_t> cand(n, agg_identity(AggOp::min));
    for (int v = 0; v < n; ++v)
      for (const ShotIn& in : ann.got[v])
        if (in.a == static_cast<uint64_t>(inst.partition.part_of[v]) &&
            in.b != static_cast<uint64_t>(leader[v]))
          cand[v] = std::min(cand[v], (static_cast<uint64_t>(v) << kEdgePackBits) |
                                          static_cast<uint64_t>(in.src));

    SpanningForest forest = coarse_forest(parent, parent_edge, depth);
    subparts::TreePaProvider prov(s, forest, round_limit);
    sim::SimReport cost;
    std::vector<uint64_t> folded = prov.solve(AggOp::min, cand, cost);
    total.absorb(cost);

    // Dense cluster ids, ascending by leader id.
    std::vector<int> dense_leaders;
    for (int v = 0; v < n; ++v)
      if (leader[v] == v) dense_leaders.push_back(v);
    std::map<int, int> dense_of;
    for (int i = 0; i < static_cast<int>(dense_leaders.size()); ++i)
      dense_of[dense_leaders[i]] = i;
    Partition cparts;
    cparts.count = static_cast<int>(dense_leaders.size());
    cparts.part_of.resize(n);
    for (int v = 0; v < n; ++v) cparts.part_of[v] = dense_of.at(leader[v]);

    std::vector<int> chosen(cparts.count, -1);
    bool any_chosen = false;
    for (int p = 0; p < cparts.count; ++p) {
      uint64_t w = folded[dense_leaders[p]];
      if (w == agg_identity(AggOp::min)) continue;
      int a = static_cast<int>(w >> kEdgePackBits);
      int bnode = static_cast<int>(w & ((uint64_t{1} << kEdgePackBits) - 1));
      chosen[p] = g.edge_between(a, bnode);
      if (chosen[p] < 0) throw std::logic_error("chosen exit edge is not a graph edge");
      any_chosen = true;
    }
    if (!any_chosen) break;

    auto [sj, sj_cost] = subparts::star_joining_det(s, cparts, dense_leaders, chosen, prov,
                                                    round_limit);
    total.absorb(sj_cost);

    struct Join {
      int owner = -1;
      int target = -1;
      int edge = -1;
      uint64_t new_depth = 0;
    };
    std::vector<Join> joins;
    for (int p = 0; p < cparts.count; ++p)
      if (sj.role[p] == subparts::StarRole::joiner) {
        int e = sj.joiner_edge[p];
        const Edge& ed = g.edge(e);
        int owner = cparts.part_of[ed.u] == p ? ed.u : ed.v;
        joins.push_back({owner, ed.other(owner), e, 0});
      }
    if (joins.empty()) continue;

    // The owner fetches the target's depth across the attachment edge.
    {
      std::vector<std::vector<Shot>> hello(n);
      for (const Join& j : joins) hello[j.owner].push_back({j.target, 0, 0, 1});
      OneShotOutcome h = run_one_shot(s, std::move(hello), round_limit);
      total.absorb(h.report);
      std::vector<std::vector<Shot>> reply(n);
      for (int v = 0; v < n; ++v)
        for (const ShotIn& in : h.got[v])
          reply[v].push_back({in.src, static_cast<uint64_t>(depth[v]), 0, 1});
      OneShotOutcome r2 = run_one_shot(s, std::move(reply), round_limit);
      total.absorb(r2.report);
      for (Join& j : joins) {
        if (r2.got[j.owner].empty()) throw std::logic_error("attachment target never answered");
        j.new_depth = r2.got[j.owner].front().a + 1;
      }
    }

    // Joining clusters re-root their tree at the owner and hang it under the
    // target; everyone in a merged tree then adopts the receiving leader.
    {
      std::vector<char> joining(n, 0);
      for (int v = 0; v < n; ++v)
        joining[v] = sj.role[cparts.part_of[v]] == subparts::StarRole::joiner;
      std::vector<std::unique_ptr<sim::NodeProgram>> progs;
      progs.reserve(n);
      std::vector<char> origin(n, 0);
      std::vector<uint64_t> odepth(n, 0);
      for (const Join& j : joins) {
        origin[j.owner] = 1;
        odepth[j.owner] = j.new_depth;
      }
      for (int v = 0; v < n; ++v) {
        std::vector<int> tn;
        if (joining[v]) {
          if (parent[v] >= 0) tn.push_back(parent[v]);
          tn.insert(tn.end(), forest.children[v].begin(), forest.children[v].end());
        }
        progs.push_back(std::make_unique<RerootProgram>(std::move(tn), origin[v] != 0,
                                                        odepth[v]));
      }
      total.absorb(s.run(progs, round_limit));
      for (const Join& j : joins) {
        parent[j.owner] = j.target;
        parent_edge[j.owner] = j.edge;
        depth[j.owner] = static_cast<int>(j.new_depth);
      }
      for (int v = 0; v < n; ++v) {
        if (!joining[v] || origin[v]) continue;
        auto& rp = static_cast<RerootProgram&>(*progs[v]);
        if (rp.parent < 0) throw std::logic_error("re-rooting wave missed a cluster member");
        parent[v] = rp.parent;
        parent_edge[v] = g.edge_between(v, rp.parent);
        depth[v] = static_cast<int>(rp.depth);
      }

      SpanningForest merged = coarse_forest(parent, parent_edge, depth);
      subparts::TreePaProvider prov2(s, merged, round_limit);
      std::vector<uint64_t> vals(n, agg_identity(AggOp::min));
      for (int v = 0; v < n; ++v)
        if (!joining[v]) vals[v] = static_cast<uint64_t>(leader[v]);
      sim::SimReport cost2;
      std::vector<uint64_t> adopted = prov2.solve(AggOp::min, vals, cost2);
      total.absorb(cost2);
      for (int v = 0; v < n; ++v) leader[v] = static_cast<int>(adopted[v]);
    }
  }

  // Each input part must now be one cluster; its root is the elected leader.
  std::vector<int> elected(inst.partition.count, -1);
  for (int v = 0; v < n; ++v) {
    int p = inst.partition.part_of[v];
    if (inst.partition.part_of[leader[v]] != p)
      throw CoarseningIncomplete("cluster leaked across part boundaries");
    if (elected[p] == -1)
      elected[p] = leader[v];
    else if (elected[p] != leader[v])
      throw CoarseningIncomplete("part settled on two different leaders");
  }

  PaInstance with_leaders = inst;
  with_leaders.leaders = elected;
  PaResult res = pa_solve(s, with_leaders, division, sc, mode, seed, b, round_limit);
  total.absorb(res.report);
  res.report = std::move(total);
  return res;
}

// ---------------------------------------------------------------------------
// Baseline: every part word climbs the one global tree to the root and the
// per-part folds retrace the recorded paths back down. Each tree edge moves
// at most one word per round, so parts queue behind each other; that queueing
// is the whole point of comparing against the shortcut-driven solver.

namespace {

class NaiveUpProgram final : public sim::NodeProgram {
 public:
  std::map<uint64_t, uint64_t> pending;          // at the root: final folds
  std::set<std::pair<int, uint64_t>> child_parts;  // (child, part) seen

  NaiveUpProgram(int parent, AggOp op, uint64_t part, uint64_t value) : parent_(parent), op_(op) {
    pending[part] = value;
  }

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& e : api.inbox()) {
      auto [it, fresh] = pending.try_emplace(e.w[0], e.w[1]);
      if (!fresh) it->second = agg_combine(op_, it->second, e.w[1]);
      child_parts.insert({e.src, e.w[0]});
    }
    if (parent_ >= 0 && !pending.empty()) {
      auto it = pending.begin();
      api.send(parent_, it->first, it->second);
      pending.erase(it);
    }
  }

  uint64_t next_action_round(uint64_t now) const override {
    return (parent_ >= 0 && !pending.empty()) ? now : sim::kNever;
  }

 private:
  int parent_;
  AggOp op_;
};

class NaiveDownProgram final : public sim::NodeProgram {
 public:
  bool got = false;
  uint64_t result = 0;

  NaiveDownProgram(uint64_t own_part, std::map<uint64_t, std::vector<int>> fan,
                   std::map<int, std::deque<std::pair<uint64_t, uint64_t>>> preload)
      : own_part_(own_part), fan_(std::move(fan)), queue_(std::move(preload)) {}

  void on_round(sim::RoundApi& api) override {
    for (const sim::Envelope& e : api.inbox()) {
      if (e.w[0] == own_part_) {
        result = e.w[1];
        got = true;
      }
      auto it = fan_.find(e.w[0]);
      if (it != fan_.end())
        for (int child : it->second) queue_[child].push_back({e.w[0], e.w[1]});
    }
    for (auto& [child, q] : queue_)
      if (!q.empty()) {
        api.send(child, q.front().first, q.front().second);
        q.pop_front();
      }
  }

  uint64_t next_action_round(uint64_t now) const override {
    for (const auto& kv : queue_)
      if (!kv.second.empty()) return now;
    return sim::kNever;
  }

 private:
  uint64_t own_part_;
  std::map<uint64_t, std::vector<int>> fan_;
  std::map<int, std::deque<std::pair<uint64_t, uint64_t>>> queue_;
};

}  // namespace

PaResult naive_block_aggregation_baseline(sim::Simulator& s, const RootedTree& tree,
                                          const PaInstance& inst, uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  validate_pa_instance(g, inst);
  const int n = g.n();
  if (static_cast<int>(tree.parent.size()) != n)
    throw std::invalid_argument("tree does not span the graph");

  sim::SimReport total;
  std::vector<std::map<uint64_t, uint64_t>> folds(n);
  std::vector<std::set<std::pair<int, uint64_t>>> seen(n);
  {
    sim::Simulator::PhaseScope ph(s, "baseline");
    std::vector<std::unique_ptr<sim::NodeProgram>> progs;
    progs.reserve(n);
    for (int v = 0; v < n; ++v)
      progs.push_back(std::make_unique<NaiveUpProgram>(
          tree.parent[v], inst.op, static_cast<uint64_t>(inst.partition.part_of[v]),
          inst.values[v]));
    total.absorb(s.run(progs, round_limit));
    for (int v = 0; v < n; ++v) {
      auto& up = static_cast<NaiveUpProgram&>(*progs[v]);
      folds[v] = std::move(up.pending);
      seen[v] = std::move(up.child_parts);
    }
  }

  std::vector<uint64_t> result(n, 0);
  {
    sim::Simulator::PhaseScope ph(s, "baseline");
    std::vector<std::unique_ptr<sim::NodeProgram>> progs;
    progs.reserve(n);
    for (int v = 0; v < n; ++v) {
      std::map<uint64_t, std::vector<int>> fan;
      for (const auto& [child, part] : seen[v]) fan[part].push_back(child);
      std::map<int, std::deque<std::pair<uint64_t, uint64_t>>> preload;
      if (v == tree.root)
        for (const auto& [part, children] : fan)
          for (int child : children) preload[child].push_back({part, folds[v].at(part)});
      progs.push_back(std::make_unique<NaiveDownProgram>(
          static_cast<uint64_t>(inst.partition.part_of[v]), std::move(fan),
          std::move(preload)));
    }
    total.absorb(s.run(progs, round_limit));
    for (int v = 0; v < n; ++v) {
      auto& down = static_cast<NaiveDownProgram&>(*progs[v]);
      if (v == tree.root)
        result[v] = folds[v].at(static_cast<uint64_t>(inst.partition.part_of[v]));
      else if (down.got)
        result[v] = down.result;
      else
        throw std::logic_error("baseline never delivered a fold to node " + std::to_string(v));
    }
  }
  return {std::move(result), total};
}

// ---------------------------------------------------------------------------

FullPaProvider::FullPaProvider(sim::Simulator& s, Partition partition, std::vector<int> leaders,
                               const SubPartDivision& division,
                               const shortcuts::TreeRestrictedShortcut& sc, SolveMode mode,
                               uint64_t seed, int b, uint64_t round_limit)
    : sim_(s),
      partition_(std::move(partition)),
      leaders_(std::move(leaders)),
      division_(division),
      sc_(sc),
      mode_(mode),
      seed_(seed),
      b_(b),
      round_limit_(round_limit) {}

std::vector<uint64_t> FullPaProvider::solve(AggOp op, const std::vector<uint64_t>& values,
                                            sim::SimReport& cost) {
  ++calls_;
  PaInstance inst;
  inst.partition = partition_;
  inst.values = values;
  inst.op = op;
  inst.leaders = leaders_;
  PaResult r = pa_solve(sim_, inst, division_, sc_, mode_,
                        split_seed(seed_, static_cast<uint64_t>(calls_)), b_, round_limit_);
  cost.absorb(r.report);
  return std::move(r.node_value);
}

std::string pa_result_json(const PaResult& r, const Partition& partition) {
  nlohmann::json j;
  j["aggregates"] = nlohmann::json::object();
  std::vector<std::vector<int>> mem = partition.members();
  for (int i = 0; i < partition.count; ++i)
    if (!mem[i].empty()) j["aggregates"][std::to_string(i)] = r.node_value[mem[i].front()];
  j["report"] = {
      {"rounds", r.report.rounds},
      {"messages", r.report.messages},
      {"max_edge_load", r.report.max_edge_load},
      {"completed", r.report.completed},
      {"messages_by_phase", r.report.messages_by_phase},
  };
  return j.dump(2);
}

}  // namespace congest::pa
