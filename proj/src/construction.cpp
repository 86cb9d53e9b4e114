#include "congest/construction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "congest/rng.hpp"
#include "congest/treecomm.hpp"
#include "json.hpp"

namespace congest::construction {
namespace {

using sim::Envelope;
using sim::NodeProgram;
using sim::RoundApi;
using sim::Simulator;

int ceil_log2(int x) {
  int it = 0;
  while ((int64_t{1} << it) < x) ++it;
  return it;
}

// Envelope tags: kind in the top bits, hops left in the low bits, two ids per
// envelope offset by one so a zero word marks an empty slot.
constexpr uint64_t kKindShift = 48;
constexpr uint64_t kKindStream = 1;  // doubling pass along a heavy path
constexpr uint64_t kKindCross = 2;   // sink set crossing its light edge
constexpr uint64_t kKindRand = 3;    // randomized claiming, always one hop

uint64_t pack_tag(uint64_t kind, uint64_t hops) { return (kind << kKindShift) | hops; }

// Where one node sits in the claim cascade: its path coordinates and the
// round its path's windows start at. Computed centrally from the heavy-path
// labels, like every other static schedule in this library.
struct PathSlot {
  int pos = 1;        // 1-based from the deep end of the path
  int len = 1;
  int up = -1;        // next node along the path = tree parent, -1 at the sink
  int light_up = -1;  // sink only: tree parent across the light edge
  uint64_t base = 0;  // first round of this path's schedule
};

// The doubling claim pass, one node's share. Iteration i of a path of length
// L occupies rounds [base + i*c + 2^i - 1, base + (i+1)*c + 2^(i+1) - 1): a
// breaking node acts at the window start, a pushing node streams two ids per
// round, and relays forward arrivals in the same round, so a stream of at
// most c envelopes arrives within c + 2^i rounds. After the last window the
// node claims its resting ids into its unsevered upward edge; a sink with a
// light parent streams them across instead, claiming that edge.
class ClaimCascadeProgram final : public NodeProgram {
 public:
  ClaimCascadeProgram(const PathSlot& slot, int c, std::vector<int> seeds)
      : resting(seeds.begin(), seeds.end()), slot_(slot), c_(c) {
    iters_ = path_shortcut_iterations(slot_.len);
    if (slot_.pos < slot_.len) {
      int i = 0;
      while (((slot_.pos >> i) & 1) == 0) ++i;  // the one iteration this node acts in
      act_iter_ = i;
      act_round_ = slot_.base + static_cast<uint64_t>(i) * c_ + ((uint64_t{1} << i) - 1);
    }
    final_round_ = slot_.base + static_cast<uint64_t>(iters_) * c_ + ((uint64_t{1} << iters_) - 1);
  }

  // Read back by the harness after the run.
  std::set<int> resting;
  std::set<int> claimed_up;  // ids that crossed or finally claimed the parent edge
  bool broken_up = false;

  void on_round(RoundApi& api) override {
    const uint64_t r = api.round();
    for (const Envelope& e : api.inbox()) {
      const uint64_t kind = e.w0() >> kKindShift;
      const uint64_t hops = e.w0() & ((uint64_t{1} << kKindShift) - 1);
      if (kind != kKindStream && kind != kKindCross) continue;
      if (hops <= 1 || slot_.up < 0) {
        for (int k = 1; k < e.len; ++k)
          if (e.w[k]) resting.insert(static_cast<int>(e.w[k]) - 1);
      } else if (!broken_up) {
        for (int k = 1; k < e.len; ++k)
          if (e.w[k]) claimed_up.insert(static_cast<int>(e.w[k]) - 1);
        api.send(slot_.up, pack_tag(kKindStream, hops - 1), e.w[1], e.w[2]);
      }
    }
    if (act_iter_ >= 0 && r == act_round_) {
      if (static_cast<int>(resting.size()) >= 2 * c_) {
        broken_up = true;
        resting.clear();
      } else if (!resting.empty()) {
        batch_.assign(resting.begin(), resting.end());
        batch_next_ = 0;
        batch_hops_ = std::min(slot_.pos + (1 << act_iter_), slot_.len) - slot_.pos;
        batch_to_ = slot_.up;
        batch_kind_ = kKindStream;
      }
    }
    if (r == final_round_ && !finalized_) {
      finalized_ = true;
      if (slot_.pos < slot_.len) {
        if (!broken_up) claimed_up.insert(resting.begin(), resting.end());
      } else if (slot_.light_up >= 0 && !resting.empty()) {
        batch_.assign(resting.begin(), resting.end());
        batch_next_ = 0;
        batch_hops_ = 1;
        batch_to_ = slot_.light_up;
        batch_kind_ = kKindCross;
      }
    }
    if (batch_next_ < batch_.size()) {
      uint64_t a = static_cast<uint64_t>(batch_[batch_next_]) + 1;
      uint64_t b = batch_next_ + 1 < batch_.size()
                       ? static_cast<uint64_t>(batch_[batch_next_ + 1]) + 1
                       : 0;
      claimed_up.insert(batch_[batch_next_]);
      if (b) claimed_up.insert(batch_[batch_next_ + 1]);
      api.send(batch_to_, pack_tag(batch_kind_, static_cast<uint64_t>(batch_hops_)), a, b);
      batch_next_ += 2;
    }
  }

  uint64_t next_action_round(uint64_t now) const override {
    uint64_t best = sim::kNever;
    if (batch_next_ < batch_.size()) best = now;
    if (act_iter_ >= 0 && act_round_ >= now) best = std::min(best, act_round_);
    if (!finalized_ && final_round_ >= now) best = std::min(best, final_round_);
    return best;
  }

 private:
  PathSlot slot_;
  int c_;
  int iters_ = 0;
  int act_iter_ = -1;
  uint64_t act_round_ = 0;
  uint64_t final_round_ = 0;
  bool finalized_ = false;
  std::vector<int> batch_;
  size_t batch_next_ = 0;
  int batch_hops_ = 0;
  int batch_to_ = -1;
  uint64_t batch_kind_ = kKindStream;
};

// Heavy paths grouped and scheduled: a path may start once every path whose
// sink hangs below it across a light edge has finished streaming, so waves
// follow the light-edge depth, of which root-to-leaf paths have at most
// floor(log2 n).
struct CascadePlan {
  std::vector<PathSlot> slot;  // per node
  int waves = 0;
};

uint64_t path_span(int len, int c, bool has_light_up, int max_ids) {
  const int it = path_shortcut_iterations(len);
  uint64_t span = static_cast<uint64_t>(it) * c + ((uint64_t{1} << it) - 1);
  if (has_light_up) span += static_cast<uint64_t>((max_ids + 1) / 2) + 2;
  return span;
}

CascadePlan plan_cascade(const RootedTree& t, const HeavyPathDecomposition& h, int c,
                         int max_ids) {
  const int n = t.n();
  std::map<int, std::vector<int>> feeders;  // sink -> sinks of paths landing on it
  for (const auto& [sink, nodes] : h.path_nodes)
    if (t.parent[sink] >= 0) feeders[h.path_top[t.parent[sink]]].push_back(sink);

  std::map<int, int> wave;
  // Sinks ordered by decreasing depth: every feeder's sink is strictly deeper
  // than any node of the path it lands on, so one sweep settles all waves.
  std::vector<int> sinks;
  for (const auto& [sink, nodes] : h.path_nodes) sinks.push_back(sink);
  std::sort(sinks.begin(), sinks.end(),
            [&](int a, int b) { return t.depth[a] != t.depth[b] ? t.depth[a] > t.depth[b]
                                                                : a < b; });
  int waves = 0;
  for (int sink : sinks) {
    int w = 1;
    for (int f : feeders[sink]) w = std::max(w, wave.at(f) + 1);
    wave[sink] = w;
    waves = std::max(waves, w);
  }
  if (waves > max_light_edges_on_root_paths(t, h) + 1)
    throw std::logic_error("internal: wave count exceeded the light-edge depth");

  std::vector<uint64_t> wave_span(waves + 1, 0);
  for (int sink : sinks) {
    const int len = static_cast<int>(h.path_nodes.at(sink).size());
    const uint64_t span = path_span(len, c, t.parent[sink] >= 0, max_ids);
    wave_span[wave.at(sink)] = std::max(wave_span[wave.at(sink)], span);
  }
  std::vector<uint64_t> wave_base(waves + 1, 0);
  for (int w = 2; w <= waves; ++w) wave_base[w] = wave_base[w - 1] + wave_span[w - 1];

  CascadePlan plan;
  plan.waves = waves;
  plan.slot.resize(n);
  for (int v = 0; v < n; ++v) {
    PathSlot& sl = plan.slot[v];
    sl.pos = h.pos_from_source[v];
    sl.len = h.path_len(v);
    sl.base = wave_base[wave.at(h.path_top[v])];
    if (sl.pos < sl.len) {
      sl.up = t.parent[v];
    } else {
      sl.light_up = t.parent[v];
    }
  }
  return plan;
}

// One iteration of randomized claiming: the configured id is injected at its
// seeded round, arrivals are deduplicated and queued for the parent edge two
// per envelope, and the edge shuts once 2c distinct ids have asked to cross
// it, dropping the queue and everything later.
class RandClaimProgram final : public NodeProgram {
 public:
  RandClaimProgram(int parent, int c, int inject_id, uint64_t inject_round)
      : parent_(parent), c_(c), inject_id_(inject_id), inject_round_(inject_round) {}

  std::set<int> claimed_up;
  bool discarded = false;

  void on_round(RoundApi& api) override {
    for (const Envelope& e : api.inbox()) {
      if ((e.w0() >> kKindShift) != kKindRand) continue;
      for (int k = 1; k < e.len; ++k)
        if (e.w[k]) take(static_cast<int>(e.w[k]) - 1);
    }
    if (inject_id_ >= 0 && api.round() == inject_round_) {
      take(inject_id_);
      inject_id_ = -1;
    }
    if (!queue_.empty()) {
      uint64_t a = static_cast<uint64_t>(queue_.front()) + 1;
      claimed_up.insert(queue_.front());
      queue_.pop_front();
      uint64_t b = 0;
      if (!queue_.empty()) {
        b = static_cast<uint64_t>(queue_.front()) + 1;
        claimed_up.insert(queue_.front());
        queue_.pop_front();
      }
      api.send(parent_, pack_tag(kKindRand, 1), a, b);
    }
  }

  uint64_t next_action_round(uint64_t now) const override {
    uint64_t best = sim::kNever;
    if (!queue_.empty()) best = now;
    if (inject_id_ >= 0 && inject_round_ >= now) best = std::min(best, inject_round_);
    return best;
  }

 private:
  void take(int id) {
    if (seen_.count(id)) return;
    seen_.insert(id);
    if (parent_ < 0 || discarded) return;
    ++wanted_;
    if (wanted_ >= 2 * c_) {
      discarded = true;
      queue_.clear();
      return;
    }
    queue_.push_back(id);
  }

  int parent_;
  int c_;
  int inject_id_;
  uint64_t inject_round_;
  std::set<int> seen_;
  std::deque<int> queue_;
  int wanted_ = 0;
};

// Shared claim/verify/freeze skeleton of both builders. `run_claims` performs
// one claim iteration and folds newly crossed edges into `claims`.
struct BuildState {
  std::vector<char> active;
  std::vector<std::set<int>> claims;        // accumulated per part
  std::vector<std::set<int>> frozen_edges;  // fixed at freeze time
  ShortcutBuildLedger ledger;
  sim::SimReport cost;
  int remaining = 0;
};

BuildState make_state(int parts) {
  BuildState st;
  st.active.assign(parts, 1);
  st.claims.resize(parts);
  st.frozen_edges.resize(parts);
  st.ledger.entries.resize(parts);
  for (int i = 0; i < parts; ++i) st.ledger.entries[i] = {i, 0, 0};
  st.remaining = parts;
  return st;
}

// Candidate = edges frozen so far for inactive parts, accumulated claims for
// the rest; verified against the freeze budget, passers dropping out with
// their edge set fixed at exactly what was verified.
void verify_and_freeze(Simulator& s, const RootedTree& tree, const Partition& partition,
                       const std::vector<int>& leaders,
                       const subparts::SubPartDivision& division, int b, int iteration,
                       uint64_t round_limit, BuildState& st) {
  shortcuts::TreeRestrictedShortcut cand(tree, partition);
  for (int i = 0; i < partition.count; ++i)
    for (int v : st.active[i] ? st.claims[i] : st.frozen_edges[i]) cand.assign(i, v);
  pa::BlockBudgetReport vr = pa::verify_block_parameter(
      s, partition, leaders, division, cand, kFreezeSlack * b - 1, round_limit);
  st.cost.absorb(vr.report);
  for (int i = 0; i < partition.count; ++i) {
    if (!st.active[i] || !vr.part_pass[i]) continue;
    st.active[i] = 0;
    st.frozen_edges[i] = st.claims[i];
    st.ledger.entries[i] = {i, iteration, vr.part_blocks[i]};
    --st.remaining;
  }
}

BuildResult finish_build(const RootedTree& tree, const Partition& partition, BuildState&& st,
                         int iterations, uint64_t congestion_ceiling) {
  shortcuts::TreeRestrictedShortcut sc(tree, partition);
  for (int i = 0; i < partition.count; ++i)
    for (int v : st.frozen_edges[i]) sc.assign(i, v);
  if (static_cast<uint64_t>(shortcuts::congestion(sc).c) > congestion_ceiling)
    throw std::logic_error("internal: constructed shortcut exceeded its congestion ceiling");
  BuildResult out{std::move(sc), std::move(st.ledger), std::move(st.cost), iterations};
  return out;
}

void check_targets(int b, int c) {
  if (b < 1 || c < 1)
    throw std::invalid_argument("block and congestion targets must be at least 1");
}

std::string infeasible_message(const char* which, int remaining, int iterations, int b, int c) {
  std::ostringstream os;
  os << which << " construction left " << remaining << " part" << (remaining == 1 ? "" : "s")
     << " active after " << iterations << " iteration" << (iterations == 1 ? "" : "s")
     << " with b=" << b << " c=" << c;
  return os.str();
}

}  // namespace

std::string ledger_json(const ShortcutBuildLedger& ledger) {
  nlohmann::json j = nlohmann::json::array();
  for (const ShortcutBuildEntry& e : ledger.entries) {
    nlohmann::json o;
    o["part_id"] = e.part_id;
    o["frozen_iteration"] = e.frozen_iteration;
    o["b_actual"] = e.b_actual;
    j.push_back(o);
  }
  return j.dump();
}

PathClaimResult path_shortcut(const std::vector<std::vector<int>>& start_sets, int c,
                              uint64_t round_limit) {
  if (c < 1) throw std::invalid_argument("congestion target must be at least 1");
  const int len = static_cast<int>(start_sets.size());
  for (const auto& ids : start_sets)
    for (int id : ids)
      if (id < 0) throw std::invalid_argument("part ids must be nonnegative");
  PathClaimResult out;
  out.trace.iterations = path_shortcut_iterations(len);
  out.trace.final_sets.resize(len);
  out.trace.broken.assign(len > 0 ? len - 1 : 0, 0);
  out.trace.claimed.resize(len > 0 ? len - 1 : 0);
  if (len == 0) return out;

  std::vector<Edge> es;
  for (int k = 0; k + 1 < len; ++k) es.push_back({k, k + 1, 1});
  NetworkGraph g(len, es);
  Simulator s(g);
  Simulator::PhaseScope ph(s, "build.path");

  std::vector<std::unique_ptr<NodeProgram>> progs;
  std::vector<ClaimCascadeProgram*> raw(len);
  for (int k = 0; k < len; ++k) {
    PathSlot sl;
    sl.pos = k + 1;
    sl.len = len;
    sl.up = k + 1 < len ? k + 1 : -1;
    auto p = std::make_unique<ClaimCascadeProgram>(sl, c, start_sets[k]);
    raw[k] = p.get();
    progs.push_back(std::move(p));
  }
  out.report = s.run(progs, round_limit);
  if (!out.report.completed) throw ConstructionError("path claim pass hit its round limit");

  for (int k = 0; k < len; ++k) {
    out.trace.final_sets[k].assign(raw[k]->resting.begin(), raw[k]->resting.end());
    if (k + 1 < len) {
      out.trace.broken[k] = raw[k]->broken_up ? 1 : 0;
      out.trace.claimed[k].assign(raw[k]->claimed_up.begin(), raw[k]->claimed_up.end());
    }
  }
  return out;
}

BuildResult deterministic_shortcut(Simulator& s, const RootedTree& tree,
                                   const Partition& partition, const std::vector<int>& leaders,
                                   const subparts::SubPartDivision& division, int b, int c,
                                   uint64_t round_limit) {
  check_targets(b, c);
  const NetworkGraph& g = s.graph();
  const int n = g.n();
  const int parts = partition.count;
  BuildState st = make_state(parts);

  HeavyPathDecomposition hpd;
  {
    Simulator::PhaseScope ph(s, "build.hpd");
    auto [h, rep] = treecomm::heavy_paths_distributed(s, tree, round_limit);
    hpd = std::move(h);
    st.cost.absorb(rep);
  }
  const CascadePlan plan = plan_cascade(tree, hpd, c, parts);

  const int cap = ceil_log2(std::max(1, parts)) + 1;
  int ran = 0;
  for (int j = 1; j <= cap && st.remaining > 0; ++j) {
    ran = j;
    {
      Simulator::PhaseScope ph(s, "build.claim");
      std::vector<std::unique_ptr<NodeProgram>> progs;
      std::vector<ClaimCascadeProgram*> raw(n);
      for (int v = 0; v < n; ++v) {
        std::vector<int> seeds;
        if (division.rep[v] == v && st.active[partition.part_of[v]])
          seeds.push_back(partition.part_of[v]);
        auto p = std::make_unique<ClaimCascadeProgram>(plan.slot[v], c, std::move(seeds));
        raw[v] = p.get();
        progs.push_back(std::move(p));
      }
      sim::SimReport r = s.run(progs, round_limit);
      if (!r.completed) throw ConstructionError("claim cascade hit its round limit");
      st.cost.absorb(r);
      for (int v = 0; v < n; ++v)
        if (tree.parent[v] >= 0)
          for (int id : raw[v]->claimed_up) st.claims[id].insert(v);
    }
    verify_and_freeze(s, tree, partition, leaders, division, b, j, round_limit, st);
  }
  if (st.remaining > 0)
    throw TargetsInfeasible(infeasible_message("deterministic", st.remaining, ran, b, c),
                            std::move(st.cost));

  const uint64_t ceiling = 2ull * c * std::max(1, ceil_log2(std::max(1, tree.height))) *
                           (ceil_log2(std::max(1, parts)) + 1);
  return finish_build(tree, partition, std::move(st), ran, ceiling);
}

BuildResult randomized_shortcut(Simulator& s, const RootedTree& tree, const Partition& partition,
                                const std::vector<int>& leaders,
                                const subparts::SubPartDivision& division, int b, int c,
                                uint64_t seed, uint64_t round_limit) {
  check_targets(b, c);
  const int n = s.graph().n();
  const int parts = partition.count;
  BuildState st = make_state(parts);

  const int cap = std::max(1, kRandIterFactor * ceil_log2(std::max(1, parts)));
  int ran = 0;
  for (int j = 1; j <= cap && st.remaining > 0; ++j) {
    ran = j;
    uint64_t reps = 0;
    {
      Simulator::PhaseScope ph(s, "build.claim");
      std::vector<std::unique_ptr<NodeProgram>> progs;
      std::vector<RandClaimProgram*> raw(n);
      for (int v = 0; v < n; ++v) {
        int inject = -1;
        uint64_t when = 0;
        if (division.rep[v] == v && st.active[partition.part_of[v]]) {
          inject = partition.part_of[v];
          when = Rng(split_seed(split_seed(seed, static_cast<uint64_t>(j)),
                                static_cast<uint64_t>(v)))
                     .below(static_cast<uint64_t>(2 * c));
          ++reps;
        }
        auto p = std::make_unique<RandClaimProgram>(tree.parent[v], c, inject, when);
        raw[v] = p.get();
        progs.push_back(std::move(p));
      }
      sim::SimReport r = s.run(progs, round_limit);
      if (!r.completed) throw ConstructionError("randomized claiming hit its round limit");
      st.cost.absorb(r);
      if (r.messages > shortcuts::kRouteMessageFactor * reps *
                           static_cast<uint64_t>(std::max(1, tree.height)))
        throw std::logic_error("internal: claim iteration exceeded its message budget");
      for (int v = 0; v < n; ++v) {
        if (tree.parent[v] < 0) continue;
        if (static_cast<int>(raw[v]->claimed_up.size()) > 2 * c)
          throw std::logic_error("internal: claim iteration exceeded 2c ids on one edge");
        for (int id : raw[v]->claimed_up) st.claims[id].insert(v);
      }
    }
    verify_and_freeze(s, tree, partition, leaders, division, b, j, round_limit, st);
  }
  if (st.remaining > 0)
    throw TargetsInfeasible(infeasible_message("randomized", st.remaining, ran, b, c),
                            std::move(st.cost));
  return finish_build(tree, partition, std::move(st), ran, 2ull * c * ran);
}

SearchResult doubling_search(Simulator& s, const RootedTree& tree, const Partition& partition,
                             const std::vector<int>& leaders,
                             const subparts::SubPartDivision& division, pa::SolveMode mode,
                             uint64_t seed, uint64_t round_limit) {
  const int n = s.graph().n();
  std::vector<int> grid;
  for (int v = 1; v <= n; v *= 2) grid.push_back(v);
  if (grid.back() != n) grid.push_back(n);

  struct Probe {
    double score;
    int b, c;
  };
  std::vector<Probe> probes;
  for (int b : grid)
    for (int c : grid) probes.push_back({b + std::log2(static_cast<double>(c)), b, c});
  std::sort(probes.begin(), probes.end(), [](const Probe& x, const Probe& y) {
    if (x.score != y.score) return x.score < y.score;
    if (x.b != y.b) return x.b < y.b;
    return x.c < y.c;
  });

  sim::SimReport agg;
  int attempts = 0;
  for (const Probe& p : probes) {
    ++attempts;
    try {
      BuildResult r =
          mode == pa::SolveMode::det
              ? deterministic_shortcut(s, tree, partition, leaders, division, p.b, p.c,
                                       round_limit)
              : randomized_shortcut(s, tree, partition, leaders, division, p.b, p.c,
                                    split_seed(seed, static_cast<uint64_t>(attempts)),
                                    round_limit);
      SearchResult out{p.b, p.c, std::move(r), std::move(agg), attempts};
      out.total.absorb(out.build.report);
      return out;
    } catch (const TargetsInfeasible& e) {
      agg.absorb(e.report);
    }
  }
  throw SearchExhausted("no pair up to (n, n) produced a shortcut");
}

shortcuts::TreeRestrictedShortcut trivial_shortcut(const NetworkGraph& g, const RootedTree& tree,
                                                   const Partition& partition) {
  shortcuts::TreeRestrictedShortcut sc(tree, partition);
  const int n = g.n();
  const std::vector<int> sizes = partition.sizes();
  for (int i = 0; i < partition.count; ++i) {
    if (static_cast<int64_t>(sizes[i]) * sizes[i] >= n) {
      for (int v = 0; v < n; ++v)
        if (tree.parent[v] >= 0) sc.assign(i, v);
    }
  }
  for (int v = 0; v < n; ++v) {
    const int p = tree.parent[v];
    if (p < 0) continue;
    const int i = partition.part_of[v];
    if (partition.part_of[p] == i && static_cast<int64_t>(sizes[i]) * sizes[i] < n)
      sc.assign(i, v);
  }
  return sc;
}

}  // namespace congest::construction

namespace congest::pa {

PaResult pa_pipeline(sim::Simulator& s, const PaInstance& inst, SolveMode mode, uint64_t seed,
                     uint64_t round_limit) {
  const NetworkGraph& g = s.graph();
  validate_pa_instance(g, inst);
  sim::SimReport pre;

  RootedTree tree;
  {
    sim::Simulator::PhaseScope ph(s, "pipeline.tree");
    auto [t, r] = treecomm::build_bfs_tree_distributed(s, 0, round_limit);
    tree = std::move(t);
    pre.absorb(r);
  }

  const int threshold = std::max(1, tree.height);
  const std::vector<int> leaders = min_id_leaders(inst.partition);
  subparts::SubPartDivision division;
  {
    sim::Simulator::PhaseScope ph(s, "pipeline.divide");
    if (mode == SolveMode::det) {
      auto dr = subparts::subpart_division_det(s, inst.partition, threshold, round_limit);
      division = std::move(dr.division);
      pre.absorb(dr.report);
    } else {
      auto dr = subparts::subpart_division_random(s, inst.partition, leaders, threshold,
                                                  split_seed(seed, 11), round_limit);
      division = std::move(dr.division);
      pre.absorb(dr.report);
    }
  }

  construction::SearchResult found = construction::doubling_search(
      s, tree, inst.partition, leaders, division, mode, split_seed(seed, 12), round_limit);
  pre.absorb(found.total);

  PaResult out = pa_solve_leaderless(s, inst, division, found.build.shortcut, mode,
                                     split_seed(seed, 13), -1, round_limit);
  out.report.absorb(pre);
  return out;
}

}  // namespace congest::pa
