#include "congest/construction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "congest/graph.hpp"
#include "congest/oracle.hpp"
#include "congest/pa.hpp"
#include "congest/pa_instance.hpp"
#include "congest/rng.hpp"
#include "congest/shortcuts.hpp"
#include "congest/sim.hpp"
#include "congest/subparts.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace congest;
using namespace congest::construction;
using congest::sim::Simulator;

namespace {

NetworkGraph path(int n) {
  std::vector<Edge> es;
  for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, 1});
  return NetworkGraph(n, es);
}

Partition whole(int n) {
  Partition p;
  p.count = 1;
  p.part_of.assign(n, 0);
  return p;
}

Partition halves(int n) {
  Partition p;
  p.count = 2;
  p.part_of.resize(n);
  for (int v = 0; v < n; ++v) p.part_of[v] = v < n / 2 ? 0 : 1;
  return p;
}

subparts::SubPartDivision singleton_division(int n) {
  subparts::SubPartDivision d;
  d.rep.resize(n);
  for (int v = 0; v < n; ++v) d.rep[v] = v;
  d.parent.assign(n, -1);
  d.depth.assign(n, 0);
  d.complete.assign(n, 1);
  return d;
}

// One sub-part per part of a path graph: the chain hanging off the part's
// smallest member.
subparts::SubPartDivision chain_division(const Partition& p) {
  const int n = static_cast<int>(p.part_of.size());
  std::vector<int> low(p.count, n);
  for (int v = 0; v < n; ++v) low[p.part_of[v]] = std::min(low[p.part_of[v]], v);
  subparts::SubPartDivision d;
  d.rep.resize(n);
  d.parent.resize(n);
  d.depth.resize(n);
  d.complete.assign(n, 1);
  for (int v = 0; v < n; ++v) {
    int r = low[p.part_of[v]];
    d.rep[v] = r;
    d.parent[v] = v == r ? -1 : v - 1;
    d.depth[v] = v - r;
  }
  return d;
}

void check_trace_equal(const PathShortcutTrace& got, const PathShortcutTrace& want) {
  CHECK(got.iterations == want.iterations);
  CHECK(got.final_sets == want.final_sets);
  CHECK(got.claimed == want.claimed);
  CHECK(got.broken == want.broken);
}

// Remaining active parts after each claim iteration, recovered from the
// freeze records (iteration 0 = everything still active).
std::vector<int> actives_by_iteration(const ShortcutBuildLedger& led, int parts, int iters) {
  std::vector<int> a(iters + 1, 0);
  a[0] = parts;
  for (int j = 1; j <= iters; ++j)
    for (const auto& e : led.entries) a[j] += e.frozen_iteration > j;
  return a;
}

// Freeze records must describe the delivered edge sets: a part frozen with
// block count b_actual keeps exactly that many blocks in the final shortcut.
void check_ledger_matches_blocks(const BuildResult& r) {
  auto bs = shortcuts::blocks(r.shortcut);
  REQUIRE(r.ledger.entries.size() == static_cast<size_t>(r.shortcut.part_count()));
  int prev = -1;
  for (const auto& e : r.ledger.entries) {
    CHECK(e.part_id > prev);  // ascending, one entry per part
    prev = e.part_id;
    CAPTURE(e.part_id);
    CHECK(e.frozen_iteration >= 1);
    CHECK(e.frozen_iteration <= r.iterations);
    CHECK(e.b_actual == static_cast<uint64_t>(bs.block_count[e.part_id]));
  }
}

}  // namespace

TEST_CASE("path claim pass matches the sequential reference on pinned shapes") {
  {
    // One id entering a length-4 path with room to spare travels untouched.
    std::vector<std::vector<int>> s(4);
    s[0] = {7};
    auto r = path_shortcut(s, 10);
    check_trace_equal(r.trace, oracle_path_shortcut(s, 10));
    CHECK(r.trace.final_sets[3] == std::vector<int>{7});
    for (char b : r.trace.broken) CHECK_FALSE(b);
    CHECK(r.trace.iterations == 2);
  }
  {
    // A single id everywhere never reaches the breaking threshold even at
    // the tightest budget: sets merge, they do not grow.
    std::vector<std::vector<int>> s(9, std::vector<int>{3});
    auto r = path_shortcut(s, 1);
    check_trace_equal(r.trace, oracle_path_shortcut(s, 1));
    for (char b : r.trace.broken) CHECK_FALSE(b);
  }
  {
    // Alternating ids at c=1: every second merge point trips the threshold.
    std::vector<std::vector<int>> s(8);
    for (int k = 0; k < 8; ++k) s[k] = {k % 2};
    auto r = path_shortcut(s, 1);
    check_trace_equal(r.trace, oracle_path_shortcut(s, 1));
    CHECK(r.trace.iterations == 3);
    CHECK(r.trace.broken == std::vector<char>{0, 1, 0, 1, 0, 1, 0});
    CHECK(r.trace.final_sets[0] == std::vector<int>{0});
    CHECK(r.trace.final_sets[1].empty());
    CHECK(r.trace.final_sets[7] == std::vector<int>{0, 1});
    for (const auto& f : r.trace.final_sets)
      CHECK(f.size() <= 6);  // 2 * c * iterations
    CHECK(r.trace.claimed[0] == std::vector<int>{0});
    CHECK(r.trace.claimed[1].empty());
    CHECK(r.report.messages == 4);
  }
}

TEST_CASE("path claim pass equals the reference on random start sets") {
  for (int len : {0, 1, 2, 3, 4, 5, 7, 8, 9, 12, 16, 17, 25, 32, 33}) {
    for (int c : {1, 2, 3, 5}) {
      for (uint64_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(len);
        CAPTURE(c);
        CAPTURE(seed);
        Rng rng(split_seed(seed, len, c));
        // Injection regime (at most one id per node, as the builders seed it):
        // trace equality plus the size and round bounds.
        std::vector<std::vector<int>> s(len);
        for (int k = 0; k < len; ++k)
          if (rng.below(10) < 6) s[k] = {static_cast<int>(rng.below(7))};
        auto r = path_shortcut(s, c);
        check_trace_equal(r.trace, oracle_path_shortcut(s, c));
        uint64_t budget = 0;
        const int iters = path_shortcut_iterations(len);
        for (int i = 0; i < iters; ++i) budget += c + (uint64_t{1} << i);
        CHECK(r.report.rounds <= budget);
        for (const auto& f : r.trace.final_sets)
          CHECK(f.size() <= static_cast<size_t>(2 * c * std::max(1, iters)));
        // Arbitrary oversized start sets still replay exactly; only the sink
        // can hold more than the single-injection ceiling, so no size bound.
        std::vector<std::vector<int>> wild(len);
        for (int k = 0; k < len; ++k) {
          if (rng.below(10) < 3) continue;
          std::set<int> ids;
          const int cnt = 1 + static_cast<int>(rng.below(4));
          for (int t = 0; t < cnt; ++t) ids.insert(static_cast<int>(rng.below(7)));
          wild[k].assign(ids.begin(), ids.end());
        }
        auto rw = path_shortcut(wild, c);
        check_trace_equal(rw.trace, oracle_path_shortcut(wild, c));
        CHECK(rw.report.rounds <= budget);
      }
    }
  }
}

TEST_CASE("path claim pass rejects bad arguments and handles empty paths") {
  std::vector<std::vector<int>> s(3);
  CHECK_THROWS_AS(path_shortcut(s, 0), std::invalid_argument);
  s[1] = {-4};
  CHECK_THROWS_AS(path_shortcut(s, 2), std::invalid_argument);
  auto r = path_shortcut({}, 1);
  CHECK(r.trace.iterations == 0);
  CHECK(r.report.messages == 0);
}

TEST_CASE("whole-path part freezes immediately at unit targets") {
  auto g = path(12);
  Simulator s(g);
  auto tree = bfs_tree(g, 0);
  auto p = whole(12);
  auto r = deterministic_shortcut(s, tree, p, min_id_leaders(p), singleton_division(12), 1, 1);
  CHECK(r.iterations == 1);
  REQUIRE(r.ledger.entries.size() == 1);
  CHECK(r.ledger.entries[0].part_id == 0);
  CHECK(r.ledger.entries[0].frozen_iteration == 1);
  CHECK(r.ledger.entries[0].b_actual == 1);
  CHECK(shortcuts::congestion(r.shortcut).c == 1);
  CHECK(r.shortcut.total_edges() == 11);
  CHECK(r.report.completed);
  CHECK(ledger_json(r.ledger) == R"([{"b_actual":1,"frozen_iteration":1,"part_id":0}])");
}

TEST_CASE("grid rows all freeze in one deterministic pass at root-n congestion") {
  auto gw = gen_grid_with_apex(16, 16);
  Simulator s(gw.graph);
  auto tree = bfs_tree(gw.graph, gw.apex);
  auto division = singleton_division(gw.graph.n());
  auto r = deterministic_shortcut(s, tree, gw.rows, min_id_leaders(gw.rows), division, 1, 16);
  CHECK(r.iterations == 1);
  REQUIRE(r.ledger.entries.size() == 17);
  for (const auto& e : r.ledger.entries) {
    CAPTURE(e.part_id);
    CHECK(e.frozen_iteration == 1);
    CHECK(e.b_actual == 1);
  }
  auto cong = shortcuts::congestion(r.shortcut);
  CHECK(cong.c == 16);
  // ceiling: 2c * ceil(log2 height) * (ceil(log2 parts) + 1)
  CHECK(cong.c <= 2 * 16 * 4 * 6);
  check_ledger_matches_blocks(r);
  auto parsed = nlohmann::json::parse(ledger_json(r.ledger));
  REQUIRE(parsed.is_array());
  CHECK(parsed.size() == 17);
  CHECK(parsed[0]["part_id"] == 0);
  CHECK(parsed[16]["part_id"] == 16);
}

TEST_CASE("deterministic targets below feasibility raise the infeasibility error") {
  auto g = path(16);
  Simulator s(g);
  auto tree = bfs_tree(g, 0);
  auto p = halves(16);
  auto division = chain_division(p);
  bool threw = false;
  try {
    deterministic_shortcut(s, tree, p, min_id_leaders(p), division, 1, 1);
  } catch (const TargetsInfeasible& e) {
    threw = true;
    CHECK(e.report.rounds > 0);  // the failed attempt still bills its work
    CHECK(e.report.messages > 0);
  }
  CHECK(threw);
}

TEST_CASE("random claiming freezes a lone part instantly for any seed") {
  auto g = path(9);
  auto tree = bfs_tree(g, 0);
  auto p = whole(9);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    Simulator s(g);
    auto r = randomized_shortcut(s, tree, p, min_id_leaders(p), singleton_division(9), 1, 1,
                                 seed);
    CHECK(r.iterations == 1);
    REQUIRE(r.ledger.entries.size() == 1);
    CHECK(r.ledger.entries[0].frozen_iteration == 1);
    CHECK(r.ledger.entries[0].b_actual == 1);
  }
}

TEST_CASE("random claiming settles grid rows within the iteration budget across seeds") {
  auto gw = gen_grid_with_apex(16, 16);
  auto tree = bfs_tree(gw.graph, gw.apex);
  auto leaders = min_id_leaders(gw.rows);
  auto division = singleton_division(gw.graph.n());
  int within_budget = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    CAPTURE(seed);
    Simulator s(gw.graph);
    auto r = randomized_shortcut(s, tree, gw.rows, leaders, division, 1, 16, seed);
    // ceil(log2 17) + 3
    within_budget += r.iterations <= 8;
    CHECK(shortcuts::congestion(r.shortcut).c <= 2 * 16 * r.iterations);
  }
  CHECK(within_budget >= 95);
  CHECK(within_budget == 100);  // measured: every seed froze in one iteration
}

TEST_CASE("doubling search lands on a cheap pair for contiguous halves") {
  auto g = path(16);
  auto tree = bfs_tree(g, 0);
  auto p = halves(16);
  auto leaders = min_id_leaders(p);
  {
    Simulator s(g);
    auto res = doubling_search(s, tree, p, leaders, chain_division(p), pa::SolveMode::det, 0);
    CHECK(res.b == 4);
    CHECK(res.c == 1);
    CHECK(res.b * res.c <= 8);
    CHECK(res.attempts == 8);
    // failed probes bill into the aggregate report
    CHECK(res.total.messages > res.build.report.messages);
  }
  {
    Simulator s(g);
    auto res =
        doubling_search(s, tree, p, leaders, singleton_division(16), pa::SolveMode::det, 0);
    CHECK(res.b == 1);
    CHECK(res.c == 1);
    CHECK(res.attempts == 1);
    CHECK(res.total.messages == res.build.report.messages);
  }
}

TEST_CASE("doubling search on grid rows pins the regression pair") {
  auto gw = gen_grid_with_apex(16, 16);
  auto tree = bfs_tree(gw.graph, gw.apex);
  auto leaders = min_id_leaders(gw.rows);
  auto division = singleton_division(gw.graph.n());
  {
    Simulator s(gw.graph);
    auto res = doubling_search(s, tree, gw.rows, leaders, division, pa::SolveMode::det, 5);
    CHECK(res.b == 1);
    CHECK(res.c == 8);
    CHECK(res.attempts == 6);
    CHECK(res.c <= 4 * 16);
    CHECK(shortcuts::congestion(res.build.shortcut).c == 16);
  }
  {
    Simulator s(gw.graph);
    auto res = doubling_search(s, tree, gw.rows, leaders, division, pa::SolveMode::rand, 5);
    CHECK(res.b == 1);
    CHECK(res.c == 2);
    CHECK(res.attempts == 2);
  }
}

TEST_CASE("searched pairs verify every part on a random graph in both modes") {
  auto g = gen_random_connected(200, 0.02, 42);
  auto p = gen_random_connected_partition(g, 10, 43);
  auto tree = bfs_tree(g, 0);
  auto leaders = min_id_leaders(p);
  Simulator sd(g);
  auto dr = subparts::subpart_division_det(sd, p, std::max(1, tree.height));
  for (auto mode : {pa::SolveMode::det, pa::SolveMode::rand}) {
    CAPTURE(mode == pa::SolveMode::det ? "det" : "rand");
    Simulator s(g);
    auto res = doubling_search(s, tree, p, leaders, dr.division, mode, 7);
    CHECK(res.b == 16);
    CHECK(res.c == 1);
    CHECK(res.attempts == 37);
    CHECK(res.build.iterations == 1);
    check_ledger_matches_blocks(res.build);
    Simulator sv(g);
    auto vr = pa::verify_block_parameter(sv, p, leaders, dr.division, res.build.shortcut,
                                         kFreezeSlack * res.b - 1);
    for (int i = 0; i < p.count; ++i) {
      CAPTURE(i);
      CHECK(vr.part_pass[i]);
    }
  }
}

TEST_CASE("search succeeds even when only the full-tree pair is left") {
  // Star joins everything through the hub: any id mix converges in one hop,
  // so some pair far below (n, n) must already work.
  std::vector<Edge> es;
  for (int v = 1; v < 9; ++v) es.push_back({0, v, 1});
  NetworkGraph g(9, es);
  Partition p;
  p.part_of = {0, 1, 1, 2, 2, 0, 1, 2, 0};
  p.count = 3;
  auto tree = bfs_tree(g, 0);
  Simulator s(g);
  auto res = doubling_search(s, tree, p, min_id_leaders(p), singleton_division(9),
                             pa::SolveMode::det, 0);
  CHECK(res.b >= 1);
  CHECK(res.c >= 1);
  CHECK(res.b <= 9);
  CHECK(res.c <= 9);
  check_ledger_matches_blocks(res.build);
}

TEST_CASE("full-tree targets always freeze everything in one pass") {
  auto g = gen_random_connected(40, 0.08, 3);
  auto p = gen_random_connected_partition(g, 5, 4);
  auto tree = bfs_tree(g, 0);
  Simulator s(g);
  auto r = deterministic_shortcut(s, tree, p, min_id_leaders(p), singleton_division(40), 40,
                                  40);
  CHECK(r.iterations == 1);
  for (const auto& e : r.ledger.entries) CHECK(e.frozen_iteration == 1);
}

TEST_CASE("trivial shortcut hands the whole tree to the only part") {
  auto g = path(16);
  auto tree = bfs_tree(g, 0);
  auto p = whole(16);
  auto sc = trivial_shortcut(g, tree, p);
  CHECK(shortcuts::congestion(sc).c == 1);
  CHECK(shortcuts::blocks(sc).max_block_count == 1);
  CHECK(sc.total_edges() == 15);
}

TEST_CASE("trivial shortcut leaves small parts on their own internal edges") {
  auto g = path(100);
  auto tree = bfs_tree(g, 0);
  Partition p;
  p.part_of.resize(100);
  for (int v = 0; v < 100; ++v) p.part_of[v] = v / 5;
  p.count = 20;
  auto sc = trivial_shortcut(g, tree, p);
  CHECK(shortcuts::congestion(sc).c == 1);
  CHECK(shortcuts::blocks(sc).max_block_count == 1);
  for (int i = 0; i < 20; ++i) {
    CAPTURE(i);
    CHECK(sc.edges_of(i).size() == 4);  // nobody owns the whole tree
  }
}

TEST_CASE("trivial shortcut congestion counts the blanket parts") {
  {
    // Three size-30 runs and ten scattered singletons: the singletons bring
    // no edges of their own, so the load is exactly the blanket count.
    auto g = path(100);
    auto tree = bfs_tree(g, 0);
    Partition p;
    p.part_of.resize(100);
    int next = 0;
    for (int v = 0; v < 100; ++v)
      p.part_of[v] = v % 10 == 0 ? 3 + v / 10 : next++ / 30;
    p.count = 13;
    auto sc = trivial_shortcut(g, tree, p);
    CHECK(shortcuts::congestion(sc).c == 3);
  }
  {
    // Random mixed sizes: small parts may add one more unit of load on top
    // of the blanket parts, never more.
    auto g = gen_random_connected(100, 0.03, 11);
    auto p = gen_random_connected_partition(g, 6, 12);
    auto tree = bfs_tree(g, 0);
    int blanket = 0;
    for (int sz : p.sizes()) blanket += static_cast<int64_t>(sz) * sz >= 100;
    auto sc = trivial_shortcut(g, tree, p);
    CHECK(blanket == 5);
    CHECK(shortcuts::congestion(sc).c == 6);
    CHECK(shortcuts::congestion(sc).c <= blanket + 1);
    CHECK(shortcuts::congestion(sc).c <= 10);
  }
}

TEST_CASE("active part counts at least halve between claim iterations") {
  // Statistical form over a seeded corpus; any violating step is reported.
  int steps = 0, violations = 0;
  for (uint64_t seed = 1; seed <= 12; ++seed) {
    int n = 60 + static_cast<int>(seed * 13 % 90);
    int parts = 4 + static_cast<int>(seed % 6);
    auto g = gen_random_connected(n, 0.04, split_seed(seed, 1));
    auto p = gen_random_connected_partition(g, parts, split_seed(seed, 2));
    auto tree = bfs_tree(g, 0);
    Simulator sd(g);
    auto dr = subparts::subpart_division_det(sd, p, std::max(1, tree.height));
    Simulator s(g);
    auto res = doubling_search(s, tree, p, min_id_leaders(p), dr.division, pa::SolveMode::det,
                               split_seed(seed, 3));
    auto a = actives_by_iteration(res.build.ledger, p.count, res.build.iterations);
    for (size_t j = 0; j + 1 < a.size() && a[j] > 0; ++j) {
      ++steps;
      if (a[j + 1] > (a[j] + 1) / 2) {
        ++violations;
        CAPTURE(seed);
        CAPTURE(j);
        CHECK(a[j + 1] <= (a[j] + 1) / 2);
      }
    }
  }
  CHECK(steps >= 13);
  CHECK(violations == 0);
}

TEST_CASE("one-call pipeline returns the lone value untouched") {
  NetworkGraph g(1, {});
  Partition p;
  p.part_of = {0};
  p.count = 1;
  PaInstance inst{p, {42}, AggOp::sum, {}};
  Simulator s(g);
  auto r = pa::pa_pipeline(s, inst, pa::SolveMode::det, 1);
  CHECK(r.node_value == std::vector<uint64_t>{42});
  CHECK(r.report.messages == 0);
}

TEST_CASE("one-call pipeline folds grid rows within the message ceiling") {
  auto gw = gen_grid_with_apex(32, 32);
  std::vector<uint64_t> vals(gw.graph.n());
  Rng rng(77);
  for (auto& v : vals) v = rng.below(uint64_t{1} << 20);
  PaInstance inst{gw.rows, vals, AggOp::sum, {}};
  auto want = oracle_pa(inst);
  const double lnn = std::log(static_cast<double>(gw.graph.n()));
  const double ceiling = static_cast<double>(pa::kPipelineMessageFactor) * gw.graph.m() *
                         lnn * lnn * lnn;
  for (auto mode : {pa::SolveMode::det, pa::SolveMode::rand}) {
    CAPTURE(mode == pa::SolveMode::det ? "det" : "rand");
    Simulator s(gw.graph);
    auto r = pa::pa_pipeline(s, inst, mode, 3);
    CHECK(r.report.completed);
    for (int v = 0; v < gw.graph.n(); ++v) {
      if (r.node_value[v] != want[inst.partition.part_of[v]]) {
        CAPTURE(v);
        REQUIRE(r.node_value[v] == want[inst.partition.part_of[v]]);
      }
    }
    CHECK(static_cast<double>(r.report.messages) <= ceiling);
  }
}

TEST_CASE("one-call pipeline agrees with the centralized fold across a corpus") {
  int agreements = 0;
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    int n = 20 + static_cast<int>(seed * 7 % 50);
    int parts = 2 + static_cast<int>(seed % 6);
    auto g = gen_random_connected(n, 0.06, split_seed(seed, 4));
    AggOp op = seed % 3 == 0 ? AggOp::min : (seed % 3 == 1 ? AggOp::sum : AggOp::max);
    auto inst = random_pa_instance(g, parts, op, split_seed(seed, 5), false);
    auto want = oracle_pa(inst);
    for (int mode = 0; mode < 2; ++mode) {
      CAPTURE(seed);
      CAPTURE(mode);
      Simulator s(g);
      auto r = pa::pa_pipeline(s, inst, mode ? pa::SolveMode::rand : pa::SolveMode::det,
                               split_seed(seed, 6 + mode));
      bool good = r.report.completed;
      for (int v = 0; v < n && good; ++v)
        good = r.node_value[v] == want[inst.partition.part_of[v]];
      CHECK(good);
      agreements += good;
    }
  }
  CHECK(agreements == 50);
}
