#include "congest/subparts.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "congest/oracle.hpp"
#include "congest/pa_instance.hpp"
#include "congest/rng.hpp"
#include "congest/treecomm.hpp"
#include "doctest.h"

using namespace congest;
using namespace congest::subparts;

namespace {

NetworkGraph ring(int n) {
  std::vector<Edge> es;
  for (int i = 0; i < n; ++i) es.push_back({i, (i + 1) % n, 1});
  return NetworkGraph(n, es);
}

NetworkGraph path(int n) {
  std::vector<Edge> es;
  for (int i = 0; i + 1 < n; ++i) es.push_back({i, i + 1, 1});
  return NetworkGraph(n, es);
}

NetworkGraph grid(int rows, int cols) {
  std::vector<Edge> es;
  auto id = [&](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) es.push_back({id(r, c), id(r, c + 1), 1});
      if (r + 1 < rows) es.push_back({id(r, c), id(r + 1, c), 1});
    }
  }
  return NetworkGraph(rows * cols, es);
}

Partition singletons(int n) {
  Partition p;
  p.count = n;
  p.part_of.resize(n);
  std::iota(p.part_of.begin(), p.part_of.end(), 0);
  return p;
}

Partition whole(int n) {
  Partition p;
  p.count = 1;
  p.part_of.assign(n, 0);
  return p;
}

std::vector<int> iota_leaders(int n) {
  std::vector<int> l(n);
  std::iota(l.begin(), l.end(), 0);
  return l;
}

TreePaProvider provider_for(sim::Simulator& s, const Partition& p,
                            const std::vector<int>& leaders) {
  return TreePaProvider(s, treecomm::part_forest_reference(s.graph(), p, leaders), 1u << 20);
}

// Largest distance from any node to the given source set.
int eccentricity_of_set(const NetworkGraph& g, const std::vector<int>& sources) {
  std::vector<int> dist(g.n(), -1);
  std::vector<int> queue;
  for (int v : sources) {
    dist[v] = 0;
    queue.push_back(v);
  }
  for (size_t h = 0; h < queue.size(); ++h) {
    int v = queue[h];
    for (const auto& [w, e] : g.adj(v)) {
      (void)e;
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  int worst = 0;
  for (int v = 0; v < g.n(); ++v) {
    REQUIRE(dist[v] >= 0);
    worst = std::max(worst, dist[v]);
  }
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Color reduction helpers

TEST_CASE("cv_reduce folds a color pair into the differing-bit code") {
  CHECK(cv_reduce(5, 9) == 5);   // first differing bit 2, own bit 1
  CHECK(cv_reduce(9, 5) == 4);   // same bit, other side
  CHECK(cv_reduce(0, 1) == 0);
  CHECK(cv_reduce(1, 0) == 1);
  CHECK(cv_reduce_root(7) == 1);
  CHECK(cv_reduce_root(6) == 0);
  CHECK_THROWS_AS(cv_reduce(4, 4), std::logic_error);
  // Adjacent results stay distinct: same index forces opposite bits.
  for (uint64_t a = 0; a < 20; ++a) {
    for (uint64_t b = 0; b < 20; ++b) {
      if (a == b) continue;
      CHECK(cv_reduce(a, b) != cv_reduce(b, a));
    }
  }
}

TEST_CASE("three-coloring a mutual pair lands on the derived colors") {
  NetworkGraph g(2, {{0, 1, 1}});
  sim::Simulator s(g);
  auto [colors, rep] = cole_vishkin_3color(s, {1, 0}, {5, 9});
  CHECK(colors == std::vector<int>{0, 1});
  CHECK(rep.rounds == 11);
  CHECK(rep.messages == 22);  // 2 announces + 2 nodes x 10 color rounds
  CHECK(rep.max_edge_load == 1);
  CHECK(rep.completed);
}

TEST_CASE("three-coloring a lone root needs no messages") {
  NetworkGraph g(1, {});
  sim::Simulator s(g);
  auto [colors, rep] = cole_vishkin_3color(s, {-1});
  CHECK(colors == std::vector<int>{1});
  CHECK(rep.rounds == 0);
  CHECK(rep.messages == 0);
}

TEST_CASE("three-coloring a 64-ring of shuffled word-size ids") {
  int n = 64;
  NetworkGraph g = ring(n);
  std::vector<int> succ(n);
  for (int i = 0; i < n; ++i) succ[i] = (i + 1) % n;
  std::vector<uint64_t> initial(n);
  Rng rng(77);
  std::set<uint64_t> used;
  for (int i = 0; i < n; ++i) {
    uint64_t x = rng.next();
    while (used.count(x)) x = rng.next();
    used.insert(x);
    initial[i] = x;
  }
  sim::Simulator s(g);
  auto [colors, rep] = cole_vishkin_3color(s, succ, initial);
  for (int i = 0; i < n; ++i) {
    CHECK(colors[i] >= 0);
    CHECK(colors[i] <= 2);
    CHECK(colors[i] != colors[succ[i]]);
  }
  CHECK(rep.rounds == static_cast<uint64_t>(kLogStarWordRange + kColorRoundSlack));
  CHECK(rep.messages <= 2 * static_cast<uint64_t>(g.m()) * rep.rounds);
  CHECK(rep.max_edge_load == 1);
}

TEST_CASE("three-coloring rejects malformed successor lists") {
  NetworkGraph g = path(3);
  sim::Simulator s(g);
  CHECK_THROWS_AS(cole_vishkin_3color(s, {0, 2, -1}), OutDegreeViolation);   // self loop
  CHECK_THROWS_AS(cole_vishkin_3color(s, {2, -1, -1}), OutDegreeViolation);  // not a neighbor
  CHECK_THROWS_AS(cole_vishkin_3color(s, {3, -1, -1}), OutDegreeViolation);  // out of range
  CHECK_THROWS_AS(cole_vishkin_3color(s, {1, -1}), OutDegreeViolation);      // wrong size
  CHECK_THROWS_AS(cole_vishkin_3color(s, {1, 2, -1}, {4, 4, 7}), std::invalid_argument);
}

TEST_CASE("three-coloring random pointer forests stays proper") {
  for (uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL, 15ULL}) {
    NetworkGraph g = gen_random_connected(40, 0.1, seed);
    Rng rng(split_seed(seed, 99));
    std::vector<int> succ(g.n(), -1);
    for (int v = 0; v < g.n(); ++v) {
      const auto& nbrs = g.adj(v);
      if (rng.coin()) succ[v] = nbrs[rng.below(nbrs.size())].first;
    }
    sim::Simulator s(g);
    auto [colors, rep] = cole_vishkin_3color(s, succ);
    for (int v = 0; v < g.n(); ++v) {
      CHECK(colors[v] >= 0);
      CHECK(colors[v] <= 2);
      if (succ[v] >= 0) CHECK(colors[v] != colors[succ[v]]);
    }
    CHECK(rep.rounds <= static_cast<uint64_t>(kLogStarWordRange + kColorRoundSlack));
    CHECK(rep.max_edge_load == 1);
  }
}

// ---------------------------------------------------------------------------
// Tree-backed part folds

TEST_CASE("tree provider agrees with the centralized fold on every op") {
  NetworkGraph g = gen_random_connected(90, 0.06, 31);
  Partition p = gen_random_connected_partition(g, 5, 31);
  std::vector<int> leaders = min_id_leaders(p);
  sim::Simulator s(g);
  TreePaProvider pa = provider_for(s, p, leaders);
  Rng rng(400);
  int expected_calls = 0;
  for (AggOp op : kAllAggOps) {
    std::vector<uint64_t> values(g.n());
    for (int v = 0; v < g.n(); ++v) {
      values[v] = op == AggOp::first_by_id ? first_by_id_pack(v, rng.next() & kFirstByIdValueMask)
                                           : rng.next();
    }
    sim::SimReport cost;
    std::vector<uint64_t> got = pa.solve(op, values, cost);
    PaInstance inst;
    inst.partition = p;
    inst.values = values;
    inst.op = op;
    std::vector<uint64_t> want = oracle_pa(inst);
    for (int v = 0; v < g.n(); ++v) CHECK(got[v] == want[p.part_of[v]]);
    CHECK(cost.messages > 0);
    CHECK(cost.max_edge_load == 1);
    CHECK(pa.calls() == ++expected_calls);
  }
}

// ---------------------------------------------------------------------------
// Star joinings

TEST_CASE("star joining det: four satellites join one hub") {
  NetworkGraph g(5, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 1}});
  Partition p = singletons(5);
  std::vector<int> leaders = iota_leaders(5);
  std::vector<int> chosen = {-1, g.edge_between(1, 0), g.edge_between(2, 0),
                             g.edge_between(3, 0), g.edge_between(4, 0)};
  sim::Simulator s(g);
  TreePaProvider pa = provider_for(s, p, leaders);
  auto [sj, rep] = star_joining_det(s, p, leaders, chosen, pa);
  validate_star_joining(g, p, chosen, sj);
  CHECK(sj.role[0] == StarRole::receiver);
  for (int i = 1; i < 5; ++i) {
    CHECK(sj.role[i] == StarRole::joiner);
    CHECK(sj.joiner_edge[i] == chosen[i]);
  }
  CHECK(pa.calls() == 2);  // everything is settled before any coloring
  CHECK(rep.max_edge_load == 1);
}

TEST_CASE("star joining det: a mutual pair resolves by color sweep") {
  NetworkGraph g(2, {{0, 1, 1}});
  Partition p = singletons(2);
  std::vector<int> leaders = iota_leaders(2);
  std::vector<int> chosen = {0, 0};  // the lone edge, in both directions
  sim::Simulator s(g);
  TreePaProvider pa = provider_for(s, p, leaders);
  auto [sj, rep] = star_joining_det(s, p, leaders, chosen, pa);
  validate_star_joining(g, p, chosen, sj);
  CHECK(sj.role[0] == StarRole::receiver);
  CHECK(sj.role[1] == StarRole::joiner);
  CHECK(sj.joiner_count() == 1);  // one of two parts merges: exactly a third floor'd up
  CHECK(pa.calls() <= 15);
  CHECK(rep.max_edge_load == 1);
}

TEST_CASE("star joining det merges at least a third of a pointing ring") {
  int n = 60;
  NetworkGraph g = ring(n);
  Partition p = singletons(n);
  std::vector<int> leaders = iota_leaders(n);
  std::vector<int> chosen(n);
  for (int i = 0; i < n; ++i) chosen[i] = g.edge_between(i, (i + 1) % n);
  sim::Simulator s(g);
  TreePaProvider pa = provider_for(s, p, leaders);
  auto [sj, rep] = star_joining_det(s, p, leaders, chosen, pa);
  validate_star_joining(g, p, chosen, sj);
  CHECK(3 * sj.joiner_count() >= n);
  CHECK(pa.calls() <= 15);
  CHECK(rep.max_edge_load == 1);
  CHECK(rep.completed);
}

TEST_CASE("validate_star_joining rejects tampered outputs") {
  NetworkGraph g(2, {{0, 1, 1}});
  Partition p = singletons(2);
  std::vector<int> chosen = {0, 0};
  StarJoining sj;
  sj.role = {StarRole::joiner, StarRole::untouched};  // joiner into a non-receiver
  sj.joiner_edge = {0, -1};
  CHECK_THROWS_AS(validate_star_joining(g, p, chosen, sj), std::logic_error);
  sj.role = {StarRole::joiner, StarRole::receiver};
  sj.joiner_edge = {-1, -1};  // joiner with no edge recorded
  CHECK_THROWS_AS(validate_star_joining(g, p, chosen, sj), std::logic_error);
  sj.role = {StarRole::untouched, StarRole::receiver};
  sj.joiner_edge = {0, -1};  // edge recorded without the role
  CHECK_THROWS_AS(validate_star_joining(g, p, chosen, sj), std::logic_error);
}

TEST_CASE("star joining random follows the leader coins") {
  NetworkGraph g(2, {{0, 1, 1}});
  Partition p = singletons(2);
  std::vector<int> leaders = iota_leaders(2);
  std::vector<int> chosen = {0, 0};
  bool saw_merge = false, saw_both_heads = false, saw_both_tails = false;
  for (uint64_t seed = 0; seed < 60; ++seed) {
    bool h0 = Rng(split_seed(seed, 0)).coin();
    bool h1 = Rng(split_seed(seed, 1)).coin();
    sim::Simulator s(g);
    TreePaProvider pa = provider_for(s, p, leaders);
    auto [sj, rep] = star_joining_random(s, p, leaders, chosen, pa, seed);
    validate_star_joining(g, p, chosen, sj);
    for (int i = 0; i < 2; ++i) {
      bool heads = i == 0 ? h0 : h1;
      bool other = i == 0 ? h1 : h0;
      StarRole want = heads              ? StarRole::receiver
                      : other            ? StarRole::joiner
                                         : StarRole::untouched;
      CHECK(sj.role[i] == want);
    }
    saw_merge |= h0 != h1;
    saw_both_heads |= h0 && h1;
    saw_both_tails |= !h0 && !h1;
    CHECK(pa.calls() == 2);
    CHECK(rep.max_edge_load == 1);
  }
  CHECK(saw_merge);
  CHECK(saw_both_heads);
  CHECK(saw_both_tails);
}

TEST_CASE("star joining random merges about a quarter of a pointing ring") {
  int n = 100;
  NetworkGraph g = ring(n);
  Partition p = singletons(n);
  std::vector<int> leaders = iota_leaders(n);
  std::vector<int> chosen(n);
  for (int i = 0; i < n; ++i) chosen[i] = g.edge_between(i, (i + 1) % n);
  double total = 0;
  int trials = 200;
  for (uint64_t seed = 0; seed < static_cast<uint64_t>(trials); ++seed) {
    sim::Simulator s(g);
    TreePaProvider pa = provider_for(s, p, leaders);
    auto [sj, rep] = star_joining_random(s, p, leaders, chosen, pa, seed);
    validate_star_joining(g, p, chosen, sj);
    total += static_cast<double>(sj.joiner_count()) / n;
  }
  double mean = total / trials;
  CHECK(mean >= 0.15);
  CHECK(mean <= 0.35);
}

// ---------------------------------------------------------------------------
// Deterministic division

TEST_CASE("deterministic division: a lone node is complete by itself") {
  NetworkGraph g(1, {});
  sim::Simulator s(g);
  DivisionResult res = subpart_division_det(s, whole(1), 5);
  validate_division(g, whole(1), res.division, 0);
  CHECK(res.division.representatives() == std::vector<int>{0});
  CHECK(res.division.complete[0] == 1);
}

TEST_CASE("deterministic division fuses small parts into one sub-part") {
  for (int n : {3, 5}) {
    NetworkGraph g = path(n);
    sim::Simulator s(g);
    DivisionResult res = subpart_division_det(s, whole(n), 5);
    validate_division(g, whole(n), res.division, 4 * 5);
    CHECK(res.division.counts_per_part(whole(n)) == std::vector<int>{1});
    CHECK(res.division.complete[0] == 1);
    CHECK(res.report.max_edge_load == 1);
  }
}

TEST_CASE("deterministic division on a grid keeps diameters within four thresholds") {
  NetworkGraph g = grid(8, 64);
  Partition p = whole(g.n());
  int threshold = 8;
  sim::Simulator s(g);
  DivisionResult res = subpart_division_det(s, p, threshold);
  validate_division(g, p, res.division, 4 * threshold);
  std::vector<int> counts = res.division.counts_per_part(p);
  CHECK(counts[0] <= kCountFactor * std::max(1, g.n() / threshold));
  CHECK(res.report.max_edge_load == 1);
  CHECK(res.report.completed);

  // Bitwise repeatable: a fresh simulator produces the identical division.
  sim::Simulator s2(g);
  DivisionResult res2 = subpart_division_det(s2, p, threshold);
  CHECK(format_division(res2.division) == format_division(res.division));
  CHECK(res2.report.rounds == res.report.rounds);
  CHECK(res2.report.messages == res.report.messages);
}

TEST_CASE("deterministic division respects per-part count budgets on random graphs") {
  for (uint64_t seed : {41ULL, 42ULL}) {
    NetworkGraph g = gen_random_connected(120, 0.05, seed);
    Partition p = gen_random_connected_partition(g, 6, seed);
    int threshold = 4;
    sim::Simulator s(g);
    DivisionResult res = subpart_division_det(s, p, threshold);
    validate_division(g, p, res.division, 4 * threshold);
    std::vector<int> counts = res.division.counts_per_part(p);
    std::vector<int> sizes = p.sizes();
    for (int i = 0; i < p.count; ++i) {
      CHECK(counts[i] <= kCountFactor * std::max(1, sizes[i] / threshold));
    }
    CHECK(res.report.max_edge_load == 1);
  }
}

// ---------------------------------------------------------------------------
// Randomized division

TEST_CASE("random division grows small parts from their leaders") {
  NetworkGraph g = path(3);
  sim::Simulator s(g);
  DivisionResult res = subpart_division_random(s, whole(3), {0}, 10, 7);
  validate_division(g, whole(3), res.division, 2 * 10);
  CHECK(res.division.rep == std::vector<int>{0, 0, 0});
  CHECK(res.division.depth == std::vector<int>{0, 1, 2});
  CHECK(res.retries == 0);
  CHECK(res.report.max_edge_load == 1);
}

TEST_CASE("random division keeps tree heights within the threshold") {
  NetworkGraph g = path(100);
  sim::Simulator s(g);
  int threshold = 5;
  DivisionResult res = subpart_division_random(s, whole(100), {0}, threshold, 3);
  validate_division(g, whole(100), res.division, 2 * threshold);
  for (int v = 0; v < 100; ++v) CHECK(res.division.depth[v] <= threshold);
  CHECK(res.report.rounds <= static_cast<uint64_t>(2 * threshold + 2));
  CHECK(res.report.max_edge_load == 1);
}

TEST_CASE("random division succeeds across a hundred seeds") {
  NetworkGraph g = gen_random_connected(80, 0.08, 9);
  Partition p = gen_random_connected_partition(g, 4, 9);
  std::vector<int> leaders = min_id_leaders(p);
  int threshold = 4;
  int retries = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    sim::Simulator s(g);
    DivisionResult res = subpart_division_random(s, p, leaders, threshold, seed);
    validate_division(g, p, res.division, 2 * threshold);
    retries += res.retries;
  }
  CHECK(retries <= 10);  // the first election should nearly always cover
}

TEST_CASE("random division is reproducible for a fixed seed") {
  NetworkGraph g = gen_random_connected(60, 0.05, 17);
  Partition p = gen_random_connected_partition(g, 3, 17);
  std::vector<int> leaders = min_id_leaders(p);
  sim::Simulator s1(g), s2(g);
  DivisionResult a = subpart_division_random(s1, p, leaders, 6, 123);
  DivisionResult b = subpart_division_random(s2, p, leaders, 6, 123);
  CHECK(format_division(a.division) == format_division(b.division));
  CHECK(a.report.messages == b.report.messages);
  CHECK(a.report.rounds == b.report.rounds);
}

// ---------------------------------------------------------------------------
// k-dominating sets

TEST_CASE("k-dominating set with tiny k picks every node") {
  NetworkGraph g = path(10);
  sim::Simulator s(g);
  auto [dom, rep] = k_dominating_set(s, 1);
  CHECK(dom.size() == 10);

  NetworkGraph g2 = path(60);
  sim::Simulator s2(g2);
  auto [dom2, rep2] = k_dominating_set(s2, 6);
  CHECK(dom2.size() == 60);  // threshold 1 keeps singletons; 6n/k is exactly n here
}

TEST_CASE("k-dominating set covers every node within k hops") {
  NetworkGraph g = path(60);
  sim::Simulator s(g);
  auto [dom, rep] = k_dominating_set(s, 12);
  CHECK(static_cast<int>(dom.size()) <= 6 * 60 / 12);
  CHECK(eccentricity_of_set(g, dom) <= 12);
  CHECK(rep.max_edge_load == 1);

  NetworkGraph g2 = gen_random_connected(300, 0.02, 5);
  sim::Simulator s2(g2);
  auto [dom2, rep2] = k_dominating_set(s2, 30);
  CHECK(static_cast<int>(dom2.size()) <= 6 * 300 / 30);
  CHECK(eccentricity_of_set(g2, dom2) <= 30);
  CHECK(rep2.max_edge_load == 1);
}

TEST_CASE("leftover absorption leaves no incomplete sub-parts") {
  NetworkGraph g = gen_random_connected(150, 0.03, 23);
  sim::Simulator s(g);
  int threshold = 5;
  DivisionResult res = subpart_division_det(s, whole(g.n()), threshold, 1u << 22, true);
  validate_division(g, whole(g.n()), res.division, 6 * threshold);
  for (int v = 0; v < g.n(); ++v) CHECK(res.division.complete[v] == 1);
}

TEST_CASE("k-dominating set rejects out-of-range k") {
  NetworkGraph g = path(4);
  sim::Simulator s(g);
  CHECK_THROWS_AS(k_dominating_set(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(k_dominating_set(s, 5), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Division text format

TEST_CASE("division text round-trips through format and parse") {
  NetworkGraph g = gen_random_connected(50, 0.06, 77);
  Partition p = gen_random_connected_partition(g, 3, 77);
  sim::Simulator s(g);
  DivisionResult res = subpart_division_det(s, p, 4);
  SubPartDivision back = parse_division(format_division(res.division), g.n());
  CHECK(back.rep == res.division.rep);
  CHECK(back.parent == res.division.parent);
  CHECK(back.depth == res.division.depth);
}

TEST_CASE("division parser rejects malformed text") {
  CHECK_THROWS_AS(parse_division("0 0 0 -1\n", 2), std::invalid_argument);    // missing node
  CHECK_THROWS_AS(parse_division("0 0 0 -1\n0 0 0 -1\n", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_division("0 0 1 -1\n", 1), std::invalid_argument);    // ids disagree
  CHECK_THROWS_AS(parse_division("0 1 1 1\n1 1 1 0\n", 2), std::invalid_argument);  // cycle
}
