#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "congest/graph.hpp"
#include "congest/oracle.hpp"
#include "congest/pa.hpp"
#include "congest/shortcuts.hpp"
#include "congest/sim.hpp"
#include "congest/subparts.hpp"

namespace congest::construction {

// A part is frozen once its distributed block count passes the budget
// kFreezeSlack * b - 1, i.e. lands strictly below kFreezeSlack * b.
inline constexpr int kFreezeSlack = 3;

// Upper bound on how many claim iterations the randomized builder runs before
// giving up: kRandIterFactor * ceil(log2 #parts), floored at one.
inline constexpr int kRandIterFactor = 4;

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-part construction outcome: when the part's edge set stopped changing
// and the exact block count the verifier measured at that moment.
struct ShortcutBuildEntry {
  int part_id = -1;
  int frozen_iteration = 0;
  uint64_t b_actual = 0;
};

struct ShortcutBuildLedger {
  std::vector<ShortcutBuildEntry> entries;  // ascending part id
};

// One JSON array, one object per part: {"part_id":..,"frozen_iteration":..,
// "b_actual":..}.
std::string ledger_json(const ShortcutBuildLedger& ledger);

// Some parts were still active when the iteration cap ran out: the (b, c)
// targets sit below what this graph and partition admit. Carries the cost of
// the failed attempt so searches can account for every probe they burned.
struct TargetsInfeasible : ConstructionError {
  TargetsInfeasible(const std::string& what, sim::SimReport spent)
      : ConstructionError(what), report(std::move(spent)) {}
  sim::SimReport report;
};

// The (b, c) grid ran dry. Unreachable on connected inputs: the (n, n) probe
// cannot break any edge, so every id trail reaches the root and each part
// ends in a single block.
struct SearchExhausted : ConstructionError {
  using ConstructionError::ConstructionError;
};

// Distributed doubling claim pass over a standalone path, positions 1..len
// ordered source (index 0) to sink. Runs ceil(log2 len) iterations; in
// iteration i the nodes at positions = 2^i mod 2^(i+1) drop their ids and
// sever their upward edge when holding at least 2c of them, and otherwise
// stream a copy 2^i positions up (two ids per envelope, so iteration i fits
// in c + 2^i rounds), stopping early at previously severed edges. Ids claim
// every edge they cross plus, at the end, the unsevered edge directly above
// their resting place. The trace must match oracle_path_shortcut exactly.
struct PathClaimResult {
  PathShortcutTrace trace;
  sim::SimReport report;
};
PathClaimResult path_shortcut(const std::vector<std::vector<int>>& start_sets, int c,
                              uint64_t round_limit = 1u << 22);

// What both shortcut builders hand back. The shortcut references the tree and
// partition passed in, which therefore must outlive it.
struct BuildResult {
  shortcuts::TreeRestrictedShortcut shortcut;
  ShortcutBuildLedger ledger;
  sim::SimReport report;
  int iterations = 0;  // outer claim/verify iterations actually run
};

// Deterministic builder. Each outer iteration seeds the part id at every
// representative of a still-active part, runs the path claim pass over all
// heavy paths of `tree` in dependency waves (a path starts once every path
// feeding it across a light edge has finished; surviving sink sets cross the
// light edge, claiming it, and seed the landing position), then verifies the
// accumulated per-part claims with the block-budget check and freezes parts
// that fit below kFreezeSlack * b blocks. At most ceil(log2 #parts) + 1
// iterations; leftovers raise TargetsInfeasible. The result's congestion is
// bounded by 2c * ceil(log2 D_T) * (ceil(log2 #parts) + 1).
BuildResult deterministic_shortcut(sim::Simulator& s, const RootedTree& tree,
                                   const Partition& partition, const std::vector<int>& leaders,
                                   const subparts::SubPartDivision& division, int b, int c,
                                   uint64_t round_limit = 1u << 22);

// Randomized builder. Each iteration the representatives of active parts
// inject their part id after a seeded delay below 2c; nodes forward the union
// of ids seen this iteration up the tree, two per envelope, and an edge that
// has accumulated 2c distinct ids is discarded for the iteration (pending and
// later ids are dropped there; ids already across keep their claims). Ids
// claim the edges they cross. Verification and freezing as in the
// deterministic builder, up to kRandIterFactor * ceil(log2 #parts)
// iterations. Per-iteration claim load per edge stays below 2c, and messages
// per iteration stay within kRouteMessageFactor * #representatives * D_T.
BuildResult randomized_shortcut(sim::Simulator& s, const RootedTree& tree,
                                const Partition& partition, const std::vector<int>& leaders,
                                const subparts::SubPartDivision& division, int b, int c,
                                uint64_t seed, uint64_t round_limit = 1u << 22);

// Smallest targets the builders accept for this instance, found by probing
// the grid b, c in {1, 2, 4, ..., n} (n appended when not itself a power of
// two) in ascending b + log2(c) score, ties toward smaller b then smaller c.
// `total` aggregates every probe, failed ones included; `build.report` is the
// winning probe alone.
struct SearchResult {
  int b = 0;
  int c = 0;
  BuildResult build;
  sim::SimReport total;
  int attempts = 0;
};
SearchResult doubling_search(sim::Simulator& s, const RootedTree& tree, const Partition& partition,
                             const std::vector<int>& leaders,
                             const subparts::SubPartDivision& division, pa::SolveMode mode,
                             uint64_t seed = 0, uint64_t round_limit = 1u << 22);

// Centralized fallback: every part holding at least sqrt(n) nodes receives
// the whole tree (one block each); smaller parts receive exactly the tree
// edges internal to them, spanning each of their tree-induced components.
shortcuts::TreeRestrictedShortcut trivial_shortcut(const NetworkGraph& g, const RootedTree& tree,
                                                   const Partition& partition);

}  // namespace congest::construction
