#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "congest/graph.hpp"
#include "congest/ops.hpp"
#include "congest/sim.hpp"
#include "congest/treecomm.hpp"

namespace congest::subparts {

// Sampling density for the randomized division: each node of a large part
// self-elects with probability min(1, kSampleFactor * ln n / threshold).
inline constexpr double kSampleFactor = 4.0;
// Iteration budget factor for the deterministic division: the merge loop runs
// kIterFactor * ceil(log2 n) times (it usually exits early).
inline constexpr int kIterFactor = 3;
// Slack factor in the per-part sub-part count bound
// k_i <= kCountFactor * (1 + |P_i| * ln n / threshold).
inline constexpr int kCountFactor = 8;
// Slack added to log*(2^64) in the three-coloring round bound.
inline constexpr int kColorRoundSlack = 6;
// log*(2^64): 64 -> 6 -> ~2.6 -> ~1.4 -> ~0.45.
inline constexpr int kLogStarWordRange = 5;

// A successor pointer is a self-loop, out of range, or not a graph edge.
struct OutDegreeViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
// The randomized division left nodes unclaimed even after its retry.
struct CoverageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// An incomplete sub-part strictly smaller than its part has no exit edge.
// Impossible when the partition is valid; reaching it means corrupted state.
struct Stalled : std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Aggregation provider

// Anything that can give every node the fold of its group's values. The group
// structure (one value out per node, folded over that node's group) is fixed
// when the provider is built; costs are folded into `cost`.
class PaProvider {
 public:
  virtual ~PaProvider() = default;
  virtual std::vector<uint64_t> solve(AggOp op, const std::vector<uint64_t>& values,
                                      sim::SimReport& cost) = 0;
};

// Folds straight over explicit trees, one per group: convergecast up, result
// broadcast down. Rounds scale with tree height, so this is the right
// provider for sub-part trees and for small parts, and it doubles as the
// reference provider in tests.
class TreePaProvider final : public PaProvider {
 public:
  TreePaProvider(sim::Simulator& s, treecomm::SpanningForest forest, uint64_t round_limit);

  std::vector<uint64_t> solve(AggOp op, const std::vector<uint64_t>& values,
                              sim::SimReport& cost) override;

  int calls() const { return calls_; }

 private:
  sim::Simulator& sim_;
  treecomm::SpanningForest forest_;
  uint64_t round_limit_ = 0;
  int calls_ = 0;
};

// ---------------------------------------------------------------------------
// Three-coloring of an orientation forest

// One color-reduction step: the new color is (index of the lowest bit where
// own and successor colors differ) * 2 + own bit at that index.
uint64_t cv_reduce(uint64_t own, uint64_t succ);
// Reduction step for nodes without a successor: own bit 0.
uint64_t cv_reduce_root(uint64_t own);

// Colors a pseudo-forest given by successor pointers (succ[v] = -1 or a graph
// neighbor, at most one per node) with 3 colors such that every v with a
// successor gets color[v] != color[succ[v]]. Initial colors default to node
// ids; callers may pass any distinct 64-bit values. Finishes in exactly
// kLogStarWordRange + kColorRoundSlack rounds with at most 2 * (pointer
// count) * rounds messages.
std::pair<std::vector<int>, sim::SimReport> cole_vishkin_3color(
    sim::Simulator& s, const std::vector<int>& succ,
    const std::vector<uint64_t>& initial = {}, uint64_t round_limit = 1u << 20);

// ---------------------------------------------------------------------------
// Star joinings

enum class StarRole { untouched, receiver, joiner };

// Which parts merge where: joiners attach to the receiver their chosen edge
// points at; receivers absorb; untouched parts wait for the next attempt.
struct StarJoining {
  std::vector<StarRole> role;    // per part
  std::vector<int> joiner_edge;  // per part: the joiner's edge id, else -1

  int joiner_count() const;
  int receiver_count() const;
};

// Throws std::logic_error unless: no part is both joiner and receiver (by
// construction of the enum this means roles are well formed), every joiner
// has its part's chosen edge recorded, and that edge lands in a receiver
// part. Parts without a chosen edge must not be joiners.
void validate_star_joining(const NetworkGraph& g, const Partition& parts,
                           const std::vector<int>& chosen_edge, const StarJoining& sj);

// Coin-flip variant: heads parts receive; tails parts whose chosen edge lands
// in a heads part join. One PA spreads the leader's coin, one edge exchange
// fetches the target's coin, one PA spreads the designation. A quarter of the
// parts merge in expectation.
std::pair<StarJoining, sim::SimReport> star_joining_random(
    sim::Simulator& s, const Partition& parts, const std::vector<int>& leaders,
    const std::vector<int>& chosen_edge, PaProvider& pa, uint64_t seed,
    uint64_t round_limit = 1u << 20);

// Deterministic variant. Parts with in-degree >= 2 (and pointed-at parts that
// have no chosen edge of their own) become receivers and their pointers
// joiners; the remaining pointer chains and cycles are 3-colored at part
// level (colors spread through the provider, endpoints of chosen edges relay
// them across parts), then three color sweeps let each still-unsettled part
// whose target is still unsettled join it. At least a third of the parts
// with a chosen edge end up merged, and the provider is invoked O(log* of
// the id range) times.
std::pair<StarJoining, sim::SimReport> star_joining_det(
    sim::Simulator& s, const Partition& parts, const std::vector<int>& leaders,
    const std::vector<int>& chosen_edge, PaProvider& pa, uint64_t round_limit = 1u << 20);

// ---------------------------------------------------------------------------
// Sub-part divisions

// Every part split into connected sub-parts, each spanned by a tree rooted at
// its representative. Sub-part ids are the representative's node id.
struct SubPartDivision {
  std::vector<int> rep;     // node -> representative node id
  std::vector<int> parent;  // node -> sub-part tree parent, -1 at the rep
  std::vector<int> depth;   // node -> hops to the rep along the tree
  std::vector<char> complete;  // node -> sub-part reached the size threshold

  int n() const { return static_cast<int>(rep.size()); }
  // Number of distinct sub-parts inside each part (the k_i's).
  std::vector<int> counts_per_part(const Partition& p) const;
  // Distinct representatives, ascending.
  std::vector<int> representatives() const;
};

// Checks: rep/parent/depth describe forests of graph edges confined to single
// parts, every sub-part is connected with its rep as root, depths are exact,
// and every tree's diameter is at most diameter_cap (skipped when < 0).
// Throws std::logic_error on any violation.
void validate_division(const NetworkGraph& g, const Partition& p, const SubPartDivision& d,
                       int diameter_cap);

// Text format: one "v subpart_id representative_id parent_or_-1" line per
// node (subpart_id and representative_id coincide in this library; both are
// kept in the file format).
std::string format_division(const SubPartDivision& d);
SubPartDivision parse_division(const std::string& text, int n);

struct DivisionResult {
  SubPartDivision division;
  sim::SimReport report;
  int retries = 0;
};

// Randomized division: parts no larger than `threshold` flood from their
// leader; larger parts self-elect representatives and every node takes the
// first representative id it hears (smallest id on ties), hop-capped at
// `threshold`. Unclaimed nodes trigger one retry at doubled election
// probability; a second failure throws CoverageFailure. Tree heights stay
// <= threshold, so diameters stay <= 2 * threshold.
DivisionResult subpart_division_random(sim::Simulator& s, const Partition& p,
                                       const std::vector<int>& leaders, int threshold,
                                       uint64_t seed, uint64_t round_limit = 1u << 22);

// Deterministic division: sub-parts start as singletons and repeatedly merge
// by star joinings, each incomplete sub-part picking its exit edge with a
// min-fold over its tree (edges to incomplete neighbors first, else edges
// landing at depth <= threshold in complete neighbors). Sub-parts are
// complete at size >= threshold or when they exhaust their part. Tree
// diameters stay <= 4 * threshold. With absorb_leftovers, leftover incomplete
// sub-parts are merged into adjacent complete ones after the loop (used by
// k_dominating_set; the diameter cap widens to 6 * threshold).
DivisionResult subpart_division_det(sim::Simulator& s, const Partition& p, int threshold,
                                    uint64_t round_limit = 1u << 22,
                                    bool absorb_leftovers = false);

// Representatives of a deterministic division of the whole graph (one part)
// with completeness threshold ceil(k/6): at most 6n/k nodes, and every node
// is within distance k of its own representative.
std::pair<std::vector<int>, sim::SimReport> k_dominating_set(sim::Simulator& s, int k,
                                                             uint64_t round_limit = 1u << 22);

}  // namespace congest::subparts
