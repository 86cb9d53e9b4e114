#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "congest/graph.hpp"
#include "congest/ops.hpp"
#include "congest/pa_instance.hpp"
#include "congest/shortcuts.hpp"
#include "congest/sim.hpp"
#include "congest/subparts.hpp"

namespace congest::pa {

// Round budget constant for pa_solve in det mode:
// rounds <= kPaRoundFactor * max(1,b) * (D_T + c + H + 1) * (ceil(log2 max(4,n)) + 1),
// where H is the tallest sub-part tree of the division handed in (the canonical
// division built with threshold D_T keeps H <= 2*D_T, folding it into the
// constant). Checked inside pa_solve; a violation throws logic_error.
inline constexpr int kPaRoundFactor = 8;
// Message budget: messages <= kPaMessageFactor * max(1,m) * (ceil(log2 max(4,n)) + 1)^2,
// checked in both modes.
inline constexpr int kPaMessageFactor = 64;
// End-to-end budget asserted by pipeline tests:
// total messages <= kPipelineMessageFactor * m * (ln n)^3 with n floored at e.
inline constexpr int kPipelineMessageFactor = 64;
// Randomized mode runs the block-route stages at multiplicity
// beta = ceil(kBetaFactor * ln n).
inline constexpr double kBetaFactor = 3.0;

enum class SolveMode { det, rand };

inline const char* solve_mode_name(SolveMode m) { return m == SolveMode::det ? "det" : "rand"; }

struct PaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Spreading finished its iteration budget with some node still uninformed:
// the part's block structure is coarser than the budget allows.
struct ShortcutTooWeak : PaError {
  using PaError::PaError;
};
// The leaderless coarsening hit its iteration cap before the coarse parts
// matched the input parts. Each star joining merges a constant fraction of the
// remaining parts, so reaching this means corrupted state, not bad luck.
struct CoarseningIncomplete : PaError {
  using PaError::PaError;
};

// What every solver hands back: the per-node aggregate plus the cost of the
// whole choreography (all constituent runs folded together).
struct PaResult {
  std::vector<uint64_t> node_value;
  sim::SimReport report;
};

// Solves the instance on a sub-part division and a tree-restricted shortcut
// for the same partition. Parts smaller than the tree height whose division
// is a single tree aggregate directly on it; every other part runs the
// spreading loop: the leader's id climbs to its representative, then for up
// to b iterations the active representatives route through their shortcut
// blocks, newly reached sub-parts broadcast internally, boundary edges carry
// the word one hop, and fresh sub-parts route it up to their representative
// (a sub-part, once finished, never re-enters). One trailing block stage
// flushes sub-parts whose representatives woke in the final iteration, so a
// budget one stage short of the spread can still finish; any larger deficit
// leaves nodes uninformed and raises ShortcutTooWeak. The same schedule is
// run three times: spreading the leader id, mirrored backwards to fold the
// values to the leader, and forwards again to publish the fold.
//
// b < 0 means "use the shortcut's measured block parameter". rand mode delays
// each part's block-route injections by a uniform draw from [0, c) and runs
// those stages at multiplicity beta; everything else is already part-disjoint.
PaResult pa_solve(sim::Simulator& s, const PaInstance& inst,
                  const subparts::SubPartDivision& division,
                  const shortcuts::TreeRestrictedShortcut& sc, SolveMode mode, uint64_t seed,
                  int b = -1, uint64_t round_limit = 1u << 22);

// Outcome of the distributed budget check, per part and per node.
struct BlockBudgetReport {
  std::vector<char> part_clean;       // all nodes reached, no complaint heard
  std::vector<uint64_t> part_blocks;  // exact block count; meaningful when clean
  std::vector<char> part_pass;        // clean and block count <= budget
  std::vector<char> node_pass;        // each node's local copy of the verdict
  sim::SimReport report;
};

// Distributed check that every part's block count fits the budget b: spread
// the leader id with exactly b spreading iterations, let uninformed nodes
// complain one hop to same-part neighbors, then fold (complaint seen, blocks
// counted here) back to the leader in one mirrored sum and publish the
// verdict. A part passes iff every node was reached, nobody complained, and
// the exact count is <= b. Blocks are counted once each: a routed block at
// the one frontier representative its root named, a lone non-representative
// node with no shortcut edge as its own block.
//
// Precondition on top of pa_solve's: every component of a part's shortcut
// edges that contains an edge must contain one of that part's sub-part
// representatives (true for edge sets claimed as upward trails from
// representatives, which is how both constructions produce them).
// Deterministic; small parts go through the same machinery, since block
// structure is what is being measured.
BlockBudgetReport verify_block_parameter(sim::Simulator& s, const Partition& partition,
                                         const std::vector<int>& leaders,
                                         const subparts::SubPartDivision& division,
                                         const shortcuts::TreeRestrictedShortcut& sc, int b,
                                         uint64_t round_limit = 1u << 22);

// pa_solve for instances that know no leaders: nodes start as singleton
// coarse parts led by themselves, and up to kIterFactor * ceil(log2 n)
// rounds of (pick the smallest boundary edge staying inside the input part,
// star-join, adopt the receiver's leader) merge them until the coarse parts
// equal the input parts, whose elected leaders then feed pa_solve. The
// intermediate folds run on the coarse parts' merged spanning trees,
// maintained by re-root waves as parts join.
PaResult pa_solve_leaderless(sim::Simulator& s, const PaInstance& inst,
                             const subparts::SubPartDivision& division,
                             const shortcuts::TreeRestrictedShortcut& sc, SolveMode mode,
                             uint64_t seed, int b = -1, uint64_t round_limit = 1u << 22);

// One-call entry point: builds the BFS tree distributedly, divides the parts
// (det or rand per mode), finds a working (b, c) shortcut by doubling search,
// and hands everything to pa_solve_leaderless. Defined with the construction
// routines it drives.
PaResult pa_pipeline(sim::Simulator& s, const PaInstance& inst, SolveMode mode, uint64_t seed,
                     uint64_t round_limit = 1u << 22);

// The obvious alternative pa_solve is measured against: one store-and-forward
// convergecast over the whole tree in which every node injects its (part,
// value) pair, streams of one part merge only where they physically meet, and
// the root answers each part back down the same paths. Correct, and on
// spread-out parts pays for depth per value instead of per sub-part.
PaResult naive_block_aggregation_baseline(sim::Simulator& s, const RootedTree& tree,
                                          const PaInstance& inst, uint64_t round_limit = 1u << 22);

// PaProvider backed by pa_solve with a fixed partition, division, and
// shortcut: each solve() call wraps the values into an instance and runs the
// full machinery (rand mode re-seeds per call).
class FullPaProvider final : public subparts::PaProvider {
 public:
  FullPaProvider(sim::Simulator& s, Partition partition, std::vector<int> leaders,
                 const subparts::SubPartDivision& division,
                 const shortcuts::TreeRestrictedShortcut& sc, SolveMode mode, uint64_t seed,
                 int b = -1, uint64_t round_limit = 1u << 22);

  std::vector<uint64_t> solve(AggOp op, const std::vector<uint64_t>& values,
                              sim::SimReport& cost) override;

  int calls() const { return calls_; }

 private:
  sim::Simulator& sim_;
  Partition partition_;
  std::vector<int> leaders_;
  const subparts::SubPartDivision& division_;
  const shortcuts::TreeRestrictedShortcut& sc_;
  SolveMode mode_;
  uint64_t seed_;
  int b_;
  uint64_t round_limit_;
  int calls_ = 0;
};

// {"aggregates": {part id -> aggregate}, "report": SimReport fields}.
std::string pa_result_json(const PaResult& r, const Partition& partition);

}  // namespace congest::pa
