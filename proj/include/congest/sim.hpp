#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "congest/graph.hpp"
#include "congest/rng.hpp"

namespace congest::sim {

// Per-message payload budget, counted in 64-bit words and including whatever
// tag word a protocol spends on dispatch.
inline constexpr int kMaxPayloadWords = 3;

inline constexpr uint64_t kNever = std::numeric_limits<uint64_t>::max();

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A node tried to send along a non-edge.
struct NonAdjacentSendError : SimError {
  using SimError::SimError;
};
// More than the allowed number of messages crossed one directed edge in one
// round.
struct CapacityExceededError : SimError {
  using SimError::SimError;
};
struct PayloadTooLargeError : SimError {
  using SimError::SimError;
};

struct Envelope {
  int src = -1;
  int dst = -1;
  int len = 0;
  uint64_t w[kMaxPayloadWords] = {0, 0, 0};

  uint64_t w0() const { return w[0]; }
};

// Counters for one run (or, via Simulator::totals(), a whole pipeline).
struct SimReport {
  uint64_t rounds = 0;    // index of the last round that delivered anything
  uint64_t messages = 0;  // delivered envelopes
  uint64_t max_edge_load = 0;  // peak per-directed-edge per-round count
  bool completed = true;       // false when a run hit its round limit
  std::map<std::string, uint64_t> messages_by_phase;

  void absorb(const SimReport& r);
};

class Simulator;

// What a node sees during one round: its inbox (sorted by sender id) and the
// outgoing send budget.
class RoundApi {
 public:
  int node() const { return node_; }
  uint64_t round() const { return round_; }
  const std::vector<Envelope>& inbox() const { return *inbox_; }
  const NetworkGraph& graph() const;

  void send(int dst, uint64_t w0);
  void send(int dst, uint64_t w0, uint64_t w1);
  void send(int dst, uint64_t w0, uint64_t w1, uint64_t w2);

  // Deterministic per-node stream, distinct across runs of one Simulator.
  Rng& rng() { return *rng_; }

 private:
  friend class Simulator;
  Simulator* sim_ = nullptr;
  int node_ = -1;
  uint64_t round_ = 0;
  const std::vector<Envelope>* inbox_ = nullptr;
  Rng* rng_ = nullptr;
};

// A per-node protocol. The simulator steps every program at round 0; after
// that a program runs in rounds where it has mail or in rounds it asked for
// via next_action_round. A program that halts is never stepped again, though
// mail addressed to it still counts as delivered.
class NodeProgram {
 public:
  virtual ~NodeProgram() = default;
  virtual void on_round(RoundApi& api) = 0;

  // Earliest round >= now at which the program wants a step even with an
  // empty inbox; kNever for purely reactive programs.
  virtual uint64_t next_action_round(uint64_t now) const {
    (void)now;
    return kNever;
  }

  bool halted() const { return halted_; }

 protected:
  void halt() { halted_ = true; }

 private:
  bool halted_ = false;
};

// Lockstep message-passing executor. One run = one protocol over the graph;
// a Simulator can host many runs back to back and accumulate their counters,
// with phase labels attributing message totals to pipeline stages.
class Simulator {
 public:
  explicit Simulator(const NetworkGraph& g, uint64_t seed = 0);

  // Messages per directed edge per round, as a function of the round number.
  using MultiplicitySchedule = std::function<int(uint64_t round)>;

  // Runs `programs` (one per node) until quiescence: nothing in flight, and
  // every live program reports kNever. Returns this run's counters and folds
  // them into totals(). A run that reaches round_limit stops with
  // completed = false rather than throwing.
  SimReport run(std::vector<std::unique_ptr<NodeProgram>>& programs,
                uint64_t round_limit,
                MultiplicitySchedule multiplicity = nullptr);

  const NetworkGraph& graph() const { return graph_; }
  const SimReport& totals() const { return totals_; }

  // Labels messages of subsequent runs; restores the previous label on
  // destruction.
  class PhaseScope {
   public:
    PhaseScope(Simulator& sim, std::string label);
    ~PhaseScope();
    PhaseScope(const PhaseScope&) = delete;
    PhaseScope& operator=(const PhaseScope&) = delete;

   private:
    Simulator& sim_;
    std::string saved_;
  };

  const std::string& phase() const { return phase_; }

 private:
  friend class RoundApi;
  void record_send(int src, int dst, int len, const uint64_t* words);

  const NetworkGraph& graph_;
  uint64_t seed_ = 0;
  uint64_t run_counter_ = 0;
  std::string phase_ = "unlabeled";
  SimReport totals_;

  // Per-run working state.
  std::vector<Envelope> outbox_;
  std::vector<uint32_t> arc_count_;   // directed edge -> sends this round
  std::vector<int> touched_arcs_;
  int multiplicity_now_ = 1;
  uint64_t round_now_ = 0;
};

}  // namespace congest::sim
