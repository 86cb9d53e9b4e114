#include "congest/sim.hpp"

#include <algorithm>

namespace congest::sim {

void SimReport::absorb(const SimReport& r) {
  rounds += r.rounds;
  messages += r.messages;
  max_edge_load = std::max(max_edge_load, r.max_edge_load);
  completed = completed && r.completed;
  for (const auto& [k, v] : r.messages_by_phase) messages_by_phase[k] += v;
}

const NetworkGraph& RoundApi::graph() const { return sim_->graph(); }

void RoundApi::send(int dst, uint64_t w0) {
  uint64_t w[kMaxPayloadWords] = {w0, 0, 0};
  sim_->record_send(node_, dst, 1, w);
}
void RoundApi::send(int dst, uint64_t w0, uint64_t w1) {
  uint64_t w[kMaxPayloadWords] = {w0, w1, 0};
  sim_->record_send(node_, dst, 2, w);
}
void RoundApi::send(int dst, uint64_t w0, uint64_t w1, uint64_t w2) {
  uint64_t w[kMaxPayloadWords] = {w0, w1, w2};
  sim_->record_send(node_, dst, 3, w);
}

Simulator::Simulator(const NetworkGraph& g, uint64_t seed) : graph_(g), seed_(seed) {
  arc_count_.assign(static_cast<size_t>(g.m()) * 2, 0);
}

void Simulator::record_send(int src, int dst, int len, const uint64_t* words) {
  if (len > kMaxPayloadWords)
    throw PayloadTooLargeError("node " + std::to_string(src) + " sent " + std::to_string(len) +
                               " words in round " + std::to_string(round_now_));
  int e = graph_.edge_between(src, dst);
  if (e < 0)
    throw NonAdjacentSendError("node " + std::to_string(src) + " sent to non-neighbor " +
                               std::to_string(dst) + " in round " + std::to_string(round_now_));
  int arc = 2 * e + (src > dst ? 1 : 0);
  uint32_t c = ++arc_count_[arc];
  if (c == 1) touched_arcs_.push_back(arc);
  if (static_cast<int>(c) > multiplicity_now_)
    throw CapacityExceededError("edge " + std::to_string(src) + "->" + std::to_string(dst) +
                                " overloaded in round " + std::to_string(round_now_));
  Envelope env;
  env.src = src;
  env.dst = dst;
  env.len = len;
  std::copy(words, words + kMaxPayloadWords, env.w);
  outbox_.push_back(env);
}

SimReport Simulator::run(std::vector<std::unique_ptr<NodeProgram>>& programs,
                         uint64_t round_limit, MultiplicitySchedule multiplicity) {
  const int n = graph_.n();
  if (static_cast<int>(programs.size()) != n)
    throw SimError("need exactly one program per node");

  const uint64_t run_id = run_counter_++;
  outbox_.clear();  // a previous run may have died mid-round
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (int v = 0; v < n; ++v) rngs.emplace_back(split_seed(seed_, run_id, v));

  std::vector<std::vector<Envelope>> inbox(n);
  std::vector<Envelope> inflight;
  SimReport rep;
  uint64_t edge_load_peak = 0;

  uint64_t round = 0;
  while (true) {
    // Deliver last round's sends. Outboxes were filled in node-id order, so
    // each inbox arrives sorted by sender id.
    for (auto& ib : inbox) ib.clear();
    if (!inflight.empty()) {
      for (const Envelope& env : inflight) inbox[env.dst].push_back(env);
      rep.messages += inflight.size();
      rep.messages_by_phase[phase_] += inflight.size();
      rep.rounds = round;
      inflight.clear();
    }

    multiplicity_now_ = multiplicity ? multiplicity(round) : 1;
    round_now_ = round;
    for (int arc : touched_arcs_) arc_count_[arc] = 0;
    touched_arcs_.clear();

    for (int v = 0; v < n; ++v) {
      NodeProgram& prog = *programs[v];
      if (prog.halted()) continue;
      bool scheduled = round == 0 || prog.next_action_round(round) == round;
      if (!scheduled && inbox[v].empty()) continue;
      RoundApi api;
      api.sim_ = this;
      api.node_ = v;
      api.round_ = round;
      api.inbox_ = &inbox[v];
      api.rng_ = &rngs[v];
      prog.on_round(api);
    }
    for (int arc : touched_arcs_)
      edge_load_peak = std::max<uint64_t>(edge_load_peak, arc_count_[arc]);

    if (outbox_.empty()) {
      // Quiescent unless some live program has a future wakeup.
      uint64_t wake = kNever;
      for (int v = 0; v < n; ++v)
        if (!programs[v]->halted())
          wake = std::min(wake, programs[v]->next_action_round(round + 1));
      if (wake == kNever) break;
      round = wake;
    } else {
      inflight = std::move(outbox_);
      outbox_.clear();
      round = round + 1;
    }
    if (round > round_limit) {
      rep.completed = false;
      break;
    }
  }

  rep.max_edge_load = edge_load_peak;
  totals_.absorb(rep);
  return rep;
}

Simulator::PhaseScope::PhaseScope(Simulator& sim, std::string label)
    : sim_(sim), saved_(sim.phase_) {
  sim.phase_ = std::move(label);
}
Simulator::PhaseScope::~PhaseScope() { sim_.phase_ = saved_; }

}  // namespace congest::sim
