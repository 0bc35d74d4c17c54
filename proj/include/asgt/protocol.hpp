#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "asgt/digraph.hpp"
#include "asgt/numeric.hpp"
#include "asgt/oracle.hpp"
#include "asgt/scheduler.hpp"

namespace asgt {

/// Push-sum tracking variables of one agent: the tracker z, the cached
/// gradient that z last absorbed, cumulative mass counters towards each
/// out-neighbour, and buffers of the last counter consumed from each
/// in-neighbour. The protocol runs one channel on stochastic gradients and,
/// optionally, a shadow channel on exact gradients.
struct TrackingChannel {
  Vector z;
  Vector g_last;
  std::vector<Vector> rho_out;  // aligned with AgentState::out_peers
  std::vector<Vector> rho_buf;  // aligned with AgentState::in_peers

  friend bool operator==(const TrackingChannel& a, const TrackingChannel& b);
};

struct StampedVector {
  Stamp stamp = 0;
  Vector value;
};

struct AgentState {
  AgentId id = 0;
  Vector x;
  std::vector<AgentId> in_peers;
  std::vector<Stamp> tau;  // aligned with in_peers
  // Position of this agent in each in-neighbour's out_peers, i.e. which of
  // the sender's published counters is addressed to us.
  std::vector<std::size_t> slot_at_sender;
  std::vector<AgentId> out_peers;
  TrackingChannel track;
  std::optional<TrackingChannel> shadow;
  // Last max_delay+1 published v's, oldest first.
  std::deque<StampedVector> v_history;
  std::uint64_t activations = 0;

  std::size_t in_slot(AgentId j) const;
  std::size_t out_slot(AgentId j) const;

  // v as of global iteration `k` (the newest published v stamped <= k).
  const Vector& v_as_of(Stamp k) const;

  friend bool operator==(const AgentState& a, const AgentState& b);
};

/// What a sender puts on the wire after activating: its fresh v and the full
/// cumulative counters for each out-neighbour (receivers difference them).
struct Publication {
  AgentId sender = 0;
  Stamp stamp = 0;
  Vector v;
  std::vector<Vector> rho;         // aligned with the sender's out_peers
  std::vector<Vector> rho_shadow;  // empty when the shadow channel is off
};

/// Per-sender ordered publication log, standing in for the wire. Reads by
/// (sender, stamp) return exactly what was published. Entries that no
/// receiver can select any more may be discarded.
class NetworkStore {
 public:
  explicit NetworkStore(std::size_t agents) : logs_(agents) {}

  // Stamps must strictly increase per sender.
  void publish(Publication publication);

  std::optional<Stamp> newest_at_or_before(AgentId sender, Stamp limit) const;
  const Publication& at(AgentId sender, Stamp stamp) const;
  const Publication& latest(AgentId sender) const;

  // Drops entries stamped before `stamp`, always keeping the latest one.
  void discard_before(AgentId sender, Stamp stamp);
  std::size_t retained(AgentId sender) const { return logs_.at(sender).size(); }
  std::size_t agents() const { return logs_.size(); }

 private:
  std::vector<std::deque<Publication>> logs_;
};

/// Local slices of the mixing matrices that agent i needs.
struct LocalWeights {
  double w_self = 1.0;
  std::vector<double> w_in;  // W(i, j) for j in in_peers
  double a_self = 1.0;
  std::vector<double> a_out;  // A(j, i) for j in out_peers
};

std::vector<LocalWeights> local_weights(const Digraph& g, const MixingPair& mix);

struct InitialNetwork {
  std::vector<AgentState> states;
  std::vector<Publication> publications;
};

// x_i = 0, z_i = g_last_i = stochastic gradient of f_i at 0 (label 0), all
// counters and buffers zero, tau = 0, plus a stamp-0 publication per agent.
InitialNetwork init_states(const ObjectiveOracle& oracle, const Digraph& g, std::uint64_t seed,
                           bool with_shadow = true);

// tau_ij <- max(tau_ij, newest stamp of j that is <= k - delay). Returns the new tau.
Stamp select_stamp(AgentState& state, std::size_t in_slot, Stamp k, std::size_t delay, const NetworkStore& store);

// v = x - gamma z
Vector sgd_step(const AgentState& state, double gamma);

// x_new = w_self v_new + sum_j w_j v_j(tau_j)
Vector consensus_step(const Vector& v_new, std::span<const Vector> fetched, const LocalWeights& weights);

// Sum step, push step and buffer update on one channel.
void tracking_update(TrackingChannel& channel, std::span<const Vector> fetched_rho, const Vector& new_grad,
                     const LocalWeights& weights);

struct NeighborRead {
  AgentId from = 0;
  std::size_t delay = 0;
  Stamp tau = 0;
};

struct ActivationRecord {
  Stamp k = 0;
  AgentId agent = 0;
  double gamma = 0.0;
  std::vector<NeighborRead> reads;
};

// One full activation of `state` at global iteration k: stamp selection for
// every in-neighbour, then the gradient step, the delayed consensus and the
// robust tracking update. Returns the publication stamped k+1; `reads`
// receives the per-neighbour stamps that were used.
Publication activate(AgentState& state, Stamp k, std::span<const NeighborDelay> delays, double gamma,
                     const LocalWeights& weights, const NetworkStore& store, const ObjectiveOracle& oracle,
                     const SampleDraw& draw, std::vector<NeighborRead>* reads = nullptr);

/// Owns the agents, the wire and the mixing weights, and executes schedule
/// events in global order. The oracle is borrowed and must outlive the engine.
class ProtocolEngine {
 public:
  ProtocolEngine(Digraph graph, const ObjectiveOracle& oracle, std::uint64_t seed, std::size_t max_delay,
                 bool with_shadow = true);

  // Event k must equal iteration(); delays must be within [0, max_delay].
  ActivationRecord step(const ScheduleEvent& event, double gamma);

  Stamp iteration() const { return k_; }
  std::size_t max_delay() const { return max_delay_; }
  const Digraph& graph() const { return graph_; }
  const MixingPair& mixing() const { return mix_; }
  const LocalWeights& weights(AgentId i) const { return weights_.at(i); }
  const ObjectiveOracle& oracle() const { return *oracle_; }
  std::span<const AgentState> states() const { return states_; }
  const NetworkStore& store() const { return store_; }

  // Test hook for audit-sensitivity checks.
  AgentState& mutable_state(AgentId i) { return states_.at(i); }

 private:
  void release_unreachable(AgentId receiver);

  Digraph graph_;
  MixingPair mix_;
  std::vector<LocalWeights> weights_;
  const ObjectiveOracle* oracle_;
  std::uint64_t seed_;
  std::size_t max_delay_;
  std::vector<AgentState> states_;
  NetworkStore store_;
  Stamp k_ = 0;
};

}  // namespace asgt
