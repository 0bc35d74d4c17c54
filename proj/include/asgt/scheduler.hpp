#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "asgt/digraph.hpp"

namespace asgt {

// Global iteration index; publications are stamped with it.
using Stamp = std::int64_t;

struct NeighborDelay {
  AgentId from = 0;
  std::size_t delay = 0;

  friend bool operator==(const NeighborDelay&, const NeighborDelay&) = default;
};

/// One global iteration: which agent fires and how stale each of its
/// in-neighbours' information is. `delays` follows the sorted in-neighbour
/// order of the agent.
struct ScheduleEvent {
  Stamp k = 0;
  AgentId agent = 0;
  std::vector<NeighborDelay> delays;

  friend bool operator==(const ScheduleEvent&, const ScheduleEvent&) = default;
};

enum class ActivationMode { round_robin, random_coverage, weighted_coverage };
enum class DelayMode { zero, uniform, per_edge_fixed, heterogeneous_speed };

std::string_view to_string(ActivationMode mode);
std::string_view to_string(DelayMode mode);
ActivationMode parse_activation_mode(std::string_view name);
DelayMode parse_delay_mode(std::string_view name);

struct ActivationPolicy {
  ActivationMode mode = ActivationMode::round_robin;
  // Every window of `window` consecutive events activates every agent.
  std::size_t window = 0;
  std::uint64_t seed = 0;
  // Relative activation rates for weighted_coverage; empty means uniform.
  std::vector<double> weights;
};

struct DelayModel {
  DelayMode mode = DelayMode::zero;
  std::size_t max_delay = 0;
  std::uint64_t seed = 0;
};

/// Streams schedule events that satisfy the activation-coverage and
/// bounded-delay assumptions by construction: random policies fall back to
/// earliest-deadline selection when an agent is about to miss its window,
/// and every delay is clamped to max_delay.
class Scheduler {
 public:
  Scheduler(const Digraph& graph, ActivationPolicy policy, DelayModel delays);

  ScheduleEvent next();
  Stamp position() const { return k_; }

  const ActivationPolicy& policy() const { return policy_; }
  const DelayModel& delay_model() const { return delays_; }

 private:
  AgentId pick_agent();
  std::size_t pick_delay(AgentId from, AgentId to);

  const Digraph* graph_;
  ActivationPolicy policy_;
  DelayModel delays_;
  std::mt19937_64 activation_rng_;
  std::mt19937_64 delay_rng_;
  std::vector<Stamp> last_seen_;
  std::vector<std::vector<std::size_t>> fixed_delay_;  // per (to, in-neighbour position)
  std::vector<double> slowness_;                       // per sender, in [0, 1]
  Stamp k_ = 0;
};

std::vector<ScheduleEvent> generate_trace(const Digraph& graph, const ActivationPolicy& policy,
                                          const DelayModel& delays, std::size_t length);

// True iff every length-`window` run of consecutive events covers all agents.
// Throws invalid-argument when the trace is shorter than the window.
bool verify_coverage(std::span<const ScheduleEvent> trace, std::size_t window, std::size_t agents);

bool verify_delay_bound(std::span<const ScheduleEvent> trace, std::size_t max_delay);

std::size_t max_observed_delay(std::span<const ScheduleEvent> trace);

}  // namespace asgt
