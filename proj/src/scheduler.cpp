#include "asgt/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "asgt/error.hpp"

namespace asgt {

std::string_view to_string(ActivationMode mode) {
  switch (mode) {
    case ActivationMode::round_robin: return "round-robin";
    case ActivationMode::random_coverage: return "random-coverage";
    case ActivationMode::weighted_coverage: return "weighted-coverage";
  }
  return "unknown";
}

std::string_view to_string(DelayMode mode) {
  switch (mode) {
    case DelayMode::zero: return "zero";
    case DelayMode::uniform: return "uniform";
    case DelayMode::per_edge_fixed: return "per-edge-fixed";
    case DelayMode::heterogeneous_speed: return "heterogeneous-speed";
  }
  return "unknown";
}

ActivationMode parse_activation_mode(std::string_view name) {
  if (name == "round-robin") return ActivationMode::round_robin;
  if (name == "random-coverage") return ActivationMode::random_coverage;
  if (name == "weighted-coverage") return ActivationMode::weighted_coverage;
  throw Error(ErrorKind::invalid_argument, "unknown activation mode '" + std::string(name) + "'");
}

DelayMode parse_delay_mode(std::string_view name) {
  if (name == "zero") return DelayMode::zero;
  if (name == "uniform") return DelayMode::uniform;
  if (name == "per-edge-fixed") return DelayMode::per_edge_fixed;
  if (name == "heterogeneous-speed") return DelayMode::heterogeneous_speed;
  throw Error(ErrorKind::invalid_argument, "unknown delay mode '" + std::string(name) + "'");
}

Scheduler::Scheduler(const Digraph& graph, ActivationPolicy policy, DelayModel delays)
    : graph_(&graph),
      policy_(std::move(policy)),
      delays_(delays),
      activation_rng_(mix_seed(policy_.seed, 0xac7ULL)),
      delay_rng_(mix_seed(delays_.seed, 0xde1a7ULL)),
      last_seen_(graph.size(), -1) {
  const std::size_t m = graph.size();
  if (policy_.window == 0) policy_.window = m;
  if (policy_.window < m) {
    throw Error(ErrorKind::invalid_argument, "coverage window T=" + std::to_string(policy_.window) +
                                                 " cannot cover m=" + std::to_string(m) + " agents");
  }
  if (policy_.mode == ActivationMode::weighted_coverage) {
    if (policy_.weights.empty()) policy_.weights.assign(m, 1.0);
    if (policy_.weights.size() != m ||
        std::any_of(policy_.weights.begin(), policy_.weights.end(), [](double w) { return !(w > 0.0); })) {
      throw Error(ErrorKind::invalid_argument, "activation weights must be m positive numbers");
    }
  }

  fixed_delay_.resize(m);
  if (delays_.mode == DelayMode::per_edge_fixed) {
    std::uniform_int_distribution<std::size_t> pick(0, delays_.max_delay);
    for (AgentId i = 0; i < m; ++i)
      for (std::size_t p = 0; p < graph.in_neighbors(i).size(); ++p) fixed_delay_[i].push_back(pick(delay_rng_));
  }
  if (delays_.mode == DelayMode::heterogeneous_speed) {
    // Evenly spread slowness levels, randomly assigned to agents.
    slowness_.resize(m);
    for (AgentId j = 0; j < m; ++j) slowness_[j] = m == 1 ? 1.0 : static_cast<double>(j) / static_cast<double>(m - 1);
    std::shuffle(slowness_.begin(), slowness_.end(), delay_rng_);
  }
}

AgentId Scheduler::pick_agent() {
  const std::size_t m = graph_->size();
  if (policy_.mode == ActivationMode::round_robin) return static_cast<AgentId>(k_ % static_cast<Stamp>(m));

  // Agent j must fire again no later than last_seen_[j] + T. If r agents have
  // deadlines within the next r events, earliest-deadline-first is forced.
  const auto window = static_cast<Stamp>(policy_.window);
  std::vector<AgentId> order(m);
  std::iota(order.begin(), order.end(), AgentId{0});
  auto deadline = [&](AgentId j) { return last_seen_[j] + window; };
  std::stable_sort(order.begin(), order.end(), [&](AgentId a, AgentId b) { return deadline(a) < deadline(b); });
  for (std::size_t r = 0; r < m; ++r) {
    if (deadline(order[r]) - k_ + 1 <= static_cast<Stamp>(r + 1)) return order.front();
  }

  if (policy_.mode == ActivationMode::random_coverage) {
    std::uniform_int_distribution<AgentId> pick(0, m - 1);
    return pick(activation_rng_);
  }
  std::discrete_distribution<AgentId> pick(policy_.weights.begin(), policy_.weights.end());
  return pick(activation_rng_);
}

std::size_t Scheduler::pick_delay(AgentId from, AgentId to) {
  const std::size_t cap = delays_.max_delay;
  switch (delays_.mode) {
    case DelayMode::zero:
      return 0;
    case DelayMode::uniform: {
      std::uniform_int_distribution<std::size_t> pick(0, cap);
      return pick(delay_rng_);
    }
    case DelayMode::per_edge_fixed: {
      const auto in = graph_->in_neighbors(to);
      const auto pos = static_cast<std::size_t>(std::lower_bound(in.begin(), in.end(), from) - in.begin());
      return fixed_delay_[to][pos];
    }
    case DelayMode::heterogeneous_speed: {
      const auto upper = static_cast<std::size_t>(std::ceil(slowness_[from] * static_cast<double>(cap)));
      std::uniform_int_distribution<std::size_t> pick(0, upper);
      return std::min(pick(delay_rng_), cap);
    }
  }
  return 0;
}

ScheduleEvent Scheduler::next() {
  ScheduleEvent event;
  event.k = k_;
  event.agent = pick_agent();
  for (AgentId j : graph_->in_neighbors(event.agent)) event.delays.push_back({j, pick_delay(j, event.agent)});
  last_seen_[event.agent] = k_;
  ++k_;
  return event;
}

std::vector<ScheduleEvent> generate_trace(const Digraph& graph, const ActivationPolicy& policy,
                                          const DelayModel& delays, std::size_t length) {
  Scheduler scheduler(graph, policy, delays);
  std::vector<ScheduleEvent> trace;
  trace.reserve(length);
  for (std::size_t e = 0; e < length; ++e) trace.push_back(scheduler.next());
  return trace;
}

bool verify_coverage(std::span<const ScheduleEvent> trace, std::size_t window, std::size_t agents) {
  if (window == 0 || trace.size() < window) {
    throw Error(ErrorKind::invalid_argument, "coverage check needs a trace at least one window long");
  }
  // Sliding window with per-agent occurrence counts.
  std::vector<std::size_t> count(agents, 0);
  std::size_t covered = 0;
  auto enter = [&](AgentId a) {
    if (a >= agents) return;
    if (count[a]++ == 0) ++covered;
  };
  auto leave = [&](AgentId a) {
    if (a >= agents) return;
    if (--count[a] == 0) --covered;
  };
  for (std::size_t e = 0; e < window; ++e) enter(trace[e].agent);
  if (covered != agents) return false;
  for (std::size_t e = window; e < trace.size(); ++e) {
    leave(trace[e - window].agent);
    enter(trace[e].agent);
    if (covered != agents) return false;
  }
  return true;
}

bool verify_delay_bound(std::span<const ScheduleEvent> trace, std::size_t max_delay) {
  return max_observed_delay(trace) <= max_delay;
}

std::size_t max_observed_delay(std::span<const ScheduleEvent> trace) {
  std::size_t worst = 0;
  for (const auto& event : trace)
    for (const auto& d : event.delays) worst = std::max(worst, d.delay);
  return worst;
}

}  // namespace asgt
