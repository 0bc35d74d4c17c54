#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "asgt/protocol.hpp"

namespace asgt {

/// Scalar replica of the push-sum bookkeeping, fed the same stamps as the
/// protocol but with unit initial mass and no gradient corrections. Its
/// per-agent share w_i / m estimates the limiting mass fraction the tracking
/// channel converges to. Diagnostic only; never feeds the optimization.
class WeightChannel {
 public:
  WeightChannel(const Digraph& g, std::span<const LocalWeights> weights);

  // Replays one protocol activation using the stamps it selected.
  void on_activation(const ActivationRecord& record);

  double weight(AgentId i) const { return channels_.at(i).z[0]; }
  std::size_t agents() const { return channels_.size(); }
  // Sum of weights plus unconsumed in-flight mass; m up to rounding.
  double total_mass() const;

 private:
  std::vector<AgentState> topology_;  // peers, slots and taus only
  std::vector<TrackingChannel> channels_;
  std::vector<LocalWeights> weights_;
  NetworkStore store_;
};

struct MassAudit {
  double residual = 0.0;  // sup-norm of sum z + in-flight - sum g_last
  double scale = 0.0;     // ||sum g_last||
};

// Conservation audit over agents and in-flight counters, with compensated
// summation. `shadow` audits the exact-gradient channel instead.
MassAudit mass_residual(std::span<const AgentState> states, bool shadow = false);

Vector average_model(std::span<const AgentState> states);

// ||h - 1 (x) x_avg||^2 where h stacks every x_i and each agent's v as of
// iterations k, k-1, ..., k-D.
double consensus_error(std::span<const AgentState> states, Stamp k, std::size_t max_delay);

// ||zbar_a - (w_a / m) * total||^2 for the active agent a, where total is the
// shadow channel's full mass (agents plus in flight, equal to sum gbar_last).
double tracking_error(std::span<const AgentState> states, const WeightChannel& weights, AgentId active);

// ||zbar_a||^2
double gradient_norm_error(std::span<const AgentState> states, AgentId active);

// (1/m) sum_i ||x_i - x_avg||_inf
double deviation_inf_avg(std::span<const AgentState> states);

struct MetricsSnapshot {
  Stamp k = 0;
  AgentId active = 0;
  double gamma = 0.0;
  double tracking_error = 0.0;
  double consensus_error = 0.0;
  double gradient_norm_error = 0.0;
  double merit = 0.0;
  double grad_inf = 0.0;
  double dev_inf_avg = 0.0;
  double mass_residual = 0.0;
  double mass_scale = 0.0;
  double shadow_residual = 0.0;
  double weight_mass = 0.0;
  std::size_t max_delay_so_far = 0;
  double f_avg = 0.0;
};

double merit(const MetricsSnapshot& s);

MetricsSnapshot take_snapshot(const ProtocolEngine& engine, const WeightChannel& weights, AgentId active,
                              double gamma, std::size_t max_delay_so_far);

std::string snapshot_csv_header();
void write_snapshot_csv(std::ostream& out, std::span<const MetricsSnapshot> rows);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace asgt
