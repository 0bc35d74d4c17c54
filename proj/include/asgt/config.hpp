#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "asgt/digraph.hpp"
#include "asgt/oracle.hpp"
#include "asgt/scheduler.hpp"
#include "asgt/step_schedule.hpp"

namespace asgt {

enum class GraphGenerator { ring_plus_random, connectivity, edge_list };

struct GraphSpec {
  GraphGenerator generator = GraphGenerator::ring_plus_random;
  std::size_t agents = 8;
  std::size_t extra = 2;   // ring_plus_random
  double density = 0.7;    // connectivity
  std::uint64_t seed = 0;
  std::string path;        // edge_list
};

Digraph build_graph(const GraphSpec& spec);

struct ScheduleSpec {
  ActivationMode activation = ActivationMode::random_coverage;
  std::size_t window = 0;  // T; 0 means 4m
  std::vector<double> weights;
  DelayMode delay = DelayMode::uniform;
  std::size_t max_delay = 0;  // D
};

/// Everything needed to reproduce a run. Replicate seeds drive activations,
/// delays and stochastic draws; graph and problem instances carry their
/// own seeds and stay fixed across replicates.
struct ExperimentConfig {
  GraphSpec graph;
  ProblemSpec problem;
  ScheduleSpec schedule;
  StepSchedule step;
  std::size_t events = 10000;
  std::size_t snapshot_interval = 100;
  std::vector<std::uint64_t> seeds{1};
  double tail_fraction = 0.5;
  bool shadow = true;
  bool dump_trace = false;
  std::string output_dir;

  std::size_t window() const { return schedule.window ? schedule.window : 4 * graph.agents; }
  ActivationPolicy activation_policy(std::uint64_t replicate_seed) const;
  DelayModel delay_model(std::uint64_t replicate_seed) const;
};

// Throws config-invalid naming the offending field.
void validate(const ExperimentConfig& config);

// Structured key-value (JSON) form. Missing keys take the defaults above.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& config);

// Fingerprint of the canonical serialized config (output_dir excluded).
std::string config_hash(const ExperimentConfig& config);

struct SweepEntry {
  std::string label;
  ExperimentConfig config;
};

// {"base": {...}, "parameter": "/graph/agents", "values": [2, 4, 8]} ->
// one entry per value, the parameter addressed by JSON pointer. Each entry
// writes into its own subdirectory of the sweep's output_dir.
std::vector<SweepEntry> expand_sweep(std::string_view text);

}  // namespace asgt
