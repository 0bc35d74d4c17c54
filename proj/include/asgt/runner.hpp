#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asgt/config.hpp"
#include "asgt/metrics.hpp"
#include "asgt/protocol.hpp"

namespace asgt {

struct RunOptions {
  // Executes these events instead of the generated schedule (first replicate
  // seed only); the event count is the trace length.
  const std::vector<ScheduleEvent>* replay = nullptr;
  // Receives one record per event for the first replicate.
  std::ostream* trace = nullptr;
  bool write_outputs = true;
};

struct ReplicateResult {
  std::uint64_t seed = 0;
  std::vector<MetricsSnapshot> snapshots;
  std::vector<Vector> models;  // final x_i
  Vector x_avg;
  std::size_t max_observed_delay = 0;
  // max over snapshots of mass_residual / (1 + mass_scale)
  double worst_relative_residual = 0.0;
};

struct RateFit {
  std::optional<double> slope;
  std::string reason;  // why no slope was fitted
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<ReplicateResult> replicates;
  std::vector<MetricsSnapshot> mean;  // replicate mean, row by row
  std::optional<double> distance_to_minimizer;  // mean over replicates of ||x_avg - x*||
  RateFit rate_tracking, rate_consensus, rate_gradient, rate_merit;
};

ReplicateResult run_replicate(const ExperimentConfig& config, const Digraph& graph, const ObjectiveOracle& oracle,
                              std::uint64_t seed, const RunOptions& options = {});

// Runs every replicate seed; writes snapshot tables, summary.json and the
// config into config.output_dir when set and options.write_outputs holds.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

std::vector<MetricsSnapshot> replicate_mean(std::span<const ReplicateResult> replicates);

// Least-squares slope of log(value) against log(k) over the last
// `tail_fraction` of the points with k > 0. Throws degenerate-series on a
// non-positive value and invalid-argument on fewer than 100 tail points.
double fit_rate(std::span<const double> k, std::span<const double> values, double tail_fraction);

// Centralized SGD on the collapsed objective with the same step schedule and
// the draws agent 0 of a single-agent run would use. Returns x^0 .. x^events.
std::vector<Vector> run_sgd_reference(const ObjectiveOracle& oracle, const StepSchedule& schedule,
                                      std::size_t events, std::uint64_t seed);

std::string summary_json(const ExperimentResult& result);
void write_experiment_outputs(const ExperimentResult& result, const std::string& dir);

struct SweepRow {
  std::string label;
  bool ok = false;
  std::string error;
  std::optional<ExperimentResult> result;
};

// Runs each entry independently, up to `threads` at a time; an entry that
// throws is reported in its row and does not stop the others.
std::vector<SweepRow> sweep(std::span<const SweepEntry> entries, std::size_t threads = 1,
                            const RunOptions& options = {});
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace asgt
