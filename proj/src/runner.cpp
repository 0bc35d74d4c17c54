#include "asgt/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "asgt/error.hpp"
#include "asgt/trace_io.hpp"

namespace asgt {

namespace {

using nlohmann::json;

Error at_event(const Error& e, Stamp k) {
  return Error(e.kind(), "at event " + std::to_string(k) + ": " + e.what());
}

double relative_residual(const MetricsSnapshot& s) { return s.mass_residual / (1.0 + s.mass_scale); }

RateFit fit_column(std::span<const MetricsSnapshot> rows, double MetricsSnapshot::*column, double tail_fraction) {
  std::vector<double> k, v;
  for (const auto& r : rows) {
    k.push_back(static_cast<double>(r.k));
    v.push_back(r.*column);
  }
  try {
    return {fit_rate(k, v, tail_fraction), {}};
  } catch (const Error& e) {
    return {std::nullopt, std::string(to_string(e.kind())) + ": " + e.what()};
  }
}

json snapshot_json(const MetricsSnapshot& s) {
  return {{"k", s.k},
          {"E_t_hat", s.tracking_error},
          {"E_c", s.consensus_error},
          {"E_z", s.gradient_norm_error},
          {"merit", s.merit},
          {"grad_inf", s.grad_inf},
          {"dev_inf_avg", s.dev_inf_avg},
          {"mass_residual", s.mass_residual},
          {"F_avg", s.f_avg}};
}

json rate_json(const RateFit& fit) {
  if (fit.slope) return *fit.slope;
  return {{"degenerate", fit.reason}};
}

}  // namespace

ReplicateResult run_replicate(const ExperimentConfig& config, const Digraph& graph, const ObjectiveOracle& oracle,
                              std::uint64_t seed, const RunOptions& options) {
  ReplicateResult out;
  out.seed = seed;
  ProtocolEngine engine(graph, oracle, seed, config.schedule.max_delay, config.shadow);
  std::vector<LocalWeights> weights;
  for (AgentId i = 0; i < graph.size(); ++i) weights.push_back(engine.weights(i));
  WeightChannel channel(graph, weights);
  Scheduler scheduler(graph, config.activation_policy(seed), config.delay_model(seed));

  const std::vector<ScheduleEvent>* replay = options.replay;
  const std::size_t events = replay ? replay->size() : config.events;
  auto event_at = [&](std::size_t k) -> ScheduleEvent {
    if (replay) return (*replay)[std::min(k, replay->size() - 1)];
    return scheduler.next();
  };
  auto snapshot = [&](AgentId active, double gamma) {
    MetricsSnapshot s = take_snapshot(engine, channel, active, gamma, out.max_observed_delay);
    out.worst_relative_residual = std::max(out.worst_relative_residual, relative_residual(s));
    out.snapshots.push_back(s);
  };

  ScheduleEvent next = event_at(0);
  for (std::size_t k = 0; k < events; ++k) {
    const ScheduleEvent event = std::move(next);
    const double gamma = config.step.at(static_cast<Stamp>(k));
    try {
      if (k % config.snapshot_interval == 0) snapshot(event.agent, gamma);
      for (const auto& d : event.delays) out.max_observed_delay = std::max(out.max_observed_delay, d.delay);
      const ActivationRecord record = engine.step(event, gamma);
      channel.on_activation(record);
      if (options.trace) write_event_record(*options.trace, record, mass_residual(engine.states()).residual);
    } catch (const Error& e) {
      throw at_event(e, static_cast<Stamp>(k));
    }
    // The event after the last only names the agent for the final snapshot.
    next = event_at(k + 1);
  }
  snapshot(next.agent, config.step.at(static_cast<Stamp>(events)));

  for (const auto& s : engine.states()) out.models.push_back(s.x);
  out.x_avg = average_model(engine.states());
  return out;
}

std::vector<MetricsSnapshot> replicate_mean(std::span<const ReplicateResult> replicates) {
  if (replicates.empty()) return {};
  const std::size_t rows = replicates.front().snapshots.size();
  const double count = static_cast<double>(replicates.size());
  std::vector<MetricsSnapshot> mean(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    MetricsSnapshot& m = mean[r];
    m = replicates.front().snapshots[r];
    for (double MetricsSnapshot::*f :
         {&MetricsSnapshot::tracking_error, &MetricsSnapshot::consensus_error, &MetricsSnapshot::gradient_norm_error,
          &MetricsSnapshot::merit, &MetricsSnapshot::grad_inf, &MetricsSnapshot::dev_inf_avg,
          &MetricsSnapshot::mass_residual, &MetricsSnapshot::mass_scale, &MetricsSnapshot::shadow_residual,
          &MetricsSnapshot::weight_mass, &MetricsSnapshot::f_avg}) {
      double sum = 0.0;
      for (const auto& rep : replicates) sum += rep.snapshots.at(r).*f;
      m.*f = sum / count;
    }
    for (const auto& rep : replicates) m.max_delay_so_far = std::max(m.max_delay_so_far, rep.snapshots[r].max_delay_so_far);
  }
  return mean;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.config_hash = config_hash(config);

  const Digraph graph = build_graph(config.graph);
  if (graph.size() != config.graph.agents) {
    throw Error(ErrorKind::config_invalid, "graph.agents: edge list has " + std::to_string(graph.size()) + " agents");
  }
  const ObjectiveOracle oracle = make_problem(config.problem, graph.size());

  const bool to_disk = options.write_outputs && !config.output_dir.empty();
  if (to_disk) std::filesystem::create_directories(config.output_dir);

  for (std::size_t r = 0; r < config.seeds.size(); ++r) {
    const std::uint64_t seed = config.seeds[r];
    RunOptions rep_options;
    rep_options.replay = r == 0 ? options.replay : nullptr;
    rep_options.trace = r == 0 ? options.trace : nullptr;
    std::ofstream trace_file;
    if (to_disk && config.dump_trace && !rep_options.trace) {
      trace_file.open(config.output_dir + "/trace_seed" + std::to_string(seed) + ".jsonl");
      rep_options.trace = &trace_file;
    }
    result.replicates.push_back(run_replicate(config, graph, oracle, seed, rep_options));
  }
  result.mean = replicate_mean(result.replicates);

  if (const auto x_star = oracle.minimizer()) {
    double sum = 0.0;
    for (const auto& rep : result.replicates) sum += (rep.x_avg - *x_star).norm();
    result.distance_to_minimizer = sum / static_cast<double>(result.replicates.size());
  }
  const double tail = config.tail_fraction;
  result.rate_tracking = fit_column(result.mean, &MetricsSnapshot::tracking_error, tail);
  result.rate_consensus = fit_column(result.mean, &MetricsSnapshot::consensus_error, tail);
  result.rate_gradient = fit_column(result.mean, &MetricsSnapshot::gradient_norm_error, tail);
  result.rate_merit = fit_column(result.mean, &MetricsSnapshot::merit, tail);

  if (to_disk) write_experiment_outputs(result, config.output_dir);
  return result;
}

double fit_rate(std::span<const double> k, std::span<const double> values, double tail_fraction) {
  if (k.size() != values.size()) throw Error(ErrorKind::invalid_argument, "k and value series differ in length");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "tail fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k[i] > 0.0) usable.push_back(i);
  const auto tail = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(usable.size())));
  if (tail < 100) {
    throw Error(ErrorKind::invalid_argument, "need at least 100 tail points, have " + std::to_string(tail));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t p = usable.size() - tail; p < usable.size(); ++p) {
    const std::size_t i = usable[p];
    if (!(values[i] > 0.0)) {
      throw Error(ErrorKind::degenerate_series, "value at k=" + std::to_string(k[i]) + " is not positive");
    }
    const double x = std::log(k[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(tail);
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw Error(ErrorKind::degenerate_series, "tail has no spread in k");
  return (n * sxy - sx * sy) / denom;
}

std::vector<Vector> run_sgd_reference(const ObjectiveOracle& oracle, const StepSchedule& schedule,
                                      std::size_t events, std::uint64_t seed) {
  const ObjectiveOracle total = oracle.components() == 1 ? oracle : oracle.collapsed();
  std::vector<Vector> trajectory;
  trajectory.reserve(events + 1);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(total.dimension()));
  trajectory.push_back(x);
  for (std::size_t k = 0; k < events; ++k) {
    const Vector g = total.stoch_grad(0, x, SampleDraw::for_agent(seed, 0, k));
    x = x - schedule.at(static_cast<Stamp>(k)) * g;
    trajectory.push_back(x);
  }
  return trajectory;
}

std::string summary_json(const ExperimentResult& result) {
  const ExperimentConfig& c = result.config;
  json j;
  j["config_hash"] = result.config_hash;
  j["seeds"] = c.seeds;
  j["events"] = result.replicates.empty() || result.replicates.front().snapshots.empty()
                    ? 0
                    : result.replicates.front().snapshots.back().k;
  j["surrogates"] = {{"E_c", "uniform average x_avg in place of the psi-weighted average"},
                     {"E_t_hat", "weight-channel share w_i/m in place of the theoretical xi; total shadow mass "
                                 "including in-flight counters"}};
  j["step"] = {{"mode", to_string(c.step.mode)},
               {"diminishing_conditions_hold", c.step.diminishing_conditions_hold()}};
  json reps = json::array();
  double worst = 0.0;
  std::size_t max_delay = 0;
  for (const auto& rep : result.replicates) {
    json r{{"seed", rep.seed},
           {"max_observed_delay", rep.max_observed_delay},
           {"worst_relative_mass_residual", rep.worst_relative_residual}};
    if (!rep.snapshots.empty()) r["terminal"] = snapshot_json(rep.snapshots.back());
    reps.push_back(std::move(r));
    worst = std::max(worst, rep.worst_relative_residual);
    max_delay = std::max(max_delay, rep.max_observed_delay);
  }
  j["replicates"] = std::move(reps);
  if (!result.mean.empty()) j["terminal_mean"] = snapshot_json(result.mean.back());
  j["worst_relative_mass_residual"] = worst;
  j["max_observed_delay"] = max_delay;
  j["distance_to_minimizer"] = result.distance_to_minimizer ? json(*result.distance_to_minimizer) : json(nullptr);
  j["rates"] = {{"tail_fraction", c.tail_fraction},
                {"E_t_hat", rate_json(result.rate_tracking)},
                {"E_c", rate_json(result.rate_consensus)},
                {"E_z", rate_json(result.rate_gradient)},
                {"merit", rate_json(result.rate_merit)}};
  return j.dump(2);
}

void write_experiment_outputs(const ExperimentResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir + "/" + name);
    if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + dir + "/" + name);
    return out;
  };
  for (const auto& rep : result.replicates) {
    auto out = open("snapshots_seed" + std::to_string(rep.seed) + ".csv");
    write_snapshot_csv(out, rep.snapshots);
  }
  {
    auto out = open("snapshots_mean.csv");
    write_snapshot_csv(out, result.mean);
  }
  open("summary.json") << summary_json(result) << '\n';
  open("config.json") << dump_config(result.config) << '\n';
}

std::vector<SweepRow> sweep(std::span<const SweepEntry> entries, std::size_t threads, const RunOptions& options) {
  std::vector<SweepRow> rows(entries.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < entries.size(); i = cursor++) {
      rows[i].label = entries[i].label;
      try {
        rows[i].result = run_experiment(entries[i].config, options);
        rows[i].ok = true;
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, entries.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "label,status,config_hash,agents,density,E_t_hat,E_c,E_z,merit,grad_inf,dev_inf_avg,F_avg,"
         "distance_to_minimizer,slope_E_c,slope_E_z,slope_merit,error\n";
  auto slope = [](const RateFit& f) { return f.slope ? format_double(*f.slope) : std::string(); };
  auto quote = [](std::string s) {
    for (char& ch : s)
      if (ch == '"' || ch == '\n') ch = '\'';
    return '"' + s + '"';
  };
  for (const auto& row : rows) {
    out << quote(row.label) << ',' << (row.ok ? "ok" : "error") << ',';
    if (row.result) {
      const ExperimentResult& r = *row.result;
      const MetricsSnapshot& t = r.mean.back();
      out << r.config_hash << ',' << r.config.graph.agents << ',' << format_double(r.config.graph.density) << ','
          << format_double(t.tracking_error) << ',' << format_double(t.consensus_error) << ','
          << format_double(t.gradient_norm_error) << ',' << format_double(t.merit) << ','
          << format_double(t.grad_inf) << ',' << format_double(t.dev_inf_avg) << ',' << format_double(t.f_avg)
          << ',' << (r.distance_to_minimizer ? format_double(*r.distance_to_minimizer) : std::string()) << ','
          << slope(r.rate_consensus) << ',' << slope(r.rate_gradient) << ',' << slope(r.rate_merit) << ",\n";
    } else {
      out << ",,,,,,,,,,,,,,," << quote(row.error) << '\n';
    }
  }
}

}  // namespace asgt
