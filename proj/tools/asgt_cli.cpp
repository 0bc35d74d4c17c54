#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "asgt/config.hpp"
#include "asgt/error.hpp"
#include "asgt/runner.hpp"
#include "asgt/trace_io.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> snapshot_interval;
  std::optional<std::size_t> events;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", o.seed, "run a single replicate with this seed");
  cmd->add_option("--snapshot-interval", o.snapshot_interval, "events between metric snapshots");
  cmd->add_option("--events", o.events, "number of events");
}

asgt::ExperimentConfig load(const Overrides& o) {
  asgt::ExperimentConfig c = asgt::load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seeds = {*o.seed};
  if (o.snapshot_interval) c.snapshot_interval = *o.snapshot_interval;
  if (o.events) c.events = *o.events;
  asgt::validate(c);
  return c;
}

void report(const asgt::ExperimentResult& r) {
  const auto& t = r.mean.back();
  std::cout << "config " << r.config_hash << ", " << r.replicates.size() << " replicate(s), k=" << t.k << '\n'
            << "  E_t_hat " << t.tracking_error << "  E_c " << t.consensus_error << "  E_z " << t.gradient_norm_error
            << "  merit " << t.merit << '\n'
            << "  grad_inf " << t.grad_inf << "  dev_inf_avg " << t.dev_inf_avg << "  F_avg " << t.f_avg << '\n';
  if (r.distance_to_minimizer) std::cout << "  |x_avg - x*| " << *r.distance_to_minimizer << '\n';
  if (!r.config.output_dir.empty()) std::cout << "  outputs in " << r.config.output_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous decentralized SGD with push-sum gradient tracking"};
  app.require_subcommand(1);

  Overrides run_opts;
  std::string run_trace;
  auto* run = app.add_subcommand("run", "run an experiment");
  add_common(run, run_opts);
  run->add_option("--trace", run_trace, "write the event trace of the first replicate here");

  std::string sweep_path, sweep_out;
  std::size_t threads = 1;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  sweep->add_option("-c,--config", sweep_path, "sweep spec (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("-o,--out", sweep_out, "write sweep.csv here (defaults to the spec's output_dir)");
  sweep->add_option("-j,--threads", threads, "configs run concurrently");

  Overrides sched_opts;
  std::string sched_out;
  auto* schedule = app.add_subcommand("schedule", "export the generated schedule of a config");
  schedule->add_option("-c,--config", sched_opts.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  schedule->add_option("--seed", sched_opts.seed, "replicate seed (defaults to the first)");
  schedule->add_option("--events", sched_opts.events, "number of events");
  schedule->add_option("--trace", sched_out, "output trace file")->required();

  std::string verify_trace;
  std::size_t verify_agents = 0, verify_window = 0, verify_delay = 0;
  auto* verify = app.add_subcommand("verify", "check a trace against the coverage and delay bounds");
  verify->add_option("--trace", verify_trace, "trace file")->required()->check(CLI::ExistingFile);
  verify->add_option("--agents", verify_agents, "number of agents m")->required();
  verify->add_option("--window", verify_window, "coverage window T")->required();
  verify->add_option("--max-delay", verify_delay, "delay bound D")->required();

  Overrides replay_opts;
  std::string replay_trace;
  auto* replay = app.add_subcommand("replay", "re-execute a dumped trace");
  add_common(replay, replay_opts);
  replay->add_option("--trace", replay_trace, "trace file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = load(run_opts);
      std::ofstream trace;
      asgt::RunOptions options;
      if (!run_trace.empty()) {
        trace.open(run_trace);
        if (!trace) throw asgt::Error(asgt::ErrorKind::invalid_argument, "cannot write " + run_trace);
        options.trace = &trace;
      }
      report(asgt::run_experiment(config, options));
    } else if (sweep->parsed()) {
      std::ifstream in(sweep_path);
      std::stringstream text;
      text << in.rdbuf();
      const auto entries = asgt::expand_sweep(text.str());
      const auto rows = asgt::sweep(entries, threads);
      std::string dir = sweep_out;
      if (dir.empty() && !entries.empty()) {
        const auto& first = entries.front().config.output_dir;
        dir = first.substr(0, first.find_last_of('/'));
      }
      if (!dir.empty()) {
        std::filesystem::create_directories(dir);
        std::ofstream out(dir + "/sweep.csv");
        asgt::write_sweep_csv(out, rows);
      }
      asgt::write_sweep_csv(std::cout, rows);
      for (const auto& row : rows)
        if (!row.ok) return 1;
    } else if (schedule->parsed()) {
      auto config = asgt::load_config(sched_opts.config);
      const std::uint64_t seed = sched_opts.seed.value_or(config.seeds.front());
      const auto graph = asgt::build_graph(config.graph);
      const auto trace = asgt::generate_trace(graph, config.activation_policy(seed), config.delay_model(seed),
                                              sched_opts.events.value_or(config.events));
      asgt::write_schedule_trace_file(sched_out, trace);
    } else if (verify->parsed()) {
      const auto trace = asgt::read_schedule_trace_file(verify_trace);
      const bool coverage = asgt::verify_coverage(trace, verify_window, verify_agents);
      const bool delays = asgt::verify_delay_bound(trace, verify_delay);
      std::cout << "events " << trace.size() << ", max observed delay " << asgt::max_observed_delay(trace) << '\n'
                << "coverage(T=" << verify_window << "): " << (coverage ? "ok" : "VIOLATED") << '\n'
                << "delay bound(D=" << verify_delay << "): " << (delays ? "ok" : "VIOLATED") << '\n';
      return coverage && delays ? 0 : 1;
    } else if (replay->parsed()) {
      auto config = load(replay_opts);
      config.seeds.resize(1);
      const auto events = asgt::read_schedule_trace_file(replay_trace);
      asgt::RunOptions options;
      options.replay = &events;
      report(asgt::run_experiment(config, options));
    }
  } catch (const asgt::Error& e) {
    std::cerr << "error [" << asgt::to_string(e.kind()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
