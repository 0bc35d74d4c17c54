#include "asgt/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "asgt/error.hpp"

namespace asgt {

namespace {

using nlohmann::json;

std::string_view to_string(GraphGenerator g) {
  switch (g) {
    case GraphGenerator::ring_plus_random: return "ring-plus-random";
    case GraphGenerator::connectivity: return "connectivity";
    case GraphGenerator::edge_list: return "edge-list";
  }
  return "unknown";
}

GraphGenerator parse_generator(std::string_view name) {
  if (name == "ring-plus-random") return GraphGenerator::ring_plus_random;
  if (name == "connectivity") return GraphGenerator::connectivity;
  if (name == "edge-list") return GraphGenerator::edge_list;
  throw Error(ErrorKind::config_invalid, "graph.generator: unknown generator '" + std::string(name) + "'");
}

json to_json(const ExperimentConfig& c, bool with_output) {
  json j;
  j["graph"] = {{"generator", to_string(c.graph.generator)},
                {"agents", c.graph.agents},
                {"extra", c.graph.extra},
                {"density", c.graph.density},
                {"seed", c.graph.seed},
                {"path", c.graph.path}};
  j["problem"] = {{"family", to_string(c.problem.family)},
                  {"dimension", c.problem.dimension},
                  {"rows", c.problem.rows},
                  {"sigma", c.problem.sigma},
                  {"noise", to_string(c.problem.noise)},
                  {"batch", c.problem.batch},
                  {"scale", c.problem.scale},
                  {"mu", c.problem.mu},
                  {"alpha", c.problem.alpha},
                  {"seed", c.problem.seed}};
  j["schedule"] = {{"activation", to_string(c.schedule.activation)},
                   {"window", c.schedule.window},
                   {"weights", c.schedule.weights},
                   {"delay", to_string(c.schedule.delay)},
                   {"max_delay", c.schedule.max_delay}};
  j["step"] = {{"mode", to_string(c.step.mode)},
               {"gamma0", c.step.gamma0},
               {"alpha", c.step.alpha},
               {"interval", c.step.interval},
               {"factor", c.step.factor}};
  if (c.step.freeze_after) j["step"]["freeze_after"] = *c.step.freeze_after;
  j["events"] = c.events;
  j["snapshot_interval"] = c.snapshot_interval;
  j["seeds"] = c.seeds;
  j["tail_fraction"] = c.tail_fraction;
  j["shadow"] = c.shadow;
  j["dump_trace"] = c.dump_trace;
  if (with_output) j["output_dir"] = c.output_dir;
  return j;
}

template <class T>
void read(const json& obj, const char* key, T& into, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_invalid, where + key + ": " + e.what());
  }
}

template <class F>
auto field(const std::string& name, F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    throw Error(ErrorKind::config_invalid, name + ": " + e.what());
  }
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  if (!j.is_object()) throw Error(ErrorKind::config_invalid, "config root must be an object");
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    std::string gen(to_string(c.graph.generator));
    read(g, "generator", gen, "graph.");
    c.graph.generator = parse_generator(gen);
    read(g, "agents", c.graph.agents, "graph.");
    read(g, "extra", c.graph.extra, "graph.");
    read(g, "density", c.graph.density, "graph.");
    read(g, "seed", c.graph.seed, "graph.");
    read(g, "path", c.graph.path, "graph.");
  }
  if (j.contains("problem")) {
    const auto& p = j["problem"];
    std::string family(to_string(c.problem.family)), noise(to_string(c.problem.noise));
    read(p, "family", family, "problem.");
    read(p, "noise", noise, "problem.");
    c.problem.family = field("problem.family", [&] { return parse_family(family); });
    c.problem.noise = field("problem.noise", [&] { return parse_noise_model(noise); });
    read(p, "dimension", c.problem.dimension, "problem.");
    read(p, "rows", c.problem.rows, "problem.");
    read(p, "sigma", c.problem.sigma, "problem.");
    read(p, "batch", c.problem.batch, "problem.");
    read(p, "scale", c.problem.scale, "problem.");
    read(p, "mu", c.problem.mu, "problem.");
    read(p, "alpha", c.problem.alpha, "problem.");
    read(p, "seed", c.problem.seed, "problem.");
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    std::string activation(to_string(c.schedule.activation)), delay(to_string(c.schedule.delay));
    read(s, "activation", activation, "schedule.");
    read(s, "delay", delay, "schedule.");
    c.schedule.activation = field("schedule.activation", [&] { return parse_activation_mode(activation); });
    c.schedule.delay = field("schedule.delay", [&] { return parse_delay_mode(delay); });
    read(s, "window", c.schedule.window, "schedule.");
    read(s, "weights", c.schedule.weights, "schedule.");
    read(s, "max_delay", c.schedule.max_delay, "schedule.");
  }
  if (j.contains("step")) {
    const auto& s = j["step"];
    std::string mode(to_string(c.step.mode));
    read(s, "mode", mode, "step.");
    c.step.mode = field("step.mode", [&] { return parse_step_mode(mode); });
    read(s, "gamma0", c.step.gamma0, "step.");
    read(s, "alpha", c.step.alpha, "step.");
    read(s, "interval", c.step.interval, "step.");
    read(s, "factor", c.step.factor, "step.");
    if (s.contains("freeze_after") && !s["freeze_after"].is_null()) {
      Stamp freeze = 0;
      read(s, "freeze_after", freeze, "step.");
      c.step.freeze_after = freeze;
    }
  }
  read(j, "events", c.events, "");
  read(j, "snapshot_interval", c.snapshot_interval, "");
  read(j, "seeds", c.seeds, "");
  read(j, "tail_fraction", c.tail_fraction, "");
  read(j, "shadow", c.shadow, "");
  read(j, "dump_trace", c.dump_trace, "");
  read(j, "output_dir", c.output_dir, "");
  validate(c);
  return c;
}

}  // namespace

Digraph build_graph(const GraphSpec& spec) {
  switch (spec.generator) {
    case GraphGenerator::ring_plus_random:
      if (spec.agents == 1) return Digraph(1);
      return generate_ring_plus_random(spec.agents, spec.extra, spec.seed);
    case GraphGenerator::connectivity:
      if (spec.agents == 1) return Digraph(1);
      return generate_connectivity(spec.agents, spec.density, spec.seed);
    case GraphGenerator::edge_list:
      return read_edge_list_file(spec.path);
  }
  throw Error(ErrorKind::invalid_argument, "unknown graph generator");
}

ActivationPolicy ExperimentConfig::activation_policy(std::uint64_t replicate_seed) const {
  return {schedule.activation, window(), mix_seed(replicate_seed, 0xa1ULL), schedule.weights};
}

DelayModel ExperimentConfig::delay_model(std::uint64_t replicate_seed) const {
  return {schedule.delay, schedule.max_delay, mix_seed(replicate_seed, 0xd1ULL)};
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& field_name, const std::string& why) {
    throw Error(ErrorKind::config_invalid, field_name + ": " + why);
  };
  if (c.graph.agents == 0) fail("graph.agents", "must be positive");
  if (c.graph.generator == GraphGenerator::ring_plus_random && c.graph.agents > 1 &&
      c.graph.extra > c.graph.agents - 2) {
    fail("graph.extra", "must be at most agents-2");
  }
  if (c.graph.generator == GraphGenerator::connectivity && c.graph.agents > 1) {
    const double cycle = 1.0 / static_cast<double>(c.graph.agents - 1);
    if (!(c.graph.density <= 1.0 + 1e-9) || c.graph.density + 1e-9 < cycle) {
      fail("graph.density", "must lie in [1/(m-1), 1]");
    }
  }
  if (c.graph.generator == GraphGenerator::edge_list && c.graph.path.empty()) fail("graph.path", "required");
  if (c.problem.dimension == 0) fail("problem.dimension", "must be positive");
  if (c.problem.rows == 0) fail("problem.rows", "must be positive");
  if (!(c.problem.scale > 0.0)) fail("problem.scale", "must be positive");
  if (!(c.problem.sigma >= 0.0)) fail("problem.sigma", "must be non-negative");
  if (c.problem.noise == NoiseModel::minibatch && c.problem.family != ProblemFamily::nonconvex_logistic) {
    fail("problem.noise", "minibatch noise needs the nonconvex-logistic family");
  }
  if (c.window() < c.graph.agents) fail("schedule.window", "must be at least the number of agents");
  if (c.schedule.activation == ActivationMode::weighted_coverage && !c.schedule.weights.empty() &&
      c.schedule.weights.size() != c.graph.agents) {
    fail("schedule.weights", "needs one weight per agent");
  }
  try {
    c.step.validate();
  } catch (const Error& e) {
    fail("step", e.what());
  }
  if (c.events == 0) fail("events", "must be positive");
  if (c.snapshot_interval == 0) fail("snapshot_interval", "must be positive");
  if (c.seeds.empty()) fail("seeds", "need at least one replicate seed");
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) fail("tail_fraction", "must lie in (0, 1]");
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("not valid JSON: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config_invalid, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump_config(const ExperimentConfig& config) { return to_json(config, true).dump(2); }

std::string config_hash(const ExperimentConfig& config) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json(config, false).dump())));
  return hex;
}

std::vector<SweepEntry> expand_sweep(std::string_view text) {
  json spec;
  try {
    spec = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("sweep is not valid JSON: ") + e.what());
  }
  if (!spec.contains("base")) throw Error(ErrorKind::config_invalid, "sweep.base: required");
  const json base = to_json(from_json(spec["base"]), true);
  const std::string output = spec.value("output_dir", base.value("output_dir", std::string()));
  std::vector<SweepEntry> entries;
  if (!spec.contains("parameter") || !spec.contains("values")) {
    throw Error(ErrorKind::config_invalid, "sweep needs 'parameter' and 'values'");
  }
  json::json_pointer pointer;
  try {
    pointer = json::json_pointer(spec["parameter"].get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("sweep.parameter: ") + e.what());
  }
  if (!base.contains(pointer)) {
    throw Error(ErrorKind::config_invalid, "sweep.parameter: no such config field " + pointer.to_string());
  }
  const json patches = spec.value("patches", json::object());
  if (!patches.is_object()) throw Error(ErrorKind::config_invalid, "sweep.patches: must be an object");
  for (const auto& value : spec["values"]) {
    json variant = base;
    variant[pointer] = value;
    // Optional merge patch keyed by the value's JSON text, for values that need
    // companion fields (e.g. m=2 only admits density 1).
    if (const auto it = patches.find(value.dump()); it != patches.end()) variant.merge_patch(*it);
    std::string label = spec["parameter"].get<std::string>() + "=" + value.dump();
    if (!output.empty()) {
      std::string dir_name = value.dump();
      for (char& ch : dir_name)
        if (ch == '/' || ch == '"' || ch == ' ') ch = '_';
      variant["output_dir"] = output + "/" + pointer.back() + "_" + dir_name;
    }
    entries.push_back({std::move(label), from_json(variant)});
  }
  return entries;
}

}  // namespace asgt
