#include "asgt/digraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include "asgt/error.hpp"

namespace asgt {

namespace {

void insert_sorted(std::vector<AgentId>& list, AgentId id) {
  auto it = std::lower_bound(list.begin(), list.end(), id);
  list.insert(it, id);
}

std::vector<bool> reachable(std::size_t m, AgentId source,
                            const std::vector<std::vector<AgentId>>& adjacency) {
  std::vector<bool> seen(m, false);
  std::queue<AgentId> frontier;
  seen[source] = true;
  frontier.push(source);
  while (!frontier.empty()) {
    const AgentId u = frontier.front();
    frontier.pop();
    for (AgentId v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

Digraph::Digraph(std::size_t agents) : in_(agents), out_(agents) {
  if (agents == 0) throw Error(ErrorKind::invalid_argument, "digraph needs at least one agent");
}

Digraph::Digraph(std::size_t agents, std::span<const Edge> edges) : Digraph(agents) {
  for (const auto& [from, to] : edges) add_edge(from, to);
}

void Digraph::add_edge(AgentId from, AgentId to) {
  if (from >= size() || to >= size()) {
    throw Error(ErrorKind::invalid_argument,
                "edge " + std::to_string(from) + "->" + std::to_string(to) + " out of range");
  }
  if (from == to) {
    throw Error(ErrorKind::invalid_argument, "self-loop on agent " + std::to_string(from));
  }
  if (has_edge(from, to)) return;
  insert_sorted(out_[from], to);
  insert_sorted(in_[to], from);
  ++edge_count_;
}

bool Digraph::has_edge(AgentId from, AgentId to) const {
  if (from >= size() || to >= size()) return false;
  return std::binary_search(out_[from].begin(), out_[from].end(), to);
}

std::vector<Edge> Digraph::edges() const {
  std::vector<Edge> all;
  all.reserve(edge_count_);
  for (AgentId i = 0; i < size(); ++i)
    for (AgentId j : out_[i]) all.emplace_back(i, j);
  return all;
}

Digraph generate_ring_plus_random(std::size_t agents, std::size_t extra, std::uint64_t seed) {
  if (agents < 2) throw Error(ErrorKind::invalid_argument, "ring needs m >= 2");
  if (extra > agents - 2) {
    throw Error(ErrorKind::invalid_argument,
                "extra=" + std::to_string(extra) + " exceeds m-2=" + std::to_string(agents - 2));
  }
  Digraph g(agents);
  std::mt19937_64 rng(seed);
  std::vector<AgentId> candidates;
  for (AgentId i = 0; i < agents; ++i) {
    const AgentId next = (i + 1) % agents;
    g.add_edge(i, next);
    candidates.clear();
    for (AgentId j = 0; j < agents; ++j)
      if (j != i && j != next) candidates.push_back(j);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (std::size_t e = 0; e < extra; ++e) g.add_edge(i, candidates[e]);
  }
  return g;
}

Digraph generate_connectivity(std::size_t agents, double density, std::uint64_t seed) {
  if (agents < 2) throw Error(ErrorKind::invalid_argument, "connectivity graph needs m >= 2");
  const double possible = static_cast<double>(agents * (agents - 1));
  const double cycle_density = static_cast<double>(agents) / possible;
  // Tolerate representation error in p (0.7 * 240 is not exactly 168).
  constexpr double slack = 1e-9;
  if (!(density <= 1.0 + slack) || density + slack < cycle_density) {
    throw Error(ErrorKind::invalid_argument,
                "density " + std::to_string(density) + " outside [" + std::to_string(cycle_density) +
                    ", 1]");
  }
  const auto target = static_cast<std::size_t>(
      std::clamp(std::ceil(density * possible - slack), static_cast<double>(agents), possible));

  Digraph g(agents);
  for (AgentId i = 0; i < agents; ++i) g.add_edge(i, (i + 1) % agents);

  std::vector<Edge> candidates;
  for (AgentId i = 0; i < agents; ++i)
    for (AgentId j = 0; j < agents; ++j)
      if (j != i && j != (i + 1) % agents) candidates.emplace_back(i, j);
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (std::size_t e = 0; g.edge_count() < target; ++e) g.add_edge(candidates[e].first, candidates[e].second);
  return g;
}

bool is_strongly_connected(const Digraph& g) {
  const std::size_t m = g.size();
  std::vector<std::vector<AgentId>> forward(m), backward(m);
  for (AgentId i = 0; i < m; ++i) {
    auto out = g.out_neighbors(i);
    forward[i].assign(out.begin(), out.end());
    auto in = g.in_neighbors(i);
    backward[i].assign(in.begin(), in.end());
  }
  // Strongly connected iff node 0 reaches everyone and everyone reaches node 0.
  auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  return all(reachable(m, 0, forward)) && all(reachable(m, 0, backward));
}

MixingPair build_mixing(const Digraph& g) {
  if (!is_strongly_connected(g)) {
    throw Error(ErrorKind::not_strongly_connected, "mixing weights need a strongly connected digraph");
  }
  const std::size_t m = g.size();
  const auto n = static_cast<Eigen::Index>(m);
  MixingPair mix{Matrix::Zero(n, n), Matrix::Zero(n, n), 1.0};

  for (AgentId i = 0; i < m; ++i) {
    const auto in = g.in_neighbors(i);
    const double w = 1.0 / static_cast<double>(in.size() + 1);
    const auto row = static_cast<Eigen::Index>(i);
    mix.W(row, row) = w;
    for (AgentId j : in) mix.W(row, static_cast<Eigen::Index>(j)) = w;
    mix.min_weight = std::min(mix.min_weight, w);

    const auto out = g.out_neighbors(i);
    const double a = 1.0 / static_cast<double>(out.size() + 1);
    const auto col = static_cast<Eigen::Index>(i);
    mix.A(col, col) = a;
    for (AgentId j : out) mix.A(static_cast<Eigen::Index>(j), col) = a;
    mix.min_weight = std::min(mix.min_weight, a);
  }
  return mix;
}

std::string to_edge_list(const Digraph& g) {
  std::ostringstream out;
  out << "m=" << g.size() << '\n';
  for (const auto& [from, to] : g.edges()) out << from << ' ' << to << '\n';
  return out.str();
}

Digraph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("m=", 0) != 0) {
    throw Error(ErrorKind::parse_error, "edge list must start with 'm=<count>'");
  }
  std::size_t m = 0;
  try {
    m = std::stoul(line.substr(2));
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse_error, "bad agent count line '" + line + "'");
  }
  Digraph g(m);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    long long from = -1, to = -1;
    if (!(fields >> from >> to) || from < 0 || to < 0) {
      throw Error(ErrorKind::parse_error, "line " + std::to_string(line_no) + ": expected 'i j'");
    }
    g.add_edge(static_cast<AgentId>(from), static_cast<AgentId>(to));
  }
  return g;
}

Digraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse_error, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_edge_list(buffer.str());
}

void write_edge_list_file(const Digraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + path);
  out << to_edge_list(g);
}

}  // namespace asgt
