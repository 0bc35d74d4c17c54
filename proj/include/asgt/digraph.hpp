#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asgt/numeric.hpp"

namespace asgt {

using AgentId = std::size_t;

// A directed edge (from, to): `from` can send to `to`.
using Edge = std::pair<AgentId, AgentId>;

/// Communication topology over agents 0..m-1.
///
/// Self-loops are never stored; an agent always keeps a share of its own
/// mass through the diagonal of the mixing matrices instead. Adjacency
/// lists are kept sorted so iteration order is deterministic.
class Digraph {
 public:
  explicit Digraph(std::size_t agents);
  Digraph(std::size_t agents, std::span<const Edge> edges);

  // Idempotent. Throws invalid-argument on self-loops or out-of-range ids.
  void add_edge(AgentId from, AgentId to);

  std::size_t size() const { return in_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  bool has_edge(AgentId from, AgentId to) const;

  std::span<const AgentId> in_neighbors(AgentId i) const { return in_.at(i); }
  std::span<const AgentId> out_neighbors(AgentId i) const { return out_.at(i); }

  // All edges, sorted lexicographically.
  std::vector<Edge> edges() const;

  friend bool operator==(const Digraph& a, const Digraph& b) { return a.out_ == b.out_; }

 private:
  std::vector<std::vector<AgentId>> in_;
  std::vector<std::vector<AgentId>> out_;
  std::size_t edge_count_ = 0;
};

/// Consensus weights W (row-stochastic) and push weights A (column-stochastic).
/// W(i, j) is what i puts on j's model; A(i, j) is the share of j's tracking
/// mass pushed to i.
struct MixingPair {
  Matrix W;
  Matrix A;
  double min_weight = 0.0;
};

// Directed cycle i -> i+1 plus `extra` distinct random out-neighbours per agent.
Digraph generate_ring_plus_random(std::size_t agents, std::size_t extra, std::uint64_t seed);

// Directed cycle plus random extra edges until the edge density among the
// m(m-1) possible directed edges reaches `density`.
Digraph generate_connectivity(std::size_t agents, double density, std::uint64_t seed);

bool is_strongly_connected(const Digraph& g);

// Uniform weighting: every positive entry in row i of W is 1/(|in(i)|+1),
// every positive entry in column j of A is 1/(|out(j)|+1).
MixingPair build_mixing(const Digraph& g);

// Plain-text edge list: "m=<count>" then one "i j" line per edge.
std::string to_edge_list(const Digraph& g);
Digraph parse_edge_list(std::string_view text);
Digraph read_edge_list_file(const std::string& path);
void write_edge_list_file(const Digraph& g, const std::string& path);

}  // namespace asgt
