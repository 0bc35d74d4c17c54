#pragma once

// Independent reference computations shared by the unit and acceptance suites.

#include <cstddef>
#include <optional>
#include <vector>

#include "asgt/digraph.hpp"
#include "asgt/error.hpp"
#include "asgt/oracle.hpp"

namespace asgt::testing {

// Kind of the asgt::Error thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<ErrorKind> thrown_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Boolean transitive closure (Warshall) over the adjacency matrix.
inline std::vector<std::vector<bool>> reachability(const Digraph& g) {
  const std::size_t m = g.size();
  std::vector<std::vector<bool>> r(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i) {
    r[i][i] = true;
    for (AgentId j : g.out_neighbors(i)) r[i][j] = true;
  }
  for (std::size_t via = 0; via < m; ++via)
    for (std::size_t i = 0; i < m; ++i)
      if (r[i][via])
        for (std::size_t j = 0; j < m; ++j)
          if (r[via][j]) r[i][j] = true;
  return r;
}

inline bool all_pairs_reachable(const Digraph& g) {
  for (const auto& row : reachability(g))
    for (bool b : row)
      if (!b) return false;
  return true;
}

// Central differences with step h on every coordinate.
inline Vector finite_difference_grad(const ObjectiveOracle& o, AgentId i, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    Vector up = x, down = x;
    up[d] += h;
    down[d] -= h;
    g[d] = (o.value(i, up) - o.value(i, down)) / (2.0 * h);
  }
  return g;
}

}  // namespace asgt::testing
