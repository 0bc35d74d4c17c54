#pragma once

// A deliberately plain re-implementation of the asynchronous tracking
// protocol for cross-checking the engine. It never discards history, keys
// everything by agent id in maps, reads the global W and A directly and
// evaluates the sum step in textbook order.

#include <map>
#include <vector>

#include "asgt/digraph.hpp"
#include "asgt/oracle.hpp"
#include "asgt/scheduler.hpp"

namespace asgt::testing {

class ReferenceProtocol {
 public:
  struct Agent {
    Vector x, z, g_last;
    std::map<AgentId, Stamp> tau;
    std::map<AgentId, Vector> rho_out;  // by receiver
    std::map<AgentId, Vector> rho_buf;  // by sender
  };

  ReferenceProtocol(const Digraph& g, const ObjectiveOracle& oracle, std::uint64_t seed)
      : graph_(g), mix_(build_mixing(g)), oracle_(&oracle), seed_(seed) {
    const auto n = static_cast<Eigen::Index>(oracle.dimension());
    for (AgentId i = 0; i < g.size(); ++i) {
      Agent a;
      a.x = Vector::Zero(n);
      a.g_last = oracle.stoch_grad(i, a.x, SampleDraw::for_agent(seed, i, 0));
      a.z = a.g_last;
      for (AgentId j : g.in_neighbors(i)) {
        a.tau[j] = 0;
        a.rho_buf[j] = Vector::Zero(n);
      }
      for (AgentId r : g.out_neighbors(i)) a.rho_out[r] = Vector::Zero(n);
      history_[i][0] = {a.x, a.rho_out};
      agents_.push_back(std::move(a));
    }
  }

  // Returns the stamps used, in in-neighbour order.
  std::vector<Stamp> step(const ScheduleEvent& e, double gamma) {
    const AgentId i = e.agent;
    Agent& a = agents_[i];
    const auto ii = static_cast<Eigen::Index>(i);
    std::vector<Stamp> used;
    std::map<AgentId, Vector> v_read, rho_read;
    for (const auto& d : e.delays) {
      const auto& h = history_[d.from];
      auto it = h.upper_bound(k_ - static_cast<Stamp>(d.delay));
      --it;  // stamp 0 always exists
      if (it->first > a.tau[d.from]) a.tau[d.from] = it->first;
      const auto& pub = h.at(a.tau[d.from]);
      v_read[d.from] = pub.v;
      rho_read[d.from] = pub.rho.at(i);
      used.push_back(a.tau[d.from]);
    }
    const Vector v = a.x - gamma * a.z;
    Vector x = mix_.W(ii, ii) * v;
    for (const auto& [j, vj] : v_read) x += mix_.W(ii, static_cast<Eigen::Index>(j)) * vj;
    a.x = x;
    const Vector g = oracle_->stoch_grad(i, a.x, SampleDraw::for_agent(seed_, i, static_cast<std::uint64_t>(k_) + 1));
    Vector z_half = a.z;
    for (const auto& [j, rho] : rho_read) z_half += rho - a.rho_buf[j];
    z_half += g - a.g_last;
    a.g_last = g;
    a.z = mix_.A(ii, ii) * z_half;
    for (auto& [r, rho] : a.rho_out) rho += mix_.A(static_cast<Eigen::Index>(r), ii) * z_half;
    for (const auto& [j, rho] : rho_read) a.rho_buf[j] = rho;
    history_[i][k_ + 1] = {v, a.rho_out};
    ++k_;
    return used;
  }

  const Agent& agent(AgentId i) const { return agents_.at(i); }
  Stamp iteration() const { return k_; }

 private:
  struct Pub {
    Vector v;
    std::map<AgentId, Vector> rho;
  };

  Digraph graph_;
  MixingPair mix_;
  const ObjectiveOracle* oracle_;
  std::uint64_t seed_;
  std::vector<Agent> agents_;
  std::map<AgentId, std::map<Stamp, Pub>> history_;
  Stamp k_ = 0;
};

}  // namespace asgt::testing
