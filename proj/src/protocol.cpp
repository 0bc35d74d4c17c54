#include "asgt/protocol.hpp"

#include <algorithm>
#include <string>

#include "asgt/error.hpp"

namespace asgt {

namespace {

bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && (a.array() == b.array()).all(); }

bool same(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](const Vector& x, const Vector& y) { return same(x, y); });
}

TrackingChannel fresh_channel(const Vector& gradient, std::size_t in_degree, std::size_t out_degree) {
  const Vector zero = Vector::Zero(gradient.size());
  return {gradient, gradient, std::vector<Vector>(out_degree, zero), std::vector<Vector>(in_degree, zero)};
}

std::size_t slot_of(const std::vector<AgentId>& peers, AgentId j, const char* what) {
  auto it = std::lower_bound(peers.begin(), peers.end(), j);
  if (it == peers.end() || *it != j) {
    throw Error(ErrorKind::invalid_argument, std::string("agent ") + std::to_string(j) + " is not an " + what);
  }
  return static_cast<std::size_t>(it - peers.begin());
}

}  // namespace

bool operator==(const TrackingChannel& a, const TrackingChannel& b) {
  return same(a.z, b.z) && same(a.g_last, b.g_last) && same(a.rho_out, b.rho_out) && same(a.rho_buf, b.rho_buf);
}

bool operator==(const AgentState& a, const AgentState& b) {
  auto same_history = std::equal(a.v_history.begin(), a.v_history.end(), b.v_history.begin(), b.v_history.end(),
                                 [](const StampedVector& x, const StampedVector& y) {
                                   return x.stamp == y.stamp && same(x.value, y.value);
                                 });
  return a.id == b.id && same(a.x, b.x) && a.in_peers == b.in_peers && a.tau == b.tau &&
         a.slot_at_sender == b.slot_at_sender &&
         a.out_peers == b.out_peers && a.track == b.track && a.shadow == b.shadow && same_history &&
         a.activations == b.activations;
}

std::size_t AgentState::in_slot(AgentId j) const { return slot_of(in_peers, j, "in-neighbour"); }
std::size_t AgentState::out_slot(AgentId j) const { return slot_of(out_peers, j, "out-neighbour"); }

const Vector& AgentState::v_as_of(Stamp k) const {
  for (auto it = v_history.rbegin(); it != v_history.rend(); ++it)
    if (it->stamp <= k) return it->value;
  throw Error(ErrorKind::missing_publication,
              "agent " + std::to_string(id) + " keeps no v at or before iteration " + std::to_string(k));
}

void NetworkStore::publish(Publication publication) {
  auto& log = logs_.at(publication.sender);
  if (!log.empty() && publication.stamp <= log.back().stamp) {
    throw Error(ErrorKind::invalid_argument, "publication stamps must increase per sender");
  }
  log.push_back(std::move(publication));
}

std::optional<Stamp> NetworkStore::newest_at_or_before(AgentId sender, Stamp limit) const {
  const auto& log = logs_.at(sender);
  auto it = std::upper_bound(log.begin(), log.end(), limit,
                             [](Stamp s, const Publication& p) { return s < p.stamp; });
  if (it == log.begin()) return std::nullopt;
  return std::prev(it)->stamp;
}

const Publication& NetworkStore::at(AgentId sender, Stamp stamp) const {
  const auto& log = logs_.at(sender);
  auto it = std::lower_bound(log.begin(), log.end(), stamp,
                             [](const Publication& p, Stamp s) { return p.stamp < s; });
  if (it == log.end() || it->stamp != stamp) {
    throw Error(ErrorKind::missing_publication,
                "agent " + std::to_string(sender) + " has no publication stamped " + std::to_string(stamp));
  }
  return *it;
}

const Publication& NetworkStore::latest(AgentId sender) const {
  const auto& log = logs_.at(sender);
  if (log.empty()) throw Error(ErrorKind::missing_publication, "agent " + std::to_string(sender) + " never published");
  return log.back();
}

void NetworkStore::discard_before(AgentId sender, Stamp stamp) {
  auto& log = logs_.at(sender);
  while (log.size() > 1 && log.front().stamp < stamp) log.pop_front();
}

std::vector<LocalWeights> local_weights(const Digraph& g, const MixingPair& mix) {
  std::vector<LocalWeights> out(g.size());
  for (AgentId i = 0; i < g.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[i].w_self = mix.W(r, r);
    out[i].a_self = mix.A(r, r);
    for (AgentId j : g.in_neighbors(i)) out[i].w_in.push_back(mix.W(r, static_cast<Eigen::Index>(j)));
    for (AgentId j : g.out_neighbors(i)) out[i].a_out.push_back(mix.A(static_cast<Eigen::Index>(j), r));
  }
  return out;
}

InitialNetwork init_states(const ObjectiveOracle& oracle, const Digraph& g, std::uint64_t seed, bool with_shadow) {
  if (oracle.components() != g.size()) {
    throw Error(ErrorKind::invalid_argument, "oracle has " + std::to_string(oracle.components()) +
                                                 " components for " + std::to_string(g.size()) + " agents");
  }
  InitialNetwork net;
  const auto n = static_cast<Eigen::Index>(oracle.dimension());
  const Vector origin = Vector::Zero(n);
  for (AgentId i = 0; i < g.size(); ++i) {
    AgentState s;
    s.id = i;
    s.x = origin;
    const auto in = g.in_neighbors(i);
    const auto out = g.out_neighbors(i);
    s.in_peers.assign(in.begin(), in.end());
    s.out_peers.assign(out.begin(), out.end());
    s.tau.assign(in.size(), 0);
    for (AgentId j : in) {
      const auto peers = g.out_neighbors(j);
      s.slot_at_sender.push_back(
          static_cast<std::size_t>(std::lower_bound(peers.begin(), peers.end(), i) - peers.begin()));
    }
    s.track = fresh_channel(oracle.stoch_grad(i, origin, SampleDraw::for_agent(seed, i, 0)), in.size(), out.size());
    if (with_shadow) s.shadow = fresh_channel(oracle.grad(i, origin), in.size(), out.size());
    s.v_history.push_back({0, origin});

    Publication p{i, 0, origin, s.track.rho_out, {}};
    if (s.shadow) p.rho_shadow = s.shadow->rho_out;
    net.publications.push_back(std::move(p));
    net.states.push_back(std::move(s));
  }
  return net;
}

Stamp select_stamp(AgentState& state, std::size_t in_slot, Stamp k, std::size_t delay, const NetworkStore& store) {
  Stamp& tau = state.tau.at(in_slot);
  const auto candidate = store.newest_at_or_before(state.in_peers[in_slot], k - static_cast<Stamp>(delay));
  if (candidate && *candidate > tau) tau = *candidate;
  return tau;
}

Vector sgd_step(const AgentState& state, double gamma) { return state.x - gamma * state.track.z; }

Vector consensus_step(const Vector& v_new, std::span<const Vector> fetched, const LocalWeights& weights) {
  Vector x = weights.w_self * v_new;
  for (std::size_t p = 0; p < fetched.size(); ++p) x += weights.w_in[p] * fetched[p];
  return x;
}

void tracking_update(TrackingChannel& channel, std::span<const Vector> fetched_rho, const Vector& new_grad,
                     const LocalWeights& weights) {
  // Sum step. Grouped as ((z - g_last) + unconsumed mass) + new_grad, which is
  // algebraically the textbook order and leaves z bit-identical to the newest
  // gradient whenever no neighbour mass arrives.
  Vector z_half = channel.z - channel.g_last;
  for (std::size_t p = 0; p < fetched_rho.size(); ++p) z_half += fetched_rho[p] - channel.rho_buf[p];
  z_half += new_grad;
  channel.g_last = new_grad;

  // Push step.
  channel.z = weights.a_self * z_half;
  for (std::size_t p = 0; p < channel.rho_out.size(); ++p) channel.rho_out[p] += weights.a_out[p] * z_half;

  // Buffer update.
  for (std::size_t p = 0; p < fetched_rho.size(); ++p) channel.rho_buf[p] = fetched_rho[p];
}

Publication activate(AgentState& state, Stamp k, std::span<const NeighborDelay> delays, double gamma,
                     const LocalWeights& weights, const NetworkStore& store, const ObjectiveOracle& oracle,
                     const SampleDraw& draw, std::vector<NeighborRead>* reads) {
  const std::size_t degree = state.in_peers.size();
  if (delays.size() != degree) {
    throw Error(ErrorKind::invalid_argument, "agent " + std::to_string(state.id) + " has " + std::to_string(degree) +
                                                 " in-neighbours but the event carries " +
                                                 std::to_string(delays.size()) + " delays");
  }

  std::vector<Vector> fetched_v, fetched_rho, fetched_rho_shadow;
  fetched_v.reserve(degree);
  fetched_rho.reserve(degree);
  if (reads) reads->clear();
  for (std::size_t p = 0; p < degree; ++p) {
    const AgentId sender = state.in_peers[p];
    if (delays[p].from != sender) throw Error(ErrorKind::invalid_argument, "event delays are not in in-neighbour order");
    const Stamp tau = select_stamp(state, p, k, delays[p].delay, store);
    const Publication& pub = store.at(sender, tau);
    const std::size_t slot = state.slot_at_sender[p];
    fetched_v.push_back(pub.v);
    fetched_rho.push_back(pub.rho.at(slot));
    if (state.shadow) fetched_rho_shadow.push_back(pub.rho_shadow.at(slot));
    if (reads) reads->push_back({sender, delays[p].delay, tau});
  }

  const Vector v_new = sgd_step(state, gamma);
  state.x = consensus_step(v_new, fetched_v, weights);

  tracking_update(state.track, fetched_rho, oracle.stoch_grad(state.id, state.x, draw), weights);
  if (state.shadow) tracking_update(*state.shadow, fetched_rho_shadow, oracle.grad(state.id, state.x), weights);

  const Stamp stamp = k + 1;
  state.v_history.push_back({stamp, v_new});
  ++state.activations;

  Publication out{state.id, stamp, v_new, state.track.rho_out, {}};
  if (state.shadow) out.rho_shadow = state.shadow->rho_out;
  return out;
}

ProtocolEngine::ProtocolEngine(Digraph graph, const ObjectiveOracle& oracle, std::uint64_t seed,
                               std::size_t max_delay, bool with_shadow)
    : graph_(std::move(graph)),
      mix_(build_mixing(graph_)),
      weights_(local_weights(graph_, mix_)),
      oracle_(&oracle),
      seed_(seed),
      max_delay_(max_delay),
      store_(graph_.size()) {
  auto net = init_states(oracle, graph_, seed, with_shadow);
  states_ = std::move(net.states);
  for (auto& p : net.publications) store_.publish(std::move(p));
}

ActivationRecord ProtocolEngine::step(const ScheduleEvent& event, double gamma) {
  if (event.k != k_) {
    throw Error(ErrorKind::invalid_argument,
                "event for iteration " + std::to_string(event.k) + " delivered at iteration " + std::to_string(k_));
  }
  if (event.agent >= states_.size()) throw Error(ErrorKind::invalid_argument, "event names an unknown agent");
  for (const auto& d : event.delays) {
    if (d.delay > max_delay_) {
      throw Error(ErrorKind::invalid_argument, "delay " + std::to_string(d.delay) + " exceeds D=" +
                                                   std::to_string(max_delay_) + " at iteration " + std::to_string(k_));
    }
  }

  ActivationRecord record{k_, event.agent, gamma, {}};
  AgentState& state = states_[event.agent];
  Publication pub = activate(state, k_, event.delays, gamma, weights_[event.agent], store_, *oracle_,
                             SampleDraw::for_agent(seed_, event.agent, static_cast<std::uint64_t>(k_) + 1),
                             &record.reads);
  while (state.v_history.size() > max_delay_ + 1) state.v_history.pop_front();
  store_.publish(std::move(pub));
  release_unreachable(event.agent);
  ++k_;
  return record;
}

// Once every receiver of sender j has moved its tau past a stamp, no
// future select_stamp can return anything older.
void ProtocolEngine::release_unreachable(AgentId receiver) {
  for (AgentId sender : states_[receiver].in_peers) {
    Stamp oldest_in_use = k_ + 1;
    for (AgentId r : states_[sender].out_peers) {
      const AgentState& rs = states_[r];
      oldest_in_use = std::min(oldest_in_use, rs.tau[rs.in_slot(sender)]);
    }
    store_.discard_before(sender, oldest_in_use);
  }
}

}  // namespace asgt
