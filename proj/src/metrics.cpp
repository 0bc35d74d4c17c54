#include "asgt/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "asgt/error.hpp"

namespace asgt {

WeightChannel::WeightChannel(const Digraph& g, std::span<const LocalWeights> weights)
    : weights_(weights.begin(), weights.end()), store_(g.size()) {
  const Vector one = Vector::Ones(1);
  const Vector zero = Vector::Zero(1);
  for (AgentId i = 0; i < g.size(); ++i) {
    AgentState s;
    s.id = i;
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
    // Unit mass and a zero "gradient": corrections (g_new - g_last) vanish.
    TrackingChannel c{one, zero, std::vector<Vector>(out.size(), zero), std::vector<Vector>(in.size(), zero)};
    store_.publish({i, 0, Vector(), c.rho_out, {}});
    channels_.push_back(std::move(c));
    topology_.push_back(std::move(s));
  }
}

void WeightChannel::on_activation(const ActivationRecord& record) {
  AgentState& s = topology_.at(record.agent);
  if (record.reads.size() != s.in_peers.size()) {
    throw Error(ErrorKind::invalid_argument, "activation record does not match the agent's in-neighbours");
  }
  std::vector<Vector> fetched;
  fetched.reserve(s.in_peers.size());
  for (std::size_t p = 0; p < s.in_peers.size(); ++p) {
    s.tau[p] = record.reads[p].tau;
    fetched.push_back(store_.at(s.in_peers[p], s.tau[p]).rho.at(s.slot_at_sender[p]));
  }
  TrackingChannel& c = channels_[record.agent];
  tracking_update(c, fetched, c.g_last, weights_[record.agent]);
  store_.publish({record.agent, record.k + 1, Vector(), c.rho_out, {}});

  for (AgentId sender : s.in_peers) {
    Stamp oldest = record.k + 1;
    for (AgentId r : topology_[sender].out_peers) {
      const AgentState& rs = topology_[r];
      oldest = std::min(oldest, rs.tau[rs.in_slot(sender)]);
    }
    store_.discard_before(sender, oldest);
  }
}

double WeightChannel::total_mass() const {
  CompensatedSum total;
  for (AgentId i = 0; i < channels_.size(); ++i) {
    total.add(channels_[i].z[0]);
    const AgentState& s = topology_[i];
    for (std::size_t p = 0; p < s.out_peers.size(); ++p) {
      const AgentState& receiver = topology_[s.out_peers[p]];
      total.add(channels_[i].rho_out[p][0]);
      total.add(-channels_[s.out_peers[p]].rho_buf[receiver.in_slot(i)][0]);
    }
  }
  return total.value();
}

MassAudit mass_residual(std::span<const AgentState> states, bool shadow) {
  if (states.empty()) return {};
  auto channel = [&](const AgentState& s) -> const TrackingChannel& {
    if (!shadow) return s.track;
    if (!s.shadow) throw Error(ErrorKind::invalid_argument, "shadow channel is disabled");
    return *s.shadow;
  };
  const auto n = channel(states.front()).z.size();
  CompensatedVectorSum balance(n);
  CompensatedVectorSum gradients(n);
  for (const AgentState& s : states) {
    const TrackingChannel& c = channel(s);
    balance.add(c.z);
    balance.add(c.g_last, -1.0);
    gradients.add(c.g_last);
    for (std::size_t p = 0; p < s.out_peers.size(); ++p) {
      const AgentState& receiver = states[s.out_peers[p]];
      balance.add(c.rho_out[p]);
      balance.add(channel(receiver).rho_buf[receiver.in_slot(s.id)], -1.0);
    }
  }
  return {balance.value().cwiseAbs().maxCoeff(), gradients.value().norm()};
}

Vector average_model(std::span<const AgentState> states) {
  Vector sum = Vector::Zero(states.front().x.size());
  for (const auto& s : states) sum += s.x;
  return sum / static_cast<double>(states.size());
}

double consensus_error(std::span<const AgentState> states, Stamp k, std::size_t max_delay) {
  const Vector center = average_model(states);
  double total = 0.0;
  for (const auto& s : states) {
    total += (s.x - center).squaredNorm();
    for (std::size_t lag = 0; lag <= max_delay; ++lag) {
      total += (s.v_as_of(std::max<Stamp>(0, k - static_cast<Stamp>(lag))) - center).squaredNorm();
    }
  }
  return total;
}

double tracking_error(std::span<const AgentState> states, const WeightChannel& weights, AgentId active) {
  if (weights.agents() != states.size()) throw Error(ErrorKind::invalid_argument, "weight channel size mismatch");
  for (AgentId i = 0; i < weights.agents(); ++i) {
    if (!(weights.weight(i) > 0.0)) {
      throw Error(ErrorKind::weight_channel_cold, "agent " + std::to_string(i) + " holds no weight mass");
    }
  }
  const AgentState& a = states[active];
  if (!a.shadow) throw Error(ErrorKind::invalid_argument, "tracking error needs the shadow channel");
  CompensatedVectorSum total(a.shadow->z.size());
  for (const auto& s : states) total.add(s.shadow->g_last);
  const double share = weights.weight(active) / static_cast<double>(states.size());
  return (a.shadow->z - share * total.value()).squaredNorm();
}

double gradient_norm_error(std::span<const AgentState> states, AgentId active) {
  const AgentState& a = states[active];
  if (!a.shadow) throw Error(ErrorKind::invalid_argument, "gradient norm error needs the shadow channel");
  return a.shadow->z.squaredNorm();
}

double deviation_inf_avg(std::span<const AgentState> states) {
  const Vector center = average_model(states);
  double total = 0.0;
  for (const auto& s : states) total += (s.x - center).cwiseAbs().maxCoeff();
  return total / static_cast<double>(states.size());
}

double merit(const MetricsSnapshot& s) { return s.tracking_error + s.consensus_error + s.gradient_norm_error; }

MetricsSnapshot take_snapshot(const ProtocolEngine& engine, const WeightChannel& weights, AgentId active,
                              double gamma, std::size_t max_delay_so_far) {
  const auto states = engine.states();
  MetricsSnapshot snap;
  snap.k = engine.iteration();
  snap.active = active;
  snap.gamma = gamma;
  const bool shadow = states.front().shadow.has_value();
  if (shadow) {
    snap.tracking_error = tracking_error(states, weights, active);
    snap.gradient_norm_error = gradient_norm_error(states, active);
    snap.shadow_residual = mass_residual(states, true).residual;
  }
  snap.consensus_error = consensus_error(states, snap.k, engine.max_delay());
  snap.merit = merit(snap);
  const Vector center = average_model(states);
  snap.grad_inf = engine.oracle().full_grad_sum(center).cwiseAbs().maxCoeff();
  snap.f_avg = engine.oracle().total_value(center);
  snap.dev_inf_avg = deviation_inf_avg(states);
  const MassAudit audit = mass_residual(states);
  snap.mass_residual = audit.residual;
  snap.mass_scale = audit.scale;
  snap.weight_mass = weights.total_mass();
  snap.max_delay_so_far = max_delay_so_far;
  return snap;
}

std::string format_double(double value) {
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, end);
}

std::string snapshot_csv_header() {
  return "k,active,gamma,E_t_hat,E_c,E_z,merit,grad_inf,dev_inf_avg,mass_residual,mass_scale,shadow_residual,"
         "weight_mass,max_delay_so_far,F_avg";
}

void write_snapshot_csv(std::ostream& out, std::span<const MetricsSnapshot> rows) {
  out << snapshot_csv_header() << '\n';
  for (const auto& r : rows) {
    out << r.k << ',' << r.active << ',' << format_double(r.gamma) << ',' << format_double(r.tracking_error) << ','
        << format_double(r.consensus_error) << ',' << format_double(r.gradient_norm_error) << ','
        << format_double(r.merit) << ',' << format_double(r.grad_inf) << ',' << format_double(r.dev_inf_avg) << ','
        << format_double(r.mass_residual) << ',' << format_double(r.mass_scale) << ','
        << format_double(r.shadow_residual) << ',' << format_double(r.weight_mass) << ',' << r.max_delay_so_far
        << ',' << format_double(r.f_avg) << '\n';
  }
}

}  // namespace asgt
