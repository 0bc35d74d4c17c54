#include <doctest.h>

#include <sstream>

#include "asgt/metrics.hpp"
#include "helpers.hpp"

using namespace asgt;
using asgt::testing::thrown_kind;

namespace {

AgentState crafted(AgentId id, Vector x, std::vector<Vector> v_newest_first) {
  AgentState s;
  s.id = id;
  s.x = std::move(x);
  Stamp stamp = 0;
  for (auto it = v_newest_first.rbegin(); it != v_newest_first.rend(); ++it) s.v_history.push_back({stamp++, *it});
  return s;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

struct Harness {
  Digraph graph;
  ObjectiveOracle oracle;
  ProtocolEngine engine;
  WeightChannel weights;
  Scheduler scheduler;

  Harness(Digraph g, ObjectiveOracle o, std::size_t D, ActivationPolicy policy, DelayModel delays, bool shadow = true)
      : graph(std::move(g)),
        oracle(std::move(o)),
        engine(graph, oracle, 7, D, shadow),
        weights(graph, local_weights(graph, engine.mixing())),
        scheduler(graph, std::move(policy), delays) {}

  ActivationRecord step(double gamma) {
    const ActivationRecord r = engine.step(scheduler.next(), gamma);
    weights.on_activation(r);
    return r;
  }
};

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("consensus_error: two agents, no delay") {
    // x = (0), (2); v blocks equal to x: 1 + 1 from x plus 1 + 1 from v.
    std::vector<AgentState> states{crafted(0, vec({0}), {vec({0})}), crafted(1, vec({2}), {vec({2})})};
    CHECK(consensus_error(states, 0, 0) == doctest::Approx(4.0));
    // v blocks at the average contribute nothing.
    states = {crafted(0, vec({0}), {vec({1})}), crafted(1, vec({2}), {vec({1})})};
    CHECK(consensus_error(states, 0, 0) == doctest::Approx(2.0));
  }

  TEST_CASE("consensus_error is zero iff every block equals the average") {
    const Vector c = vec({1.5, -2.0});
    std::vector<AgentState> states;
    for (AgentId i = 0; i < 3; ++i) states.push_back(crafted(i, c, {c, c, c}));
    CHECK(consensus_error(states, 2, 2) == 0.0);

    // Any single block moved away makes it positive, including the oldest v.
    for (std::size_t lag = 0; lag < 3; ++lag) {
      auto bent = states;
      bent[1].v_history[2 - lag].value[0] += 1e-3;
      CHECK(consensus_error(bent, 2, 2) > 0.0);
    }
    auto bent = states;
    bent[2].x[1] -= 1e-3;
    CHECK(consensus_error(bent, 2, 2) > 0.0);
  }

  TEST_CASE("consensus_error is translation invariant") {
    std::vector<AgentState> states{crafted(0, vec({0, 1}), {vec({3, 1}), vec({0, 0})}),
                                   crafted(1, vec({2, -1}), {vec({1, 1}), vec({2, 5})}),
                                   crafted(2, vec({4, 0}), {vec({0, 2}), vec({-1, 0})})};
    const double before = consensus_error(states, 1, 1);
    const Vector shift = vec({10.0, -3.5});
    for (auto& s : states) {
      s.x += shift;
      for (auto& sv : s.v_history) sv.value += shift;
    }
    CHECK(consensus_error(states, 1, 1) == doctest::Approx(before).epsilon(1e-12));
  }

  TEST_CASE("consensus_error against the stacked vector on a live engine") {
    Harness h(generate_ring_plus_random(4, 1, 0), make_problem({}, 4), 2,
              {ActivationMode::random_coverage, 8, 1, {}}, {DelayMode::uniform, 2, 1});
    for (int e = 0; e < 50; ++e) h.step(0.1);
    const auto states = h.engine.states();
    const Stamp k = h.engine.iteration();
    const Vector avg = average_model(states);
    double expected = 0.0;
    for (const auto& s : states) {
      expected += (s.x - avg).squaredNorm();
      for (Stamp lag = 0; lag <= 2; ++lag) {
        // Newest publication of s stamped at or before k - lag, looked up on the wire.
        const auto stamp = h.engine.store().newest_at_or_before(s.id, k - lag);
        if (stamp) expected += (h.engine.store().at(s.id, *stamp).v - avg).squaredNorm();
        else expected += (s.v_as_of(k - lag) - avg).squaredNorm();
      }
    }
    CHECK(consensus_error(states, k, 2) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("tracking_error with one agent is zero") {
    Harness h(Digraph(1), make_problem({}, 1), 0, {ActivationMode::round_robin, 1, 0, {}}, {});
    for (int e = 0; e < 20; ++e) {
      h.step(0.05);
      CHECK(tracking_error(h.engine.states(), h.weights, 0) <= 1e-28);
    }
  }

  TEST_CASE("tracking_error needs the shadow channel") {
    Harness h(generate_ring_plus_random(3, 0, 0), make_problem({}, 3), 0, {ActivationMode::round_robin, 3, 0, {}}, {},
              false);
    CHECK(thrown_kind([&] { tracking_error(h.engine.states(), h.weights, 0); }) == ErrorKind::invalid_argument);
    CHECK(thrown_kind([&] { gradient_norm_error(h.engine.states(), 0); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("gradient_norm_error is the squared norm of the active shadow tracker") {
    Harness h(generate_ring_plus_random(3, 0, 0), make_problem({}, 3), 0, {ActivationMode::round_robin, 3, 0, {}}, {});
    h.engine.mutable_state(1).shadow->z = vec({3, 4, 0, 0});
    CHECK(gradient_norm_error(h.engine.states(), 1) == 25.0);
    h.engine.mutable_state(1).shadow->z.setZero();
    CHECK(gradient_norm_error(h.engine.states(), 1) == 0.0);
  }

  TEST_CASE("gradient_norm_error vanishes at the quadratic minimizer") {
    ProblemSpec spec;
    spec.scale = 2.0;
    spec.seed = 3;
    Harness h(generate_ring_plus_random(4, 1, 0), make_problem(spec, 4), 0, {ActivationMode::round_robin, 4, 0, {}},
              {});
    for (int e = 0; e < 20000; ++e) h.step(0.1);
    const Vector x_star = *h.oracle.minimizer();
    CHECK((average_model(h.engine.states()) - x_star).norm() <= 1e-8);
    for (AgentId i = 0; i < 4; ++i) CHECK(gradient_norm_error(h.engine.states(), i) <= 1e-8);
  }

  TEST_CASE("mass_residual: zero at init, flags a corrupted counter") {
    ProblemSpec spec;
    spec.sigma = 0.5;
    Harness h(generate_ring_plus_random(4, 2, 0), make_problem(spec, 4), 3,
              {ActivationMode::random_coverage, 8, 2, {}}, {DelayMode::uniform, 3, 2});
    CHECK(mass_residual(h.engine.states()).residual == 0.0);
    CHECK(mass_residual(h.engine.states(), true).residual == 0.0);
    for (int e = 0; e < 300; ++e) h.step(0.05);
    const MassAudit clean = mass_residual(h.engine.states());
    CHECK(clean.residual <= 1e-9 * (1.0 + clean.scale));
    const double eps = 1e-6;
    h.engine.mutable_state(2).track.rho_out[0][1] += eps;
    CHECK(mass_residual(h.engine.states()).residual >= eps / 2);
    CHECK(mass_residual(h.engine.states(), true).residual <= 1e-9 * (1.0 + clean.scale));
  }

  TEST_CASE("weight channel conserves mass m at every event and stays positive") {
    Harness h(generate_connectivity(6, 0.4, 1), make_problem({}, 6), 4,
              {ActivationMode::random_coverage, 18, 5, {}}, {DelayMode::uniform, 4, 5});
    CHECK(h.weights.total_mass() == doctest::Approx(6.0).epsilon(1e-15));
    for (int e = 0; e < 3000; ++e) {
      h.step(0.01);
      REQUIRE(std::abs(h.weights.total_mass() - 6.0) <= 1e-12);
    }
    for (AgentId i = 0; i < 6; ++i) CHECK(h.weights.weight(i) > 0.0);
  }

  TEST_CASE("weight channel rejects records that do not fit the agent") {
    const Digraph g = generate_ring_plus_random(3, 1, 0);
    const ObjectiveOracle oracle = make_problem({}, 3);
    ProtocolEngine engine(g, oracle, 1, 0);
    WeightChannel w(g, local_weights(g, engine.mixing()));
    ActivationRecord bad{0, 0, 0.0, {}};
    CHECK(thrown_kind([&] { w.on_activation(bad); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("merit sums the three error terms") {
    MetricsSnapshot s;
    CHECK(merit(s) == 0.0);
    s.tracking_error = 1;
    s.consensus_error = 2;
    s.gradient_norm_error = 3;
    CHECK(merit(s) == 6.0);
  }

  TEST_CASE("deviation_inf_avg") {
    std::vector<AgentState> states{crafted(0, vec({0, 0}), {vec({0, 0})}), crafted(1, vec({2, -4}), {vec({0, 0})})};
    // average (1, -2); deviations inf-norm 2 and 2.
    CHECK(deviation_inf_avg(states) == 2.0);
  }

  TEST_CASE("snapshot table: header plus one row per snapshot, round-trip doubles") {
    Harness h(generate_ring_plus_random(4, 1, 0), make_problem({}, 4), 1,
              {ActivationMode::random_coverage, 8, 1, {}}, {DelayMode::uniform, 1, 1});
    std::vector<MetricsSnapshot> rows;
    for (int e = 0; e < 3; ++e) {
      rows.push_back(take_snapshot(h.engine, h.weights, 0, 0.1, 0));
      h.step(0.1);
    }
    std::ostringstream out;
    write_snapshot_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == snapshot_csv_header());
    int count = 0;
    while (std::getline(in, line)) {
      CHECK(std::count(line.begin(), line.end(), ',') == 14);
      ++count;
    }
    CHECK(count == 3);
    CHECK(std::stod(format_double(0.1)) == 0.1);
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  }
}
