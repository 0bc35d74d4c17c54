#include <doctest.h>

#include <cmath>
#include <random>

#include "asgt/oracle.hpp"
#include "helpers.hpp"

using namespace asgt;
using asgt::testing::finite_difference_grad;
using asgt::testing::thrown_kind;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

ObjectiveOracle identity_quadratic(std::size_t agents, std::size_t n, double sigma = 0.0) {
  std::vector<Component> parts;
  for (std::size_t i = 0; i < agents; ++i)
    parts.emplace_back(QuadraticComponent{Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                                          Vector::Zero(static_cast<Eigen::Index>(n))});
  return ObjectiveOracle(parts, sigma);
}

ObjectiveOracle family_instance(ProblemFamily family, double sigma, NoiseModel noise = NoiseModel::gaussian) {
  ProblemSpec spec;
  spec.family = family;
  spec.dimension = 3;
  spec.rows = 6;
  spec.sigma = sigma;
  spec.noise = noise;
  spec.batch = 2;
  spec.mu = 0.05;
  spec.alpha = 0.05;
  spec.seed = 17;
  return make_problem(spec, 3);
}

Vector random_point(std::mt19937_64& rng, Eigen::Index n, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Vector x(n);
  for (Eigen::Index d = 0; d < n; ++d) x[d] = u(rng);
  return x;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("quadratic gradient of 1/2 ||x||^2 is x") {
    const auto o = identity_quadratic(1, 2);
    CHECK(o.grad(0, vec({1, 2})) == vec({1, 2}));
  }

  TEST_CASE("sigmoid gradient at the inflection example") {
    // c = 1, t = 0, mu = 0, n = 1: u'(1) = 2 * 1 / (1 + 1)^2 = 0.5
    const ObjectiveOracle o({SigmoidComponent{Matrix::Ones(1, 1), Matrix::Zero(1, 1), 0.0}}, 0.0);
    const Vector x = vec({1.0});
    CHECK(o.grad(0, x)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(finite_difference_grad(o, 0, x)[0] - 0.5) <= 1e-6);
  }

  TEST_CASE("gradients match central finite differences at 100 random points") {
    std::mt19937_64 rng(5);
    for (auto family : {ProblemFamily::quadratic, ProblemFamily::nonconvex_sigmoid, ProblemFamily::nonconvex_logistic}) {
      CAPTURE(to_string(family));
      const auto o = family_instance(family, 0.0);
      double worst = 0.0;
      for (int p = 0; p < 100; ++p) {
        const Vector x = random_point(rng, 3, 3.0);
        for (AgentId i = 0; i < o.components(); ++i)
          worst = std::max(worst, (o.grad(i, x) - finite_difference_grad(o, i, x)).cwiseAbs().maxCoeff());
      }
      CHECK(worst < 1e-5);
    }
  }

  TEST_CASE("zero noise makes the stochastic gradient exact") {
    const auto o = family_instance(ProblemFamily::nonconvex_sigmoid, 0.0);
    const Vector x = vec({0.3, -1.0, 2.0});
    CHECK(o.stoch_grad(1, x, {7, 9}) == o.grad(1, x));
  }

  TEST_CASE("same draw, same stochastic gradient; different label, different draw") {
    const auto o = family_instance(ProblemFamily::quadratic, 1.0);
    const Vector x = vec({0.1, 0.2, 0.3});
    CHECK(o.stoch_grad(0, x, {3, 4}) == o.stoch_grad(0, x, {3, 4}));
    CHECK_FALSE(o.stoch_grad(0, x, {3, 4}) == o.stoch_grad(0, x, {3, 5}));
    CHECK_FALSE(o.stoch_grad(0, x, SampleDraw::for_agent(1, 0, 4)) == o.stoch_grad(0, x, SampleDraw::for_agent(1, 1, 4)));
  }

  TEST_CASE("Gaussian noise: mean within the 4-standard-error band, second moment sigma^2 +- 10%") {
    const double sigma = 1.0;
    const auto o = identity_quadratic(1, 4, sigma);
    const Vector x = vec({1, -2, 0.5, 3});
    const Vector g = o.grad(0, x);
    const int draws = 100000;
    Vector mean = Vector::Zero(4);
    double second = 0.0;
    for (int s = 0; s < draws; ++s) {
      const Vector noise = o.stoch_grad(0, x, {11, static_cast<std::uint64_t>(s)}) - g;
      mean += noise;
      second += noise.squaredNorm();
    }
    mean /= draws;
    second /= draws;
    const double per_coordinate_sd = sigma / 2.0;  // sigma / sqrt(n)
    CHECK(mean.cwiseAbs().maxCoeff() <= 4.0 * per_coordinate_sd / std::sqrt(static_cast<double>(draws)));
    CHECK(second == doctest::Approx(sigma * sigma).epsilon(0.10));
  }

  TEST_CASE("Gaussian noise variance does not depend on x") {
    const auto o = family_instance(ProblemFamily::nonconvex_logistic, 0.7);
    std::mt19937_64 rng(8);
    for (int p = 0; p < 10; ++p) {
      const Vector x = random_point(rng, 3, 5.0);
      const Vector g = o.grad(2, x);
      double second = 0.0;
      const int draws = 20000;
      for (int s = 0; s < draws; ++s) second += (o.stoch_grad(2, x, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s)}) - g).squaredNorm();
      CHECK(second / draws == doctest::Approx(0.49).epsilon(0.10));
    }
  }

  TEST_CASE("minibatch noise is unbiased") {
    const auto o = family_instance(ProblemFamily::nonconvex_logistic, 0.0, NoiseModel::minibatch);
    const Vector x = vec({0.4, -0.3, 1.2});
    const Vector g = o.grad(1, x);
    const int draws = 100000;
    Vector mean = Vector::Zero(3), sq = Vector::Zero(3);
    for (int s = 0; s < draws; ++s) {
      const Vector noise = o.stoch_grad(1, x, {1, static_cast<std::uint64_t>(s)}) - g;
      mean += noise;
      sq += noise.cwiseProduct(noise);
    }
    mean /= draws;
    const Vector se = (sq / draws - mean.cwiseProduct(mean)).cwiseSqrt() / std::sqrt(static_cast<double>(draws));
    for (Eigen::Index d = 0; d < 3; ++d) CHECK(std::abs(mean[d]) <= 4.0 * se[d]);
  }

  TEST_CASE("full_grad_sum is the sum of component gradients") {
    std::mt19937_64 rng(2);
    for (auto family : {ProblemFamily::quadratic, ProblemFamily::nonconvex_sigmoid, ProblemFamily::nonconvex_logistic}) {
      const auto o = family_instance(family, 0.0);
      const Vector x = random_point(rng, 3, 2.0);
      Vector direct = Vector::Zero(3);
      for (AgentId i = 0; i < o.components(); ++i) direct += o.grad(i, x);
      CHECK((o.full_grad_sum(x) - direct).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const auto single = identity_quadratic(1, 2);
    CHECK(single.full_grad_sum(vec({3, 4})) == single.grad(0, vec({3, 4})));
  }

  TEST_CASE("quadratic minimizer is a stationary point") {
    const auto o = family_instance(ProblemFamily::quadratic, 0.0);
    const auto x_star = o.minimizer();
    REQUIRE(x_star);
    CHECK(o.full_grad_sum(*x_star).cwiseAbs().maxCoeff() <= 1e-10);
  }

  TEST_CASE("minimizer examples") {
    CHECK(identity_quadratic(3, 2).minimizer()->isZero());
    // m = 2, n = 1, A = (1), (2), b = (1), (2): x* = (1 + 4)^-1 (1 + 4) = 1
    const ObjectiveOracle o({QuadraticComponent{Matrix::Constant(1, 1, 1.0), vec({1.0})},
                             QuadraticComponent{Matrix::Constant(1, 1, 2.0), vec({2.0})}},
                            0.0);
    CHECK((*o.minimizer())[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(family_instance(ProblemFamily::nonconvex_sigmoid, 0.0).minimizer().has_value());
    CHECK_FALSE(family_instance(ProblemFamily::nonconvex_logistic, 0.0).minimizer().has_value());
  }

  TEST_CASE("rank-deficient quadratic is reported as singular") {
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    const ObjectiveOracle o({QuadraticComponent{A, vec({1, 1})}}, 0.0);
    CHECK(thrown_kind([&] { o.minimizer(); }) == ErrorKind::singular_system);
  }

  TEST_CASE("smoothness constants bound the gradient Lipschitz ratio on 10^4 pairs") {
    std::mt19937_64 rng(3);
    for (auto family : {ProblemFamily::quadratic, ProblemFamily::nonconvex_sigmoid, ProblemFamily::nonconvex_logistic}) {
      CAPTURE(to_string(family));
      const auto o = family_instance(family, 0.0);
      for (int p = 0; p < 10000; ++p) {
        const AgentId i = static_cast<AgentId>(p % o.components());
        const Vector x = random_point(rng, 3, 10.0), y = random_point(rng, 3, 10.0);
        CHECK((o.grad(i, x) - o.grad(i, y)).norm() <= o.smoothness(i) * (x - y).norm() * (1 + 1e-12));
      }
    }
  }

  TEST_CASE("objective values respect the declared lower bound") {
    std::mt19937_64 rng(4);
    for (auto family : {ProblemFamily::quadratic, ProblemFamily::nonconvex_sigmoid, ProblemFamily::nonconvex_logistic}) {
      const auto o = family_instance(family, 0.0);
      for (int p = 0; p < 1000; ++p) CHECK(o.total_value(random_point(rng, 3, 20.0)) >= o.lower_bound());
    }
  }

  TEST_CASE("collapsed oracle has the same value and gradient as the sum") {
    std::mt19937_64 rng(6);
    for (auto family : {ProblemFamily::quadratic, ProblemFamily::nonconvex_sigmoid, ProblemFamily::nonconvex_logistic}) {
      const auto o = family_instance(family, 0.0);
      const auto c = o.collapsed();
      CHECK(c.components() == 1);
      const Vector x = random_point(rng, 3, 2.0);
      CHECK(c.value(0, x) == doctest::Approx(o.total_value(x)).epsilon(1e-12));
      CHECK((c.grad(0, x) - o.full_grad_sum(x)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("constructor validation") {
    CHECK(thrown_kind([] { ObjectiveOracle({}, 0.0); }) == ErrorKind::invalid_argument);
    CHECK(thrown_kind([] { identity_quadratic(1, 2, -1.0); }) == ErrorKind::invalid_argument);
    CHECK(thrown_kind([] {
            ObjectiveOracle({QuadraticComponent{Matrix::Identity(2, 2), Vector::Zero(2)}}, 0.1, NoiseModel::minibatch);
          }) == ErrorKind::invalid_argument);
    CHECK(thrown_kind([] {
            ObjectiveOracle({QuadraticComponent{Matrix::Identity(2, 2), Vector::Zero(2)},
                             QuadraticComponent{Matrix::Identity(3, 3), Vector::Zero(3)}},
                            0.0);
          }) == ErrorKind::invalid_argument);
    CHECK(thrown_kind([] { parse_family("convex"); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("serialization round-trips every parameter exactly") {
    for (auto family : {ProblemFamily::quadratic, ProblemFamily::nonconvex_sigmoid, ProblemFamily::nonconvex_logistic}) {
      const auto o = family_instance(family, 0.3);
      const auto back = deserialize_oracle(serialize_oracle(o));
      CHECK(back.family() == o.family());
      CHECK(back.sigma() == o.sigma());
      CHECK(back.components() == o.components());
      const Vector x = vec({0.7, -0.1, 1.3});
      for (AgentId i = 0; i < o.components(); ++i) {
        CHECK(back.grad(i, x) == o.grad(i, x));
        CHECK(back.stoch_grad(i, x, {1, 2}) == o.stoch_grad(i, x, {1, 2}));
      }
    }
    CHECK(thrown_kind([] { deserialize_oracle("{not json"); }) == ErrorKind::parse_error);
  }

  TEST_CASE("make_problem is deterministic in its seed") {
    const auto a = family_instance(ProblemFamily::nonconvex_logistic, 0.1);
    const auto b = family_instance(ProblemFamily::nonconvex_logistic, 0.1);
    CHECK(serialize_oracle(a) == serialize_oracle(b));
  }
}
