#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asgt/digraph.hpp"
#include "asgt/numeric.hpp"

namespace asgt {

enum class ProblemFamily { quadratic, nonconvex_sigmoid, nonconvex_logistic };
enum class NoiseModel { gaussian, minibatch };

std::string_view to_string(ProblemFamily family);
std::string_view to_string(NoiseModel noise);
ProblemFamily parse_family(std::string_view name);
NoiseModel parse_noise_model(std::string_view name);

/// Identifies one stochastic sample. The same (stream, label) always yields
/// the same draw; the protocol uses one stream per agent and the global
/// iteration as the label.
struct SampleDraw {
  std::uint64_t stream = 0;
  std::uint64_t label = 0;

  static SampleDraw for_agent(std::uint64_t seed, AgentId agent, std::uint64_t label) {
    return {mix_seed(seed, agent), label};
  }
};

// f(x) = 1/2 ||A x - b||^2
struct QuadraticComponent {
  Matrix A;
  Vector b;
};

// f(x) = sum_{r,d} c(r,d) u(x_d - t(r,d)) + mu/2 ||x||^2,  u(s) = s^2 / (1 + s^2).
// Each row of (c, t) is one term per coordinate; collapsing components stacks rows.
struct SigmoidComponent {
  Matrix c;
  Matrix t;
  double mu = 0.0;
};

// f(x) = sum_s w_s log(1 + exp(-y_s <a_s, x>)) + alpha sum_d x_d^2 / (1 + x_d^2)
struct LogisticComponent {
  Matrix features;
  Vector labels;
  Vector weights;
  double alpha = 0.0;
};

using Component = std::variant<QuadraticComponent, SigmoidComponent, LogisticComponent>;

/// Sum-structured objective F = sum_i f_i with exact gradients and an
/// unbiased, bounded-variance stochastic gradient for each component.
///
/// Immutable once built; every evaluation is a pure function of its inputs.
class ObjectiveOracle {
 public:
  ObjectiveOracle(std::vector<Component> components, double sigma,
                  NoiseModel noise = NoiseModel::gaussian, std::size_t batch = 1);

  std::size_t components() const { return components_.size(); }
  std::size_t dimension() const { return dimension_; }
  ProblemFamily family() const { return family_; }
  double sigma() const { return sigma_; }
  NoiseModel noise_model() const { return noise_; }
  std::size_t batch() const { return batch_; }
  const Component& component(AgentId i) const { return components_.at(i); }

  // Lipschitz constant of grad f_i, from the family's closed-form bound.
  double smoothness(AgentId i) const { return smoothness_.at(i); }
  // A known lower bound on F.
  double lower_bound() const;

  double value(AgentId i, const Vector& x) const;
  double total_value(const Vector& x) const;

  Vector grad(AgentId i, const Vector& x) const;
  Vector stoch_grad(AgentId i, const Vector& x, const SampleDraw& draw) const;
  Vector full_grad_sum(const Vector& x) const;

  // Closed-form minimizer for the quadratic family; nullopt for the
  // nonconvex families. Throws singular-system when sum A_i^T A_i is
  // rank-deficient.
  std::optional<Vector> minimizer() const;

  // The same objective as a single component (F itself), for centralized
  // reference runs.
  ObjectiveOracle collapsed() const;

 private:
  std::vector<Component> components_;
  std::vector<double> smoothness_;
  std::size_t dimension_ = 0;
  ProblemFamily family_ = ProblemFamily::quadratic;
  double sigma_ = 0.0;
  NoiseModel noise_ = NoiseModel::gaussian;
  std::size_t batch_ = 1;
};

/// Random desk-scale instance of a family.
struct ProblemSpec {
  ProblemFamily family = ProblemFamily::quadratic;
  std::size_t dimension = 4;
  // quadratic: rows of each A_i; logistic: samples per agent; sigmoid: terms per agent.
  std::size_t rows = 8;
  double sigma = 0.0;
  NoiseModel noise = NoiseModel::gaussian;
  std::size_t batch = 1;
  // quadratic: entries of A_i are N(0, scale^2 / rows), so A_i^T A_i is near scale^2 I.
  double scale = 1.0;
  double mu = 0.01;     // sigmoid ridge
  double alpha = 0.01;  // logistic nonconvex regularizer
  std::uint64_t seed = 0;
};

ObjectiveOracle make_problem(const ProblemSpec& spec, std::size_t agents);

// Structured (JSON) form holding every parameter, so an instance can be
// reloaded exactly.
std::string serialize_oracle(const ObjectiveOracle& oracle);
ObjectiveOracle deserialize_oracle(std::string_view text);

}  // namespace asgt
